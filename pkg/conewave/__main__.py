import sys

from conewave.cli import main

sys.exit(main())
