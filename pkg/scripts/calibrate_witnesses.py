"""
Re-scan the calibration grids behind the frozen witnesses.

    python scripts/calibrate_witnesses.py           # print observed maxima
    python scripts/calibrate_witnesses.py --check   # exit 1 if a witness is exceeded
"""

import argparse
import logging
import sys
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from conewave import witnesses
from conewave.estimates import g_function_sweep
from conewave.specfun import bessel_envelope, bessel_j, bessel_square_mass

logger = logging.getLogger(__name__)


def envelope_scan(orders: np.ndarray, arguments: np.ndarray) -> float:
    worst = 0.0
    for nu in orders:
        values = np.abs(bessel_j(float(nu), arguments))
        envelope = np.array([bessel_envelope(float(nu), float(x)) for x in arguments])
        worst = max(worst, float(np.max(values / envelope)) * witnesses.BESSEL_ENVELOPE_C)
    return worst


def square_mass_scan(orders: np.ndarray, radii: np.ndarray) -> float:
    return max(bessel_square_mass(float(nu), float(r)) for nu in orders for r in radii)


def g_scan() -> Tuple[float, float]:
    orders = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    radii = tuple(2.0 ** k for k in range(-4, 6))
    scales = tuple(2.0 ** k for k in range(-3, 4))
    samples = g_function_sweep(orders, radii, scales)
    small = max(s.ratio for s in samples if s.branch == "small")
    large = max(s.ratio for s in samples if s.branch == "large")
    return small, large


def calibrate() -> pd.DataFrame:
    orders = np.linspace(2.0, 50.0, 49)
    arguments = np.geomspace(1e-2, 200.0, 400)
    small, large = g_scan()
    observed: Dict[str, Tuple[float, float]] = {
        "bessel_envelope": (envelope_scan(orders, arguments), witnesses.BESSEL_ENVELOPE_C),
        "bessel_square_mass": (
            square_mass_scan(np.linspace(0.0, 50.0, 26), np.geomspace(1e-2, 1e3, 30)),
            witnesses.BESSEL_SQUARE_MASS_BOUND,
        ),
        "g_small_r": (small, witnesses.G_SMALL_R_WITNESS),
        "g_large_r": (large, witnesses.G_LARGE_R_WITNESS),
    }
    return pd.DataFrame(
        [{"witness": name, "observed": obs, "frozen": frozen, "ok": obs <= frozen} for name, (obs, frozen) in observed.items()]
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--check", action="store_true", help="fail when a frozen witness is exceeded")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(message)s")

    table = calibrate()
    print(table.to_string(index=False))
    if args.check and not table["ok"].all():
        print("❌ a frozen witness was exceeded")
        return 1
    print("✅ all witnesses hold")
    return 0


if __name__ == "__main__":
    sys.exit(main())
