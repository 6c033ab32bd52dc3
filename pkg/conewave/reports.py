"""
CSV and JSON artifacts for experiment runs.

Every subcommand has a fixed column order. CSVs go through pandas with a
fixed float format and LF line endings so identical runs produce
identical bytes.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd

logger = logging.getLogger(__name__)

QUOTIENT = ["quotient", "quotient_doubled"]

COLUMNS: Dict[str, List[str]] = {
    "modes": ["group", "nu", "lambda", "degeneracy"],
    "specfun-table": ["nu", "x", "J", "Y", "I", "K", "wronskian_residual"],
    "propagate": ["t", "r", "y-index", "Re u", "Im u"],
    "dispersive-scan": ["t", "sup_norm", "fitted"],
    "strichartz": ["estimate", "member", "q", "r", "T", "n"] + QUOTIENT,
    "local-smoothing": ["estimate", "member", "alpha", "s", "beta", "weight", "T"] + QUOTIENT,
    "g-check": ["nu", "R", "M", "G", "bound", "ratio", "branch", "witness"],
    "hardy": ["estimate", "member", "s", "p", "mode"] + QUOTIENT,
    "resolvent": ["member", "sigma_re", "sigma_im"] + QUOTIENT,
    "sobolev": ["sigma_re", "sigma_im", "width", "quotient"],
    "nls": ["t", "mass", "energy", "H1", "Linf"],
    "scatter": ["t", "v_H1", "increment"],
}

Row = Dict[str, Union[float, int, str]]


def frame_for(subcommand: str, rows: Sequence[Row]) -> pd.DataFrame:
    columns = COLUMNS[subcommand]
    frame = pd.DataFrame(list(rows), columns=columns)
    return frame


class ReportWriter:
    """Writes the artifacts of one run into a single output directory."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write_csv(self, subcommand: str, rows: Sequence[Row], name: Optional[str] = None) -> Path:
        path = self.output_dir / (name or f"{subcommand}.csv")
        frame_for(subcommand, rows).to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
        logger.info("wrote %d rows to %s", len(rows), path)
        return path

    def write_summary(self, summary: Dict, name: str = "summary.json") -> Path:
        path = self.output_dir / name
        path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        return path

    def write_echo(self, echo: str) -> Path:
        path = self.output_dir / "config-echo.json"
        path.write_text(echo, encoding="utf-8")
        return path
