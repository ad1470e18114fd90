"""Input bundles: the CSV/JSON series emitted by `aeroreach emit-plots`.

Rendering never recomputes physics; everything a figure needs must already
be in the bundle, and a missing or empty series fails with an error naming
the offending file.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field


class BundleError(ValueError):
    """Missing, empty, or malformed series in a plot bundle."""


@dataclass
class Series:
    """One CSV series: column-name -> list of floats (or strings)."""

    path: str
    columns: dict[str, list]

    def __len__(self):
        first = next(iter(self.columns.values()), [])
        return len(first)

    def col(self, name: str) -> list[float]:
        if name not in self.columns:
            raise BundleError(f"{os.path.basename(self.path)}: missing column {name!r}")
        return self.columns[name]


def read_series(path: str) -> Series:
    if not os.path.exists(path):
        raise BundleError(f"missing series file: {os.path.basename(path)}")
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or len(rows) < 2:
        raise BundleError(f"empty series file: {os.path.basename(path)}")
    header = rows[0]
    cols: dict[str, list] = {h: [] for h in header}
    for row in rows[1:]:
        for h, cell in zip(header, row):
            try:
                cols[h].append(float(cell))
            except ValueError:
                cols[h].append(cell)
    return Series(path, cols)


@dataclass
class PlotBundle:
    """Input directory of emitted series plus output style options."""

    indir: str
    outdir: str
    fmt: str = "png"
    dpi: int = 130
    loaded: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fmt not in ("png", "svg"):
            raise BundleError(f"unsupported format {self.fmt!r}")

    def series(self, name: str) -> Series:
        if name not in self.loaded:
            self.loaded[name] = read_series(os.path.join(self.indir, name))
        return self.loaded[name]

    def json_doc(self, name: str) -> dict:
        path = os.path.join(self.indir, name)
        if not os.path.exists(path):
            raise BundleError(f"missing series file: {name}")
        with open(path, encoding="utf-8") as f:
            return json.load(f)

    def out_path(self, stem: str) -> str:
        os.makedirs(self.outdir, exist_ok=True)
        return os.path.join(self.outdir, f"{stem}.{self.fmt}")

    def kind(self) -> str:
        if os.path.exists(os.path.join(self.indir, "states.csv")):
            return "trajectory"
        if os.path.exists(os.path.join(self.indir, "volume_history.csv")):
            return "reach"
        raise BundleError(
            "input directory holds neither states.csv nor volume_history.csv"
        )
