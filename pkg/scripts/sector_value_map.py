#!/usr/bin/env python3
"""Tabulate the double Riesz transforms of the two sector test functions.

Samples every kernel on a polar grid over the eight sectors and writes one
CSV per input function.  The transforms of these piecewise-constant inputs
are themselves piecewise constant; the table records the measured per-sector
values (derived numbers, not asserted constants: only the +1/4 quadrant
value and the trace identity carry exact anchors, which `riesz2d-verify`
and the acceptance suite check).
"""

import math
import sys
from pathlib import Path

import numpy as np

from octaeuler import singular2d as s2
from octaeuler.cli import write_csv


def main() -> int:
    out = Path("out/sector_value_map")
    inputs = {
        "odd_quadrant": s2.odd_quadrant_indicator(),
        "checkerboard": s2.checkerboard_indicator(),
    }
    kernels = [s2.riesz_kernel(k) for k in ("11", "22", "12")]
    rng = np.random.default_rng(0)
    for name, field in inputs.items():
        rows = []
        for sector in range(8):
            lo = sector * math.pi / 4 + 0.08
            hi = (sector + 1) * math.pi / 4 - 0.08
            thetas = rng.uniform(lo, hi, size=3)
            radii = rng.uniform(0.5, 2.0, size=3)
            for kern in kernels:
                vals = []
                for r, th in zip(radii, thetas):
                    x = np.array([r * math.cos(th), r * math.sin(th)])
                    vals.append(float(s2.riesz_pv_2d(field, kern, x).value))
                rows.append(
                    [sector + 1, str(kern), float(np.mean(vals)),
                     float(np.max(vals) - np.min(vals))]
                )
        path = out / f"{name}.csv"
        write_csv(path, ["sector", "kernel", "mean_value", "spread"], rows)
        spread = max(r[3] for r in rows)
        print(f"{name}: wrote {path} (max in-sector spread {spread:.2e})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
