#!/usr/bin/env python3
"""Sweep the amplitude ODE over a dense parameter grid.

Writes the escape-time landscape (T* where finite) and the verdict of the
sign classification for each cell, plus a comparison column; disagreement
anywhere is reported with a nonzero exit code.
"""

import sys
from pathlib import Path

import numpy as np

from octaeuler import blowup
from octaeuler.cli import write_csv


def main() -> int:
    grid = np.linspace(-2.0, 2.0, 17)
    rows = []
    mismatches = 0
    for lam0 in grid:
        for mu0 in grid:
            verdict = blowup.classify_initial_data(float(lam0), float(mu0))
            traj = blowup.integrate(float(lam0), float(mu0), rtol=1e-8,
                                    atol=1e-10, t_max=60.0)
            agree = traj.escaped == verdict.blows_up
            mismatches += 0 if agree else 1
            rows.append(
                [lam0, mu0, verdict.blows_up, verdict.rule,
                 traj.t_star_estimate, agree]
            )
    path = Path("out/blowup_phase_portrait.csv")
    write_csv(
        path,
        ["lambda0", "mu0", "blows_up", "rule", "T_star", "integration_agrees"],
        rows,
    )
    print(f"wrote {path}: {len(rows)} cells, {mismatches} mismatches")
    return 2 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
