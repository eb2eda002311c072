#!/usr/bin/env python3
"""Run the full experiment battery into ./out/<subcommand>/ and summarize.

Exit code is the worst exit code seen (0 ok, 2 tolerance breach), so this
doubles as a one-shot verification driver.
"""

import sys
import time
from pathlib import Path

from octaeuler import cli

RUNS = [
    ["group-tables"],
    ["riesz2d-verify"],
    ["sector-modes"],
    ["bc-slope"],
    ["sphere-moments"],
    ["blowup-classify", "--verify-integration"],
    ["blowup-integrate", "--lambda", "1", "--mu", "1", "--plot"],
    ["slip-check"],
    ["flow-map"],
    ["holder-probe"],
    ["expansion-check"],
    ["velocity-verify"],
    ["gradient-verify"],
]


def main() -> int:
    base = Path("out")
    worst = 0
    t_all = time.perf_counter()
    for argv in RUNS:
        name = argv[0]
        t0 = time.perf_counter()
        code = cli.main(argv + ["--out", str(base / name)])
        print(f"  -> {name}: exit {code} in {time.perf_counter() - t0:.1f}s\n")
        worst = max(worst, code)
    print(f"all experiments finished in {time.perf_counter() - t_all:.0f}s, "
          f"worst exit code {worst}")
    return worst


if __name__ == "__main__":
    sys.exit(main())
