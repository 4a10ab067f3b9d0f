"""Chern number and Dixmier-Douady invariant with a grid-convergence table.

Usage:
  python scripts/topology.py
"""
from __future__ import annotations

import argparse
import time

from geocrb.geometry import chern_number, dd_invariant
from geocrb.models import qubit_model, qutrit_model

CHERN_GRIDS = ((10, 10), (25, 25), (50, 50), (100, 100), (200, 200))
DD_GRIDS = ((10, 4, 4), (25, 8, 8), (50, 10, 10), (100, 20, 20))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="skip the two finest grids")
    args = ap.parse_args()
    chern_grids = CHERN_GRIDS[:-2] if args.quick else CHERN_GRIDS
    dd_grids = DD_GRIDS[:-2] if args.quick else DD_GRIDS
    for grid in chern_grids:
        t0 = time.perf_counter()
        c = chern_number(qubit_model(), grid)
        print(f"chern   grid={grid!s:<14} value={c:.8f}  err={c - 1:+.2e}  {time.perf_counter() - t0:.1f}s")
    for grid in dd_grids:
        t0 = time.perf_counter()
        d = dd_invariant(qutrit_model(), grid)
        print(f"dd      grid={grid!s:<14} value={d:.8f}  err={d - 1:+.2e}  {time.perf_counter() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
