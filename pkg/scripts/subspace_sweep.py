"""Gamma and attainable bound on the two-parameter subspaces of the qutrit model.

Writes one CSV per subspace: (alpha,beta), (alpha,phi) and (beta,phi).

Usage:
  python scripts/subspace_sweep.py --count 60 --outdir out
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from geocrb import cli

SUBSPACES = ("alpha,beta", "alpha,phi", "beta,phi")


@dataclass(frozen=True)
class SubspaceSweepConfig:
    start: float = 0.005
    stop: float = 1.5658
    count: int = 60
    outdir: str = "out"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start", type=float, default=SubspaceSweepConfig.start)
    ap.add_argument("--stop", type=float, default=SubspaceSweepConfig.stop)
    ap.add_argument("--count", type=int, default=SubspaceSweepConfig.count)
    ap.add_argument("--outdir", default=SubspaceSweepConfig.outdir)
    cfg = SubspaceSweepConfig(**vars(ap.parse_args()))
    for sub in SUBSPACES:
        out = Path(cfg.outdir) / f"subspace_{sub.replace(',', '_')}.csv"
        code = cli.main(["sweep", "--model", "qutrit", "--axis", "alpha", "--subspace", sub,
                         "--range", f"{cfg.start!r},{cfg.stop!r},{cfg.count}", "--output", str(out)])
        if code:
            return code
        print("wrote", out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
