"""Gamma and attainable bound of the full three-parameter qutrit model versus alpha.

Usage:
  python scripts/full_model_sweep.py --count 60 --output out/full_model.csv
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass

from geocrb import cli


@dataclass(frozen=True)
class FullSweepConfig:
    start: float = 0.01
    stop: float = 1.56
    count: int = 60
    output: str = "out/full_model.csv"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start", type=float, default=FullSweepConfig.start)
    ap.add_argument("--stop", type=float, default=FullSweepConfig.stop)
    ap.add_argument("--count", type=int, default=FullSweepConfig.count)
    ap.add_argument("--output", default=FullSweepConfig.output)
    cfg = FullSweepConfig(**vars(ap.parse_args()))
    code = cli.main(["sweep", "--model", "qutrit", "--axis", "alpha",
                     "--range", f"{cfg.start!r},{cfg.stop!r},{cfg.count}", "--output", cfg.output])
    if code == 0:
        print("wrote", cfg.output)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
