"""Run every config in scripts/configs through the three subcommands.

Usage: python3 scripts/run_configs.py [--out results] [--only box_1d ...]
"""

import argparse
import time
from pathlib import Path

from hausdorff_lab.cli import main

HERE = Path(__file__).resolve().parent


def run(cfg: Path, out: Path) -> dict:
    status = {}
    for cmd in ("norms", "sweep", "check"):
        t0 = time.perf_counter()
        status[cmd] = (main([cmd, "--config", str(cfg), "--out", str(out)]),
                       time.perf_counter() - t0)
    return status


def cli() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args()
    configs = sorted((HERE / "configs").glob("*.json"))
    if args.only:
        configs = [c for c in configs if c.stem in args.only]
    summary = {}
    for cfg in configs:
        print(f"== {cfg.stem}")
        summary[cfg.stem] = run(cfg, Path(args.out) / cfg.stem)
    print("\nconfig            norms  sweep  check")
    for name, st in summary.items():
        cells = "  ".join(f"{st[c][0]:>1d} {st[c][1]:5.1f}s" for c in ("norms", "sweep", "check"))
        print(f"{name:16s}  {cells}")


if __name__ == "__main__":
    cli()
