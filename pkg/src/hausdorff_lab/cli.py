"""Command-line frontend: ``hausdorff-lab {norms,sweep,check} --config cfg.json``.

Exit status is 0 on success, 1 when a check fails or a sweep does not
converge, and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, build_kernel, load_config, resolve_threads
from .extremal import SweepError, fmt, h1_lower_bound_sweep, lp_lower_bound_sweep
from .hausdorff import QuadConfig
from .kernel import moment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

NORM_COLUMNS = ["kernel", "n", "p", "moment_1-1/p", "moment_1/p", "moment_0", "moment_1",
                "converged_1-1/p", "converged_1/p", "converged_0", "converged_1"]


def _stamp() -> str:
    return f"hausdorff-lab {__version__} generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}"


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {_stamp()}\n")
        fh.write(buf.getvalue())


def _p_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def norm_rows(cfg: ExperimentConfig) -> list:
    """One row per p: the moments that give the four sharp operator norms."""
    k = build_kernel(cfg)
    tol = min(cfg.tolerances.quadrature, 1e-10)
    fixed = {a: moment(k, a, tol) for a in (0.0, 1.0)}
    rows = []
    for p in cfg.p_list:
        a, b = (1.0, 0.0) if math.isinf(p) else (1.0 - 1.0 / p, 1.0 / p)
        ma = fixed.get(a) or moment(k, a, tol)
        mb = fixed.get(b) or moment(k, b, tol)
        reps = [ma, mb, fixed[0.0], fixed[1.0]]
        rows.append([k.name, k.n, _p_label(p)] + [fmt(r.value) for r in reps]
                    + [str(bool(r.converged)).lower() for r in reps])
    return rows


def cmd_norms(cfg: ExperimentConfig, out: Path) -> int:
    rows = norm_rows(cfg)
    _write_csv(out / "norms.csv", NORM_COLUMNS, rows)
    print(f"wrote {out / 'norms.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> int:
    k = build_kernel(cfg)
    q = QuadConfig(tolerance=cfg.tolerances.quadrature, threads=cfg.threads)
    summary, ok = [], True
    for p in cfg.p_list:
        if math.isinf(p):
            continue  # the sup-norm case is a direct check, not a sweep
        name = f"sweep_lp_p{_p_label(p)}.csv"
        try:
            res = lp_lower_bound_sweep(k, p, cfg.eps_schedule, tol=cfg.tolerances.quadrature)
        except SweepError as exc:
            ok = False
            summary.append(["lp", _p_label(p), "", "", "", "false", str(exc)])
            continue
        res.to_csv(out / name, preamble=_stamp())
        ok &= res.converged
        summary.append(["lp", _p_label(p), fmt(res.extrapolated), fmt(res.target),
                        name, str(res.converged).lower(), ""])
    if cfg.h1_eps_schedule:
        name = "sweep_h1.csv"
        try:
            res = h1_lower_bound_sweep(k, cfg.delta, cfg.h1_eps_schedule, cfg.grid_spec(), q)
            res.to_csv(out / name, preamble=_stamp())
            ok &= res.converged
            summary.append(["h1", "1", fmt(res.extrapolated), fmt(res.target), name,
                            str(res.converged).lower(), res.context.get("note", "")])
        except SweepError as exc:
            ok = False
            summary.append(["h1", "1", "", "", "", "false", str(exc)])
    _write_csv(out / "sweep_summary.csv",
               ["kind", "p", "extrapolated", "target", "file", "converged", "note"], summary)
    for row in summary:
        print(f"{'PASS' if row[5] == 'true' else 'FAIL'} {row[0]} p={row[1]} "
              f"extrapolated={row[2] or '-'} target={row[3] or '-'} {row[6]}".rstrip())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check(cfg: ExperimentConfig, out: Path) -> int:
    from .verify import run_report

    doc = run_report(cfg, out / "check_report.json")
    for c in doc["checks"]:
        flag = "PASS" if c["passed"] else "FAIL"
        ctx = c["context"]
        p = f"p={ctx['p']:g}" if c["name"] == "upper_bound_lp" else None
        label = " ".join(str(x) for x in (c["name"], p, ctx.get("f")) if x)
        print(f"{flag} {label} residual={c['residual']} tol={c['tolerance']}")
    for s in doc["skipped"]:
        print(f"SKIP {s['name']}: {s['reason']}")
    return EXIT_OK if doc["passed"] else EXIT_FAIL


COMMANDS = {"norms": cmd_norms, "sweep": cmd_sweep, "check": cmd_check}
HELP = {"norms": "tabulate the moments that give the sharp operator norms",
        "sweep": "run the L^p and H^1 lower-bound sweeps",
        "check": "run the identity checks and write a JSON report"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hausdorff-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", required=True, help="experiment JSON file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--threads", type=int, help="worker threads for quadrature")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = replace(cfg, threads=resolve_threads(args.threads))
        out = Path(args.out or cfg.outputs)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a run failure, never a silent success
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
