"""Command-line entry point: ``sbci run|sweep|verify``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import worked
from .config import ConfigError, ExperimentConfig, load_config, load_sweep
from .core import ShareMatrix, compute_beta, init_indices, new_ledgers
from .metrics import SCATTER_HEADER, SUMMARY_HEADER, rows_to_csv
from .overlay import assign_managers, process_epoch, write_log
from .sim import run_experiment

logger = logging.getLogger("sbci")

SWEEP_HEADER = ["model", "policy", "alpha", "fr_fraction", "seed",
                "aad", "coop_rejection_pct", "msgs_report", "msgs_query", "status"]
VERIFY_NAMES = ("fig1-epoch0", "fig1-epoch1")


def _err(msg: str) -> None:
    print(f"sbci: {msg}", file=sys.stderr)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.epoch_size is not None:
        changes["epoch_size"] = args.epoch_size
    return cfg.replace(**changes) if changes else cfg


def write_run_outputs(result, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(result.config.to_text())
    (out / "scatter.csv").write_text(rows_to_csv(SCATTER_HEADER, result.scatter_rows()))
    (out / "summary.csv").write_text(rows_to_csv(SUMMARY_HEADER, [result.summary_row()]))
    write_log(out / "transactions.log", result.transactions)


def cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return 2
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return 2
    result = run_experiment(cfg)
    out = Path(args.out or "out")
    write_run_outputs(result, out)
    sys.stdout.write(rows_to_csv(SUMMARY_HEADER, [result.summary_row()]))
    return 0


def _run_cell(payload):
    cfg, cell_dir = payload
    result = run_experiment(cfg)
    write_run_outputs(result, Path(cell_dir))
    return result.summary_row()


def cmd_sweep(args) -> int:
    try:
        spec = load_sweep(args.spec)
    except OSError as exc:
        _err(f"cannot read sweep spec: {exc}")
        return 2
    except ConfigError as exc:
        _err(f"invalid sweep spec: {exc}")
        return 2
    if args.seed is not None:
        spec.base = spec.base.replace(seed=args.seed)
    out = Path(args.out or spec.out or "sweep_out")
    out.mkdir(parents=True, exist_ok=True)

    cells = spec.cells()
    rows: list = [None] * len(cells)
    jobs: dict = {}
    for k, cell in enumerate(cells):
        try:
            cfg = spec.config_for(cell)
            if args.epoch_size is not None:
                cfg = cfg.replace(epoch_size=args.epoch_size)
        except ConfigError as exc:
            rows[k] = _sweep_row(cell, None, f"error: {exc}")
            continue
        jobs[k] = (cfg, str(out / f"cell_{k:03d}"))

    workers = args.jobs or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {k: pool.submit(_run_cell, payload) for k, payload in jobs.items()}
            outcomes = {}
            for k, fut in futures.items():
                try:
                    outcomes[k] = fut.result()
                except Exception as exc:  # a failed cell is reported, not fatal
                    outcomes[k] = exc
    else:
        outcomes = {}
        for k, payload in jobs.items():
            try:
                outcomes[k] = _run_cell(payload)
            except Exception as exc:
                outcomes[k] = exc
    for k, outcome in outcomes.items():
        if isinstance(outcome, Exception):
            rows[k] = _sweep_row(cells[k], None, f"error: {outcome}")
        else:
            rows[k] = _sweep_row(cells[k], outcome, "ok")

    (out / "sweep_summary.csv").write_text(rows_to_csv(SWEEP_HEADER, rows))
    _print_table(rows)
    failed = sum(1 for r in rows if r[-1] != "ok")
    if failed:
        _err(f"{failed} of {len(rows)} cells failed")
        return 1
    return 0


def _sweep_row(cell, summary, status):
    if summary is None:
        metrics = ["", "", "", ""]
    else:
        # summary: model, alpha, fr_fraction, aad, coop_rejection_pct, msgs_report, msgs_query
        metrics = summary[3:7]
    return [cell["model"], cell["policy"], str(cell["alpha"]), str(cell["fr_fraction"]),
            str(cell["seed"]), *metrics, status]


def _print_table(rows) -> None:
    print(f"{'S.N.':>4}  {'model':<9} {'policy':<15} {'alpha':>5} {'free-riders':>11} {'AAD':>10} {'% rejections':>13}")
    for k, r in enumerate(rows, 1):
        fr = f"{float(r[3]) * 100:g}%"
        aad = r[5] or "-"
        rej = r[6] or "-"
        print(f"{k:>4}  {r[0]:<9} {r[1]:<15} {r[2]:>5} {fr:>11} {aad:>10.10} {rej:>13.13}")


def verify_worked_example(name: str) -> tuple[bool, str]:
    """Run the five-peer example through the overlay and compare with the golden vectors."""
    n, alpha = worked.N_PEERS, worked.ALPHA
    assignment = assign_managers(list(range(n)), seed=0)
    x = init_indices(n, alpha)
    ledgers = new_ledgers(x)
    lines = []
    x, _ = process_epoch(worked.EPOCH0, assignment, ledgers, x, alpha, epoch=0)
    if name == "fig1-epoch0":
        golden = worked.X1
    else:
        s1 = ShareMatrix.from_triplets(n, worked.EPOCH1)
        betas = [compute_beta(i, s1, x, ledgers[i]) for i in range(n)]
        x, _ = process_epoch(worked.EPOCH1, assignment, ledgers, x, alpha, epoch=1)
        golden = worked.X2
        for i, (b, want) in enumerate(zip(betas, worked.BETA1)):
            ok = abs(b - want) <= worked.TOLERANCE
            lines.append(f"beta peer {i + 1}: got {b:.6f} want {want:.6f} {'ok' if ok else 'MISMATCH'}")
    all_ok = all(line.endswith("ok") for line in lines)
    for i, (got, want) in enumerate(zip(x, golden)):
        ok = abs(got - want) <= worked.TOLERANCE
        all_ok &= ok
        lines.append(f"x peer {i + 1}: got {got:.6f} want {want:.4f} diff {got - want:+.2e} {'ok' if ok else 'MISMATCH'}")
    return all_ok, "\n".join(lines)


def cmd_verify(args) -> int:
    if args.name not in VERIFY_NAMES:
        _err(f"unknown example {args.name!r}; choose from {', '.join(VERIFY_NAMES)}")
        return 2
    ok, report = verify_worked_example(args.name)
    print(report)
    if not ok:
        _err(f"{args.name}: mismatch against golden values")
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbci", description="SBCI incentive-mechanism simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a key=value config file")
    run.add_argument("config")
    sweep = sub.add_parser("sweep", help="run a grid of experiments")
    sweep.add_argument("spec")
    sweep.add_argument("--jobs", type=int, default=None, help="worker processes (default: all CPUs)")
    for sp in (run, sweep):
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the seed (base seed for sweeps)")
        sp.add_argument("--epoch-size", type=int, default=None)

    verify = sub.add_parser("verify", help="check the five-peer worked example")
    verify.add_argument("name", help=" | ".join(VERIFY_NAMES))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
