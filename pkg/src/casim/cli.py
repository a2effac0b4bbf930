"""``casim``: run a (scheduler x seed) matrix and write the report tables.

Every seed's workload is generated once, written as a replay file and read
back by each scheduler, so all policies see byte-identical traffic.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PRESETS, parse_config, preset
from .engine import ConfigError, SimConfig, simulate
from .metrics import evaluate
from .schedulers import SchedulerKind
from .traffic import Workload, generate_workload

log = logging.getLogger("casim")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
GBR_SOJOURN_QCIS = (2, 3, 4, 5)


@dataclass
class RunPlan:
    config: SimConfig
    schedulers: list[SchedulerKind]
    seeds: list[int]
    out_dir: Path
    compare: bool = False
    emit_replay: bool = False
    emit_events: bool = False
    jobs: int = 1
    config_source: str = "preset:paper-6cc"

    def __post_init__(self) -> None:
        if not self.schedulers:
            raise ConfigError("--scheduler", "at least one scheduler is required")
        if not self.seeds:
            raise ConfigError("--seed", "at least one seed is required")
        if self.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")


@dataclass
class CellResult:
    scheduler: str
    seed: int
    ok: bool
    report: dict = field(default_factory=dict)
    error: str = ""


def write_atomic(path: Path, text: str) -> None:
    """Write via a temp file in the same directory and rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else repr(float(v)) if isinstance(v, float) else str(v)


def _run_cell(cfg: SimConfig, replay_path: str, events_path: str | None) -> CellResult:
    try:
        wl = Workload.read_replay(replay_path)
        result = simulate(cfg, wl)
        report = evaluate(result)
        if events_path:
            write_atomic(Path(events_path), result.log.to_text())
        return CellResult(cfg.scheduler.value, cfg.seed, True, json.loads(report.to_json()))
    except Exception:  # reported in the manifest, the matrix carries on
        return CellResult(cfg.scheduler.value, cfg.seed, False, error=traceback.format_exc())


def _tables(cells: list[CellResult]) -> dict[str, str]:
    ok = [c for c in cells if c.ok]
    fig6 = []
    for c in ok:
        for q in range(1, 10):
            mean = c.report["sojourn_ms_by_qci"][str(q)]
            fig6.append([c.scheduler, c.seed, q, _fmt(mean), c.report["n_completed_by_qci"][str(q)]])
    return {
        "fig6_sojourn.csv": _csv_text(["scheduler", "seed", "qci", "mean_sojourn_ms", "n_completed"], fig6),
        "fig7_bestcc.csv": _csv_text(
            ["scheduler", "seed", "beta_opt_cc"], [[c.scheduler, c.seed, _fmt(c.report["beta_opt_cc"])] for c in ok]
        ),
        "fig8_gbr.csv": _csv_text(
            ["scheduler", "seed", "beta_qos"], [[c.scheduler, c.seed, _fmt(c.report["beta_qos"])] for c in ok]
        ),
        "fig9_qoe.csv": _csv_text(
            ["scheduler", "seed", "alpha_sch_qoe"], [[c.scheduler, c.seed, _fmt(c.report["alpha_sch_qoe"])] for c in ok]
        ),
        "digests.csv": _csv_text(["scheduler", "seed", "digest"], [[c.scheduler, c.seed, c.report["digest"]] for c in ok]),
        "reports.jsonl": "".join(json.dumps(c.report, sort_keys=True) + "\n" for c in ok),
    }


def gbr_sojourn(report: dict) -> float | None:
    num = den = 0.0
    for q in GBR_SOJOURN_QCIS:
        n = report["n_completed_by_qci"][str(q)]
        if n:
            num += report["sojourn_ms_by_qci"][str(q)] * n
            den += n
    return num / den if den else None


def comparison_table(cells: list[CellResult], schedulers: list[str]) -> str:
    """Per-scheduler means over seeds, plus how often QSCS leads each column."""
    cols = ["beta_opt_cc", "beta_qos", "alpha_sch_qoe", "gbr_sojourn_ms", "served_bits_total"]
    by = {s: [c for c in cells if c.ok and c.scheduler == s] for s in schedulers}

    def value(c: CellResult, col: str):
        return gbr_sojourn(c.report) if col == "gbr_sojourn_ms" else c.report[col]

    rows = []
    for s in schedulers:
        row = [s, len(by[s])]
        for col in cols:
            vals = [v for v in (value(c, col) for c in by[s]) if v is not None]
            row.append(_fmt(float(np.mean(vals))) if vals else "")
        rows.append(row)
    return _csv_text(["scheduler", "n_seeds", *cols], rows)


def run_matrix(plan: RunPlan) -> int:
    """Run every (scheduler, seed) cell; returns the process exit status."""
    out = plan.out_dir
    out.mkdir(parents=True, exist_ok=True)
    replay_dir = out / "replays" if plan.emit_replay else Path(tempfile.mkdtemp(prefix="casim-replays-"))
    tasks = []
    for seed in plan.seeds:
        cfg_seed = plan.config.with_(seed=seed)
        path = replay_dir / f"workload-seed{seed}.csv"
        write_atomic(path, generate_workload(cfg_seed.traffic, cfg_seed.horizon_ms, seed).to_replay_text())
        for kind in plan.schedulers:
            events = str(out / "events" / f"{kind.value}-seed{seed}.log") if plan.emit_events else None
            tasks.append((cfg_seed.with_(scheduler=kind), str(path), events))

    cells: list[CellResult] = []
    try:
        if plan.jobs == 1:
            results = (_run_cell(*t) for t in tasks)
            for cell in results:
                _done(cell)
                cells.append(cell)
        else:
            with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
                for cell in pool.map(_run_cell, *zip(*tasks)):
                    _done(cell)
                    cells.append(cell)
    finally:
        if not plan.emit_replay:
            for p in replay_dir.glob("*"):
                p.unlink()
            replay_dir.rmdir()

    for name, text in _tables(cells).items():
        write_atomic(out / name, text)
    if plan.compare:
        write_atomic(out / "comparison.csv", comparison_table(cells, [k.value for k in plan.schedulers]))
    failed = [c for c in cells if not c.ok]
    manifest = {
        "config": plan.config_source,
        "schedulers": [k.value for k in plan.schedulers],
        "seeds": plan.seeds,
        "complete": not failed,
        "cells": [
            {"scheduler": c.scheduler, "seed": c.seed, "status": "ok" if c.ok else "failed", "error": c.error}
            for c in cells
        ],
    }
    write_atomic(out / "MANIFEST.json", json.dumps(manifest, indent=2) + "\n")
    return 1 if failed else 0


def _done(cell: CellResult) -> None:
    if cell.ok:
        r = cell.report
        print(
            f"{cell.scheduler} seed={cell.seed} beta_opt_cc={_fmt(r['beta_opt_cc'])} beta_qos={_fmt(r['beta_qos'])} "
            f"alpha={_fmt(r['alpha_sch_qoe'])} digest={r['digest']}",
            file=sys.stderr,
        )
    else:
        print(f"{cell.scheduler} seed={cell.seed} FAILED", file=sys.stderr)
        log.error("%s seed=%d failed:\n%s", cell.scheduler, cell.seed, cell.error)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="casim", description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="YAML run configuration")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in configuration (default paper-6cc)")
    p.add_argument("--scheduler", action="append", help="policy to run; repeatable (default: all five)")
    p.add_argument("--seed", action="append", type=int, help="seed; repeatable (default: the config's seed)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--emit-replay", action="store_true", help="keep the per-seed workload replay files")
    p.add_argument("--emit-events", action="store_true", help="write each run's canonical event log")
    p.add_argument("--compare", action="store_true", help="write comparison.csv across schedulers")
    p.add_argument("--jobs", type=int, default=1, help="runs executed in parallel")
    return p


def _setup_logging() -> None:
    name = os.environ.get("CASIM_LOG_LEVEL", "warn").strip().lower()
    if name not in LOG_LEVELS:
        raise ConfigError("CASIM_LOG_LEVEL", f"expected one of {sorted(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=LOG_LEVELS[name], format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging()
        if args.config is not None:
            cfg, source = parse_config(args.config), str(args.config)
        else:
            name = args.preset or "paper-6cc"
            cfg, source = preset(name), f"preset:{name}"
        kinds = [SchedulerKind.parse(s) for s in args.scheduler] if args.scheduler else list(SchedulerKind)
        plan = RunPlan(
            config=cfg,
            schedulers=list(dict.fromkeys(kinds)),
            seeds=list(dict.fromkeys(args.seed)) if args.seed else [cfg.seed],
            out_dir=args.out,
            compare=args.compare,
            emit_replay=args.emit_replay,
            emit_events=args.emit_events,
            jobs=args.jobs,
            config_source=source,
        )
    except (ConfigError, ValueError) as exc:
        print(f"casim: error: {exc}", file=sys.stderr)
        return 2
    return run_matrix(plan)


if __name__ == "__main__":
    sys.exit(main())
