"""Batch command-line interface.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 I/O error,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import CONFIG_ALIASES, ConfigError, EnergyMode, SimConfig, VSFError, config_violations
from .data_io import (
    AR1,
    AffineLink,
    AlignmentError,
    Interpolate,
    LoadError,
    RandomWalk,
    Reject,
    SineDrift,
    SpecError,
    SyntheticSpec,
    align_traces,
    generate_synthetic,
    load_csv,
    write_csv,
)
from .sim import SimReport, compare, run_baseline_lms, run_simulation

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_USAGE = 0, 1, 2, 3, 64

log = logging.getLogger("vsf")


class DataError(VSFError):
    pass


class OutputError(VSFError):
    pass


class UsageError(VSFError):
    pass


# ------------------------------------------------------------------ config

_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_SYNTH_KEYS = {
    "nodes", "length", "process", "coeff", "noise_std", "step_std", "period",
    "amplitude", "offset", "drift", "start", "mean", "phase", "links", "seed", "unit",
}


def _coerce(name: str, text: str):
    f = _FIELDS[name]
    kind = str(f.type)
    t = text.strip()
    try:
        if name == "energy_mode":
            return EnergyMode(t)
        if "bool" in kind:
            if t.lower() in ("1", "true", "yes", "on"):
                return True
            if t.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if name == "refit_window":
            return None if t.lower() in ("", "none") else int(t)
        if "int" in kind:
            return int(t)
        return float(t)
    except ValueError:
        raise ConfigError([f"{name}: cannot parse {text!r}"]) from None


def canonical_key(key: str) -> str:
    key = key.strip()
    return CONFIG_ALIASES.get(key, key)


def parse_config_text(text: str) -> tuple[dict, dict]:
    """Parse ``key = value`` lines into (SimConfig overrides, synthetic keys).

    Synthetic-dataset keys carry a ``synth.`` prefix. Unknown keys are errors.
    """
    sim, synth, errors = {}, {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key = value")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("synth."):
            sub = key[len("synth."):]
            if sub not in _SYNTH_KEYS:
                errors.append(f"line {lineno}: unknown synthetic key {key!r}")
            synth[sub] = value
            continue
        name = canonical_key(key)
        if name not in _FIELDS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            sim[name] = _coerce(name, value)
        except ConfigError as exc:
            errors.extend(f"line {lineno}: {v}" for v in exc.violations)
    if errors:
        raise ConfigError(errors)
    return sim, synth


def load_config(path) -> tuple[SimConfig, dict]:
    if path is None:
        return SimConfig(), {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from None
    sim, synth = parse_config_text(text)
    cfg = SimConfig(**sim)
    violations = config_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg, synth


def synthetic_spec(keys: dict, seed: int | None = None) -> SyntheticSpec:
    def num(k, default=None):
        if k not in keys:
            if default is None:
                raise ConfigError([f"synth.{k} is required"])
            return default
        try:
            return float(keys[k])
        except ValueError:
            raise ConfigError([f"synth.{k}: cannot parse {keys[k]!r}"]) from None

    kind = keys.get("process", "sine").strip().lower()
    if kind == "ar1":
        proc = AR1(num("coeff"), num("noise_std", 0.0), num("start", 1.0), num("mean", 0.0))
    elif kind in ("random_walk", "randomwalk"):
        proc = RandomWalk(num("step_std"), num("start", 0.0))
    elif kind in ("sine", "sinedrift", "sine_drift"):
        phase = num("phase") if "phase" in keys else None
        proc = SineDrift(num("period"), num("amplitude"), num("noise_std", 0.0),
                         num("offset", 0.0), num("drift", 0.0), phase)
    else:
        raise ConfigError([f"synth.process: unknown process {kind!r}"])
    links = []
    for item in filter(None, (s.strip() for s in keys.get("links", "").split(","))):
        # source>target:slope[:intercept[:noise_std]]
        try:
            ends, *params = item.split(":")
            src, dst = (int(x) for x in ends.split(">"))
            vals = [float(x) for x in params] + [0.0] * (3 - len(params))
            links.append(AffineLink(src, dst, vals[0], vals[1], vals[2]))
        except (ValueError, IndexError):
            raise ConfigError([f"synth.links: cannot parse {item!r}"]) from None
    try:
        return SyntheticSpec(
            int(num("nodes", 2)), int(num("length", 1000)), proc, tuple(links),
            int(seed if seed is not None else num("seed", 0)), keys.get("unit", ""),
        )
    except SpecError as exc:
        raise ConfigError([str(exc)]) from None


# -------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    config: SimConfig
    out_dir: Path
    data_path: Path | None = None
    synthetic: SyntheticSpec | None = None
    layout: str = "wide"
    max_gap: int | None = 3
    force: bool = False
    assignment: dict | None = None
    emit: set = field(default_factory=lambda: {"slots", "summary", "energy"})

    def dataset(self):
        if self.data_path is not None:
            try:
                traces = load_csv(self.data_path, self.layout)
            except FileNotFoundError:
                raise DataError(f"dataset not found: {self.data_path}") from None
            except OSError as exc:
                raise DataError(f"cannot read dataset {self.data_path}: {exc.strerror}") from None
            policy = Reject() if self.max_gap is None else Interpolate(self.max_gap)
            return align_traces(traces, policy)
        if self.synthetic is not None:
            return generate_synthetic(self.synthetic)
        raise UsageError("either --data or synth.* config keys are required")


def _prepare_out(out_dir: Path, names: Sequence[str], force: bool) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc.strerror}") from None
    clashes = [n for n in names if (out_dir / n).exists()]
    if clashes and not force:
        raise OutputError(f"refusing to overwrite {', '.join(clashes)} in {out_dir} (use --force)")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def write_slots(report: SimReport, path: Path) -> None:
    header = ["slot", "node_id", "reconstructed", "actual", "abs_error", "phase", "source",
              "action", "mode"]
    _write_rows(path, header, (
        (r.slot, r.node_id, r.reconstructed, r.actual, r.abs_error, r.phase, r.source,
         r.action, r.mode) for r in report.records
    ))


SUMMARY_FIELDS = ["mae", "rmse", "max_error", "mae_predicted", "senses", "transmissions",
                  "suppressions", "dormant_slots", "predicted_slots"]


def write_summary(report: SimReport, path: Path) -> None:
    _write_rows(path, ["node_id"] + SUMMARY_FIELDS, (
        [n] + [getattr(s, f) for f in SUMMARY_FIELDS] for n, s in report.node_stats.items()
    ))


def write_energy(report: SimReport, path: Path) -> None:
    def row(scope, label, group):
        accs = [report.ledger.node(n) for n in group]
        return [scope, label] + [
            sum(getattr(a, f) for a in accs) / 1e6 for f in ("sensing", "tx", "mode", "switch")
        ] + [sum(a.total_uj for a in accs) / 1e6] + [
            sum(getattr(a, f) for a in accs)
            for f in ("senses", "transmissions", "switches", "active_slots", "dormant_slots")
        ]

    rows = [row("node", n, [n]) for n in report.node_ids]
    rows += [row("combined", "+".join(p), p) for p in report.pairs]
    rows.append(row("total", "all", report.node_ids))
    _write_rows(path, ["scope", "nodes", "sensing_j", "tx_j", "mode_j", "switch_j", "total_j",
                       "senses", "transmissions", "switches", "active_slots", "dormant_slots"],
                rows)


def write_comparison(rows, path: Path) -> None:
    fields = [f.name for f in dataclasses.fields(rows[0])]
    _write_rows(path, fields, ([getattr(r, f) for f in fields] for r in rows))


# -------------------------------------------------------------- commands

RUN_FILES = ("slots.csv", "summary.csv", "energy.csv")


def cmd_run(manifest: RunManifest) -> SimReport:
    _prepare_out(manifest.out_dir, RUN_FILES, manifest.force)
    report = run_simulation(manifest.config, manifest.dataset(), manifest.assignment)
    write_slots(report, manifest.out_dir / "slots.csv")
    write_summary(report, manifest.out_dir / "summary.csv")
    write_energy(report, manifest.out_dir / "energy.csv")
    return report


def cmd_compare(manifest: RunManifest):
    _prepare_out(manifest.out_dir, ("comparison.csv",), manifest.force)
    data = manifest.dataset()
    vsf = run_simulation(manifest.config, data, manifest.assignment)
    base = run_baseline_lms(manifest.config, data)
    rows = compare(vsf, base)
    write_comparison(rows, manifest.out_dir / "comparison.csv")
    return rows


def parse_grid(spec: str) -> tuple[list[str], list[tuple]]:
    """``"epsilon=0,0.5;O_p:R_p=20:5,20:10"`` -> (keys, cartesian points)."""
    keys: list[str] = []
    groups: list[list[tuple]] = []
    for group in filter(None, (g.strip() for g in (spec or "").split(";"))):
        if "=" not in group:
            raise UsageError(f"grid group {group!r} lacks '='")
        lhs, rhs = group.split("=", 1)
        names = [canonical_key(k) for k in lhs.split(":")]
        for n in names:
            if n not in _FIELDS:
                raise ConfigError([f"grid: unknown key {n!r}"])
        values = []
        for item in filter(None, (v.strip() for v in rhs.split(","))):
            parts = item.split(":")
            if len(parts) != len(names):
                raise UsageError(f"grid value {item!r} does not match keys {lhs!r}")
            values.append(tuple(_coerce(n, v) for n, v in zip(names, parts)))
        if not values:
            raise UsageError(f"grid group {group!r} has no values")
        keys.extend(names)
        groups.append(values)
    if not groups:
        raise UsageError("empty grid")
    points = [tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*groups)]
    return keys, points


def sweep_row(report: SimReport) -> dict:
    errs = np.array([r.abs_error for r in report.records])
    paired = sorted({n for p in report.pairs for n in p})
    row = {
        "mae": float(errs.mean()),
        "error_std": float(errs.std()),
        "energy_total": report.ledger.grand_total(),
        "energy_combined": sum(report.ledger.node(n).total_uj for n in paired) / 1e6,
        "tx_total": sum(s.transmissions for s in report.node_stats.values()),
    }
    for n in report.node_ids:
        row[f"mae_{n}"] = report.node_stats[n].mae
        row[f"energy_{n}"] = report.ledger.node(n).total
        row[f"tx_{n}"] = report.node_stats[n].transmissions
    return row


def _sweep_point(args):
    cfg, data, assignment = args
    try:
        violations = config_violations(cfg)
        if violations:
            raise ConfigError(violations)
        return "ok", "", sweep_row(run_simulation(cfg, data, assignment))
    except VSFError as exc:
        return "error", str(exc), {}


def cmd_sweep(manifest: RunManifest, grid: str, jobs: int = 1) -> tuple[list[dict], int]:
    keys, points = parse_grid(grid)
    _prepare_out(manifest.out_dir, ("sweep.csv",), manifest.force)
    data = manifest.dataset()
    tasks = []
    for point in points:
        try:
            cfg = dataclasses.replace(manifest.config, **dict(zip(keys, point)))
        except (TypeError, ValueError) as exc:
            cfg = exc
        tasks.append((cfg, data, manifest.assignment))

    results = [None] * len(tasks)
    runnable = [k for k, t in enumerate(tasks) if isinstance(t[0], SimConfig)]
    for k, t in enumerate(tasks):
        if not isinstance(t[0], SimConfig):
            results[k] = ("error", str(t[0]), {})
    if jobs > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, res in zip(runnable, pool.map(_sweep_point, [tasks[k] for k in runnable])):
                results[k] = res
    else:
        for k in runnable:
            results[k] = _sweep_point(tasks[k])

    metric_cols: list[str] = []
    for _, _, m in results:
        for c in m:
            if c not in metric_cols:
                metric_cols.append(c)
    rows = []
    for point, (status, err, metrics) in zip(points, results):
        row = dict(zip(keys, (v.value if hasattr(v, "value") else v for v in point)))
        row.update(status=status, error=err)
        row.update({c: metrics.get(c, "") for c in metric_cols})
        rows.append(row)
    header = list(keys) + ["status", "error"] + metric_cols
    _write_rows(manifest.out_dir / "sweep.csv", header, ([r[h] for h in header] for r in rows))
    failed = sum(1 for r in rows if r["status"] != "ok")
    return rows, failed


def cmd_synth(synth: SyntheticSpec, out_dir: Path, force: bool, name: str = "data.csv") -> Path:
    _prepare_out(out_dir, (name,), force)
    path = out_dir / name
    try:
        write_csv(generate_synthetic(synth), path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path


# ------------------------------------------------------------------ main

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vsf", description="Virtual sensing simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("--config", type=Path, help="flat key = value config file")
        if data:
            p.add_argument("--data", type=Path, help="dataset CSV")
            p.add_argument("--layout", choices=("wide", "long"), default="wide")
            p.add_argument("--max-gap", type=int, default=3,
                           help="interpolate interior gaps up to N slots; 0 rejects any gap")
            p.add_argument("--fix", action="append", default=[], metavar="NODE=COMP[,COMP]",
                           help="pin a Type-I node and its companions (repeatable)")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--seed", type=int, help="override rng_seed / synth.seed")

    common(sub.add_parser("run", help="simulate and write slots/summary/energy CSVs"))
    p = sub.add_parser("sweep", help="one summary row per grid point")
    common(p)
    p.add_argument("--grid", required=True,
                   help='e.g. "epsilon=0,0.5,1" or "O_p:R_p=20:5,20:10"; groups joined by ";"')
    p.add_argument("--jobs", type=int, default=1)
    common(sub.add_parser("compare", help="VSF versus LMS-only dual prediction"))
    common(sub.add_parser("synth", help="write a synthetic dataset CSV"), data=False)
    return parser


def _parse_fix(items) -> dict | None:
    if not items:
        return None
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--fix expects NODE=COMP[,COMP], got {item!r}")
        node, comps = item.split("=", 1)
        out[node.strip()] = tuple(c.strip() for c in comps.split(",") if c.strip())
    return out


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="vsf: %(levelname)s: %(message)s")
    try:
        cfg, synth_keys = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, rng_seed=args.seed)
        synth = synthetic_spec(synth_keys, args.seed) if synth_keys else None
        if args.command == "synth":
            if synth is None:
                raise UsageError("synth needs synth.* keys in --config")
            cmd_synth(synth, args.out, args.force)
            return EXIT_OK
        manifest = RunManifest(
            cfg, args.out, args.data, synth if args.data is None else None, args.layout,
            args.max_gap if args.max_gap > 0 else None, args.force, _parse_fix(args.fix),
        )
        if args.command == "run":
            cmd_run(manifest)
        elif args.command == "compare":
            cmd_compare(manifest)
        else:
            _, failed = cmd_sweep(manifest, args.grid, args.jobs)
            if failed:
                print(f"vsf: {failed} grid point(s) failed; see sweep.csv", file=sys.stderr)
                return EXIT_CONFIG
        return EXIT_OK
    except UsageError as exc:
        print(f"vsf: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for v in exc.violations:
            print(f"vsf: config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"vsf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataError, LoadError, AlignmentError, VSFError) as exc:
        print(f"vsf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
