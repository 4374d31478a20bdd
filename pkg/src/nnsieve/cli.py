"""Command-line front end.

    nnsieve consistency --n-grid 50,100,200 --seed 1 --out results/
    nnsieve normality --n 300 --seed 7 --workers 4
    nnsieve diagnostics --r-exponent 0.125 --v-exponent 0.1
    nnsieve --config results/manifest.json        # rerun a previous run

Exit codes: 0 success, 1 usage error, 2 I/O failure, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, sieve, simlab
from .errors import InvalidInputError
from .sieve import SieveSchedule
from .trainer import TrainConfig

COMMANDS = ("inconsistency", "consistency", "normality", "diagnostics")
FORMATS = ("csv", "json")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    truth: tuple = simlab.TRUTHS
    n_grid: tuple = ()
    noise_sd: float = 0.7
    r_exponent: float = 0.25
    r_scale: float = 1.0
    v_scale: float = 10.0
    v_exponent: float = 0.25
    iterations: int = 20000
    replicates: int = 1
    step_rule: str = "diminishing"
    seed: int = 0
    out: str = "results"
    format: str = "csv"
    workers: int = 1

    def schedule(self) -> SieveSchedule:
        return SieveSchedule(r_exponent=self.r_exponent, v_scale=self.v_scale,
                             v_exponent=self.v_exponent, r_scale=self.r_scale)

    def scenario(self) -> simlab.Scenario:
        return simlab.Scenario(
            truth=self.truth[0], noise_sd=self.noise_sd, n=self.n_grid[0],
            schedule=self.schedule(),
            train=TrainConfig(iterations=self.iterations, step_rule=self.step_rule),
            replicates=self.replicates, seed=self.seed,
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["truth"] = list(self.truth)
        d["n_grid"] = list(self.n_grid)
        return d


# per-command defaults reproducing the simulation settings of each study
DEFAULTS = {
    "inconsistency": dict(truth=("NN",), n_grid=(500,), noise_sd=0.1, r_exponent=0.0, r_scale=2.0,
                          v_scale=math.inf, v_exponent=0.0, iterations=30000, replicates=1,
                          step_rule="constant"),
    "consistency": dict(truth=simlab.TRUTHS, n_grid=simlab.CONSISTENCY_NS, noise_sd=0.7,
                        r_exponent=0.25, v_scale=10.0, v_exponent=0.25, iterations=20000,
                        replicates=1),
    "normality": dict(truth=simlab.TRUTHS, n_grid=simlab.NORMALITY_NS, noise_sd=1.0,
                      r_exponent=0.125, v_scale=10.0, v_exponent=0.1, iterations=20000,
                      replicates=200),
    "diagnostics": dict(n_grid=tuple(10**k for k in range(2, 10)), r_exponent=0.25, v_scale=10.0,
                        v_exponent=0.25),
}

_KEYS = {f.name for f in fields(RunConfig)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> tuple:
    try:
        floats = [float(t) for t in str(text).split(",") if t.strip()]
        vals = tuple(int(v) for v in floats if v == int(v))
    except (ValueError, OverflowError):
        raise UsageError(f"malformed integer list: {text!r}")
    if len(vals) != len(floats):
        raise UsageError(f"non-integer sample size in {text!r}")
    if not vals:
        raise UsageError("empty n grid")
    return vals


def _truths(value) -> tuple:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    out = []
    for t in items:
        t = str(t).strip().upper()
        if t == "ALL":
            out.extend(simlab.TRUTHS)
        elif t in ("TRI", "SINE"):
            out.append("TRIG")
        elif t in simlab.TRUTHS:
            out.append(t)
        else:
            raise UsageError(f"unknown truth {t!r}; choose from NN, TRIG, ND, all")
    return tuple(dict.fromkeys(out))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nnsieve", description="Neural-network sieve estimation experiments.")
    p.add_argument("command_pos", nargs="?", choices=COMMANDS, metavar="COMMAND",
                   help=f"one of {', '.join(COMMANDS)}")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--truth", help="NN, TRIG, ND, comma list or 'all'")
    p.add_argument("--n", type=int, help="single sample size")
    p.add_argument("--n-grid", help="comma-separated sample sizes")
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--r-exponent", type=float)
    p.add_argument("--v-scale", type=float)
    p.add_argument("--v-exponent", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--workers", type=int)
    p.add_argument("--config", help="flat JSON config file or a previous run manifest")
    return p


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed config file {path}: {exc}")
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(doc) - _KEYS - {"n"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return doc


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Merge defaults < config file < command-line flags into a :class:`RunConfig`."""
    args = build_parser().parse_args(argv)
    file_vals = _load_config_file(args.config) if args.config else {}

    if args.command_pos and args.command and args.command_pos != args.command:
        raise UsageError("conflicting commands given")
    command = args.command_pos or args.command or file_vals.get("command")
    if command not in COMMANDS:
        raise UsageError("missing or unknown command; choose from " + ", ".join(COMMANDS))

    merged = dict(DEFAULTS[command])
    try:
        for key, val in file_vals.items():
            if key == "n":
                merged["n_grid"] = (int(val),)
            elif key == "n_grid":
                merged["n_grid"] = _int_list(",".join(str(v) for v in val) if isinstance(val, list) else val)
            elif key == "truth":
                merged["truth"] = _truths(val)
            elif key != "command":
                merged[key] = val
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config value: {exc}")

    if args.n is not None and args.n_grid is not None:
        raise UsageError("--n and --n-grid are mutually exclusive")
    if args.n is not None:
        merged["n_grid"] = (args.n,)
    if args.n_grid is not None:
        merged["n_grid"] = _int_list(args.n_grid)
    if args.truth is not None:
        merged["truth"] = _truths(args.truth)
    for key in ("noise_sd", "r_exponent", "v_scale", "v_exponent", "iterations", "replicates",
                "seed", "out", "format", "workers"):
        val = getattr(args, key)
        if val is not None:
            merged[key] = val

    try:
        cfg = RunConfig(command=command, **merged)
    except TypeError as exc:
        raise UsageError(str(exc))
    try:
        _validate(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config value: {exc}")
    return cfg


def _validate(cfg: RunConfig) -> None:
    grid = list(cfg.n_grid)
    if any(n < 1 for n in grid):
        raise UsageError("sample sizes must be >= 1")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("n grid must be strictly increasing")
    if cfg.format not in FORMATS:
        raise UsageError(f"unknown format {cfg.format!r}")
    if cfg.workers < 1:
        raise UsageError("--workers must be >= 1")
    try:
        cfg.schedule()
        if cfg.command != "diagnostics":
            cfg.scenario()
    except InvalidInputError as exc:
        raise UsageError(str(exc))
    if cfg.command == "inconsistency" and cfg.truth != ("NN",):
        raise UsageError("inconsistency runs use the NN truth only")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if v is None:
        return ""
    return str(v)


def _write_csv(path: Path, rows: list, columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(f"{float(v):.17g}")
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_table(path_stem: Path, rows: list, columns: Sequence[str], fmt: str) -> Path:
    if fmt == "csv":
        path = path_stem.with_suffix(".csv")
        _write_csv(path, rows, columns)
    else:
        path = path_stem.with_suffix(".json")
        doc = [{c: _jsonable(r.get(c)) for c in columns} for r in rows]
        path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def diagnostics_rows(cfg: RunConfig) -> list:
    sched = cfg.schedule()
    rows = []
    cons = sieve.check_consistency_rate(sched, cfg.n_grid)
    norm = sieve.check_normality_rate(sched, cfg.n_grid)
    for n, c, nr in zip(cfg.n_grid, cons, norm):
        s = sieve.dims(sched, n)
        rate = sieve.predicted_rate(sched, n) if n >= 2 else math.nan
        cover = (sieve.log_covering_bound(sieve.EntropyQuery(rate, n), s.r, s.V, sched.d)
                 if n >= 2 else math.nan)
        rows.append(dict(n=n, r_n=s.r, V_n=s.V, p_n=s.p, consistency_ratio=float(c),
                         normality_ratio=float(nr), predicted_rate=rate, log_covering_bound=cover))
    return rows


_RECORD_COLUMNS = ("truth", "n", "replicate", "r", "V", "err", "loss", "t_known", "t_plugin")


def _record_rows(report) -> list:
    return [{c: getattr(r, c) for c in _RECORD_COLUMNS} for r in report.records]


def _check_report(cfg: RunConfig, report) -> None:
    cells = len(cfg.truth) * len(cfg.n_grid) if cfg.command != "inconsistency" else 1
    if len(report.records) != cells * cfg.replicates:
        raise InvariantViolation(f"expected {cells * cfg.replicates} records, got {len(report.records)}")
    for r in report.records:
        if not (r.err >= 0 and r.loss >= 0):
            raise InvariantViolation(f"negative error or loss in record {r}")
    for t in report.tests:
        if not 0 <= t["p_value"] <= 1:
            raise InvariantViolation(f"p-value out of range: {t}")


def execute(cfg: RunConfig) -> int:
    """Run the configured command and write its files; returns the exit code."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"nnsieve: cannot create output directory {out}: {exc}", file=sys.stderr)
        return EXIT_IO

    written = []
    try:
        if cfg.command == "diagnostics":
            rows = diagnostics_rows(cfg)
            cols = ("n", "r_n", "V_n", "p_n", "consistency_ratio", "normality_ratio",
                    "predicted_rate", "log_covering_bound")
            written.append(_write_table(out / "diagnostics", rows, cols, cfg.format))
        else:
            scen = cfg.scenario()
            if cfg.command == "inconsistency":
                report = simlab.run_inconsistency(scen, workers=cfg.workers)
                cols = ("row", "gamma_1", "gamma_2", "alpha_1", "alpha_2", "gamma0_1", "gamma0_2",
                        "alpha0", "err", "loss", "param_distance")
            elif cfg.command == "consistency":
                report = simlab.run_consistency(scen, cfg.n_grid, cfg.truth, workers=cfg.workers)
                cols = ("n", "truth", "err", "loss")
            else:
                report = simlab.run_normality(scen, cfg.n_grid, cfg.truth, workers=cfg.workers)
                cols = ("truth", "n", "test", "statistic", "p_value")
            _check_report(cfg, report)
            written.append(_write_table(out / cfg.command, report.table, cols, cfg.format))
            written.append(_write_table(out / f"{cfg.command}_replicates", _record_rows(report),
                                        _RECORD_COLUMNS, cfg.format))
            if cfg.command == "normality":
                written.append(_write_table(
                    out / "normality_summary", report.summary,
                    ("truth", "n", "mean_t", "sd_t", "mean_t_plugin", "sd_t_plugin"), cfg.format))
                qq_dir = out / "qq"
                qq_dir.mkdir(exist_ok=True)
                for (truth, n), pts in report.qq.items():
                    path = qq_dir / f"qq_{truth}_n{n}.csv"
                    _write_csv(path, [dict(theoretical=a, empirical=b) for a, b in pts],
                               ("theoretical", "empirical"))
                    written.append(path)
        _write_manifest(out, cfg, written)
    except InvariantViolation as exc:
        print(f"nnsieve: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"nnsieve: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _write_manifest(out: Path, cfg: RunConfig, written: list) -> None:
    import numba
    import scipy

    files = {}
    for p in written:
        files[str(p.relative_to(out))] = hashlib.sha256(p.read_bytes()).hexdigest()
    manifest = dict(
        config=cfg.to_json(),
        versions=dict(nnsieve=__version__, python=platform.python_version(), numpy=np.__version__,
                      scipy=scipy.__version__, numba=numba.__version__),
        outputs=files,
    )
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"nnsieve: error: {exc}", file=sys.stderr)
        print("usage: nnsieve COMMAND [options]   (see nnsieve --help)", file=sys.stderr)
        return EXIT_USAGE
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
