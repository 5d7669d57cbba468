"""Command-line front end: JSON config in, CSV or JSON tables out.

    qhstop --config run.json --out results/ --format csv

The config names a ``command`` (solve, rationalize, identify, estimate,
welfare, aggregate) plus its inputs.  Every output file starts with a header
recording the config hash, the package version and the tolerances in force.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .estimation import (
    EXAMPLE2_P,
    BetaGrid,
    EstimationSpec,
    estimate_beta,
)
from .identification import (
    RichData,
    aggregate_mixture,
    default_beta_grid,
    default_delta_grid,
    identified_set,
)
from .model import evaluate_welfare, simulate_stopping, solve_equilibrium
from .rationalize import (
    FixedPointError,
    moment_renormalize,
    rationalize_naive,
    rationalize_sophisticated,
)
from .serialize import (
    num_in,
    num_out,
    prefs_from_dict,
    problem_from_dict,
    profile_to_dict,
    reject_unknown,
)

COMMANDS = ("solve", "rationalize", "identify", "estimate", "welfare", "aggregate")
FORMATS = ("csv", "json")
PLOT_KINDS = ("bars", "region", "curve")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

DEFAULT_TOLERANCES = {"fixed_point": 1e-10, "consistency_slack": 1e-12, "tie": 1e-9}

COMMON_KEYS = {"command", "out", "format", "seed", "tolerances", "threads", "data_file"}
COMMAND_KEYS = {
    "solve": {"problem", "preferences", "exact", "simulate_paths"},
    "welfare": {"problem", "preferences"},
    "rationalize": {"data", "preferences", "y_lower", "mode", "c1", "c2", "max_iter", "renormalize"},
    "identify": {"data", "problem", "preferences", "beta_grid", "delta_grid", "witness", "terminal_value"},
    "estimate": {"data", "specs"},
    "aggregate": {"profiles"},
}
REQUIRED = {
    "solve": ("problem", "preferences"),
    "welfare": ("problem", "preferences"),
    "rationalize": ("data", "preferences", "y_lower"),
    "identify": (),
    "estimate": ("specs",),
    "aggregate": ("profiles",),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    body: dict
    out: str = "."
    format: str = "csv"
    seed: int = 0
    threads: int = 1
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        cmd = d.get("command")
        if cmd not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {cmd!r}")
        try:
            reject_unknown(d, COMMON_KEYS | COMMAND_KEYS[cmd], "config")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        body = {k: v for k, v in d.items() if k in COMMAND_KEYS[cmd]}
        if "data_file" in d:
            path = Path(d["data_file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            with open(path) as fh:
                body.setdefault("data", json.load(fh))
        missing = [k for k in REQUIRED[cmd] if k not in body]
        if missing:
            raise ConfigError(f"{cmd} needs field(s): {', '.join(missing)}")
        tol = dict(DEFAULT_TOLERANCES)
        user_tol = d.get("tolerances", {})
        try:
            reject_unknown(user_tol, set(DEFAULT_TOLERANCES), "tolerances")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        tol.update({k: float(v) for k, v in user_tol.items()})
        fmt = d.get("format", "csv")
        if fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        return cls(cmd, body, str(d.get("out", ".")), fmt, int(d.get("seed", 0)),
                   int(d.get("threads", 1)), tol)

    def canonical(self) -> dict:
        return {"command": self.command, "body": self.body, "format": self.format,
                "seed": self.seed, "threads": self.threads, "tolerances": self.tolerances}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Table:
    name: str
    columns: list
    rows: list


@dataclass
class RunOutput:
    tables: list
    summary: dict


# --------------------------------------------------------------------------
# plot data


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return repr(x)


def plot_table(result, kind: str) -> Table:
    if kind == "bars":
        # mapping of series name -> conditional stopping probabilities
        names = list(result)
        T = len(result[names[0]]["p"])
        cols = ["t"] + [f"{c}_{n}" for n in names for c in ("p", "q")]
        rows = []
        for t in range(T):
            row = [t + 1]
            for n in names:
                row += [result[n]["p"][t], result[n]["q"][t]]
            rows.append(row)
        return Table("bars", cols, rows)
    if kind == "region":
        rows = [[b, d, ok] for b, d, ok in result.cells()]
        return Table("region", ["beta", "delta", "consistent"], rows)
    if kind == "curve":
        curve = result.per_beta_curve if hasattr(result, "per_beta_curve") else result
        return Table("curve", ["beta", "criterion"], [[b, c] for b, c in curve])
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")


def emit_plot_data(result, kind: str) -> str:
    """CSV text for external plotting: ``bars``, ``region`` or ``curve``."""
    return table_csv(plot_table(result, kind))


def table_csv(table: Table, header_lines: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def _profile_rows(profile):
    d = profile_to_dict(profile)
    return [[t + 1, d["v"][t], d["c"][t], d["p"][t], d["q"][t]] for t in range(len(profile.v))]


def _csv_num(x):
    return float(x) if isinstance(x, str) and "/" in x else x


def run_solve(cfg: RunConfig) -> RunOutput:
    problem = problem_from_dict(cfg.body["problem"])
    prefs = prefs_from_dict(cfg.body["preferences"])
    profile = solve_equilibrium(problem, prefs, exact=bool(cfg.body.get("exact", False)))
    rows = [[_csv_num(x) for x in r] for r in _profile_rows(profile)]
    tables = [Table("profile", ["t", "v_t", "c_t", "p_t", "q_t"], rows)]
    summary = {"profile": profile_to_dict(profile)}
    n = cfg.body.get("simulate_paths")
    if n:
        sim = simulate_stopping(problem, profile, int(n), cfg.seed)
        srows = [[t + 1, float(profile.p[t]), sim["freq"][t], sim["se"][t], sim["at_risk"][t]]
                 for t in range(problem.horizon)]
        tables.append(Table("simulation", ["t", "p_t", "freq_t", "se_t", "at_risk_t"], srows))
        summary["simulation"] = {"freq": [num_out(x) for x in sim["freq"]], "paths": int(n), "seed": cfg.seed}
    return RunOutput(tables, summary)


def run_welfare(cfg: RunConfig) -> RunOutput:
    problem = problem_from_dict(cfg.body["problem"])
    prefs = prefs_from_dict(cfg.body["preferences"])
    profile = solve_equilibrium(problem, prefs)
    rep = evaluate_welfare(problem, prefs, profile)
    rows = [[t + 1, float(profile.v[t]), float(profile.p[t]), float(rep.self_values[t])]
            for t in range(problem.horizon)]
    summary = {
        "W": [num_out(x) for x in rep.self_values],
        "self1_value_beta": num_out(rep.self1_value_beta),
        "never_completed": num_out(rep.never_completed),
        "flags": list(rep.flags),
    }
    return RunOutput([Table("welfare", ["t", "v_t", "p_t", "W_t"], rows)], summary)


def run_rationalize(cfg: RunConfig) -> RunOutput:
    b = cfg.body
    data = b["data"]
    p = data["p"] if isinstance(data, dict) else data
    if isinstance(data, dict):
        reject_unknown(data, {"p"}, "data")
    p = [num_in(x) for x in p]
    prefs = prefs_from_dict(b["preferences"])
    y = num_in(b["y_lower"])
    mode = b.get("mode", "sophisticated" if prefs.is_sophisticated else "naive")
    if mode == "sophisticated":
        res = rationalize_sophisticated(p, prefs, y, None if b.get("c1") is None else num_in(b["c1"]))
    elif mode == "naive":
        res = rationalize_naive(p, prefs, y, float(b.get("c1", 1.0)), float(b.get("c2", 1.0)),
                                tol=cfg.tolerances["fixed_point"], max_iter=int(b.get("max_iter", 100_000)))
    else:
        raise ConfigError("mode must be 'sophisticated' or 'naive'")
    if "renormalize" in b:
        target = b["renormalize"]
        reject_unknown(target, {"mean", "sd"}, "renormalize")
        res = moment_renormalize(res, float(target["mean"]), float(target["sd"]))
    rows = [[_csv_num(x) for x in r] for r in _profile_rows(res.profile)]
    max_err = max(abs(float(a) - float(c)) for a, c in zip(res.profile.p, p))
    summary = {
        "mode": mode,
        "distribution": res.distribution.to_dict(),
        "terminal_value": num_out(res.terminal_value),
        "round_trip_error": max_err,
        "construction_log": res.log_json(),
    }
    return RunOutput([Table("profile", ["t", "v_t", "c_t", "p_t", "q_t"], rows)], summary)


def _grid(spec, default):
    if spec is None:
        return default
    if isinstance(spec, list):
        return np.asarray(spec, float)
    reject_unknown(spec, {"lo", "hi", "step"}, "grid")
    lo, hi, step = float(spec["lo"]), float(spec["hi"]), float(spec["step"])
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 10)


def run_identify(cfg: RunConfig) -> RunOutput:
    b = cfg.body
    if "data" in b:
        reject_unknown(b["data"], {"v", "p"}, "data")
        data = RichData([num_in(x) for x in b["data"]["v"]], [num_in(x) for x in b["data"]["p"]])
    elif "problem" in b and "preferences" in b:
        prof = solve_equilibrium(problem_from_dict(b["problem"]), prefs_from_dict(b["preferences"]))
        data = RichData(prof.v, prof.p)
    else:
        raise ConfigError("identify needs data, or a problem plus preferences to generate it")
    tv = b.get("terminal_value")
    ids = identified_set(data, _grid(b.get("beta_grid"), default_beta_grid()),
                         _grid(b.get("delta_grid"), default_delta_grid()),
                         witness=bool(b.get("witness", False)),
                         terminal_value=None if tv is None else num_in(tv))
    intervals = []
    for d in ids.delta_grid:
        iv = ids.beta_interval(float(d))
        if iv is not None:
            intervals.append([float(d), iv[0], iv[1]])
    summary = {
        "cells": int(ids.mask.size),
        "consistent_cells": int(ids.mask.sum()),
        "beta_intervals": intervals,
        "witness": None if ids.witness is None else ids.witness.to_dict(),
        "witness_cell": ids.witness_cell,
        "errors": {f"{k[0]},{k[1]}": v for k, v in ids.errors.items()},
    }
    tables = [plot_table(ids, "region"), Table("beta_intervals", ["delta", "beta_lo", "beta_hi"], intervals)]
    return RunOutput(tables, summary)


SPEC_KEYS = {"name", "family", "mean", "sd", "delta", "sophisticated", "criterion", "beta_grid",
             "horizon", "terminal_value", "family_options", "distance_on"}


def _estimation_spec(d: dict) -> EstimationSpec:
    reject_unknown(d, SPEC_KEYS, "estimation spec")
    kw = {k: v for k, v in d.items() if k not in ("name", "beta_grid", "terminal_value")}
    if "beta_grid" in d:
        reject_unknown(d["beta_grid"], {"lo", "hi", "step"}, "beta_grid")
        kw["beta_grid"] = BetaGrid(**{k: float(v) for k, v in d["beta_grid"].items()})
    if d.get("terminal_value") is not None:
        kw["terminal_value"] = num_in(d["terminal_value"])
    return EstimationSpec(**kw)


def run_estimate(cfg: RunConfig) -> RunOutput:
    b = cfg.body
    data = b.get("data", list(EXAMPLE2_P))
    if isinstance(data, dict):
        reject_unknown(data, {"p"}, "data")
        data = data["p"]
    data = [float(num_in(x)) for x in data]
    rows, curves, results = [], [], []
    for i, d in enumerate(b["specs"]):
        spec = _estimation_spec(d)
        name = d.get("name", f"spec{i}")
        res = estimate_beta(spec, data, threads=cfg.threads)
        rows.append([name, spec.family, "sophisticated" if spec.sophisticated else "naive",
                     spec.criterion, res.beta_hat, res.criterion_value, res.distance])
        curves.append([[name, bb, c] for bb, c in res.per_beta_curve])
        results.append({"name": name, "spec": spec.to_dict(), "beta_hat": res.beta_hat,
                        "criterion_value": res.criterion_value, "distance": res.distance})
    tables = [
        Table("estimates", ["name", "family", "agent", "criterion", "beta_hat", "criterion_value", "distance"], rows),
        Table("curve", ["name", "beta", "criterion"], [r for c in curves for r in c]),
    ]
    return RunOutput(tables, {"data_p": data, "estimates": results})


def run_aggregate(cfg: RunConfig) -> RunOutput:
    profiles = []
    for item in cfg.body["profiles"]:
        reject_unknown(item, {"weight", "p"}, "profile")
        profiles.append((float(item["weight"]), [float(num_in(x)) for x in item["p"]]))
    agg = aggregate_mixture(profiles)
    T = len(agg["p"])
    rows = [[t + 1, agg["p"][t], agg["q"][t]] for t in range(T)]
    summary = {"p": [num_out(x) for x in agg["p"]], "q": list(agg["q"]), "never": agg["never"]}
    return RunOutput([Table("aggregate", ["t", "p_t", "q_t"], rows)], summary)


RUNNERS = {
    "solve": run_solve,
    "welfare": run_welfare,
    "rationalize": run_rationalize,
    "identify": run_identify,
    "estimate": run_estimate,
    "aggregate": run_aggregate,
}


def header(cfg: RunConfig) -> dict:
    return {"tool": "qhstop", "version": __version__, "config_sha256": cfg.digest(),
            "command": cfg.command, "seed": cfg.seed, "tolerances": cfg.tolerances}


def write_outputs(cfg: RunConfig, result: RunOutput) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    head = header(cfg)
    written = []
    if cfg.format == "csv":
        lines = [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in head.items()]
        for table in result.tables:
            path = out / f"{cfg.command}_{table.name}.csv"
            path.write_text(table_csv(table, lines), newline="\n")
            written.append(path)
        path = out / f"{cfg.command}_summary.json"
    else:
        path = out / f"{cfg.command}.json"
    doc = {"header": head, "result": result.summary}
    if cfg.format == "json":
        doc["tables"] = {t.name: {"columns": t.columns, "rows": [[_json_cell(x) for x in r] for r in t.rows]}
                         for t in result.tables}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n", newline="\n")
    written.append(path)
    return written


def _json_cell(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str):
        return x
    return num_out(x)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return num_out(x)


def run(cfg: RunConfig) -> list[Path]:
    return write_outputs(cfg, RUNNERS[cfg.command](cfg))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qhstop", description="Quasi-hyperbolic task-completion toolkit.")
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="overrides (or supplies) the config's command field")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float, help="fixed-point tolerance")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--quiet", action="store_true")
    return ap


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except json.JSONDecodeError as exc:
        return _fail(EXIT_VALIDATION, exc)
    try:
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if args.command:
            raw = dict(raw, command=args.command)
        for key in ("out", "format", "seed", "threads"):
            val = getattr(args, key)
            if val is not None:
                raw[key] = val
        if args.tol is not None:
            raw["tolerances"] = dict(raw.get("tolerances", {}), fixed_point=args.tol)
        cfg = RunConfig.from_dict(raw, Path(args.config).parent)
        paths = run(cfg)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (FixedPointError, ArithmeticError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_VALIDATION, exc)
    if not args.quiet:
        for p in paths:
            print(p)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
