"""Command-line front end.

    clocksync simulate    --config run.json --out sim.csv [--seed S] [--threads T]
    clocksync analytic    --config run.json --out moments.csv [--ode] [--limits]
    clocksync compare     --config run.json --out report.csv [--estimator rao-blackwell] [--z-threshold 4]
    clocksync phase-scan  --config run.json --out scan.csv
    clocksync limits      --config run.json --out limits.csv
    clocksync selftest

Exit status: 0 ok, 1 invalid input, 2 runtime failure, 3 comparison
threshold exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import selftest
from .analytics import moments_closed_form, ode_moments, stationary_limits
from .conditional import rao_blackwell_ensemble
from .errors import ClockSyncError, InvalidInputError
from .model import ModelParams, MomentVector
from .phases import PhaseQuery, classify, exponent_fit, scale_curve
from .simulator import (
    Deterministic,
    Exponential,
    Gamma,
    InitialCondition,
    SimConfig,
    Uniform,
    run_ensemble,
)

CONFIG_VERSION = 1

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_THRESHOLD = 0, 1, 2, 3

_number = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_times = {"type": "array", "items": _nonneg, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "params"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N"],
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "r": _number,
                "v": _number,
                "sigma": _nonneg,
                "alpha": _nonneg,
                "beta": _nonneg,
            },
        },
        "init": {
            "type": "object",
            "additionalProperties": False,
            "required": ["R", "D", "d"],
            "properties": {"R": _nonneg, "D": _nonneg, "d": _number},
        },
        "t_grid": _times,
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["obs_grid"],
            "properties": {
                "t_end": _nonneg,
                "obs_grid": _times,
                "replicas": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "law": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["exponential", "deterministic", "uniform", "gamma"]},
                        "rate": {"type": "number", "exclusiveMinimum": 0},
                        "period": {"type": "number", "exclusiveMinimum": 0},
                        "low": _nonneg,
                        "high": {"type": "number", "exclusiveMinimum": 0},
                        "shape": {"type": "number", "exclusiveMinimum": 0},
                        "scale": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "initial": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["zeros", "vector", "gaussian"]},
                        "values": {"type": "array", "items": _number},
                        "mean": _number,
                        "variance": _nonneg,
                    },
                },
            },
        },
        "phase_scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gammas", "N_grid"],
            "properties": {
                "gammas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "N_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 4},
                "s": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    init: MomentVector
    t_grid: np.ndarray | None
    sim: SimConfig | None
    phase_scan: dict | None
    version: int = CONFIG_VERSION


def _law(spec: dict | None):
    if spec is None:
        return Exponential()
    kind = spec["kind"]
    allowed = {
        "exponential": ({"rate"}, lambda s: Exponential(s.get("rate"))),
        "deterministic": ({"period"}, lambda s: Deterministic(s["period"])),
        "uniform": ({"low", "high"}, lambda s: Uniform(s["low"], s["high"])),
        "gamma": ({"shape", "scale"}, lambda s: Gamma(s["shape"], s["scale"])),
    }
    keys, build = allowed[kind]
    extra = set(spec) - keys - {"kind"}
    if extra:
        raise InvalidInputError(f"law {kind!r} does not take {sorted(extra)}")
    missing = keys - set(spec) - ({"rate"} if kind == "exponential" else set())
    if missing:
        raise InvalidInputError(f"law {kind!r} needs {sorted(missing)}")
    return build(spec)


def _initial(spec: dict | None) -> InitialCondition:
    if spec is None or spec["kind"] == "zeros":
        return InitialCondition.zeros()
    if spec["kind"] == "vector":
        if "values" not in spec:
            raise InvalidInputError("vector initial condition needs 'values'")
        return InitialCondition.vector(spec["values"])
    return InitialCondition.gaussian(spec.get("mean", 0.0), spec.get("variance", 0.0))


def parse_config(doc: dict, seed: int | None = None) -> RunConfig:
    """Validate a config document and build the run objects (no computation)."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInputError(f"config {where}: {exc.message}") from None
    params = ModelParams(**doc["params"])
    init = MomentVector(**doc["init"]) if "init" in doc else MomentVector(0.0, 0.0, 0.0)
    t_grid = np.asarray(doc["t_grid"], dtype=float) if "t_grid" in doc else None
    sim = None
    if "simulation" in doc:
        s = doc["simulation"]
        obs = np.asarray(s["obs_grid"], dtype=float)
        sim = SimConfig(
            params=params,
            t_end=float(s.get("t_end", obs[-1])),
            obs_grid=obs,
            replicas=s.get("replicas", 1000),
            master_seed=seed if seed is not None else s.get("seed", 0),
            law=_law(s.get("law")),
            initial=_initial(s.get("initial")),
        )
    return RunConfig(params, init, t_grid, sim, doc.get("phase_scan"))


def load_config(path: str, seed: int | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(doc, seed)


# -- output -------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip text for a float; empty for NaN."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def render_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_output(text: str, out: str | None) -> None:
    """Write atomically: a temp file in the target directory, then rename."""
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".clocksync-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- subcommands --------------------------------------------------------------

SIM_HEADER = ["t", "R_mean", "R_se", "D_mean", "D_se", "d_mean", "d_se", "replicas"]


def _need(value, what: str):
    if value is None:
        raise InvalidInputError(f"config is missing '{what}'")
    return value


def cmd_simulate(cfg: RunConfig, threads: int | None = None) -> tuple[str, int]:
    sim = _need(cfg.sim, "simulation")
    stats = run_ensemble(sim, threads=threads)
    rows = (
        [t, *(v for pair in zip(m, se) for v in pair), stats.replicas]
        for t, m, se in zip(stats.t, stats.mean, stats.se)
    )
    return render_csv(SIM_HEADER, rows), EXIT_OK


def _limit_rows(params: ModelParams):
    lim = stationary_limits(params)
    return [["exact", *lim.exact], ["asymptotic", *lim.asymptotic]]


def cmd_analytic(cfg: RunConfig, ode: bool = False, limits: bool = False) -> tuple[str, int]:
    t = _need(cfg.t_grid, "t_grid")
    if np.any(np.diff(t) < 0):
        raise InvalidInputError("t_grid must be sorted")
    closed = np.array(moments_closed_form(cfg.params, cfg.init, t), dtype=float).reshape(3, -1)
    header = ["t", "R", "D", "d"]
    cols = [t, *closed]
    if ode:
        sol = np.array(ode_moments(cfg.params, cfg.init, t))
        header += ["R_ode", "D_ode", "d_ode"]
        cols += list(sol)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(sol - closed) / np.abs(closed)
        rel = np.where(closed == 0, np.abs(sol), rel)
        print(f"max relative deviation closed form vs ODE: {float(np.max(rel)):.3e}", file=sys.stderr)
    rows = [list(r) for r in zip(*cols)]
    if limits:
        pad = [math.nan] * (len(header) - 4)
        rows += [row + pad for row in _limit_rows(cfg.params)]
    return render_csv(header, rows), EXIT_OK


def cmd_limits(cfg: RunConfig) -> tuple[str, int]:
    return render_csv(["kind", "R", "D", "d"], _limit_rows(cfg.params)), EXIT_OK


def z_scores(mean, se, closed) -> np.ndarray:
    """(mean - closed) / se, with 0/0 read as 0 and x/0 as infinite."""
    diff = np.asarray(mean, dtype=float) - np.asarray(closed, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = diff / se
    z = np.where(se == 0, np.where(diff == 0, 0.0, np.copysign(np.inf, diff)), z)
    return z


def cmd_compare(
    cfg: RunConfig, estimator: str = "direct", z_threshold: float = 4.0, threads: int | None = None
) -> tuple[str, int]:
    sim = _need(cfg.sim, "simulation")
    if sim.replicas < 2:
        raise InvalidInputError("compare needs at least 2 replicas for standard errors")
    init = sim.initial.expected_moments(sim.params.N)
    closed = np.array(moments_closed_form(sim.params, init, sim.obs_grid), dtype=float).reshape(3, -1).T
    if estimator == "direct":
        stats = run_ensemble(sim, threads=threads)
    else:
        stats = rao_blackwell_ensemble(None, sim, threads=threads)
    z = z_scores(stats.mean, stats.se, closed)
    rows = []
    for i, t in enumerate(stats.t):
        for j, name in enumerate(("R", "D", "d")):
            rows.append([t, name, stats.mean[i, j], stats.se[i, j], closed[i, j], z[i, j]])
    status = EXIT_THRESHOLD if np.any(np.abs(z) > z_threshold) else EXIT_OK
    header = ["t", "quantity", "mean", "se", "closed_form", "z"]
    return render_csv(header, rows), status


PHASE_HEADER = [
    "gamma", "N", "t", "D_closed", "predicted_psi", "fitted_slope",
    "R_closed", "predicted_psi_R", "fitted_slope_R", "label",
]


def cmd_phase_scan(cfg: RunConfig) -> tuple[str, int]:
    scan = _need(cfg.phase_scan, "phase_scan")
    s = float(scan.get("s", 1.0))
    N_grid = sorted(set(scan["N_grid"]))
    rows = []
    for gamma in scan["gammas"]:
        phase = classify(PhaseQuery(gamma, s, cfg.params))
        fit_D = exponent_fit(cfg.params, gamma, N_grid, s, "D").slope
        fit_R = exponent_fit(cfg.params, gamma, N_grid, s, "R").slope
        for N in N_grid:
            t, m = scale_curve(cfg.params, gamma, [s], N)
            rows.append(
                [gamma, N, t[0], m.D[0], phase.psi_D, fit_D, m.R[0], phase.psi_R, fit_R, phase.label]
            )
    return render_csv(PHASE_HEADER, rows), EXIT_OK


def cmd_selftest(perturb_K: float = 0.0) -> tuple[str, int]:
    results = selftest.run_selftest(perturb_K=perturb_K)
    ok = all(r.passed for r in results)
    return selftest.report(results), EXIT_OK if ok else EXIT_RUNTIME


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clocksync", description="Clock-synchronization network laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        return p

    sim = common(sub.add_parser("simulate", help="Monte Carlo ensemble statistics"))
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int)

    an = common(sub.add_parser("analytic", help="closed-form moments on a time grid"))
    an.add_argument("--ode", action="store_true", help="add ODE columns and report the deviation")
    an.add_argument("--limits", action="store_true", help="append stationary rows")

    cmp_ = common(sub.add_parser("compare", help="simulation against the closed form"))
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--threads", type=int)
    cmp_.add_argument("--estimator", choices=["direct", "rao-blackwell"], default="direct")
    cmp_.add_argument("--z-threshold", type=float, default=4.0)

    common(sub.add_parser("phase-scan", help="scaling exponents on t = s N^gamma"))
    common(sub.add_parser("limits", help="stationary limits"))

    st = common(sub.add_parser("selftest", help="run the oracle suites"), config=False)
    st.add_argument("--perturb-K", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID

    try:
        if args.command == "selftest":
            text, status = cmd_selftest(args.perturb_K)
        else:
            if getattr(args, "threads", None) is not None and args.threads < 1:
                raise InvalidInputError("--threads must be >= 1")
            cfg = load_config(args.config, getattr(args, "seed", None))
            if args.command == "simulate":
                text, status = cmd_simulate(cfg, args.threads)
            elif args.command == "analytic":
                text, status = cmd_analytic(cfg, args.ode, args.limits)
            elif args.command == "compare":
                text, status = cmd_compare(cfg, args.estimator, args.z_threshold, args.threads)
            elif args.command == "phase-scan":
                text, status = cmd_phase_scan(cfg)
            else:
                text, status = cmd_limits(cfg)
        write_output(text, args.out)
        return status
    except (InvalidInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if isinstance(exc, InvalidInputError) else EXIT_RUNTIME
    except OSError as exc:
        where = exc.filename or getattr(args, "out", None) or ""
        print(f"error: {where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ClockSyncError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
