"""Command-line interface: run scenarios, emit presets, check invariants.

Exit codes: 0 success, 2 config error, 3 runtime failure (divergence,
rank deficiency, singular desired speed), 4 I/O error.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .engine import DivergenceError, Engine, simulate
from .graph import GraphError
from .linalg import COND_LIMIT, RankDeficient, chain_gram_determinant, \
    chain_pivot_bounds
from .metrics import compute_metrics, report_to_yaml
from .presets import get_preset, preset_names
from .scenario import ParseError, SchemaError, ValidationError, \
    load_scenario, serialize_scenario
from .trajectory import SingularSpeed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

_CONFIG_ERRORS = (ParseError, SchemaError, ValidationError, GraphError,
                  SingularSpeed)
_RUNTIME_ERRORS = (DivergenceError, RankDeficient, SingularSpeed)


def _load(path, overrides):
    config = load_scenario(Path(path))
    changes = {k: v for k, v in overrides.items() if v is not None}
    if changes:
        config = replace(config, **changes)
    return config


def _cmd_run(args):
    try:
        config = _load(args.config, {"dt": args.dt, "t_final": args.t_final,
                                     "threshold": args.threshold})
    except _CONFIG_ERRORS as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        trace = simulate(config)
    except _RUNTIME_ERRORS as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    report = compute_metrics(trace, threshold=config.threshold)
    try:
        trace.write_csv(args.trace)
        Path(args.metrics).write_text(report_to_yaml(report))
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote trace to {args.trace} ({len(trace.data)} samples)")
    print(f"wrote metrics to {args.metrics}")
    if report.converged_all:
        worst = max(t for t in report.convergence_times)
        print(f"all robots converged (threshold {report.threshold:.4g}, "
              f"slowest at t={worst:.3g})")
    else:
        print(f"unconverged robots: {report.unconverged}")
    return EXIT_OK


def _cmd_preset(args):
    try:
        text = serialize_scenario(get_preset(args.name))
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            print(f"cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote preset {args.name} to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _check_lines(config, horizon):
    """Yield (name, passed, detail) for the diagnostic suite."""
    engine = Engine(config)
    dt = config.dt
    steps_total = int(round(min(horizon, config.t_final) / dt))
    probe_every = max(1, steps_total // 8)
    y = engine.initial_state()
    h = 1e-5

    cond_ok, lsq_ok, rate_ok, chain_ok = True, True, True, True
    details = {"cond": "", "lsq": "", "rate": ""}
    for k in range(0, steps_total + 1, probe_every):
        t = k * dt
        rec = engine.diagnostics(t, y)
        A = rec.coupling
        G = A.T @ A
        if np.linalg.cond(G) > COND_LIMIT:
            cond_ok, details["cond"] = False, f"cond(G) high at t={t:g}"
        b = -(np.asarray(config.formation_gain) * rec.z) - rec.feedforward
        defect = np.max(np.abs(A.T @ (A @ rec.etaf - b)))
        bound = 1e-10 * (1 + np.linalg.norm(A) * np.linalg.norm(b))
        if defect > bound:
            lsq_ok, details["lsq"] = False, f"defect {defect:.2e} at t={t:g}"
        # energy-rate identity, finite differences vs prediction (needs
        # a backward probe, so skip the very first instant)
        if t - h < 0:
            if k < steps_total:
                y = engine.advance(y, t, min(probe_every, steps_total - k))
            continue
        y_p = engine.step(t, y, h)
        y_m = engine.step(t, y, -h)
        if config.mode == "kinematic":
            val_p = engine.diagnostics(t + h, y_p).V
            val_m = engine.diagnostics(t - h, y_m).V
            value = rec.V
            pred = -(rec.z @ (np.asarray(config.formation_gain) * rec.z)) \
                + rec.z @ rec.residual
        else:
            val_p = engine.diagnostics(t + h, y_p).Va
            val_m = engine.diagnostics(t - h, y_m).Va
            value = rec.Va
            pred = -(rec.z @ (np.asarray(config.formation_gain) * rec.z)) \
                - (rec.sigma @ (np.asarray(config.twist_gain) * rec.sigma)) \
                + rec.z @ rec.residual
        fd = (val_p - val_m) / (2 * h)
        floor = 1e3 * np.finfo(float).eps * max(value, 1.0) / h
        if abs(pred) > floor and abs(fd - pred) > 1e-5 * abs(pred):
            rate_ok = False
            details["rate"] = f"fd {fd:.6e} vs {pred:.6e} at t={t:g}"
        if k < steps_total:
            y = engine.advance(y, t, min(probe_every, steps_total - k))

    yield "conditioning-guard", cond_ok, details["cond"]
    yield "least-squares-contract", lsq_ok, details["lsq"]
    yield "energy-rate-identity", rate_ok, details["rate"]
    if config.tree.is_chain and config.n >= 2:
        rec = engine.diagnostics(0.0, engine.initial_state())
        det, pivots = chain_gram_determinant(rec.poses[:, 2])
        lower, upper = chain_pivot_bounds(pivots)
        chain_ok = det > 0 and np.all(pivots >= lower - 1e-12) \
            and np.all(pivots <= upper + 1e-12)
        yield "chain-pivot-certificate", bool(chain_ok), f"det={det:.6g}"


def _cmd_check(args):
    try:
        config = _load(args.config, {"dt": args.dt})
    except _CONFIG_ERRORS as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = False
    try:
        for name, ok, detail in _check_lines(config, args.horizon):
            status = "PASS" if ok else "FAIL"
            suffix = f"  ({detail})" if detail else ""
            print(f"{status} {name}{suffix}")
            failed = failed or not ok
    except _RUNTIME_ERRORS as exc:
        print(f"check run failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_RUNTIME if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="formsim",
        description="Formation maneuvering simulator for unicycle robots",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--trace", required=True, help="output CSV path")
    p_run.add_argument("--metrics", required=True, help="output YAML path")
    p_run.add_argument("--dt", type=float, default=None)
    p_run.add_argument("--t-final", type=float, default=None)
    p_run.add_argument("--threshold", type=float, default=None)
    p_run.set_defaults(fn=_cmd_run)

    p_pre = sub.add_parser("preset", help="emit a built-in scenario config")
    p_pre.add_argument("name", choices=preset_names())
    p_pre.add_argument("-o", "--output", default=None)
    p_pre.set_defaults(fn=_cmd_preset)

    p_chk = sub.add_parser("check",
                           help="run the diagnostic suite on a config")
    p_chk.add_argument("--config", required=True)
    p_chk.add_argument("--dt", type=float, default=None)
    p_chk.add_argument("--horizon", type=float, default=2.0,
                       help="seconds of simulation to probe")
    p_chk.set_defaults(fn=_cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
