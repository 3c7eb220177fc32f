"""Command-line runner: ``toda {flow,darboux,ode,ensemble,series-check,selftest}``.

Options may come from flags or from a JSON file given with ``--config``;
flags win.  With ``--out DIR`` results go to ``DIR/result.csv`` or
``DIR/result.json`` plus ``DIR/meta.json``; otherwise they are printed.

Exit status: 0 success, 1 selftest failure, 2 invalid configuration,
3 numerical failure (the error class is named on stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import TodaError

DEFAULTS = {
    "flow": {"poly": "0,1", "time": None, "sign": 1},
    "darboux": {"zeta": None, "time": None, "steps": None},
    "ode": {"t_final": None, "times": None, "boundary": "open", "rtol": 1e-10, "atol": 1e-12,
            "family": None, "gamma": None, "c": None, "alpha": None, "beta": None, "lo": 1, "hi": 50},
    "ensemble": {"L": 8, "nu": 2.0, "sigma": 1.0, "mean_b": 0.0, "samples": 10_000, "t": 0.2,
                 "seed": None, "bias_b": 0.0, "tol": 1e-9},
    "series-check": {"moments": None, "alpha": 1.0, "c": 1.0},
    "selftest": {"only": None},
}


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _floats(text) -> list[float]:
    if text is None:
        return []
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _threads() -> int:
    raw = os.environ.get("TODA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"TODA_THREADS must be an integer, got {raw!r}") from exc


def _load_lattice(path):
    from .lattice import JacobiCoefficients

    if path is None:
        raise ConfigError("--input is required")
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read lattice from {path}: {exc}") from exc
    try:
        return JacobiCoefficients.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid lattice in {path}: {exc}") from exc


def coefficients_csv(q) -> str:
    """``n,a,b`` rows over the stored window; a missing left coupling is written as 0."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "a", "b"])
    for n in range(q.window_start, q.window_end + 1):
        a = q.a_at(n) if n >= q.a_start else 0.0
        w.writerow([n, _fmt(a), _fmt(q.b_at(n))])
    return buf.getvalue()


def _cmd_flow(cfg: dict):
    from .flow import FlowSpec, flow_finite
    from .lattice import truncate

    if cfg["time"] is None:
        raise ConfigError("--time is required")
    q = _load_lattice(cfg.get("input"))
    try:
        spec = FlowSpec(tuple(_floats(cfg["poly"])), float(cfg["time"]), int(cfg["sign"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    T = flow_finite(truncate(q, q.window_start, q.window_end), spec)
    return "csv", coefficients_csv(T.to_lattice(q.window_start)), None


def _cmd_darboux(cfg: dict):
    from .flow import darboux_power_exp, darboux_step

    q = _load_lattice(cfg.get("input"))
    if cfg["zeta"] is not None:
        out = darboux_step(q, float(cfg["zeta"]))
    elif cfg["time"] is not None and cfg["steps"] is not None:
        out = darboux_power_exp(q, float(cfg["time"]), int(cfg["steps"]))
    else:
        raise ConfigError("give --zeta, or --time with --steps")
    return "csv", coefficients_csv(out), None


def _cmd_ode(cfg: dict):
    from .ode import Exploding, Growing, OdeRun, OpenEnds, Periodic, family_boundary, family_window, integrate

    if cfg["t_final"] is None:
        raise ConfigError("--t-final is required")
    t_final = float(cfg["t_final"])
    fam = cfg["family"]
    try:
        if fam is None:
            q = _load_lattice(cfg.get("input"))
            boundary = {"open": OpenEnds(), "periodic": Periodic()}.get(cfg["boundary"])
            if boundary is None:
                raise ConfigError("--boundary must be open or periodic")
        else:
            if fam == "growing":
                family = Growing(float(cfg["gamma"]))
            elif fam == "exploding":
                family = Exploding(float(cfg["c"]), float(cfg["alpha"]), float(cfg["beta"]))
            else:
                raise ConfigError("--family must be growing or exploding")
            q = family_window(family, int(cfg["lo"]), int(cfg["hi"]))
            boundary = family_boundary(family)
        times = tuple(_floats(cfg["times"])) or (t_final,)
        run = OdeRun(q, t_final, boundary, float(cfg["rtol"]), float(cfg["atol"]), times)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, TodaError):
            raise
        raise ConfigError(str(exc)) from exc
    return "csv", integrate(run).to_csv(), None


def _cmd_ensemble(cfg: dict):
    from .ensemble import GENERATOR, BetaParams, invariance_report

    if cfg["seed"] is None:
        raise ConfigError("--seed is required for stochastic commands")
    try:
        params = BetaParams(int(cfg["L"]), float(cfg["nu"]), float(cfg["sigma"]), float(cfg["mean_b"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if int(cfg["samples"]) < 2:
        raise ConfigError("--samples must be at least 2")
    report = invariance_report(params, float(cfg["t"]), int(cfg["samples"]), int(cfg["seed"]),
                               bias_b=float(cfg["bias_b"]), tol=float(cfg["tol"]), workers=_threads())
    return "json", report, {"generator": GENERATOR, "seed": int(cfg["seed"])}


def _cmd_series(cfg: dict):
    from dataclasses import asdict

    from .series import exp_integrability_check

    moments = _floats(cfg["moments"])
    if len(moments) < 4:
        raise ConfigError("--moments needs at least x_0..x_3")
    try:
        rep = exp_integrability_check(moments, float(cfg["alpha"]), float(cfg["c"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return "json", asdict(rep), None


def _cmd_selftest(cfg: dict):
    from .acceptance import CRITERIA, run_criterion

    names = [s.strip() for s in cfg["only"].split(",")] if cfg["only"] else list(CRITERIA)
    unknown = [n for n in names if n not in CRITERIA]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}")
    results = [run_criterion(n) for n in names]
    for r in results:
        print(r.line())
    summary = {"results": [{"name": r.name, "pass": r.passed, "detail": r.detail} for r in results],
               "pass": all(r.passed for r in results)}
    return "selftest", summary, None


COMMANDS = {
    "flow": _cmd_flow,
    "darboux": _cmd_darboux,
    "ode": _cmd_ode,
    "ensemble": _cmd_ensemble,
    "series-check": _cmd_series,
    "selftest": _cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toda", description="Toda lattice experiments")
    p.add_argument("--version", action="version", version=f"toda {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with options (flags override it)")
        sp.add_argument("--out", help="output directory")
        return sp

    sp = common(sub.add_parser("flow", help="flow a finite lattice through its spectral measure"))
    sp.add_argument("--input")
    sp.add_argument("--poly", help="coefficients p0,p1,... of p(lambda)")
    sp.add_argument("--time", type=float)
    sp.add_argument("--sign", type=int, choices=(1, -1))

    sp = common(sub.add_parser("darboux", help="Darboux step or exponential-limit iteration"))
    sp.add_argument("--input")
    sp.add_argument("--zeta", type=float)
    sp.add_argument("--time", type=float)
    sp.add_argument("--steps", type=int)

    sp = common(sub.add_parser("ode", help="integrate the lattice equations"))
    sp.add_argument("--input")
    sp.add_argument("--t-final", dest="t_final", type=float)
    sp.add_argument("--times", help="comma-separated output times")
    sp.add_argument("--boundary", choices=("open", "periodic"))
    sp.add_argument("--rtol", type=float)
    sp.add_argument("--atol", type=float)
    sp.add_argument("--family", choices=("growing", "exploding"))
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--lo", type=int)
    sp.add_argument("--hi", type=int)

    sp = common(sub.add_parser("ensemble", help="Gibbs-measure invariance report"))
    sp.add_argument("--L", type=int)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--mean-b", dest="mean_b", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--t", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--bias-b", dest="bias_b", type=float)
    sp.add_argument("--tol", type=float)

    sp = common(sub.add_parser("series-check", help="exponential-integrability check of even moments"))
    sp.add_argument("--moments", help="comma-separated x_0..x_K")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--c", type=float)

    sp = common(sub.add_parser("selftest", help="run the acceptance criteria"))
    sp.add_argument("--only", help="comma-separated criterion names, e.g. A1,A4")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    return cfg


def _write(out_dir: str | None, kind: str, payload, meta: dict) -> None:
    if kind == "csv":
        text = payload
        name = "result.csv"
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        name = "result.json"
    if out_dir is None:
        if kind != "selftest":
            sys.stdout.write(text)
        return
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(text)
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        kind, payload, extra = COMMANDS[args.command](cfg)
        meta = {
            "tool": "toda",
            "version": __version__,
            "command": args.command,
            "config": {k: v for k, v in sorted(cfg.items()) if k != "out"},
            "generator": (extra or {}).get("generator"),
            "seed": (extra or {}).get("seed"),
            "wall_time_s": time.perf_counter() - started,
        }
        _write(cfg.get("out"), kind, payload, meta)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TodaError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if kind == "selftest" and not payload["pass"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
