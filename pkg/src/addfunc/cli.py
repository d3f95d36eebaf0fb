"""Command line entry point: ``addfunc <subcommand> [flags]``.

Exit codes: 0 success, 2 precondition violated, 1 numerical failure.
Payloads carry a schema line and the fully resolved config and contain no
timestamps, so identical configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from addfunc.errors import NumericalError, PreconditionError
from addfunc.estimator import build_schedule, estimate, fit, fit_simplified
from addfunc.funcspace import ParameterSpace, from_expression, make_theta, parse_functional, probe_assumptions
from addfunc.lowerbound import certificate, rate_expression
from addfunc.polyapprox import grid_lp_approx, remez
from addfunc.risk import CSV_FIELDS, adversarial_sweep, rate_scaling_study

SCHEMA_VERSION = 1
SUBCOMMANDS = ("approx", "estimate", "risk", "lowerbound", "rates", "probe")
NOISE_FLAG = {"oracle": "oracle_pairs", "duplicate": "duplicate"}


@dataclass
class RunConfig:
    command: str
    functional: str = "abs_pow:1"
    f0: Optional[float] = None
    d: Optional[int] = None
    s: Optional[int] = None
    M: Optional[float] = None
    c: float = 1.0
    noise_mode: Optional[str] = None
    n_reps: int = 1000
    seed: int = 0
    threads: int = 1
    output_dir: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        out = asdict(self)
        out.pop("output_dir")
        out.pop("threads")  # results do not depend on it
        extra = out.pop("extra")
        out.update(extra)
        return out


def _read_config(path):
    text = Path(path).read_text()
    if path.endswith(".json"):
        return json.loads(text)
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise PreconditionError(f"config line without '=': {line!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _parser():
    parser = argparse.ArgumentParser(prog="addfunc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config")
    common.add_argument("--functional", help="name[:params], e.g. abs_pow:1, or expr:<expression in t>")
    common.add_argument("--f0", type=float, help="F(0) for expression functionals")
    common.add_argument("--d", type=int)
    common.add_argument("--s", type=int)
    common.add_argument("--M", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--noise-mode", choices=sorted(NOISE_FLAG))
    common.add_argument("--reps", type=int, dest="n_reps")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", dest="output_dir")

    p = sub.add_parser("approx", parents=[common], help="best uniform approximation")
    p.add_argument("--degree", type=int)
    p.add_argument("--interval", help="a,b (default -M,M)")
    p.add_argument("--method", choices=["remez", "lp"])
    p.add_argument("--n-grid", type=int)

    p = sub.add_parser("estimate", parents=[common], help="estimate sum F(theta_i) from a CSV of y")
    p.add_argument("--y", help="CSV: one value per line, or two columns (y1,y2) for oracle pairs")
    p.add_argument("--estimator", choices=["auto", "multiscale", "simplified"])

    p = sub.add_parser("risk", parents=[common], help="Monte Carlo risk, CSV output")
    p.add_argument("--theta", help="zero | all-at:<v> | spread:<v1,v2,..> | sweep")
    p.add_argument("--estimator", choices=["auto", "multiscale", "simplified"])

    p = sub.add_parser("lowerbound", parents=[common], help="moment-matched priors and certificate")
    p.add_argument("--n-grid", type=int)

    p = sub.add_parser("rates", parents=[common], help="rate expressions, or a scaling study with --d-list")
    p.add_argument("--d-list", help="comma-separated d values for the scaling study")
    p.add_argument("--s-rule", help="e.g. 4sqrt (s = round(4 sqrt d))")

    p = sub.add_parser("probe", parents=[common], help="assumption probes")
    p.add_argument("--grid", type=int, dest="grid_size")
    return parser


_TYPES = {"d": int, "s": int, "M": float, "c": float, "f0": float, "n_reps": int, "seed": int, "threads": int,
          "degree": int, "n_grid": int, "grid_size": int}
_DEFAULTS = {
    "approx": {"degree": 2, "interval": None, "method": "remez", "n_grid": None},
    "estimate": {"y": None, "estimator": "auto"},
    "risk": {"theta": "zero", "estimator": "auto"},
    "lowerbound": {"n_grid": None},
    "rates": {"d_list": None, "s_rule": "4sqrt"},
    "probe": {"grid_size": 8},
}


def resolve(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(_read_config(args.config))
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        values[key] = value
    if "reps" in values:
        values["n_reps"] = values.pop("reps")
    if "seed" not in values and os.environ.get("ADDFUNC_SEED"):
        values["seed"] = os.environ["ADDFUNC_SEED"]
    for key, typ in _TYPES.items():
        if key in values and values[key] is not None:
            values[key] = typ(values[key])
    cfg = RunConfig(args.command)
    extra = dict(_DEFAULTS[args.command])
    for key, value in values.items():
        if key == "callback":
            cfg.functional = f"expr:{value}"
        elif key == "value_at_zero":
            cfg.f0 = float(value)
        elif hasattr(cfg, key) and key != "extra":
            setattr(cfg, key, value)
        else:
            extra[key] = value
    cfg.extra = extra
    if cfg.noise_mode is None and cfg.command != "estimate":
        cfg.noise_mode = "oracle"
    if cfg.noise_mode is not None and cfg.noise_mode not in NOISE_FLAG:
        raise PreconditionError(f"noise mode must be one of {sorted(NOISE_FLAG)}")
    if cfg.threads < 1:
        raise PreconditionError("requires threads >= 1")
    return cfg


def _functional(cfg):
    if cfg.functional.startswith("expr:"):
        return from_expression(cfg.functional[5:], cfg.f0)
    return parse_functional(cfg.functional)


def _need(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise PreconditionError(f"--{name} is required for {cfg.command}")


def _estimator(cfg, F, kind):
    if kind == "auto":
        kind = "simplified" if cfg.s == cfg.d else "multiscale"
    if kind == "simplified":
        M = cfg.M if cfg.M is not None else math.sqrt(math.log(cfg.d))
        return fit_simplified(F, cfg.d, M, cfg.c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        schedule = build_schedule(cfg.d, cfg.s, cfg.c)
    return fit(F, schedule, NOISE_FLAG[cfg.noise_mode])


def _json_payload(cfg, body):
    payload = {"schema": f"addfunc/{cfg.command}/{SCHEMA_VERSION}", "config": cfg.resolved()}
    payload.update(body)
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def _csv_payload(cfg, rows, fields):
    buf = io.StringIO()
    buf.write(f"# schema: addfunc/{cfg.command}/{SCHEMA_VERSION}\n")
    buf.write(f"# config: {json.dumps(cfg.resolved(), sort_keys=True)}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def cmd_approx(cfg, F):
    K = cfg.extra["degree"]
    if cfg.extra["interval"]:
        a, b = (float(v) for v in str(cfg.extra["interval"]).split(","))
    else:
        M = cfg.M if cfg.M is not None else 1.0
        a, b = -M, M
    if cfg.extra["method"] == "lp":
        p = grid_lp_approx(F, K, a, b, cfg.extra["n_grid"])
    else:
        p = remez(F, K, a, b)
        if not p.converged:
            raise NumericalError(f"remez did not converge for K={K} on [{a}, {b}]")
    body = {k: v for k, v in p.to_dict().items() if k in ("degree", "interval", "coeffs", "delta", "alternation_points")}
    return _json_payload(cfg, body), "json"


def _read_y(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append([float(v) for v in line.split(",")])
    width = {len(r) for r in rows}
    if len(width) != 1 or width.pop() not in (1, 2):
        raise PreconditionError("y CSV must have one value per line, or two columns throughout")
    arr = np.asarray(rows)
    return arr[:, 0] if arr.shape[1] == 1 else arr.T


def cmd_estimate(cfg, F):
    if not cfg.extra["y"]:
        raise PreconditionError("--y is required for estimate")
    y = _read_y(cfg.extra["y"])
    d = y.shape[-1]
    if cfg.d is not None and cfg.d != d:
        raise PreconditionError(f"dimension mismatch: --d {cfg.d} but y has {d} values")
    cfg.d = d
    _need(cfg, "s")
    if cfg.noise_mode is None:
        cfg.noise_mode = "oracle" if y.ndim == 2 else "duplicate"
    est = _estimator(cfg, F, cfg.extra["estimator"])
    if est.kind == "multiscale" and est.noise_mode == "oracle_pairs" and y.ndim == 1:
        raise PreconditionError("oracle noise mode needs two columns (y1, y2)")
    if est.kind != "multiscale" and y.ndim == 2:
        raise PreconditionError("the simplified estimator reads a single column of y")
    value = estimate(est, y, cfg.seed)
    body = {
        "estimate": value,
        "estimator": est.kind,
        "schedule": est.schedule.to_dict() if est.schedule is not None else None,
        "per_level_delta": est.per_level_delta,
        "rate": est.rate_upper,
    }
    return _json_payload(cfg, body), "json"


def _theta_candidates(cfg, est):
    spec = str(cfg.extra["theta"])
    M = est.M
    if spec == "zero":
        return [("zero", np.zeros(cfg.d))]
    if spec.startswith("all-at:"):
        v = float(spec[7:])
        return [(f"all_at:{v:g}", make_theta(cfg.d, cfg.s, value=v, M=M))]
    if spec.startswith("spread:"):
        vals = [float(v) for v in spec[7:].split(",")]
        return [("spread", make_theta(cfg.d, cfg.s, spread=vals, M=M))]
    if spec == "sweep":
        return None
    raise PreconditionError(f"unknown theta spec {spec!r}")


def cmd_risk(cfg, F):
    _need(cfg, "d", "s")
    est = _estimator(cfg, F, cfg.extra["estimator"])
    space = ParameterSpace(cfg.d, cfg.s, est.M)
    candidates = _theta_candidates(cfg, est)
    reports, _ = adversarial_sweep(est, space, candidates, cfg.n_reps, cfg.seed, cfg.threads)
    return _csv_payload(cfg, [r.row() for r in reports], CSV_FIELDS), "csv"


def cmd_lowerbound(cfg, F):
    _need(cfg, "d", "s")
    cert = certificate(F, cfg.d, cfg.s, cfg.M, cfg.extra["n_grid"])
    return _json_payload(cfg, cert.to_dict()), "json"


def cmd_rates(cfg, F):
    if cfg.extra["d_list"]:
        d_list = [int(v) for v in str(cfg.extra["d_list"]).split(",")]
        rows = rate_scaling_study(F, d_list, cfg.extra["s_rule"], cfg.c, cfg.n_reps, cfg.seed,
                                  NOISE_FLAG[cfg.noise_mode], cfg.threads)
        return _csv_payload(cfg, rows, ("d", "s", "mse_worst", "theta_label", "rate_upper", "ratio")), "csv"
    _need(cfg, "d", "s")
    lower, k_star = rate_expression(F, cfg.d, cfg.s)
    body = {"rate_lower": lower, "argmax_k": k_star}
    if cfg.s >= 2 * math.sqrt(cfg.d):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = fit(F, build_schedule(cfg.d, cfg.s, cfg.c))
        body.update(rate_upper=est.rate_upper, schedule=est.schedule.to_dict(), per_level_delta=est.per_level_delta)
    return _json_payload(cfg, body), "json"


def cmd_probe(cfg, F):
    _need(cfg, "d", "s")
    rep = probe_assumptions(F, cfg.s, cfg.d, cfg.extra["grid_size"])
    body = asdict(rep)
    body["grid"] = [list(p) for p in rep.grid]
    return _json_payload(cfg, body), "json"


COMMANDS = {
    "approx": cmd_approx,
    "estimate": cmd_estimate,
    "risk": cmd_risk,
    "lowerbound": cmd_lowerbound,
    "rates": cmd_rates,
    "probe": cmd_probe,
}


_NEGATIVE = re.compile(r"^-[0-9.]")


def _join_negative_values(argv):
    """Rewrite ``--interval -1,1`` as ``--interval=-1,1`` so argparse does not
    mistake the value for a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--interval", "--M", "--f0"):
            nxt = next(it, None)
            if nxt is not None and _NEGATIVE.match(nxt):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def run(argv=None) -> int:
    parser = _parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        F = _functional(cfg)
        payload, ext = COMMANDS[cfg.command](cfg, F)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.command}.{ext}").write_text(payload)
    sys.stdout.write(payload)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
