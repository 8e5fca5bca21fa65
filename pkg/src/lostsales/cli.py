"""Command-line batch jobs: ``lostsales <command> [flags]``.

Commands: bound, optimize, simulate, table1, rate, verify. Reports are JSON
(default) or CSV and always carry a provenance block. Exit codes: 0 success,
1 failed properties (``verify``), 2 configuration error, 3 numerical
diagnostic (a partial report is still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__, bounds, policies, queueing, rates, simulator, streams, verify
from . import distributions as dist
from .numerics import NumericalDiagnostic

COMMANDS = ("bound", "optimize", "simulate", "table1", "rate", "verify")
DEFAULTS = {
    "demand": "exponential:1",
    "h": 1.0,
    "p": 1.0,
    "L": [1],
    "seed": streams.DEFAULT_SEED,
    "series_tol": rates.DEFAULT_TOL,
    "opt_tol": policies.OPT_TOL,
    "format": "json",
    "output": None,
    "threads": None,
    "policy": "constant:auto",
    "T": 100_000,
    "burn_in": None,
    "reps": 32,
    "trace": None,
    "r": None,
    "path": "auto",
}
STOCHASTIC = ("simulate", "verify")


class ConfigError(ValueError):
    pass


def _json_default(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    return str(x)


def _clean(x):
    """JSON-safe copy: infinities become the string ``"inf"``."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def parse_demand(value, base_dir=None) -> dist.Demand:
    """``exponential:1``, ``discrete:0=0.5,2=0.5``, ``empirical:file.csv``,
    a JSON object (inline or in a ``.json`` file) or an already parsed dict."""
    try:
        if isinstance(value, dict):
            return dist.Demand.from_spec(value, base_dir)
        text = str(value).strip()
        if text.startswith("{"):
            return dist.Demand.from_spec(json.loads(text), base_dir)
        if text.endswith(".json"):
            path = Path(text)
            return dist.Demand.from_spec(json.loads(path.read_text()), path.parent)
        kind, _, arg = text.partition(":")
        if kind == "exponential":
            return dist.Demand.exponential(float(arg))
        if kind == "discrete":
            pairs = [tuple(float(u) for u in item.split("=")) for item in arg.split(",")]
            return dist.Demand.discrete(pairs)
        if kind == "empirical":
            return dist.Demand.from_spec({"kind": "empirical", "path": arg}, base_dir)
        raise ValueError(f"unknown demand {text!r}")
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise ConfigError(f"invalid demand: {exc}") from exc


def _parse_L(value):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        value = [value]
    out = []
    for v in value:
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"L must be a positive integer, got {v!r}") from None
        if f != int(f) or f < 1:
            raise ConfigError(f"L must be a positive integer, got {v!r}")
        out.append(int(f))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lostsales",
                                     description="Constant-order policies for lost-sales inventory.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        # every default is None so a config file can fill what flags leave out
        sp.add_argument("--config", help="JSON file with defaults for any flag")
        sp.add_argument("--demand", help="exponential:RATE, discrete:x=q,..., empirical:FILE or JSON")
        sp.add_argument("--h", type=float, help="holding cost per unit per period")
        sp.add_argument("--p", type=float, help="lost-sales penalty per unit")
        sp.add_argument("--L", help="lead time, or a comma-separated list")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--series-tol", dest="series_tol", type=float)
        sp.add_argument("--opt-tol", dest="opt_tol", type=float)
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--output", help="report path (default stdout)")
        sp.add_argument("--threads", type=int)
        if name == "bound":
            sp.add_argument("--path", choices=("auto", "general", "closed-form"))
        if name == "simulate":
            sp.add_argument("--policy", help="constant:auto, constant:X, base_stock:S or zero")
            sp.add_argument("--T", type=int, help="periods per replication")
            sp.add_argument("--burn-in", dest="burn_in", type=int)
            sp.add_argument("--reps", type=int)
            sp.add_argument("--trace", help="write a per-period CSV trace of replication 0")
        if name == "rate":
            sp.add_argument("--r", type=float, help="order level (default r_inf)")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge built-in defaults < config file < explicit flags, then validate."""
    cfg = dict(DEFAULTS)
    base_dir = None
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
        base_dir = Path(args.config).parent
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    cfg["demand_obj"] = parse_demand(cfg["demand"], base_dir)
    cfg["L"] = _parse_L(cfg["L"])
    for key in ("h", "p", "series_tol", "opt_tol"):
        try:
            cfg[key] = float(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number") from None
        if not (cfg[key] > 0 and math.isfinite(cfg[key])):
            raise ConfigError(f"{key} must be positive")
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    if cfg["threads"] is not None and int(cfg["threads"]) < 1:
        raise ConfigError("threads must be positive")
    if args.command == "simulate":
        if int(cfg["T"]) < 1 or int(cfg["reps"]) < 1:
            raise ConfigError("T and reps must be positive")
        burn = cfg["burn_in"] if cfg["burn_in"] is not None else int(cfg["T"]) // 10
        if not 0 <= int(burn) < int(cfg["T"]):
            raise ConfigError("burn-in must lie in [0, T)")
        if int(cfg["reps"]) < 2:
            raise ConfigError("at least two replications are needed for a confidence interval")
    return cfg


def provenance(cfg: dict) -> dict:
    return {"seed": cfg["seed"],
            "tolerances": {"series_tol": cfg["series_tol"], "opt_tol": cfg["opt_tol"]},
            "version": __version__}


def _echo(cfg: dict) -> dict:
    keys = ["h", "p", "L"]
    if cfg["command"] == "simulate":
        keys += ["policy", "T", "burn_in", "reps"]
    out = {k: cfg[k] for k in keys}
    out["demand"] = cfg["demand_obj"].to_spec()
    return out


# Each command fills ``report["results"]`` as it goes so that a numerical
# diagnostic can still return what was finished.

def cmd_bound(cfg, results):
    d = cfg["demand_obj"]
    path = cfg["path"]
    if path == "closed-form" and d.kind != "exponential":
        raise ConfigError("the closed-form bound needs exponential demand")
    for L in cfg["L"]:
        if path == "closed-form" or (path == "auto" and d.kind == "exponential"):
            rep = bounds.exponential_bound(cfg["h"], cfg["p"], L, d.lam)
        else:
            rep = bounds.theorem1_bound(d, cfg["h"], cfg["p"], L, tol=cfg["opt_tol"],
                                        series_tol=cfg["series_tol"])
        row = rep.to_json()
        row["ratio_bound_display"] = bounds.display_round(rep.ratio_bound)
        results.append(row)


def cmd_optimize(cfg, results):
    d, h, p = cfg["demand_obj"], cfg["h"], cfg["p"]
    best = policies.best_constant_order(d, h, p, tol=cfg["opt_tol"], series_tol=cfg["series_tol"])
    for L in cfg["L"]:
        finite = policies.best_constant_order_finite(d, h, p, L, tol=cfg["opt_tol"])
        interval = bounds.opt_interval(d, h, p, L, tol=cfg["opt_tol"], series_tol=cfg["series_tol"])
        results.append({"L": L, "r_inf": best.to_json(), "r_L": finite.to_json(),
                        "opt_interval": interval.to_json()})


def cmd_simulate(cfg, results):
    d, h, p = cfg["demand_obj"], cfg["h"], cfg["p"]
    text = str(cfg["policy"])
    try:
        if text == "constant:auto":
            level = policies.best_constant_order(d, h, p, tol=cfg["opt_tol"], series_tol=cfg["series_tol"]).r
            policy = simulator.PolicySpec("constant", level)
        else:
            policy = simulator.PolicySpec.parse(text)
    except ValueError as exc:
        raise ConfigError(f"invalid policy: {exc}") from exc
    T, reps = int(cfg["T"]), int(cfg["reps"])
    burn = int(cfg["burn_in"]) if cfg["burn_in"] is not None else T // 10
    for L in cfg["L"]:
        res = simulator.simulate_average_cost(d, policy, h, p, L, T, burn, reps, cfg["seed"], cfg["threads"])
        results.append({"L": L, "policy": policy.to_json(), "mean_cost": res.mean, "std_err": res.std_err,
                        "ci95": list(res.ci(0.95)), "ci99": list(res.ci(0.99)),
                        "T": T, "burn_in": burn, "reps": reps})
    if cfg["trace"]:
        rows = simulator.trace(d, policy, h, p, cfg["L"][0], T, cfg["seed"])
        simulator.write_trace(rows, cfg["trace"])


def cmd_table1(cfg, results):
    t = bounds.table1()
    for p, row, shown in zip(t.p_values, t.values, t.rounded()):
        results.append({"p": p, "ratio_bound": dict(zip(t.L_values, row.tolist())),
                        "display": dict(zip(t.L_values, shown))})


def cmd_rate(cfg, results):
    d = cfg["demand_obj"]
    r = cfg["r"]
    if r is None:
        r = policies.best_constant_order(d, cfg["h"], cfg["p"], tol=cfg["opt_tol"],
                                         series_tol=cfg["series_tol"]).r
    results.append(rates.chernoff_rate(d, float(r)).to_json())


def cmd_verify(cfg, results):
    checks = verify.run_properties(seed=cfg["seed"] % 2**32)
    results.extend(c.to_json() for c in checks)
    return 0 if all(c.passed for c in checks) else 1


HANDLERS = {"bound": cmd_bound, "optimize": cmd_optimize, "simulate": cmd_simulate,
            "table1": cmd_table1, "rate": cmd_rate, "verify": cmd_verify}


def _flatten(row, prefix=""):
    out = {}
    for k, v in row.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v, default=_json_default)
        else:
            out[key] = v
    return out


def render_csv(report: dict) -> str:
    """Provenance as ``# key=value`` lines, then one row per result."""
    buf = io.StringIO()
    prov = report["provenance"]
    buf.write(f"# command={report['command']} seed={prov['seed']} "
              f"series_tol={prov['tolerances']['series_tol']} opt_tol={prov['tolerances']['opt_tol']} "
              f"version={prov['version']}\n")
    if "diagnostic" in report:
        buf.write(f"# diagnostic={report['diagnostic']}\n")
    if report["command"] == "table1":
        buf.write(bounds.table1().to_csv())
        return buf.getvalue()
    rows = [_flatten(r) for r in report["results"]]
    fields = list(dict.fromkeys(k for r in rows for k in r))
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(report)
    return json.dumps(_clean(report), indent=2, default=_json_default) + "\n"


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:  # --help / --version
            return 0
        _emit(json.dumps({"error": {"type": "config", "message": "invalid command line"}}) + "\n", None)
        return 2
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        _emit(json.dumps({"error": {"type": "config", "message": str(exc)}}) + "\n", None)
        return 2
    results: list = []
    report = {"command": cfg["command"], "config": _echo(cfg), "results": results,
              "provenance": provenance(cfg)}
    status = 0
    try:
        status = HANDLERS[cfg["command"]](cfg, results) or 0
    except ConfigError as exc:
        _emit(json.dumps({"error": {"type": "config", "message": str(exc)}}) + "\n", None)
        return 2
    except NumericalDiagnostic as exc:
        report["diagnostic"] = str(exc)
        report["partial"] = True
        status = 3
    except ValueError as exc:
        _emit(json.dumps({"error": {"type": "config", "message": str(exc)}}) + "\n", None)
        return 2
    _emit(render(report, cfg["format"]), cfg["output"])
    return status


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
