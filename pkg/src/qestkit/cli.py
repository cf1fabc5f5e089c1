"""Command-line front end.

Every command writes one JSON report (or CSV for sweeps) to stdout or to
``--output``. Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from . import classical, correlations, qfi as qfi_mod, qfim, states
from .numkit import NumericalError, QestError, ValidationError, hermitian_part

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
METHODS = ("eigen", "bloch", "vectorized", "xstate", "auto")
FAMILIES = ("unitary", "thermal", "heisenberg-xy", "stencil")
MEASURES = ("lqu", "lqfi", "lqu-qudit", "lqu-average", "chain")


@dataclass
class RunConfig:
    command: str
    method: str = "auto"
    fd_step: float | None = None
    trunc_tol: float = qfi_mod.TRUNCATION_TOL
    output_format: str = "json"
    n_trials: int = 1

    def validate(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ValidationError("fd_step must be positive")
        if not 0 < self.trunc_tol < 1e-3:
            raise ValidationError("trunc_tol must lie in (0, 1e-3)")
        if self.output_format not in ("json", "csv"):
            raise ValidationError(f"unknown output format {self.output_format!r}")
        if self.n_trials < 1:
            raise ValidationError("n_trials must be at least 1")
        return self


CONFIG_KEYS = {"method", "fd_step", "trunc_tol", "output_format", "n_trials"}


# -- serialization ------------------------------------------------------------------

def _number(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x + 0.0, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def to_jsonable(obj):
    """Convert arrays to nested lists; 2-D arrays become [re, im] pairs."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return states.matrix_to_pairs(obj)
        if np.iscomplexobj(obj):
            return [[float(z.real), float(z.imag)] for z in obj.ravel()]
        return [float(v) for v in obj.ravel()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, level + 1) for v in obj) + "]"
        items = [inner + dumps(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _number(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def digest(paths) -> str | None:
    paths = [p for p in paths if p]
    if not paths:
        return None
    h = hashlib.sha256()
    for p in paths:
        try:
            with open(p, "rb") as fh:
                h.update(fh.read())
        except OSError as exc:
            raise ValidationError(f"cannot read {p}: {exc}") from exc
        h.update(b"\0")
    return "sha256:" + h.hexdigest()


# -- argument parsing ---------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="JSON file with defaults for method, fd_step, "
                   "trunc_tol, output_format, n_trials")
    g.add_argument("--output", "-o", help="write the report here instead of stdout")
    g.add_argument("--format", dest="output_format", choices=("json", "csv"))
    g.add_argument("--fd-step", dest="fd_step", type=float)
    g.add_argument("--trunc-tol", dest="trunc_tol", type=float)
    g.add_argument("--n-trials", dest="n_trials", type=int)
    g.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    g.add_argument("--strict", action="store_true",
                   help="treat warnings (singular matrices, failed sweep rows) as errors")


def _family_args(p: argparse.ArgumentParser):
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--rho0", help="initial state file (unitary family)")
    p.add_argument("--H", dest="H", help="Hamiltonian file (unitary, thermal)")
    p.add_argument("--theta", type=float, help="rotation angle (unitary family)")
    p.add_argument("--beta", type=float, help="inverse temperature (thermal family)")
    p.add_argument("--J", type=float, help="XY coupling")
    p.add_argument("--B", type=float, help="magnetic field")
    p.add_argument("--T", type=float, help="temperature")
    p.add_argument("--center", help="stencil state at the point of interest")
    p.add_argument("--plus", action="append", default=[], help="stencil state at θ+h e_k")
    p.add_argument("--minus", action="append", default=[], help="stencil state at θ-h e_k")
    p.add_argument("--step", type=float, help="stencil spacing h")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--verify", action="store_true",
                   help="cross-check against the eigendecomposition route")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qestkit", description="Quantum and classical "
                                     "Fisher information, Cramér-Rao bounds and "
                                     "skew-information correlation measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classical-fim", help="classical Fisher information matrix")
    p.add_argument("--model", required=True, choices=("normal", "qubit-pvm", "table"))
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--table", help="discrete table file: {outcomes, p, dp}")
    p.add_argument("--order", type=int, default=200, help="Gauss-Legendre order")
    p.add_argument("--halfwidth", type=float, default=12.0,
                   help="integration half-width in standard deviations")
    _common(p)

    p = sub.add_parser("qfi", help="quantum Fisher information of one parameter")
    _family_args(p)
    p.add_argument("--param", type=int, default=0, help="parameter index")
    _common(p)

    p = sub.add_parser("qfim", help="quantum Fisher information matrix")
    _family_args(p)
    _common(p)

    p = sub.add_parser("correlations", help="LQU, LQFI and the precision chain")
    p.add_argument("--state", required=True)
    p.add_argument("--measure", required=True, choices=MEASURES)
    p.add_argument("--dims", type=int, nargs="+")
    _common(p)

    p = sub.add_parser("sweep", help="evaluate a command over a parameter grid")
    p.add_argument("--param", required=True, help="flag of the base command to vary, e.g. T")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--values", help="comma-separated explicit grid")
    p.add_argument("base", nargs=argparse.REMAINDER,
                   help="base command after '--', e.g. -- qfim --family heisenberg-xy ...")
    _common(p)
    return parser


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return doc


def run_config(args) -> RunConfig:
    base = _load_config(args.config) if args.config else {}
    cfg = RunConfig(args.command, **base)
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.command == "sweep" and getattr(args, "output_format", None) is None \
            and "output_format" not in base:
        cfg.output_format = "csv"
    return cfg.validate()


# -- families -------------------------------------------------------------------------

def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ValidationError(f"family {args.family} needs --{', --'.join(missing)}")


def _operator_file(path) -> np.ndarray:
    m, _ = states.load_matrix_file(path)
    return hermitian_part(m, name=str(path))


def build_family(args):
    """Return (family, theta, files) for the family options."""
    fam = args.family
    if fam == "unitary":
        _need(args, "rho0", "H", "theta")
        rho0 = states.load_state(args.rho0)
        return (states.unitary_family(rho0, _operator_file(args.H)), [args.theta],
                [args.rho0, args.H])
    if fam == "thermal":
        _need(args, "H", "beta")
        return states.thermal_family(_operator_file(args.H)), [args.beta], [args.H]
    if fam == "heisenberg-xy":
        _need(args, "J", "B", "T")
        return states.heisenberg_xy_family(args.J), [args.B, args.T], []
    _need(args, "center", "step")
    if not args.plus or len(args.plus) != len(args.minus):
        raise ValidationError("stencil needs one --plus and one --minus per parameter")
    center = states.load_state(args.center)
    plus = [states.load_state(p) for p in args.plus]
    minus = [states.load_state(p) for p in args.minus]
    f = states.stencil_family(center, plus, minus, args.step)
    files = [args.center] + [x for pair in zip(args.plus, args.minus) for x in pair]
    return f, [0.0] * len(plus), files


def _qfim_report(fam, theta, cfg: RunConfig):
    method = cfg.method
    step, tol = cfg.fd_step, cfg.trunc_tol
    if method == "eigen":
        return qfim.qfim_eigen(fam, theta, tol, step)
    if method == "bloch":
        return qfim.qfim_bloch_report(fam, theta, tol, step)
    if method == "xstate":
        return qfim.qfim_xstate(fam, theta, tol, step)
    rho = fam.evaluate(theta)
    ds = states.family_derivatives(fam, theta, step)
    if method == "vectorized":
        return qfim.qfim_vectorized(rho, ds, tol)
    w = rho.eigvals()
    if w[0] > qfi_mod.RANK_TOL * float(np.sum(w)):
        return qfim.qfim_vectorized(rho, ds, tol)
    return qfim.qfim_vectorized_regularized(rho, ds, tol=tol)


def _verify(fam, theta, cfg, report, warnings) -> float:
    ref = qfim.qfim_eigen(fam, theta, cfg.trunc_tol, cfg.fd_step)
    diff = float(np.max(np.abs(ref.fim - report.fim))) if report.fim.size else 0.0
    if diff > 1e-8 * (1 + float(np.max(np.abs(ref.fim)))):
        warnings.append(f"eigen cross-check differs by {diff:.3e}")
    return diff


# -- commands -------------------------------------------------------------------------

def cmd_classical_fim(args, cfg: RunConfig):
    files = []
    if args.model == "normal":
        model = classical.normal_model(args.order, args.halfwidth)
        theta, names = [args.mu, args.sigma2], ["mu", "sigma2"]
    elif args.model == "qubit-pvm":
        model = classical.qubit_pvm_prob_model()
        theta, names = [args.theta], ["theta"]
        states.qubit_pvm_model(args.theta)
    else:
        if not args.table:
            raise ValidationError("--model table needs --table FILE")
        files = [args.table]
        model, names = _table_model(args.table)
        theta = [0.0] * model.n_params
    rep = classical.fisher_matrix(model, theta, cfg.n_trials)
    warnings = list(rep.warnings)
    if args.strict and warnings:
        raise NumericalError("; ".join(warnings))
    result = {
        "params": names,
        "fim": rep.fim,
        "crb": rep.crb,
        "variance_bounds": np.diag(rep.crb).copy(),
        "pseudo_inverse": rep.pseudo_inverse,
        "regularity_residual": rep.regularity_residual,
        "normalization_residual": rep.normalization_residual,
    }
    tolerances = {"skip_probability": classical.SKIP_PROB,
                  "regularity": classical.REGULARITY_TOL}
    if not model.discrete:
        tolerances["quadrature_order"] = model.order
        tolerances["halfwidth_sd"] = args.halfwidth
    method = "sum" if model.discrete else "gauss-legendre"
    return result, tolerances, method, warnings, files


def _table_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read table {path}: {exc}") from exc
    if not isinstance(doc, dict) or "p" not in doc or "dp" not in doc:
        raise ValidationError(f"{path}: table needs 'p' and 'dp'")
    model = classical.table_model(doc["p"], doc["dp"], doc.get("outcomes"))
    names = doc.get("params") or [f"theta{k}" for k in range(model.n_params)]
    return model, list(names)


def _sld_payload(report):
    return [s.op for s in report.slds]


def cmd_qfim(args, cfg: RunConfig):
    fam, theta, files = build_family(args)
    report = _qfim_report(fam, theta, cfg)
    warnings = list(report.warnings)
    if args.strict and report.crb_pseudo_inverse:
        raise NumericalError("Fisher matrix singular")
    bounds = qfim.crb_matrix(report, cfg.n_trials)
    result = {
        "params": list(fam.param_names) or [f"theta{k}" for k in range(fam.n_params)],
        "theta": list(theta),
        "fim": report.fim,
        "crb": bounds.covariance,
        "variance_bounds": bounds.variances,
        "pseudo_inverse": bounds.pseudo_inverse,
        "uhlmann": report.uhlmann,
        "quantumness": report.quantumness,
        "slds": _sld_payload(report),
    }
    if report.diagnostics:
        result["diagnostics"] = dict(report.diagnostics)
    if args.verify:
        result["verify_max_abs_diff"] = _verify(fam, theta, cfg, report, warnings)
    tol = dict(report.tolerances)
    tol["fd_step"] = cfg.fd_step
    return result, tol, report.method, warnings, files


def cmd_qfi(args, cfg: RunConfig):
    fam, theta, files = build_family(args)
    if not 0 <= args.param < fam.n_params:
        raise ValidationError(f"--param must be below {fam.n_params}")
    report = _qfim_report(fam, theta, cfg)
    k = args.param
    f = float(report.fim[k, k])
    warnings = list(report.warnings)
    if f > 0:
        bound = classical.cramer_rao_bound(f, cfg.n_trials)
    else:
        bound = float("inf")
        msg = "quantum Fisher information is zero; bound is infinite"
        if args.strict:
            raise NumericalError(msg)
        warnings.append(msg)
    result = {
        "param": (list(fam.param_names) or [f"theta{j}" for j in range(fam.n_params)])[k],
        "theta": list(theta),
        "qfi": f,
        "crb": bound,
        "sld": report.slds[k].op,
    }
    if args.verify:
        result["verify_max_abs_diff"] = _verify(fam, theta, cfg, report, warnings)
    tol = dict(report.tolerances)
    tol["fd_step"] = cfg.fd_step
    return result, tol, report.method, warnings, files


def cmd_correlations(args, cfg: RunConfig):
    rho = states.load_state(args.state)
    dims = tuple(args.dims) if args.dims else rho.dims
    warnings = []
    if int(np.prod(dims)) != rho.dim:
        raise ValidationError(f"dims {list(dims)} do not match state dimension {rho.dim}")
    m = args.measure
    if m == "lqu-average":
        n = int(round(math.log2(rho.dim)))
        values, avg = correlations.lqu_multiqubit_average(rho, n)
        result = {"measure": m, "values": np.array(values), "average": avg}
    elif m == "chain":
        chain = correlations.precision_chain(rho, dims, strict=args.strict)
        if math.isinf(chain.bound_lqu):
            warnings.append("local quantum uncertainty vanishes; variance bounds are infinite")
        result = {"measure": m, **asdict(chain)}
    else:
        fn = {"lqu": correlations.lqu_qubit, "lqfi": correlations.lqfi,
              "lqu-qudit": correlations.lqu_qudit}[m]
        rep = fn(rho, dims)
        result = {"measure": rep.measure, "value": rep.value,
                  "optimizer_matrix": rep.optimizer_matrix,
                  "max_eigenvalue": rep.max_eigenvalue}
    tolerances = {"truncation": cfg.trunc_tol, "psd_clip": 1e-10}
    return result, tolerances, m, warnings, [args.state]


COMMANDS = {"classical-fim": cmd_classical_fim, "qfi": cmd_qfi, "qfim": cmd_qfim,
            "correlations": cmd_correlations}
ECHO_SKIP = {"config", "output", "no_timestamp", "command", "base"}


def _echo(args, cfg: RunConfig) -> dict:
    out = {k: v for k, v in vars(args).items()
           if k not in ECHO_SKIP and v is not None and v != []}
    out.update({"method": cfg.method, "fd_step": cfg.fd_step, "trunc_tol": cfg.trunc_tol,
                "output_format": cfg.output_format, "n_trials": cfg.n_trials})
    return dict(sorted(out.items()))


def run_command(args, cfg: RunConfig) -> dict:
    result, tolerances, method, warnings, files = COMMANDS[args.command](args, cfg)
    report = {
        "command": args.command,
        "config": _echo(args, cfg),
        "inputs_digest": digest(files),
        "method": method,
        "result": result,
        "tolerances": tolerances,
        "warnings": warnings,
    }
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    return report


# -- sweeps ----------------------------------------------------------------------------

def _threads() -> int:
    raw = os.environ.get("QESTKIT_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"QESTKIT_THREADS={raw!r} is not an integer") from exc
    if n < 1:
        raise ValidationError("QESTKIT_THREADS must be at least 1")
    return n


def _grid(args) -> list[float]:
    if args.values:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ValidationError(f"bad --values: {exc}") from exc
        if not vals:
            raise ValidationError("--values is empty")
        return vals
    if args.start is None or args.stop is None or args.points is None:
        raise ValidationError("sweep needs --start, --stop, --points or --values")
    if args.points < 2:
        raise ValidationError("a sweep grid needs at least 2 points")
    return [float(x) for x in np.linspace(args.start, args.stop, args.points)]


def _override(argv: list, flag: str, value: float) -> list:
    out, key, i = [], f"--{flag}", 0
    replaced = False
    while i < len(argv):
        if argv[i] == key and i + 1 < len(argv):
            out += [key, repr(value)]
            i += 2
            replaced = True
            continue
        if argv[i].startswith(key + "="):
            out.append(f"{key}={value!r}")
            replaced = True
        else:
            out.append(argv[i])
        i += 1
    if not replaced:
        out += [key, repr(value)]
    return out


def scalars(result: dict, prefix: str = "") -> dict:
    """Flatten numeric scalars and real matrices of a result payload."""
    out = {}
    for k, v in result.items():
        name = f"{prefix}{k}"
        if isinstance(v, (bool, np.bool_)):
            out[name] = int(v)
        elif isinstance(v, (int, float, np.integer, np.floating)):
            out[name] = float(v)
        elif isinstance(v, dict):
            out.update(scalars(v, name + "_"))
        elif isinstance(v, np.ndarray) and not np.iscomplexobj(v):
            for idx in np.ndindex(v.shape):
                out[name + "_" + "_".join(map(str, idx))] = float(v[idx])
    return out


def cmd_sweep(args, cfg: RunConfig, parser):
    base = list(args.base)
    if base and base[0] == "--":
        base = base[1:]
    if not base or base[0] not in COMMANDS:
        raise ValidationError(f"sweep needs a base command, one of {sorted(COMMANDS)}")
    grid = _grid(args)
    threads = _threads()

    def one(value):
        argv = _override(base, args.param, value)
        try:
            sub = parser.parse_args(argv)
        except SystemExit as exc:
            raise ValidationError(f"invalid base command: {' '.join(argv)}") from exc
        if not hasattr(sub, args.param.replace("-", "_")):
            raise ValidationError(f"base command has no --{args.param} option")
        subcfg = run_config(sub)
        result, *_ , warnings, _ = COMMANDS[sub.command](sub, subcfg)
        return scalars(result), warnings

    def guarded(value):
        try:
            row, warns = one(value)
            return row, warns, None
        except ValidationError as exc:
            if "base command" in str(exc):
                raise
            return {}, [], f"{type(exc).__name__}: {exc}"
        except QestError as exc:
            return {}, [], f"{type(exc).__name__}: {exc}"

    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(guarded, grid))
    else:
        rows = [guarded(v) for v in grid]

    columns: list[str] = []
    for row, _, _ in rows:
        for k in row:
            if k not in columns:
                columns.append(k)
    failures = [(v, err) for v, (_, _, err) in zip(grid, rows) if err]
    warnings = [f"{args.param}={v!r}: {err}" for v, err in failures]
    if failures and args.strict:
        raise NumericalError(f"{len(failures)} sweep point(s) failed: {warnings[0]}")
    table = []
    for v, (row, warns, err) in zip(grid, rows):
        rec = {args.param: v}
        rec.update({c: row.get(c) for c in columns})
        rec["error"] = err or ""
        table.append(rec)
    return table, [args.param] + columns + ["error"], warnings, base


def _csv(table, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rec in table:
        w.writerow(["" if rec[h] is None else (format(rec[h] + 0.0, ".17g")
                    if isinstance(rec[h], float) else rec[h]) for h in header])
    return buf.getvalue()


# -- entry point --------------------------------------------------------------------------

def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = run_config(args)
        if args.command == "sweep":
            table, header, warnings, base = cmd_sweep(args, cfg, parser)
            for w in warnings:
                print(f"warning: {w}", file=sys.stderr)
            if cfg.output_format == "csv":
                text = _csv(table, header)
            else:
                doc = {"command": "sweep", "config": _echo(args, cfg), "base": base,
                       "rows": table, "warnings": warnings}
                if not args.no_timestamp:
                    doc["timestamp"] = datetime.now(timezone.utc).isoformat()
                text = dumps(to_jsonable(doc)) + "\n"
        else:
            report = run_command(args, cfg)
            if cfg.output_format == "csv":
                text = _csv([scalars(report["result"])], list(scalars(report["result"])))
            else:
                text = dumps(to_jsonable(report)) + "\n"
        _emit(text, args.output)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except QestError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
