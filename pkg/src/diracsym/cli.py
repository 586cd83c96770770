"""Scenario-driven command line: certify | trace | compare | symbols.

Configuration is one JSON file (or a directory of them with --jobs); the
schema is strict, unknown keys are configuration errors.  Exit codes:
0 all checks passed, 1 a certified property failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .clifford import SampleSpec, build_canonical_module, certify_axioms
from .errors import DiracsymError, ConfigError, KernelViolation, \
    NotFutureDirected, NotOnCharacteristicSet, NotTimelike, ZeroCovector
from .geometry import (
    PhasePoint,
    catalog_metric,
    eval_metric,
    hamiltonian_q,
    integrate_bicharacteristic,
    orthonormal_frame,
    random_null_covector,
    null_project_covector,
)
from .symbols import (
    certify_principal_type,
    dirac_system,
    kernel_basis,
    principal_symbol,
    resolve_timelike_field,
    symbol_package,
)
from .transport import PolarizationState, compare_transports, transport_denker

_TOP_KEYS = {"metric", "chart_seed_point", "timelike_field",
             "initial_covector", "initial_polarization", "integrator",
             "t_end", "outputs", "tolerances", "sample"}
_INTEGRATOR_KEYS = {"kind", "step", "tol"}
_OUTPUT_KEYS = {"format", "path"}
_TOL_KEYS = {"axioms", "max_gap", "q_drift", "kernel", "factorization",
             "null", "rank"}
_SAMPLE_KEYS = {"points", "vectors", "spinors", "seed"}

_DEFAULT_TOLS = {"axioms": 1e-6, "max_gap": 1e-6, "q_drift": 1e-6,
                 "kernel": 1e-8, "factorization": 1e-10, "null": 1e-10,
                 "rank": 1e-8}


class _Scenario:
    """Validated configuration, resolved lazily into live objects."""

    def __init__(self, cfg: dict, seed_override=None):
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be an object")
        unknown = set(cfg) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "metric" not in cfg:
            raise ConfigError("config requires a 'metric' catalog id")
        self.metric = catalog_metric(str(cfg["metric"]))

        for key, allowed in (("integrator", _INTEGRATOR_KEYS),
                             ("outputs", _OUTPUT_KEYS),
                             ("tolerances", _TOL_KEYS),
                             ("sample", _SAMPLE_KEYS)):
            sub = cfg.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"'{key}' must be an object")
            bad = set(sub) - allowed
            if bad:
                raise ConfigError(f"unknown keys under '{key}': {sorted(bad)}")

        box = self.metric.sample_box
        default_x = 0.5 * (box[:, 0] + box[:, 1]) if box is not None \
            else np.zeros(self.metric.dim)
        self.x0 = np.asarray(cfg.get("chart_seed_point", default_x),
                             dtype=float)
        if self.x0.shape != (self.metric.dim,):
            raise ConfigError("chart_seed_point has the wrong dimension")
        if not self.metric.domain_guard(self.x0):
            raise ConfigError("chart_seed_point violates the domain guard")

        self.timelike_spec = cfg.get("timelike_field", "normalized_dt")
        self.covector_spec = cfg.get("initial_covector", "random_null(0)")
        self.polarization_spec = cfg.get("initial_polarization",
                                         "kernel_basis(0)")

        integ = dict(cfg.get("integrator", {}))
        self.integrator = str(integ.get("kind", "rk4_fixed"))
        if self.integrator not in ("rk4_fixed", "rk45_adaptive"):
            raise ConfigError(f"unknown integrator kind {self.integrator!r}")
        self.step = float(integ.get("step", 1e-3))
        self.tol = float(integ.get("tol", 1e-10))
        self.t_end = float(cfg.get("t_end", 5.0))
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")

        out = dict(cfg.get("outputs", {}))
        self.out_format = str(out.get("format", "json"))
        if self.out_format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.out_format!r}")
        self.out_path = out.get("path")

        self.tols = dict(_DEFAULT_TOLS)
        self.tols.update(cfg.get("tolerances", {}))

        samp = dict(cfg.get("sample", {}))
        self.sample = SampleSpec(
            points=int(samp.get("points", 20)),
            vectors=int(samp.get("vectors", 10)),
            spinors=int(samp.get("spinors", 10)),
            seed=int(seed_override if seed_override is not None
                     else samp.get("seed", 0)),
        )
        self.seed = self.sample.seed

    # -- resolution helpers -------------------------------------------------

    def timelike_field(self):
        N = resolve_timelike_field(self.metric, self.timelike_spec)
        vec = N(self.x0)
        g, _ = eval_metric(self.metric, self.x0)
        if float(vec @ g @ vec) >= 0.0:
            raise NotTimelike("configured timelike_field is not timelike at "
                              "the seed point")
        s = orthonormal_frame(self.metric, self.x0)
        if (s.E_inv @ vec)[0] <= 0.0:
            raise NotFutureDirected("configured timelike_field is not "
                                    "future-directed at the seed point")
        return N

    def initial_covector(self) -> np.ndarray:
        spec = self.covector_spec
        if isinstance(spec, str):
            if spec.startswith("random_null(") and spec.endswith(")"):
                seed = int(spec[len("random_null("):-1])
                rng = np.random.default_rng(seed + self.seed)
                return random_null_covector(self.metric, self.x0, rng)
            raise ConfigError(f"bad initial_covector spec {spec!r}")
        xi = np.asarray(spec, dtype=float)
        if xi.shape != (self.metric.dim,):
            raise ConfigError("initial_covector has the wrong dimension")
        if not np.any(xi):
            raise ZeroCovector("initial_covector is zero")
        return xi

    def initial_polarization(self, rep, sys, xi) -> np.ndarray:
        spec = self.polarization_spec
        if isinstance(spec, str):
            if spec.startswith("kernel_basis(") and spec.endswith(")"):
                k = int(spec[len("kernel_basis("):-1])
                s1 = principal_symbol(sys, PhasePoint(self.x0, xi))
                basis, dim = kernel_basis(s1, self.tols["rank"])
                if k >= dim:
                    raise ConfigError(
                        f"kernel_basis({k}) out of range, kernel dim {dim}")
                return basis[k]
            raise ConfigError(f"bad initial_polarization spec {spec!r}")
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 2:
            return arr[:, 0] + 1j * arr[:, 1]
        return np.asarray(spec, dtype=complex)


# ---------------------------------------------------------------------------
# emitters


def _meta():
    return {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "tool_version": __version__}


def _emit_json(obj, path, no_meta):
    if not no_meta:
        obj = dict(obj)
        obj["meta"] = _meta()
    text = json.dumps(obj, sort_keys=True, indent=2,
                      default=_json_default) + "\n"
    _write_text(text, path)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _emit_kv_csv(obj, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])

    def walk(prefix, val):
        if isinstance(val, dict):
            for k in sorted(val):
                walk(f"{prefix}.{k}" if prefix else str(k), val[k])
        elif isinstance(val, (list, tuple)):
            w.writerow([prefix, json.dumps(val, default=_json_default)])
        else:
            w.writerow([prefix, val])

    walk("", obj)
    _write_text(buf.getvalue(), path)


def _trace_records(traj, orbit):
    recs = []
    for i in range(traj.n):
        w = orbit.sections[i]
        recs.append({
            "t": float(traj.ts[i]),
            "x": [float(v) for v in traj.xs[i]],
            "xi": [float(v) for v in traj.xis[i]],
            "q": float(traj.qs[i]),
            "w_re": [float(v) for v in w.real],
            "w_im": [float(v) for v in w.imag],
            "kernel_residual": float(orbit.kernel_residuals[i]),
        })
    return recs


def _emit_trace(traj, orbit, summary, path, fmt, no_meta):
    recs = _trace_records(traj, orbit)
    if fmt == "json":
        lines = [json.dumps(r, sort_keys=True) for r in recs]
        tail = dict(summary)
        if not no_meta:
            tail["meta"] = _meta()
        lines.append(json.dumps({"summary": tail}, sort_keys=True,
                                default=_json_default))
        _write_text("\n".join(lines) + "\n", path)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = len(recs[0]["x"])
        N = len(recs[0]["w_re"])
        head = (["t"] + [f"x{i}" for i in range(d)]
                + [f"xi{i}" for i in range(d)] + ["q"]
                + [f"w{i}_re" for i in range(N)]
                + [f"w{i}_im" for i in range(N)] + ["kernel_residual"])
        w.writerow(head)
        for r in recs:
            w.writerow([r["t"], *r["x"], *r["xi"], r["q"], *r["w_re"],
                        *r["w_im"], r["kernel_residual"]])
        _write_text(buf.getvalue(), path)


def _write_text(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_certify(sc: _Scenario, args) -> int:
    rep = build_canonical_module(sc.metric)
    sys_ = dirac_system(rep)
    report = certify_axioms(rep, sc.sample, tolerance=sc.tols["axioms"])

    rng = np.random.default_rng(sc.seed)
    from .geometry import random_chart_point

    certs = []
    for _ in range(max(1, sc.sample.points)):
        x = random_chart_point(sc.metric, rng)
        xi = random_null_covector(sc.metric, x, rng)
        cert = certify_principal_type(
            rep, PhasePoint(x, xi), mode="intrinsic", sys=sys_,
            null_tol=sc.tols["null"], rank_tol=sc.tols["rank"],
            factor_tol=sc.tols["factorization"], seed=sc.seed)
        certs.append(cert)
    pt_pass = all(c.passed for c in certs)

    payload = {
        "command": "certify",
        "fixture": sc.metric.name,
        "axioms_certificate": report.to_dict(),
        "principal_type": {
            "points": len(certs),
            "all_pass": pt_pass,
            "ker_dims": sorted({c.ker_dim for c in certs}),
            "max_condition_number": max(
                c.ker_coker_condition_number for c in certs),
        },
        "pass": bool(report.passed and pt_pass),
    }
    if sc.out_format == "json":
        _emit_json(payload, sc.out_path, args.no_meta)
    else:
        _emit_kv_csv(payload, sc.out_path)
    return 0 if payload["pass"] else 1


def cmd_trace(sc: _Scenario, args) -> int:
    rep = build_canonical_module(sc.metric)
    sys_ = dirac_system(rep)
    xi = sc.initial_covector()
    q0 = hamiltonian_q(sc.metric, sc.x0, xi)
    if abs(q0) >= sc.tols["null"] * (1.0 + float(xi @ xi)):
        raise NotOnCharacteristicSet(
            f"initial covector is not null: q = {q0}")
    p0 = PhasePoint(sc.x0, xi)
    traj = integrate_bicharacteristic(
        sc.metric, p0, sc.t_end, integrator=sc.integrator, step=sc.step,
        tol=sc.tol, require_null=True, null_tol=sc.tols["null"])
    w0 = sc.initial_polarization(rep, sys_, xi)
    orbit = transport_denker(sys_, traj, w0, kernel_tol=sc.tols["kernel"],
                             flip_subprincipal=args.flip_subprincipal_sign)
    q_drift = float(np.max(np.abs(traj.qs - traj.qs[0])))
    ok = q_drift < sc.tols["q_drift"] and not traj.left_chart
    summary = {
        "command": "trace",
        "fixture": sc.metric.name,
        "samples": traj.n,
        "q_drift": q_drift,
        "left_chart": traj.left_chart,
        "max_kernel_residual": float(np.max(orbit.kernel_residuals)),
        "pass": ok,
    }
    _emit_trace(traj, orbit, summary, sc.out_path, sc.out_format,
                args.no_meta)
    return 0 if ok else 1


def cmd_compare(sc: _Scenario, args) -> int:
    rep = build_canonical_module(sc.metric)
    sys_ = dirac_system(rep)
    xi = sc.initial_covector()
    w0 = sc.initial_polarization(rep, sys_, xi)
    state = PolarizationState(PhasePoint(sc.x0, xi), w0)
    report = compare_transports(
        rep, sys_, state, sc.t_end, step=sc.step, integrator=sc.integrator,
        tol=sc.tol, kernel_tol=sc.tols["kernel"], null_tol=sc.tols["null"],
        flip_subprincipal=args.flip_subprincipal_sign)
    ok = report.max_gap < sc.tols["max_gap"] and not report.left_chart
    payload = dict(report.to_dict())
    payload["command"] = "compare"
    payload["pass"] = ok
    if sc.out_format == "json":
        _emit_json(payload, sc.out_path, args.no_meta)
    else:
        _emit_kv_csv(payload, sc.out_path)
    return 0 if ok else 1


def cmd_symbols(sc: _Scenario, args) -> int:
    rep = build_canonical_module(sc.metric)
    sys_ = dirac_system(rep)
    Nfield = sc.timelike_field()
    xi = sc.initial_covector()
    pkg = symbol_package(rep, PhasePoint(sc.x0, xi), sys=sys_,
                         N=Nfield)
    payload = dict(pkg.to_dict())
    payload["command"] = "symbols"
    payload["fixture"] = sc.metric.name
    payload["pass"] = bool(
        pkg.factorization_residual < sc.tols["factorization"])
    if sc.out_format == "json":
        _emit_json(payload, sc.out_path, args.no_meta)
    else:
        _emit_kv_csv(payload, sc.out_path)
    return 0 if payload["pass"] else 1


_COMMANDS = {"certify": cmd_certify, "trace": cmd_trace,
             "compare": cmd_compare, "symbols": cmd_symbols}


# ---------------------------------------------------------------------------
# driver


def _run_one(cmd, config_path, args) -> int:
    try:
        cfg = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config {config_path}: {e}",
              file=sys.stderr)
        return 2
    try:
        sc = _Scenario(cfg, seed_override=args.seed)
        if args.format:
            sc.out_format = args.format
        if args.out:
            sc.out_path = args.out
        elif sc.out_path is None and args.batch_dir:
            ext = "jsonl" if cmd == "trace" and sc.out_format == "json" \
                else sc.out_format
            sc.out_path = str(Path(config_path).with_suffix(f".out.{ext}"))
        # full validation before any computation
        sc.timelike_field()
        if cmd in ("trace", "compare", "symbols"):
            sc.initial_covector()
        return _COMMANDS[cmd](sc, args)
    except (ConfigError, NotTimelike, NotFutureDirected, ZeroCovector,
            NotOnCharacteristicSet, KernelViolation) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except DiracsymError as e:
        print(f"failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="diracsym",
        description="Dirac symbol calculus scenarios: certification, "
                    "bicharacteristic tracing, transport comparison.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
            ("certify", "axiom and principal-type certification"),
            ("trace", "integrate a null bicharacteristic and transport"),
            ("compare", "both transports on one grid, gap report"),
            ("symbols", "dump the symbol package at the seed phase point")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True,
                       help="scenario JSON file, or a directory of them")
        p.add_argument("--seed", type=int, default=None,
                       help="override the sample seed")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--out", default=None, help="output path (default "
                       "stdout, or <config>.out.* in directory mode)")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel scenarios in directory mode")
        p.add_argument("--no-meta", action="store_true",
                       help="omit timestamps for byte-stable output")
        p.add_argument("--flip-subprincipal-sign", action="store_true",
                       help=argparse.SUPPRESS)

    args = ap.parse_args(argv)
    cfg_path = Path(args.config)
    args.batch_dir = cfg_path.is_dir()
    if not args.batch_dir:
        return _run_one(args.command, cfg_path, args)

    files = sorted(cfg_path.glob("*.json"))
    if not files:
        print(f"error: no *.json scenarios under {cfg_path}",
              file=sys.stderr)
        return 2
    if args.out:
        print("error: --out is incompatible with a config directory",
              file=sys.stderr)
        return 2
    jobs = max(1, args.jobs)
    if jobs == 1:
        codes = [_run_one(args.command, f, args) for f in files]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as ex:
            codes = list(ex.map(
                lambda f: _run_one(args.command, f, args), files))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
