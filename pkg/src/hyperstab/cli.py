"""Command-line entry point: ``hyperstab <subcommand> ...``."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import delay_analysis as da
from . import lyapunov as ly
from . import quasilinear as ql
from .errors import AdmissibilityViolation, ConfigErrors, HyperstabError
from .linear_sim import FeedbackSpec, simulate
from .sweep import HEADER, emit_csv, format_float, parse_config, run_sweep
from .weights import Affine, Constant, Exponential, Hyperbolic, WeightParams, sample_table

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_VALIDATION = 2
EXIT_CELL_ERRORS = 3


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def _write_csv(path, header, rows):
    text = header + "\n" + "".join(",".join(_fmt(v) for v in r) + "\n" for r in rows)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_meta(path, meta: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in meta.items():
            fh.write(f"{k} = {_fmt(v)}\n")


def _verdict_line(v) -> str:
    parts = [f"{v.method}: {v.tag}"]
    if isinstance(v, ly.CertifiedStable):
        parts.append(f"rate={_fmt(v.rate)}" + (" (heuristic)" if v.heuristic_rate else ""))
        w = v.witness
        if isinstance(w, WeightParams):
            parts.append(f"psi={_fmt(w.psi)} upsilon={_fmt(w.upsilon)}")
        else:
            parts.append(f"lambda={_fmt(float(w))}")
    elif isinstance(v, ly.CertifiedUnstable):
        parts.append(f"witness={v.witness!r}")
    else:
        parts.append(f"reason: {v.reason}")
    return " ".join(parts)


# --- subcommands ----------------------------------------------------------------


def cmd_weights(args):
    table = sample_table(WeightParams(args.psi, args.upsilon, args.len), args.samples)
    _write_csv(args.out, "x,h_plus,h_minus,ratio", table.tolist())
    return EXIT_OK


def cmd_certify(args):
    system = ly.LinearSystemParams(args.m, args.len, args.k)
    methods = ["exp", "hyp", "affine"] if args.method == "all" else [args.method]
    fns = {
        "exp": ly.certify_exponential,
        "hyp": ly.certify_hyperbolic,
        "affine": ly.certify_instability_affine,
    }
    rows = []
    for m in methods:
        v = fns[m](system)
        print(_verdict_line(v))
        if isinstance(v, ly.CertifiedStable):
            w = v.witness
            if isinstance(w, WeightParams):
                rows.append((w.psi, w.upsilon, v.rate))
            else:
                rows.append((float(w), 1.0, v.rate))
    if args.witness_csv:
        _write_csv(args.witness_csv, "psi,upsilon,rate", rows)
    return EXIT_OK


def _parse_weights(spec: str, system: ly.LinearSystemParams):
    kind, _, params = spec.partition(":")
    vals = [float(p) for p in params.split(",")] if params else []
    L = system.length
    if kind == "const":
        return Constant(L), {}
    if kind == "affine":
        m = vals[0] if vals else system.m
        return Affine(m, L), {"witness_m": m}
    if kind == "exp":
        if vals:
            lam = vals[0]
        else:
            v = ly.certify_exponential(system)
            if not isinstance(v, ly.CertifiedStable):
                raise HyperstabError(f"no exponential witness: {v.reason}")
            lam = float(v.witness)
        return Exponential(lam, L), {"witness_lambda": lam}
    if kind == "hyp":
        if len(vals) == 2:
            params = WeightParams(vals[0], vals[1], L)
        else:
            v = ly.certify_hyperbolic(system)
            if not isinstance(v, ly.CertifiedStable):
                raise HyperstabError(f"no hyperbolic witness: {v.reason}")
            params = v.witness
        return Hyperbolic(params), {
            "witness_psi": params.psi,
            "witness_upsilon": params.upsilon,
        }
    raise HyperstabError(f"unknown weight spec {spec!r}; use const, exp[:lam], hyp[:psi,ups], affine[:m]")


def cmd_simulate(args):
    system = ly.LinearSystemParams(args.m, args.len, args.k)
    fb = FeedbackSpec.delayed(args.k, args.tau, args.kL) if args.tau > 0 else FeedbackSpec(args.k, args.kL)
    family, wmeta = _parse_weights(args.weights, system)
    res = simulate(
        system,
        fb,
        t_final=args.tfinal,
        n_cells=args.cells,
        cfl=args.cfl,
        weights=family,
        amplitude=args.amplitude,
    )
    rows = [(r.time, r.energy, r.l2_norm, r.sup_norm) for r in res.records]
    _write_csv(args.out, "t,energy,l2,sup", rows)
    _write_meta(args.out + ".meta", {**res.meta, **wmeta})
    print(f"wrote {len(rows)} records to {args.out} (metadata in {args.out}.meta)")
    return EXIT_OK


def cmd_delay(args):
    if args.tau is None:
        w = da.destabilizing_tau(args.khat, args.m, args.len)
        tau, sigma0, roots = w.tau, w.sigma0, w.roots
        print(f"tau = {_fmt(tau)}  sigma0 = {_fmt(sigma0)}")
        for name, ok in w.requirements.items():
            print(f"  {name}: {ok}")
    else:
        tau = args.tau
        print(f"tau = {_fmt(tau)}  (sigma0 scanned per gain)")
        roots = []
        for k in np.linspace(-0.9 * args.khat, 0.9 * args.khat, 11):
            found = da.scan_unstable_sigma(float(k), tau, args.m, args.len)
            if found:
                s = found[0]
                roots.append((float(k), s, da.eval_H(s, float(k), tau, args.m, args.len)))
            else:
                roots.append((float(k), math.nan, math.nan))
    for k, s, h in roots:
        print(f"  k = {_fmt(k)}: sigma* = {_fmt(s)}  H = {_fmt(h)}")
    _write_csv(args.out, "k,sigma_star,H_residual", roots)
    return EXIT_OK


def _source(kind, strength):
    return {
        "dissipative": ql.DissipativeSource,
        "coupling": ql.CouplingSource,
        "amplifying": ql.AmplifyingSource,
    }[kind](strength)


def cmd_ql_certify(args):
    src = _source(args.source, args.strength)
    if isinstance(src, ql.AmplifyingSource):
        if args.eta is None:
            raise HyperstabError("--eta is required for an amplifying source")
        v = ql.certify_ql_instability(
            src.nn, args.eps0, args.c, args.d, args.len, args.k0, args.kL, args.eta
        )
    else:
        v = ql.certify_ql_stability(args.c, args.d, args.eps0, src.m, args.len, args.k0, args.kL)
    print(_verdict_line(v))
    return EXIT_OK


def cmd_ql_simulate(args):
    model = ql.QuasilinearModel.from_box(
        args.a, args.gamma, _source(args.source, args.strength), args.delta_max, args.eps0
    )
    os.makedirs(args.out_dir, exist_ok=True)
    log_path = os.path.join(args.out_dir, "assumption_log.csv")
    try:
        res = ql.simulate_ql(
            model,
            args.k0,
            args.kL,
            t_final=args.tfinal,
            n_cells=args.cells,
            cfl=args.cfl,
            length=args.len,
            amplitude=args.amplitude,
            eta=args.eta,
        )
    except AdmissibilityViolation as exc:
        if exc.log is not None:
            _write_csv(log_path, ",".join(ql.AssumptionLog.header), exc.log.rows)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    energy_path = os.path.join(args.out_dir, "energy.csv")
    rows = [(r.time, r.energy, r.l2_norm, r.sup_norm) for r in res.records]
    _write_csv(energy_path, "t,energy,l2,sup", rows)
    _write_meta(energy_path + ".meta", res.meta)
    _write_csv(log_path, ",".join(ql.AssumptionLog.header), res.log.rows)
    for line in res.log.violations:
        print(f"assumption violated: {line}")
    print(f"c = {_fmt(model.c)}  d = {_fmt(model.d)}  violations = {len(res.log.violations)}")
    return EXIT_OK


def cmd_sweep(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        spec = parse_config(text)
    except ConfigErrors as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    table = run_sweep(spec, jobs=args.jobs)
    out = args.out or spec.output
    if out is None:
        sys.stdout.write(HEADER + "\n" + "".join(c.row() + "\n" for c in table))
    else:
        emit_csv(table, out)
    n_err = 0
    for cell in table:
        for method, msg in cell.errors.items():
            n_err += 1
            print(f"cell {cell.coords} {method}: {msg}", file=sys.stderr)
    return EXIT_CELL_ERRORS if n_err else EXIT_OK


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperstab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weights", help="tabulate hyperbolic weights")
    w.add_argument("--psi", type=float, required=True)
    w.add_argument("--upsilon", type=float, required=True)
    w.add_argument("--len", type=float, required=True)
    w.add_argument("--samples", type=int, default=101)
    w.add_argument("--out", default="-")
    w.set_defaults(func=cmd_weights)

    c = sub.add_parser("certify", help="Lyapunov certificates for the linear loop")
    c.add_argument("--m", type=float, required=True)
    c.add_argument("--len", type=float, required=True)
    c.add_argument("--k", type=float, required=True)
    c.add_argument("--method", choices=["exp", "hyp", "affine", "all"], default="all")
    c.add_argument("--witness-csv", default=None)
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("simulate", help="upwind simulation of the linear loop")
    s.add_argument("--m", type=float, required=True)
    s.add_argument("--len", type=float, required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--kL", type=float, default=1.0)
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--tfinal", type=float, required=True)
    s.add_argument("--cells", type=int, required=True)
    s.add_argument("--cfl", type=float, default=0.9)
    s.add_argument("--amplitude", type=float, default=1e-2)
    s.add_argument("--weights", default="const", help="const | exp[:lam] | hyp[:psi,ups] | affine[:m]")
    s.add_argument("--out", default="simulation.csv")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("delay", help="growing modes of the delayed loop")
    d.add_argument("--m", type=float, required=True)
    d.add_argument("--len", type=float, required=True)
    d.add_argument("--khat", type=float, required=True)
    d.add_argument("--tau", type=float, default=None)
    d.add_argument("--out", default="delay_roots.csv")
    d.set_defaults(func=cmd_delay)

    q = sub.add_parser("quasilinear", help="quasilinear certificates and simulation")
    qsub = q.add_subparsers(dest="ql_command", required=True)

    def common(qp):
        qp.add_argument("--source", choices=["dissipative", "coupling", "amplifying"], required=True)
        qp.add_argument("--strength", type=float, required=True, help="M or N")
        qp.add_argument("--eps0", type=float, required=True)
        qp.add_argument("--len", type=float, default=1.0)
        qp.add_argument("--k0", type=float, required=True)
        qp.add_argument("--kL", type=float, required=True)
        qp.add_argument("--eta", type=float, default=None)

    qc = qsub.add_parser("certify")
    common(qc)
    qc.add_argument("--c", type=float, required=True)
    qc.add_argument("--d", type=float, required=True)
    qc.set_defaults(func=cmd_ql_certify)

    qs = qsub.add_parser("simulate")
    common(qs)
    qs.add_argument("--a", type=float, required=True)
    qs.add_argument("--gamma", type=float, required=True)
    qs.add_argument("--delta-max", type=float, required=True)
    qs.add_argument("--tfinal", type=float, required=True)
    qs.add_argument("--cells", type=int, default=400)
    qs.add_argument("--cfl", type=float, default=0.9)
    qs.add_argument("--amplitude", type=float, default=1e-2)
    qs.add_argument("--out-dir", default=".")
    qs.set_defaults(func=cmd_ql_simulate)

    sw = sub.add_parser("sweep", help="parameter-region sweep from a config file")
    sw.add_argument("--config", required=True)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out", default=None)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # every HyperstabError is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
