"""Command-line entry point.

Commands: ``phi {eval,inverse,norm,extend}``, ``conditions check``,
``domain analyze``, ``extend sobolev``, ``reproduce example``, and
``pipeline``.  All reports are JSON with a ``schema_version`` field; with
a fixed ``--seed`` reruns produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import (ConstantBundle, check_a0, check_a1, check_a1_omega,
                         check_a2, check_ainc_adec)
from .errors import OrlextError
from .extension import (PreconditionFailure, extend_phi, extension_record,
                        verify_extension)
from .geometry import (GRID_METRIC_SLACK, check_eps_delta, check_quasi_convex,
                       domain_radius)
from .grid import GridFunction, RasterDomain, coarsen_domain, dumbbell_domain
from .phi import (DumbbellPhi, eval_phi, left_inverse, load_phi, phi_from_dict,
                  sobolev_norm)
from .report import SCHEMA_VERSION
from .sampling import default_rng, sample_inside_points, sample_pairs
from .sobolev import (SobolevExtensionOperator, Weight, weighted_norm,
                      whitney_decompose)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
        print(f"report written to {out}")
    else:
        print(text)


def _parse_point(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(",", " ").split()], dtype=float)


def _load_phi_and_domain(args):
    domain = RasterDomain.from_file(args.domain) if getattr(args, "domain", None) else None
    phi = load_phi(args.phi, domain=domain)
    if domain is None and isinstance(phi.domain, RasterDomain):
        domain = phi.domain
    return phi, domain


def _bundle_from_args(args) -> ConstantBundle:
    return ConstantBundle(beta0=args.beta0, beta1=args.beta1, L=args.growth_l,
                          Lq=args.lq, q=args.q, K=args.k_quasi, delta=args.delta)


def _add_bundle_flags(p) -> None:
    p.add_argument("--beta0", type=float, default=0.9, help="(A0) constant")
    p.add_argument("--beta1", type=float, default=0.9, help="(A1) constant")
    p.add_argument("--growth-l", type=float, default=1.25,
                   help="inverse-side growth constant L")
    p.add_argument("--lq", type=float, default=1.0, help="(aDec)_q constant")
    p.add_argument("--q", type=float, default=2.0, help="(aDec) order q")
    p.add_argument("--k-quasi", type=float, default=2.0, help="quasi-convexity K")
    p.add_argument("--delta", type=float, default=0.5, help="quasi-convexity delta")


# ---------------------------------------------------------------------------
# subcommands

def cmd_phi_eval(args) -> int:
    phi, _ = _load_phi_and_domain(args)
    print(eval_phi(phi, _parse_point(args.x), args.t))
    return 0


def cmd_phi_inverse(args) -> int:
    phi, _ = _load_phi_and_domain(args)
    print(left_inverse(phi, _parse_point(args.x), args.tau, tol=args.tol))
    return 0


def cmd_phi_norm(args) -> int:
    phi, domain = _load_phi_and_domain(args)
    u = GridFunction.from_csv(args.u, domain=domain)
    print(sobolev_norm(phi, u, args.k, tol=args.tol))
    return 0


def cmd_phi_extend(args) -> int:
    phi, domain = _load_phi_and_domain(args)
    bundle = _bundle_from_args(args)
    rng = default_rng(args.seed)
    try:
        ext = extend_phi(phi, domain, bundle, max_anchors=args.max_anchors,
                         rng=rng, seed_note=args.seed)
    except PreconditionFailure as exc:
        _emit({"schema_version": SCHEMA_VERSION, "refused": True,
               "failing_report": exc.report.to_dict()}, args.out)
        return 1
    reports = verify_extension(ext, bundle, rng=rng)
    record = extension_record(ext, reports)
    record["anchor_seed"] = args.seed
    _emit(record, args.out)
    return 0 if all(r.verdict for r in reports) else 1


def cmd_conditions_check(args) -> int:
    phi, domain = _load_phi_and_domain(args)
    rng = default_rng(args.seed)
    cond = args.condition
    if cond in ("a0", "ainc", "adec") or (cond in ("a1omega", "a2") and domain is not None):
        if domain is None:
            raise OrlextError("this condition needs --domain to sample points")
        points = sample_inside_points(domain, args.samples, rng)
    if cond == "a0":
        report = check_a0(phi, points, args.beta)
    elif cond == "a1":
        if domain is None:
            raise OrlextError("a1 needs --domain to sample balls")
        report = check_a1(phi, domain, args.beta, n_balls=args.samples, rng=rng)
    elif cond == "a1omega":
        pairs = sample_pairs(domain, args.samples, rng)
        report = check_a1_omega(phi, pairs, args.beta, t_max=args.t_max)
    elif cond == "a2":
        pairs = sample_pairs(domain, args.samples, rng)
        report = check_a2(phi, args.s, args.h_const, args.beta, pairs)
    elif cond in ("ainc", "adec"):
        report = check_ainc_adec(phi, args.exponent, cond[1:], args.big_l, points)
    else:  # pragma: no cover
        raise OrlextError(f"unknown condition {cond}")
    report.parameters["seed"] = args.seed
    _emit(report.to_dict(), args.out)
    return 0 if report.verdict else 1


def cmd_domain_analyze(args) -> int:
    domain = RasterDomain.from_file(args.domain)
    rng = default_rng(args.seed)
    out = {
        "schema_version": SCHEMA_VERSION,
        "h": domain.h,
        "cells_inside": domain.n_inside,
        "components": domain.n_components,
        "radius": domain_radius(domain),
        "diameter": domain.diameter(),
        "seed": args.seed,
    }
    if args.k is not None:
        rep = check_quasi_convex(domain, args.k, args.delta,
                                 n_pairs=args.samples, rng=rng)
        out["quasi_convex"] = rep.to_dict()
    if args.eps is not None:
        rep = check_eps_delta(domain, args.eps, args.delta,
                              n_pairs=max(args.samples // 4, 16), rng=rng)
        out["eps_delta"] = rep.to_dict()
    _emit(out, args.out)
    ok = all(out[key]["verdict"] for key in ("quasi_convex", "eps_delta") if key in out)
    return 0 if ok else 1


def cmd_extend_sobolev(args) -> int:
    domain = RasterDomain.from_file(args.domain)
    phi_spec = json.loads(Path(args.phi).read_text())
    u_fine = GridFunction.from_csv(args.u, domain=domain)
    weight = None
    if args.weight:
        wf = GridFunction.from_csv(args.weight)
        weight = Weight(wf.domain, np.nan_to_num(wf.values))
    bundle = _bundle_from_args(args)
    rng = default_rng(args.seed)

    levels = []
    dom_lvl, u_lvl = domain, u_fine
    for _ in range(max(args.refinements, 1)):
        levels.append((dom_lvl, u_lvl))
        ny = (dom_lvl.ny // 2) * 2
        nx = (dom_lvl.nx // 2) * 2
        coarse = coarsen_domain(dom_lvl)
        vals = np.nan_to_num(u_lvl.values)[:ny, :nx]
        blocks = vals.reshape(ny // 2, 2, nx // 2, 2).mean(axis=(1, 3))
        dom_lvl, u_lvl = coarse, GridFunction(coarse, blocks)
    levels.reverse()  # coarse to fine

    rows = []
    for dom_lvl, u_lvl in levels:
        phi = phi_from_dict(phi_spec, domain=dom_lvl)
        ext = extend_phi(phi, dom_lvl, bundle, rng=rng, run_checks=False,
                         max_anchors=args.max_anchors)
        dec = whitney_decompose(dom_lvl)
        op = SobolevExtensionOperator(dec, phi, ext)
        res = op.extend(u_lvl)
        row = {"h": dom_lvl.h, "ratio": res.ratio, **res.metadata}
        if weight is not None:
            row["weighted_norm_domain"] = weighted_norm(u_lvl, Weight.constant(dom_lvl), 1)
        rows.append(row)
    growth = [rows[i + 1]["ratio"] / rows[i]["ratio"] if rows[i]["ratio"] > 0 else 1.0
              for i in range(len(rows) - 1)]
    passed = all(g <= 1.1 for g in growth)
    _emit({"schema_version": SCHEMA_VERSION, "levels": rows,
           "growth_factors": growth, "pass": passed, "seed": args.seed}, args.report)
    return 0 if passed else 1


def cmd_reproduce_example(args) -> int:
    """The two-strip counterexample: quasi-convex, satisfies (A1) at 1/2
    and (aDec)_1, but fails (A1)_O at every beta and fails (A0)."""
    rng = default_rng(args.seed)
    h = 0.05
    domain = dumbbell_domain(h)
    phi = DumbbellPhi()
    rows = {}

    rep_qc = check_quasi_convex(domain, math.sqrt(2) * 1.1, 1.0,
                                n_pairs=args.samples, rng=rng)
    rows["quasi_convex"] = rep_qc

    rep_a1 = check_a1(phi, domain, 0.5, n_balls=args.samples, rng=rng)
    rows["a1_at_half"] = rep_a1

    base_pairs = sample_pairs(domain, 128, rng)
    sweep_fail = True
    sweep = {}
    for k in range(1, 100):
        beta = k / 100.0
        y = 2.0 * beta ** -5
        pairs = np.concatenate([[[[-2.0, y], [2.0, y]]], base_pairs])
        rep = check_a1_omega(phi, pairs, beta, t_max=100.0, n_t=16)
        sweep[f"{beta:.2f}"] = rep.verdict
        sweep_fail &= not rep.verdict
    rows["a1_omega_sweep_all_fail"] = sweep_fail

    pts = sample_inside_points(domain, 512, rng)
    high = np.column_stack([np.full(64, 2.0), np.linspace(2.0, 11.5, 64)])
    rep_a0 = check_a0(phi, np.concatenate([pts, high]), 0.9)
    rows["a0_at_0.9"] = rep_a0

    rep_dec = check_ainc_adec(phi, 1.0, "dec", 1.0, pts[:128])
    rows["adec_1"] = rep_dec

    expected = {"quasi_convex": True, "a1_at_half": True,
                "a1_omega_sweep_all_fail": True, "a0_at_0.9": False, "adec_1": True}
    print(f"{'check':28s} {'verdict':8s} expected")
    ok = True
    verdicts = {}
    for name, expect in expected.items():
        got = rows[name] if isinstance(rows[name], bool) else rows[name].verdict
        verdicts[name] = got
        ok &= got == expect
        print(f"{name:28s} {str(got):8s} {expect}")
    out = {
        "schema_version": SCHEMA_VERSION,
        "h": h,
        "seed": args.seed,
        "verdicts": verdicts,
        "expected": expected,
        "a1_omega_sweep": sweep,
        "reports": {k: v.to_dict() for k, v in rows.items() if not isinstance(v, bool)},
        "match": ok,
    }
    _emit(out, args.out)
    return 0 if ok else 1


def cmd_pipeline(args) -> int:
    phi, domain = _load_phi_and_domain(args)
    bundle = _bundle_from_args(args)
    rng = default_rng(args.seed)
    out = {"schema_version": SCHEMA_VERSION, "seed": args.seed, "stages": {}}
    try:
        ext = extend_phi(phi, domain, bundle, rng=rng,
                         max_anchors=args.max_anchors, seed_note=args.seed)
    except PreconditionFailure as exc:
        out["stages"]["gates"] = {"pass": False,
                                  "failing_report": exc.report.to_dict()}
        _emit(out, args.out)
        return 1
    out["stages"]["gates"] = {"pass": True}

    reports = verify_extension(ext, bundle, rng=rng)
    out["stages"]["verification"] = {
        "pass": all(r.verdict for r in reports),
        "reports": [r.to_dict() for r in reports],
    }

    from .sobolev import boundedness_experiment, default_corpus
    h = domain.h
    doms = {h: domain, 2 * h: coarsen_domain(domain),
            4 * h: coarsen_domain(coarsen_domain(domain))}
    spec = json.loads(Path(args.phi).read_text())
    exp = boundedness_experiment(
        default_corpus()[:args.corpus],
        lambda hh: doms[hh],
        lambda d: phi_from_dict(spec, domain=d),
        bundle, [4 * h, 2 * h, h], rng=rng, max_anchors=args.max_anchors)
    out["stages"]["boundedness"] = exp

    ok = (out["stages"]["verification"]["pass"] and exp["pass"])
    out["pass"] = ok
    _emit(out, args.out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed for sampling")
    common.add_argument("--tol", type=float, default=1e-8, help="numerical tolerance")
    common.add_argument("--out", default=None, help="write the JSON report here")
    common.add_argument("--threads", type=int, default=1,
                        help="reserved; computation is vectorized in-process")

    ap = argparse.ArgumentParser(prog="orlext",
                                 description="generalized Orlicz-Sobolev extension toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_phi = sub.add_parser("phi", help="growth-function calculus")
    phi_sub = p_phi.add_subparsers(dest="phi_command", required=True)

    pe = phi_sub.add_parser("eval", parents=[common], help="evaluate phi(x, t)")
    pe.add_argument("--phi", required=True)
    pe.add_argument("--domain", default=None)
    pe.add_argument("--x", required=True, help="point, e.g. '0.5,0.5'")
    pe.add_argument("--t", type=float, required=True)
    pe.set_defaults(func=cmd_phi_eval)

    pi = phi_sub.add_parser("inverse", parents=[common], help="left-inverse at a level")
    pi.add_argument("--phi", required=True)
    pi.add_argument("--domain", default=None)
    pi.add_argument("--x", required=True)
    pi.add_argument("--tau", type=float, required=True)
    pi.set_defaults(func=cmd_phi_inverse)

    pn = phi_sub.add_parser("norm", parents=[common], help="Orlicz-Sobolev norm of a field")
    pn.add_argument("--phi", required=True)
    pn.add_argument("--domain", required=True)
    pn.add_argument("--u", required=True, help="field CSV: header 'nx ny h [ox oy]'")
    pn.add_argument("--k", type=int, default=1)
    pn.set_defaults(func=cmd_phi_norm)

    px = phi_sub.add_parser("extend", parents=[common],
                            help="extend phi beyond its domain and verify")
    px.add_argument("--phi", required=True)
    px.add_argument("--domain", required=True)
    px.add_argument("--max-anchors", type=int, default=1024)
    _add_bundle_flags(px)
    px.set_defaults(func=cmd_phi_extend)

    p_cond = sub.add_parser("conditions", help="structural condition audits")
    cond_sub = p_cond.add_subparsers(dest="conditions_command", required=True)
    pc = cond_sub.add_parser("check", parents=[common])
    pc.add_argument("--condition", required=True,
                    choices=["a0", "a1", "a1omega", "a2", "ainc", "adec"])
    pc.add_argument("--phi", required=True)
    pc.add_argument("--domain", default=None)
    pc.add_argument("--beta", type=float, default=0.5)
    pc.add_argument("--samples", type=int, default=256)
    pc.add_argument("--t-max", type=float, default=1e6)
    pc.add_argument("--s", type=float, default=1.0, help="(A2) horizon")
    pc.add_argument("--h-const", type=float, default=0.0, help="(A2) perturbation")
    pc.add_argument("--exponent", type=float, default=1.0, help="aInc/aDec order")
    pc.add_argument("--big-l", type=float, default=1.0, help="aInc/aDec constant")
    pc.set_defaults(func=cmd_conditions_check)

    p_dom = sub.add_parser("domain", help="raster domain geometry")
    dom_sub = p_dom.add_subparsers(dest="domain_command", required=True)
    pd = dom_sub.add_parser("analyze", parents=[common])
    pd.add_argument("--domain", required=True)
    pd.add_argument("--eps", type=float, default=None)
    pd.add_argument("--delta", type=float, default=0.5)
    pd.add_argument("--k", type=float, default=None)
    pd.add_argument("--samples", type=int, default=256)
    pd.set_defaults(func=cmd_domain_analyze)

    p_ext = sub.add_parser("extend", help="Sobolev extension experiments")
    ext_sub = p_ext.add_subparsers(dest="extend_command", required=True)
    ps = ext_sub.add_parser("sobolev", parents=[common])
    ps.add_argument("--u", required=True)
    ps.add_argument("--domain", required=True)
    ps.add_argument("--phi", required=True)
    ps.add_argument("--report", required=True)
    ps.add_argument("--weight", default=None)
    ps.add_argument("--refinements", type=int, default=3)
    ps.add_argument("--max-anchors", type=int, default=768)
    _add_bundle_flags(ps)
    ps.set_defaults(func=cmd_extend_sobolev)

    p_rep = sub.add_parser("reproduce", help="reproduce the built-in counterexample")
    rep_sub = p_rep.add_subparsers(dest="reproduce_command", required=True)
    pr = rep_sub.add_parser("example", parents=[common])
    pr.add_argument("--samples", type=int, default=256)
    pr.set_defaults(func=cmd_reproduce_example)

    pp = sub.add_parser("pipeline", parents=[common],
                        help="gates -> extension -> verification -> boundedness")
    pp.add_argument("--phi", required=True)
    pp.add_argument("--domain", required=True)
    pp.add_argument("--max-anchors", type=int, default=768)
    pp.add_argument("--corpus", type=int, default=6,
                    help="number of corpus functions in the boundedness stage")
    _add_bundle_flags(pp)
    pp.set_defaults(func=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OrlextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
