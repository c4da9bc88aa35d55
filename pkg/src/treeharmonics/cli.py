"""Command line front end.

Subcommands operate on instance files and print a structured JSON report
to stdout (``--report`` also writes it to a file).  Reports carry a
``verdict``, a ``constants`` block, and a ``witnesses`` block; every
seeded subcommand records the RNG algorithm and seed so reruns are
byte-identical.  ``--csv`` flattens the subcommand's main table (usually
per-vertex) into a delimited file, and ``--figures DIR`` renders
diagnostic plots next to it.

Exit codes: 0 success / verdict PASS, 1 verdict FAIL (the report names a
witness), 2 usage or parse errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .carleson import (
    PowerIterConfig,
    carleson_constant,
    opnorm_poisson,
    verify_equivalence,
)
from .errors import NoInternalVertices, TreeHarmonicsError, ValidationError
from .harmonic import is_harmonic, laplacian_apply, poisson_extend, recover_boundary
from .instances import (
    RNG_ALGORITHM,
    GenSpec,
    Instance,
    generate,
    load_instance,
    make_sigma,
    save_instance,
)
from .kernels import (
    Kernel,
    atom_pairings,
    audit_kernel,
    carleson_density,
    example_ck_bound,
    example_kernel_delta,
    theorem3_bound,
    verify_bmo_to_carleson,
    zero_rows,
)
from .measures import (
    VertexMeasure,
    boundary_doubling_ratio,
    check_flow,
    doubling_constants,
    induce_flow,
    subtree_sums,
)
from .norms import bmo_norm, lp_boundary, lp_tree, hardy_norm, weak_l1_tree

__all__ = ["main", "build_parser"]


# ---- small helpers ------------------------------------------------------


def _fmt_p(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


def _emit(args, report: dict, table=None) -> None:
    """Print the report; honor --report and --csv."""
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if getattr(args, "report", None):
        Path(args.report).write_text(text + "\n")
    if getattr(args, "csv", None) and table is not None:
        header, rows = table
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)


def _figdir(args) -> Path | None:
    d = getattr(args, "figures", None)
    return Path(d) if d else None


def _vertex_rows(t, columns: dict[str, np.ndarray]):
    """Base per-vertex table: vertex, level, parent, then named columns."""
    header = ["vertex", "level", "parent"] + list(columns)
    rows = []
    for v in range(t.n_vertices):
        row = [v, int(t.level[v]), "" if t.parent[v] < 0 else int(t.parent[v])]
        row.extend(col[v] for col in columns.values())
        rows.append(row)
    return header, rows


def _named_function(inst: Instance, name: str, domain: str) -> np.ndarray:
    fn = inst.functions.get(name)
    if fn is None:
        have = sorted(inst.functions) or ["none"]
        raise ValidationError(
            f"instance has no function named {name!r} (available: {', '.join(have)})"
        )
    if fn.domain != domain:
        raise ValidationError(f"function {name!r} lives on {fn.domain}, need {domain}")
    return fn.values


def _need_sigma(inst: Instance):
    if inst.sigma is None:
        raise ValidationError("instance has no sigma (vertex measure)")
    return inst.sigma


# ---- subcommand handlers ------------------------------------------------


def cmd_gen(args) -> int:
    spec = GenSpec(
        depth=args.depth,
        branching=(args.branching[0], args.branching[1]),
        nu_law=args.nu_law,
        nu_range=(args.nu_range[0], args.nu_range[1]),
        seed=args.seed,
    )
    inst = generate(spec)
    if args.sigma is not None:
        sseed = args.seed if args.sigma_seed is None else args.sigma_seed
        inst.sigma = make_sigma(inst.tree, inst.nu, args.sigma, sseed)
        inst.meta["sigma"] = {"law": args.sigma, "seed": sseed}
    save_instance(inst, args.output)
    t = inst.tree
    m = induce_flow(t, inst.nu)
    report = {
        "subcommand": "gen",
        "verdict": "OK",
        "constants": {
            "n_vertices": t.n_vertices,
            "n_leaves": t.n_leaves,
            "depth": t.depth,
            "nu_total": float(inst.nu.nu.sum()),
        },
        "witnesses": {"output": str(args.output)},
        "rng": {"algorithm": RNG_ALGORITHM, "seed": args.seed},
    }
    table = _vertex_rows(t, {"m": m.m})
    _emit(args, report, table)
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(t, m.m, fd, "flow", "m(x)")
    return 0


def cmd_check(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    m = induce_flow(t, inst.nu)
    fc = check_flow(t, m, tol=args.tol)
    constants = {
        "n_vertices": t.n_vertices,
        "n_leaves": t.n_leaves,
        "depth": t.depth,
        "flow_max_rel_err": fc.max_rel_err,
        "tol": args.tol,
        "sigma_present": inst.sigma is not None,
    }
    witnesses = {"flow_worst_vertex": fc.worst_vertex}
    doubling_ok = True
    try:
        c1, c2 = doubling_constants(t, m)
        ratio = boundary_doubling_ratio(t, inst.nu)
        constants.update(c1=c1, c2=c2, boundary_doubling_ratio=ratio)
        doubling_ok = ratio <= c1
        witnesses["doubling_ok"] = doubling_ok
    except NoInternalVertices:
        constants.update(c1=None, c2=None, boundary_doubling_ratio=None)
    ok = fc.ok and doubling_ok
    report = {
        "subcommand": "check",
        "verdict": "PASS" if ok else "FAIL",
        "constants": constants,
        "witnesses": witnesses,
    }
    cols = {"m": m.m}
    if inst.sigma is not None:
        cols["sigma"] = inst.sigma.sigma
    _emit(args, report, _vertex_rows(t, cols))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(t, m.m, fd, "flow", "m(x)")
    return 0 if ok else 1


def cmd_extend(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    g = _named_function(inst, args.function, "leaves")
    m = induce_flow(t, inst.nu)
    f = poisson_extend(t, inst.nu, g)
    hc = is_harmonic(t, m, f, tol=args.tol)
    recover_err = float(np.max(np.abs(recover_boundary(t, f) - g), initial=0.0))
    ok = hc.ok and recover_err == 0.0
    report = {
        "subcommand": "extend",
        "verdict": "PASS" if ok else "FAIL",
        "constants": {
            "function": args.function,
            "max_residual": hc.max_residual,
            "recover_max_err": recover_err,
            "tol": args.tol,
            "value_at_top": float(f[t.top]),
        },
        "witnesses": {"worst_vertex": hc.worst_vertex},
    }
    residual = laplacian_apply(t, m, f)
    _emit(args, report, _vertex_rows(t, {"value": f, "residual": residual}))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(t, f, fd, "extension", "(Pg)(x)")
    return 0 if ok else 1


def cmd_norms(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    g = _named_function(inst, args.function, "leaves")
    m = induce_flow(t, inst.nu)
    if inst.sigma is not None:
        sig, sigma_source = inst.sigma, "instance"
    else:
        sig, sigma_source = VertexMeasure(m.m), "induced-flow"
    f = poisson_extend(t, inst.nu, g)
    bn = bmo_norm(t, inst.nu, g)
    by_p = {}
    rows = []
    labels, values = [], []
    for p in args.p:
        key = _fmt_p(p)
        entry = {
            "lp_boundary": lp_boundary(g, inst.nu, p),
            "hardy": hardy_norm(t, m, f, p),
            "lp_tree": lp_tree(f, sig, p),
        }
        by_p[key] = entry
        for name, val in entry.items():
            rows.append([name, key, val])
            labels.append(f"{name} p={key}")
            values.append(val)
    weak = weak_l1_tree(f, sig)
    rows.append(["bmo", "", bn.value])
    rows.append(["weak_l1_tree", "1.0", weak])
    labels.append("bmo")
    values.append(bn.value)
    labels.append("weak L1")
    values.append(weak)
    report = {
        "subcommand": "norms",
        "verdict": "OK",
        "constants": {
            "function": args.function,
            "sigma_source": sigma_source,
            "bmo": bn.value,
            "weak_l1_tree": weak,
            "by_p": by_p,
        },
        "witnesses": {"bmo_vertex": bn.vertex},
    }
    _emit(args, report, (["norm", "p", "value"], rows))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.norms_bar(labels, values, fd)
    return 0


def cmd_carleson(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    sigma = _need_sigma(inst)
    rep = carleson_constant(t, inst.nu, sigma)
    report = {
        "subcommand": "carleson",
        "verdict": "OK",
        "constants": {"constant": rep.constant},
        "witnesses": {"extremal_vertex": rep.extremal_vertex},
    }
    _emit(args, report, _vertex_rows(t, {"ratio": rep.per_vertex_ratios}))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(
            t, rep.per_vertex_ratios, fd, "carleson_ratios",
            "sigma(T_x) / m(x)", hline=rep.constant, hline_label="constant",
        )
    return 0


def cmd_opnorm(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    sigma = _need_sigma(inst)
    cfg = PowerIterConfig(
        max_iters=args.iters, tol=args.tol, restarts=args.restarts, seed=args.seed
    )
    est = opnorm_poisson(t, inst.nu, sigma, args.p, cfg)
    report = {
        "subcommand": "opnorm",
        "verdict": "OK",
        "constants": {
            "p": _fmt_p(est.p),
            "lower": est.lower,
            "upper": est.upper,
            "iterations": est.iterations,
            "converged": est.converged,
        },
        "witnesses": {"witness_sup": float(np.max(est.witness, initial=0.0))},
        "rng": {"algorithm": est.rng_algorithm, "seed": args.seed},
    }
    history_table = (
        ["iteration", "quotient"],
        [[i + 1, q] for i, q in enumerate(est.history)],
    )
    _emit(args, report, history_table)
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.convergence_plot(est.history, fd)
    return 0


def cmd_theorem2(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    sigma = _need_sigma(inst)
    rep = verify_equivalence(
        t, inst.nu, sigma, p_list=tuple(args.p), trials=args.trials, seed=args.seed
    )
    per_p = {}
    for er in rep.per_exponent:
        per_p[_fmt_p(er.p)] = {
            "upper_bound": er.upper_bound,
            "opnorm_lower": er.opnorm.lower,
            "opnorm_converged": er.opnorm.converged,
            "measured_ratio": er.measured_ratio,
            "strong_ok": er.strong_ok,
            "sandwich_ok": er.sandwich_ok,
            "converse_ok": er.converse_ok,
            "converse_worst_vertex": er.converse_worst_vertex,
        }
    report = {
        "subcommand": "theorem2",
        "verdict": rep.verdict,
        "constants": {
            "carleson_constant": rep.carleson.constant,
            "weak11_max_ratio": rep.weak11.max_ratio,
            "trials": rep.trials,
            "by_p": per_p,
        },
        "witnesses": {
            "carleson_vertex": rep.carleson.extremal_vertex,
            "weak11_trial": rep.weak11.witness_trial,
            "weak11_lambda": rep.weak11.witness_lambda,
            "failures": rep.failures,
        },
        "rng": {"algorithm": rep.rng_algorithm, "seed": rep.seed},
    }
    _emit(args, report, _vertex_rows(t, {"ratio": rep.carleson.per_vertex_ratios}))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(
            t, rep.carleson.per_vertex_ratios, fd, "carleson_ratios",
            "sigma(T_x) / m(x)", hline=rep.carleson.constant,
            hline_label="constant",
        )
    return 0 if rep.passed else 1


def cmd_theorem3(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    if inst.kernel is None:
        raise ValidationError("instance has no kernel")
    k = inst.kernel
    if args.alpha is not None and args.alpha != k.alpha:
        k = Kernel(k.entries, args.alpha)
    b = _named_function(inst, args.function, "leaves")
    m = induce_flow(t, inst.nu)
    audit = audit_kernel(t, inst.nu, m, k)
    dens = carleson_density(t, inst.nu, m, k, b)
    ratios = subtree_sums(t, dens.sigma) / m.m
    audit_block = {
        "cancellation_ok": audit.cancellation_ok,
        "cancellation_max": audit.cancellation_max,
        "a3_ok": audit.a3_ok,
        "a3_worst_vertex": audit.a3_worst_vertex,
        "a3_worst_leaf": audit.a3_worst_leaf,
        "a3_worst_ratio": audit.a3_worst_ratio,
        "zero_rows": zero_rows(k),
    }
    if not audit.ok:
        report = {
            "subcommand": "theorem3",
            "verdict": "FAIL",
            "constants": {"alpha": k.alpha, "ck": audit.ck},
            "witnesses": {"audit": audit_block, "reason": "kernel audit failed"},
        }
        _emit(args, report, _vertex_rows(t, {"ratio": ratios}))
        return 1
    verdict = verify_bmo_to_carleson(t, inst.nu, m, k, b)
    report = {
        "subcommand": "theorem3",
        "verdict": "PASS" if verdict.ok else "FAIL",
        "constants": {
            "alpha": k.alpha,
            "bmo": verdict.bmo,
            "ck": audit.ck,
            "c1": verdict.c1,
            "c2": verdict.c2,
            "bound": verdict.bound,
            "max_ratio": verdict.max_ratio,
        },
        "witnesses": {"witness_vertex": verdict.witness_vertex, "audit": audit_block},
    }
    _emit(args, report, _vertex_rows(t, {"ratio": ratios}))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(
            t, ratios, fd, "theorem3_ratios", "density ratio",
            hline=verdict.bound, hline_label="bound",
        )
        figures.kernel_heatmap(k.entries, fd)
    return 0 if verdict.ok else 1


def cmd_atoms(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    b = _named_function(inst, args.function, "leaves")
    m = induce_flow(t, inst.nu)
    bn = bmo_norm(t, inst.nu, b)
    pair, osc = atom_pairings(t, inst.nu, m, b)
    reconstructed = 2.0 * float(np.max(np.abs(pair)))
    gaps = np.abs(2.0 * m.m * np.abs(pair) - osc)
    bscale = float(np.max(np.abs(b), initial=0.0))
    allowed = 1e-12 * np.maximum(1.0, m.m * bscale)
    identity_ok = bool(np.all(gaps <= allowed))
    norm_gap = abs(bn.value - reconstructed)
    norm_ok = norm_gap <= 1e-12 * max(1.0, bn.value)
    ok = identity_ok and norm_ok
    worst = int(np.argmax(gaps - allowed))
    report = {
        "subcommand": "atoms",
        "verdict": "PASS" if ok else "FAIL",
        "constants": {
            "function": args.function,
            "bmo": bn.value,
            "bmo_from_atoms": reconstructed,
            "norm_gap": norm_gap,
            "max_identity_gap": float(np.max(gaps)),
        },
        "witnesses": {
            "bmo_vertex": bn.vertex,
            "worst_identity_vertex": worst,
            "identity_ok": identity_ok,
            "norm_ok": norm_ok,
        },
    }
    _emit(args, report, _vertex_rows(t, {"pairing": pair, "oscillation": osc,
                                         "gap": gaps}))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.vertex_scatter(
            t, 2.0 * np.abs(pair), fd, "atom_pairings", "2 |<a_y, b>|",
            hline=bn.value, hline_label="bmo norm",
        )
    return 0 if ok else 1


def cmd_kernelgen(args) -> int:
    inst = load_instance(args.instance)
    t = inst.tree
    m = induce_flow(t, inst.nu)
    k = example_kernel_delta(t, inst.nu, m, args.alpha, args.delta, seed=args.seed)
    audit = audit_kernel(t, inst.nu, m, k)
    _, c2 = doubling_constants(t, m)
    ck_bound = example_ck_bound(c2, args.alpha, args.delta)
    ok = audit.ok and audit.ck <= ck_bound
    inst.kernel = k
    inst.meta["kernel"] = {
        "family": "ring-decay",
        "alpha": args.alpha,
        "delta": args.delta,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    }
    save_instance(inst, args.output)
    row_sup = np.max(np.abs(k.entries), axis=1)
    row_cancel = np.abs(k.entries @ inst.nu.nu)
    report = {
        "subcommand": "kernelgen",
        "verdict": "PASS" if ok else "FAIL",
        "constants": {
            "alpha": args.alpha,
            "delta": args.delta,
            "ck": audit.ck,
            "ck_bound": ck_bound,
            "cancellation_max": audit.cancellation_max,
            "n_zero_rows": len(zero_rows(k)),
        },
        "witnesses": {
            "output": str(args.output),
            "zero_rows": zero_rows(k),
            "a3_worst_vertex": audit.a3_worst_vertex,
        },
        "rng": {"algorithm": RNG_ALGORITHM, "seed": args.seed},
    }
    _emit(args, report, _vertex_rows(t, {"row_sup": row_sup,
                                         "row_cancellation": row_cancel}))
    fd = _figdir(args)
    if fd is not None:
        from . import figures

        figures.kernel_heatmap(k.entries, fd)
    return 0 if ok else 1


# ---- parser -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeharmonics",
        description="Harmonic analysis and Carleson verification on finite trees.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    out_opts = argparse.ArgumentParser(add_help=False)
    out_opts.add_argument("--report", metavar="PATH",
                          help="also write the JSON report to this file")
    out_opts.add_argument("--csv", metavar="PATH",
                          help="write the per-vertex table as CSV")
    out_opts.add_argument("--figures", metavar="DIR",
                          help="render diagnostic figures into this directory")

    inst_arg = argparse.ArgumentParser(add_help=False)
    inst_arg.add_argument("instance", help="instance file (JSON)")

    p = sub.add_parser("gen", parents=[out_opts],
                       help="generate a seeded random instance")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--branching", type=int, nargs=2, default=[2, 2],
                   metavar=("LO", "HI"))
    p.add_argument("--nu-law", choices=["uniform", "loguniform"],
                   default="uniform")
    p.add_argument("--nu-range", type=float, nargs=2, default=[0.1, 10.0],
                   metavar=("A", "B"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", choices=["flow", "random", "spike"],
                   help="also attach a vertex measure drawn by this law")
    p.add_argument("--sigma-seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True, metavar="PATH")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", parents=[inst_arg, out_opts],
                       help="structure, flow conservation, and doubling")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("extend", parents=[inst_arg, out_opts],
                       help="Poisson extension of a named boundary function")
    p.add_argument("--function", default="g", metavar="NAME")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("norms", parents=[inst_arg, out_opts],
                       help="boundary, Hardy, tree, weak-L1, and BMO norms")
    p.add_argument("--function", default="g", metavar="NAME")
    p.add_argument("--p", type=float, nargs="+", default=[1.0, 2.0, math.inf])
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("carleson", parents=[inst_arg, out_opts],
                       help="Carleson constant and per-vertex ratios")
    p.set_defaults(func=cmd_carleson)

    p = sub.add_parser("opnorm", parents=[inst_arg, out_opts],
                       help="Poisson operator norm estimate by power iteration")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_opnorm)

    p = sub.add_parser("theorem2", parents=[inst_arg, out_opts],
                       help="full Carleson equivalence verdict")
    p.add_argument("--p", type=float, nargs="+", default=[2.0])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_theorem2)

    p = sub.add_parser("theorem3", parents=[inst_arg, out_opts],
                       help="kernel audit and BMO-to-Carleson bound verdict")
    p.add_argument("--alpha", type=float, default=None,
                   help="override the kernel's decay exponent")
    p.add_argument("--function", default="b", metavar="NAME")
    p.set_defaults(func=cmd_theorem3)

    p = sub.add_parser("atoms", parents=[inst_arg, out_opts],
                       help="BMO reconstruction from atom pairings")
    p.add_argument("--function", default="b", metavar="NAME")
    p.set_defaults(func=cmd_atoms)

    p = sub.add_parser("kernelgen", parents=[inst_arg, out_opts],
                       help="emit a decaying example kernel into the instance")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="randomize the cancelling ring pair per row")
    p.add_argument("-o", "--output", required=True, metavar="PATH")
    p.set_defaults(func=cmd_kernelgen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage errors
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TreeHarmonicsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
