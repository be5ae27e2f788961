"""Command line front end.

    singstar validate --config G.json
    singstar forward  --config G.json --grid -10:20:20 --s 1,2 --out M.json
    singstar internal --config G.json --grid -10:20:20 --j 2 --out m.json
    singstar eigs     --config G.json --s 1 --k 1 --rect -70:-0.5:-1:1
    singstar reduce   --config G.json --w 3 --grid -10:20:20 --out mw.json
    singstar loop     --config G.json --w 3 --grid -10:20:20
    singstar asym     --config G.json --ray 0.785398:10,20,40
    singstar fit      --config G.json --w 2 --degrees 0 --grid -10:20:12

Exit codes: 0 ok, 1 validation error, 2 numeric failure, 3 FAIL verdict.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .edge_basis import EdgeBasisOptions
from .errors import ConfigError, NearEigenvalue, NumericalError
from .graph import graph_from_dict
from .io import (
    SampledMatrices,
    ordered_map,
    parse_grid,
    parse_int_list,
    parse_ray,
    parse_rect,
    read_samples,
    write_csv,
    write_samples,
    write_table,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FAIL = 0, 1, 2, 3


class Verdict(Exception):
    """Raised to end a command with exit code 3."""


def _opts(args) -> EdgeBasisOptions:
    return EdgeBasisOptions(x0=args.x0, rel_tol=args.tol)


def _graph(args, w=None):
    if not args.config:
        raise ConfigError("--config is required")
    with open(args.config) as fh:
        cfg = json.load(fh)
    if w is not None:
        cfg["omitted_edge"] = w
    return graph_from_dict(cfg)


def _grid(args):
    return parse_grid(args.grid, args.im)


def _out_path(base, suffix):
    root, ext = os.path.splitext(base)
    return f"{root}.{suffix}{ext or '.json'}"


def _emit(args, obj: SampledMatrices, path):
    if path is None:
        return
    if path.endswith(".csv"):
        write_csv(path, obj)
    else:
        write_samples(path, obj, timestamp=not args.no_timestamp)
    print(f"wrote {path}")


def _sample(kind, index, graph, grid, fn, jobs):
    obj = SampledMatrices(kind, index, graph.digest(), grid.to_dict())

    def one(lam):
        try:
            return fn(lam), None
        except (NearEigenvalue, NumericalError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    for lam, (m, why) in zip(grid.points(), ordered_map(one, grid.points(), jobs)):
        obj.add(lam, m, why)
    return obj


# ---------------------------------------------------------------------------
# commands

def cmd_validate(args):
    graph, perm = _graph(args)
    print(f"graph {graph.digest()}: orders {list(graph.orders)}")
    for j in range(1, graph.p + 1):
        b = graph.basis(j)
        xi = ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in b.xi)
        print(f"  edge {j}: n={b.n} l={graph.edge(j).length:g} xi=[{xi}] theta={b.theta:.6g}")
    if graph.groups.w is not None:
        print(f"  omitted edge w={graph.groups.w} (original {perm[graph.groups.w - 1]}); "
              f"admissible s: {graph.groups.admissible_s()}")
    print("OK")


def cmd_forward(args):
    from .weyl import weyl_matrix_Ms

    graph, _ = _graph(args)
    grid, opts = _grid(args), _opts(args)
    s_list = parse_int_list(args.s) if args.s is not None else [1]
    for s in s_list:
        if not 1 <= s <= graph.p:
            raise ConfigError(f"s={s} out of range")
        obj = _sample("M", s, graph, grid, lambda lam: weyl_matrix_Ms(graph, s, lam, opts).M, args.jobs)
        print(f"s={s}: {len(obj.lams)} points, {len(obj.lams) - obj.skipped.count(None)} skipped")
        _emit(args, obj, _out_path(args.out, f"s{s}") if args.out and len(s_list) > 1 else args.out)


def cmd_internal(args):
    from .weyl import weyl_matrix_mj

    graph, _ = _graph(args)
    grid, opts = _grid(args), _opts(args)
    j = args.j
    if not 1 <= j <= graph.p:
        raise ConfigError(f"j={j} out of range")
    obj = _sample("m", j, graph, grid, lambda lam: weyl_matrix_mj(graph, j, lam, opts).m, args.jobs)
    print(f"j={j}: {len(obj.lams)} points, {len(obj.lams) - obj.skipped.count(None)} skipped")
    _emit(args, obj, args.out)


def cmd_eigs(args):
    from .weyl import locate_eigenvalues

    graph, _ = _graph(args)
    s = (parse_int_list(args.s) or [1])[0]
    rect = parse_rect(args.rect)
    res = locate_eigenvalues(graph, s, args.k, rect, args.max_count, _opts(args))
    rows = [(i + 1, z.real, z.imag, m) for i, (z, m) in enumerate(zip(res.eigenvalues, res.multiplicities))]
    print(f"# s={s} k={args.k} rect={rect} winding={res.winding} "
          f"returned={sum(res.multiplicities)}")
    print("# characteristic function: determinant of the assembled psi system (zero set only)")
    print("index,re,im,multiplicity")
    for r in rows:
        print(f"{r[0]},{r[1]!r},{r[2]!r},{r[3]}")
    if args.out:
        write_table(args.out, ["index", "re", "im", "multiplicity"], rows)
        print(f"wrote {args.out}")


def _weyl_inputs(args, graph, s_list, opts):
    from .reduction import forward_weyl

    if args.weyl:
        paths = args.weyl.split(",")
        out = {}
        for path in paths:
            obj = read_samples(path)
            if obj.kind != "M":
                raise ConfigError(f"{path} does not hold boundary matrices")
            out[obj.index] = obj.evaluator()
        return out
    return {s: forward_weyl(graph, s, opts) for s in s_list}


def cmd_reduce(args):
    from .reduction import blank_edge, reduce

    graph, _ = _graph(args, args.w)
    if graph.groups.w is None:
        raise ConfigError("--w (or omitted_edge in the config) is required")
    opts, grid = _opts(args), _grid(args)
    s_list = parse_int_list(args.s) or graph.groups.admissible_s()
    weyl = _weyl_inputs(args, graph, s_list, opts)
    blind = blank_edge(graph, graph.groups.w)
    res = reduce(blind, weyl, grid.points(), opts, args.jobs)
    for s in res.s_values:
        n_skip = len(res.skipped[s])
        print(f"s={s}: {len(res.lams) - n_skip} reconstructed, {n_skip} skipped")
        for i, why in sorted(res.skipped[s].items()):
            print(f"  skipped lambda[{i}]={res.lams[i]:.6g}: {why}")
    print(f"s-consistency (max relative spread): {res.consistency:.3e}")
    s0 = res.s_values[0]
    obj = SampledMatrices("m", graph.groups.w, graph.digest(), grid.to_dict())
    for i, lam in enumerate(res.lams):
        obj.add(lam, res.m[s0][i], res.skipped[s0].get(i))
    _emit(args, obj, args.out)


def _corrupt(weyl: dict, spec: str):
    """K,MU,FACTOR multiplies entry (K, MU) of every M_s sample by FACTOR."""
    k, mu, fac = spec.split(",")
    k, mu, fac = int(k), int(mu), complex(fac)

    def wrap(f):
        def g(lam):
            m = np.array(f(lam))
            m[k - 1, mu - 1] *= fac
            return m
        return g

    return {s: wrap(f) for s, f in weyl.items()}


def cmd_loop(args):
    from .reduction import closed_loop

    graph, _ = _graph(args, args.w)
    if graph.groups.w is None:
        raise ConfigError("--w (or omitted_edge in the config) is required")
    opts, grid = _opts(args), _grid(args)
    s_list = parse_int_list(args.s) or graph.groups.admissible_s()
    weyl = _weyl_inputs(args, graph, s_list, opts)
    if args.corrupt:
        weyl = _corrupt(weyl, args.corrupt)
    rep = closed_loop(graph, grid.points(), s_list, args.loop_tol, weyl, opts, args.jobs)
    for i, d in enumerate(rep.per_lam):
        print(f"lambda[{i}]: " + ("skipped" if d is None else f"{d:.3e}"))
    for k, d in sorted(rep.per_k.items()):
        print(f"k={k}: max jet deviation {d:.3e}")
    print(f"s-consistency: {rep.consistency:.3e}")
    verdict = "PASS" if rep.passed else "FAIL"
    extra = f" (worst k={rep.worst_k})" if rep.worst_k is not None else ""
    print(f"{verdict} max relative deviation {rep.max_dev:.3e} tol {rep.tol:g}{extra}")
    if not rep.passed:
        raise Verdict()


def cmd_asym(args):
    from .weyl import asymptotic_deviation

    graph, _ = _graph(args)
    ray = parse_ray(args.ray)
    s = (parse_int_list(args.s) or [1])[0]
    x = args.x if args.x is not None else 0.2 * graph.edge(s).length
    rows = []
    for rho in ray.points():
        d = asymptotic_deviation(graph, s, args.k, args.nu, x, rho, _opts(args))
        rows.append((float(abs(rho)), d, float(d * abs(rho))))
    print(f"# s={s} k={args.k} nu={args.nu} x={x:g} arg={ray.arg:g}")
    print("abs_rho,deviation,deviation_times_abs_rho")
    for r in rows:
        print(f"{r[0]!r},{r[1]!r},{r[2]!r}")
    if args.out:
        write_table(args.out, ["abs_rho", "deviation", "deviation_times_abs_rho"], rows)
        print(f"wrote {args.out}")


def cmd_fit(args):
    from .fit import FitOptions, FitProblem, fit
    from .reduction import blank_edge, reduce

    graph, _ = _graph(args, args.w)
    w = graph.groups.w
    if w is None:
        raise ConfigError("--w (or omitted_edge in the config) is required")
    opts = _opts(args)
    if args.samples:
        obj = read_samples(args.samples)
        if obj.kind != "m":
            raise ConfigError(f"{args.samples} does not hold internal matrices")
        lams, targets = obj.good()
    else:
        grid = _grid(args)
        s_list = parse_int_list(args.s) or graph.groups.admissible_s()[:1]
        weyl = _weyl_inputs(args, graph, s_list, opts)
        res = reduce(blank_edge(graph, w), weyl, grid.points(), opts, args.jobs)
        s0 = res.s_values[0]
        pairs = [(z, m) for z, m in zip(res.lams, res.m[s0]) if m is not None]
        lams, targets = [z for z, _ in pairs], [m for _, m in pairs]
    degrees = tuple(parse_int_list(args.degrees))
    problem = FitProblem(graph.edge(w), degrees, lams, targets, opts=opts,
                         fit=FitOptions(tol_abs=args.fit_tol, max_iter=args.max_iter))
    theta0 = parse_floats(args.theta0) if args.theta0 else [0.0] * problem.n_params
    try:
        rep = fit(problem, theta0)
    except NumericalError as exc:
        rep = getattr(exc, "report", None)
        if rep is not None:
            sys.stdout.write(rep.text())
        raise
    sys.stdout.write(rep.text())
    if args.truth:
        err = float(np.linalg.norm(rep.theta - np.array(parse_floats(args.truth))))
        print(f"error vs truth: {err:.3e}")


def parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma separated numbers, got {text!r}") from None


COMMANDS = {
    "validate": cmd_validate,
    "forward": cmd_forward,
    "internal": cmd_internal,
    "eigs": cmd_eigs,
    "reduce": cmd_reduce,
    "loop": cmd_loop,
    "asym": cmd_asym,
    "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="graph config (JSON)")
    common.add_argument("--grid", default="-10:20:20", help="lambda grid a:b:n along Re")
    common.add_argument("--im", type=float, default=1.0, help="Im lambda of the grid")
    common.add_argument("--s", help="boundary vertex list, e.g. 1,2")
    common.add_argument("--w", type=int, help="omitted edge")
    common.add_argument("--tol", type=float, default=1e-12, help="integrator relative tolerance")
    common.add_argument("--x0", type=float, default=None, help="series/ODE cut point")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", help="output path (.csv for a CSV export)")
    common.add_argument("--no-timestamp", action="store_true")
    common.add_argument("--weyl", help="sampled M_s file(s), comma separated")

    p = argparse.ArgumentParser(prog="singstar", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common])
    sub.add_parser("forward", parents=[common])
    sp = sub.add_parser("internal", parents=[common])
    sp.add_argument("--j", type=int, default=2)
    sp = sub.add_parser("eigs", parents=[common])
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--rect", required=True)
    sp.add_argument("--max-count", type=int, default=50)
    sub.add_parser("reduce", parents=[common])
    sp = sub.add_parser("loop", parents=[common])
    sp.add_argument("--loop-tol", type=float, default=1e-6)
    sp.add_argument("--corrupt", help="K,MU,FACTOR: scale one M_s entry")
    sp = sub.add_parser("asym", parents=[common])
    sp.add_argument("--ray", required=True, help="ARG:R1,R2,...")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--nu", type=int, default=0)
    sp.add_argument("--x", type=float, default=None)
    sp = sub.add_parser("fit", parents=[common])
    sp.add_argument("--degrees", default="0", help="max degree per q_mu, -1 to skip")
    sp.add_argument("--theta0")
    sp.add_argument("--truth")
    sp.add_argument("--samples", help="sampled m_w file to fit instead of reducing")
    sp.add_argument("--fit-tol", type=float, default=1e-12)
    sp.add_argument("--max-iter", type=int, default=50)
    return p


VALUE_FLAGS = ("--grid", "--rect", "--ray", "--theta0", "--truth", "--im")


def _glue(argv):
    """Attach values that start with '-' (e.g. --grid -10:20:5) to their flag."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_glue(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        COMMANDS[args.command](args)
    except Verdict:
        return EXIT_FAIL
    except (ConfigError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, NearEigenvalue) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
