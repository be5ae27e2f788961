"""Forward M_s -> reduction -> compare with forward m_w on a config graph.

    python scripts/closed_loop.py configs/star_322.json --count 20
"""
import argparse

from singstar.graph import load_graph
from singstar.io import GridSpec
from singstar.reduction import closed_loop


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("config")
    ap.add_argument("--w", type=int)
    ap.add_argument("--re0", type=float, default=-10.0)
    ap.add_argument("--re1", type=float, default=20.0)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--im", type=float, default=1.0)
    args = ap.parse_args()

    graph, _ = load_graph(args.config)
    if args.w is not None:
        graph = graph.with_omitted(args.w)
    lams = GridSpec(args.re0, args.re1, args.count, args.im).points()
    rep = closed_loop(graph, lams)
    print(f"orders {list(graph.orders)}, w={graph.groups.w}, s={graph.groups.admissible_s()}")
    print("re_lambda,im_lambda,relative_deviation")
    for lam, d in zip(lams, rep.per_lam):
        print(f"{lam.real!r},{lam.imag!r},{'skipped' if d is None else repr(d)}")
    for k, d in sorted(rep.per_k.items()):
        print(f"# k={k}: jet deviation {d:.3e}")
    print(f"# s-consistency {rep.consistency:.3e}")
    print(f"# {'PASS' if rep.passed else 'FAIL'} max deviation {rep.max_dev:.3e}")
    return 0 if rep.passed else 3


if __name__ == "__main__":
    raise SystemExit(main())
