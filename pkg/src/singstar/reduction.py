"""Rebuild the internal Weyl-type matrix m_w of an omitted edge.

Input: the boundary matrix M_s(lam) for one admissible s and the S-bases on
every edge except w. Per lam and per k = 1..omega_N - 1:

1. the jet of psi_sks at l_s from row k of M_s;
2. forms U_{j nu}(psi_skj) for nu <= min(k-1, n_j-2) copied to every edge
   (continuity-type conditions) and inverted to jet entries;
3. on each known edge j != s, w the window coefficients of psi_skj solved from
   those entries, giving its full jet at l_j;
4. the Kirchhoff-type sums for nu = k..omega_N - 1 complete the jet on edge w.

Finally m_w comes from the jets of psi_s1w, ..., psi_s,n_w-1,w by
determinant ratios. The potential on edge w is never touched.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .edge_basis import DEFAULT_OPTIONS, EdgeBasisOptions
from .errors import (
    ConfigError,
    MatrixEvaluatorFailure,
    NearEigenvalue,
    NumericalError,
    SingularSigma,
    SingularSystem,
    VanishingDenominator,
)
from .graph import StarGraph, invert_forms
from .io import ordered_map
from .numerics import cond_estimate, solve_dense
from .weyl import NEAR_EIGENVALUE_COND, jet_scales, lower_index, vertex_jets, weyl_matrix_Ms, weyl_matrix_mj


# ---------------------------------------------------------------------------
# index arithmetic

def propagation_top(n_j: int, k: int) -> int:
    """Highest derivative on edge j fixed by the continuity-type conditions."""
    return min(k - 1, n_j - 2)


def sigma_window(n_j: int, k: int) -> range:
    """S-indices mu in the expansion of psi_skj on a non-reference edge."""
    return range(lower_index(n_j, k), n_j + 1)


def direct_propagation_set(orders, w: int) -> set:
    """{(k, j, nu)} of jet entries known after the propagation stage."""
    from .graph import group_structure

    g = group_structure(orders, w)
    out = set()
    for k in range(1, g.omega(g.N)):
        for j, n in enumerate(orders, start=1):
            for nu in range(propagation_top(n, k) + 1):
                out.add((k, j, nu))
    return out


def grouped_propagation_set(orders, w: int) -> set:
    """The same set enumerated group by group: xi = N..m, k in
    [omega_{xi+1}, omega_xi - 1], l = xi..m, j = 1..p_l,
    nu in [omega_{l+1} - 1, min(k-1, omega_l - 2)]."""
    from .graph import group_structure

    g = group_structure(orders, w)
    om = g.omega
    out = set()
    for xi in range(g.N, g.m + 1):
        for k in range(om(xi + 1), om(xi)):
            for l in range(xi, g.m + 1):
                for j in range(1, g.bounds[l] + 1):
                    for nu in range(om(l + 1) - 1, min(k - 1, om(l) - 2) + 1):
                        out.add((k, j, nu))
    return out


def grouped_sigma_systems(orders, w: int, s: int) -> list:
    """[(k, j, rows nu, unknowns mu)] for the window systems, group by group."""
    from .graph import group_structure

    g = group_structure(orders, w)
    om = g.omega
    out = []
    for xi in range(g.N, g.m + 1):
        for k in range(om(xi + 1), om(xi)):
            for l in range(1, g.m + 1):
                for j in range(g.bounds[l - 1] + 1, g.bounds[l] + 1):
                    if j in (w, s):
                        continue
                    rows = list(range(0, min(k - 1, om(l) - 2) + 1))
                    mus = list(range(max(om(l) - k + 1, 2), om(l) + 1))
                    out.append((k, j, rows, mus))
    return out


# ---------------------------------------------------------------------------
# stages

@dataclass
class ReductionInput:
    """graph: potentials trusted on every edge except w.
    weyl: lam -> M_s(lam) as an n_s x n_s array."""

    graph: StarGraph
    s: int
    weyl: Callable[[complex], np.ndarray]
    opts: EdgeBasisOptions = DEFAULT_OPTIONS

    def __post_init__(self):
        g = self.graph.groups
        if g.w is None:
            raise ConfigError("graph has no omitted edge")
        if self.s not in g.admissible_s():
            raise ConfigError(f"s={self.s} is not admissible for w={g.w} "
                              f"(allowed {g.admissible_s()})")

    @property
    def w(self) -> int:
        return self.graph.groups.w

    @property
    def known_edges(self) -> list:
        return [j for j in range(1, self.graph.p + 1) if j != self.w]

    @property
    def kmax(self) -> int:
        """omega_N - 1."""
        return self.graph.orders[self.w - 1] - 1


def psi_on_edge_s(inp: ReductionInput, k: int, M: np.ndarray, jets_s: np.ndarray) -> np.ndarray:
    """psi_sks^(nu)(l_s) = S_ks^(nu) + sum_{mu > k} M_kmu S_mus^(nu)."""
    row = np.zeros(jets_s.shape[0], dtype=complex)
    row[k - 1] = 1.0
    row[k:] = M[k - 1, k:]
    return row @ jets_s


def propagate_known_edges(inp: ReductionInput, k: int, psi_s: np.ndarray) -> dict:
    """{j: d_0..d_V} on every edge j != s from the continuity-type conditions."""
    g = inp.graph
    s = inp.s
    gs = g.forms.matrix(s)
    u = gs[:k, :] @ psi_s  # U_{s nu}(psi_sks), nu = 0..k-1
    table = {}
    for j in range(1, g.p + 1):
        if j == s:
            continue
        top = propagation_top(g.orders[j - 1], k)
        table[j] = invert_forms(g.forms, j, u[: top + 1])
    return table


def solve_sigma(inp: ReductionInput, k: int, j: int, known: np.ndarray,
                jets_j: np.ndarray) -> np.ndarray:
    """Full jet of psi_skj at l_j on a known edge from its leading entries."""
    n = inp.graph.orders[j - 1]
    window = list(sigma_window(n, k))
    rows = propagation_top(n, k) + 1
    if len(window) != rows or len(known) != rows:
        raise AssertionError("window system is not square")
    a = np.array([[jets_j[mu - 1, nu] for mu in window] for nu in range(rows)])
    try:
        rs, cs = jet_scales(jets_j, rows, [mu - 1 for mu in window])
        coef, _ = solve_dense(a, known, NEAR_EIGENVALUE_COND, rs, cs)
    except SingularSystem as exc:
        raise SingularSigma(f"window system for edge {j}, k={k} is singular: {exc}") from None
    return coef @ jets_j[[mu - 1 for mu in window], :]


def kirchhoff_complete(inp: ReductionInput, k: int, known_w: np.ndarray, full: dict) -> np.ndarray:
    """Jet of psi_skw at l_w: entries nu >= k from the Kirchhoff-type sums."""
    g = inp.graph
    w = inp.w
    n_w = g.orders[w - 1]
    u = []
    for nu in range(k, n_w):
        total = 0j
        for j, jet in full.items():
            if g.orders[j - 1] > nu:
                total += g.forms.matrix(j)[nu, : nu + 1] @ jet[: nu + 1]
        u.append(-total)
    return invert_forms(g.forms, w, u, known=known_w[:k])


def assemble_m(psi_jets, max_cond: float = NEAR_EIGENVALUE_COND) -> np.ndarray:
    """m from jets of psi_s1w..psi_s,n-1,w at l_w (rows k-1, columns nu)."""
    psi = np.asarray(psi_jets)
    n = psi.shape[1]
    m = np.eye(n, dtype=complex)
    if n == 1:
        return m
    d0 = psi[0, 0]
    if abs(d0) <= 1e-13 * np.max(np.abs(psi[0])):
        raise VanishingDenominator("psi_s1w(l_w) vanishes")
    m[0, 1:] = psi[0, 1:] / d0
    for k in range(2, n):
        block = psi[:k, :k]
        rs, cs = jet_scales(psi, k, range(k))
        if cond_estimate(block.T, rs, cs) > max_cond:
            raise VanishingDenominator(f"{k}x{k} jet minor is singular")
        den = np.linalg.det(block)
        for nu in range(k + 1, n + 1):
            num_block = block.copy()
            num_block[:, k - 1] = psi[:k, nu - 1]
            m[k - 1, nu - 1] = np.linalg.det(num_block) / den
    return m


@dataclass
class PointTrace:
    """Everything produced at one lam for one s."""

    lam: complex
    s: int
    psi_s: dict = field(default_factory=dict)      # k -> jet on edge s
    propagated: dict = field(default_factory=dict)  # k -> {j: partial jet}
    full: dict = field(default_factory=dict)        # k -> {j: full jet}, j != w
    psi_w: dict = field(default_factory=dict)       # k -> jet on edge w
    m: np.ndarray | None = None


def reduce_point(inp: ReductionInput, lam: complex) -> PointTrace:
    lam = complex(lam)
    g = inp.graph
    s, w = inp.s, inp.w
    try:
        M = np.asarray(inp.weyl(lam), dtype=complex)
    except NumericalError as exc:
        raise MatrixEvaluatorFailure(f"M_{s}({lam:.6g}) unavailable: {exc}") from exc
    n_s = g.orders[s - 1]
    if M.shape != (n_s, n_s) or not np.all(np.isfinite(M)):
        raise MatrixEvaluatorFailure(f"M_{s}({lam:.6g}) has wrong shape or non-finite entries")
    jets = vertex_jets(g, lam, inp.opts, edges=inp.known_edges)
    tr = PointTrace(lam, s)
    rows = []
    for k in range(1, inp.kmax + 1):
        psi_s = psi_on_edge_s(inp, k, M, jets[s])
        table = propagate_known_edges(inp, k, psi_s)
        full = {s: psi_s}
        for j in inp.known_edges:
            if j != s:
                full[j] = solve_sigma(inp, k, j, table[j], jets[j])
        psi_w = kirchhoff_complete(inp, k, table[w], full)
        tr.psi_s[k] = psi_s
        tr.propagated[k] = table
        tr.full[k] = full
        tr.psi_w[k] = psi_w
        rows.append(psi_w)
    tr.m = assemble_m(rows) if rows else np.eye(g.orders[w - 1], dtype=complex)
    return tr


@dataclass
class ReductionResult:
    w: int
    s_values: list
    lams: list
    m: dict                 # s -> list of arrays (None where skipped)
    skipped: dict           # s -> {index: reason}
    consistency: float      # max relative spread between different s

    def matrices(self, s: int | None = None) -> list:
        return self.m[self.s_values[0] if s is None else s]


def rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise relative deviation over the strictly upper triangle."""
    iu = np.triu_indices(a.shape[0], 1)
    if iu[0].size == 0:
        return 0.0
    x, y = a[iu], b[iu]
    return float(np.max(np.abs(x - y) / np.maximum(np.abs(y), 1e-300)))


def reduce(graph: StarGraph, weyl_by_s: dict, lams, opts: EdgeBasisOptions = DEFAULT_OPTIONS,
           jobs: int = 1) -> ReductionResult:
    """Run the reduction for every s in ``weyl_by_s`` over the grid."""
    lams = [complex(z) for z in lams]
    s_values = sorted(weyl_by_s)
    w = graph.groups.w
    out, skipped = {}, {}
    for s in s_values:
        inp = ReductionInput(graph, s, weyl_by_s[s], opts)
        ms, skip = [None] * len(lams), {}

        def one(i):
            try:
                return i, reduce_point(inp, lams[i]).m, None
            except (NumericalError, NearEigenvalue) as exc:
                return i, None, f"{type(exc).__name__}: {exc}"

        results = ordered_map(one, range(len(lams)), jobs)
        for i, m, reason in results:
            ms[i] = m
            if reason is not None:
                skip[i] = reason
        out[s], skipped[s] = ms, skip
    spread = 0.0
    for a in s_values:
        for b in s_values:
            if a < b:
                for ma, mb in zip(out[a], out[b]):
                    if ma is not None and mb is not None:
                        spread = max(spread, rel_dev(ma, mb))
    return ReductionResult(w, s_values, lams, out, skipped, spread)


def forward_weyl(graph: StarGraph, s: int, opts: EdgeBasisOptions = DEFAULT_OPTIONS):
    """lam -> M_s(lam) computed by the forward solver (closed-loop input)."""
    return lambda lam: weyl_matrix_Ms(graph, s, lam, opts).M


def blank_edge(graph: StarGraph, j: int) -> StarGraph:
    """Same graph with the potential on edge j removed."""
    e = graph.edge(j)
    return graph.replace_edge(j, e.with_potential(()))


@dataclass
class LoopReport:
    passed: bool
    max_dev: float
    per_lam: list
    skipped: dict
    consistency: float
    worst_k: int | None
    per_k: dict
    tol: float


def closed_loop(graph: StarGraph, lams, s_values=None, tol: float = 1e-6,
                weyl_by_s: dict | None = None, opts: EdgeBasisOptions = DEFAULT_OPTIONS,
                jobs: int = 1) -> LoopReport:
    """Forward M_s -> reduction (edge w blanked) -> compare with forward m_w.

    Also compares the reconstructed psi_skw jets per k with the forward ones,
    which localizes a corrupted row of M_s.
    """
    w = graph.groups.w
    s_values = s_values or graph.groups.admissible_s()
    if weyl_by_s is None:
        weyl_by_s = {s: forward_weyl(graph, s, opts) for s in s_values}
    blind = blank_edge(graph, w)
    res = reduce(blind, weyl_by_s, lams, opts, jobs)
    per_lam, per_k = [], {}
    s0 = res.s_values[0]
    from .weyl import solve_psi

    for i, lam in enumerate(res.lams):
        m_rec = res.m[s0][i]
        if m_rec is None:
            per_lam.append(None)
            continue
        try:
            m_fwd = weyl_matrix_mj(graph, w, lam, opts).m
        except NearEigenvalue:
            per_lam.append(None)
            continue
        per_lam.append(rel_dev(m_rec, m_fwd))
        inp = ReductionInput(blind, s0, weyl_by_s[s0], opts)
        tr = reduce_point(inp, lam)
        jets_w = vertex_jets(graph, lam, opts, edges=[w])[w]
        for k, jet in tr.psi_w.items():
            ref = solve_psi(graph, s0, k, lam, opts=opts).coeffs[w] @ jets_w
            dev = float(np.max(np.abs(jet - ref)) / np.max(np.abs(ref)))
            per_k[k] = max(per_k.get(k, 0.0), dev)
    devs = [d for d in per_lam if d is not None]
    max_dev = max(devs) if devs else float("inf")
    worst_k = max(per_k, key=per_k.get) if per_k and max(per_k.values()) > tol else None
    passed = bool(devs) and max_dev <= tol and res.consistency <= tol
    return LoopReport(passed, max_dev, per_lam, res.skipped, res.consistency, worst_k, per_k, tol)
