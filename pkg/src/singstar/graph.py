"""Star graph data model, matching forms and order groups.

Edges are numbered from 1 as in the usual notation; the boundary vertex of
edge ``j`` sits at ``x = 0`` and the shared internal vertex at ``x = l_j``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, EmptyGraph, JetAtWrongPoint, UnsortedOrders, ZeroGammaDiagonal

DEFAULT_MAX_DEGREE = 8


def bracket(n: int) -> int:
    """<n> = (|n| + n) / 2."""
    return (abs(n) + n) // 2


@dataclass(frozen=True)
class EdgeSpec:
    """One edge: order, length, singular coefficients nu_mu and potential q_mu.

    ``nu[mu]`` multiplies ``y^(mu) / x^(n - mu)`` and ``q[mu]`` holds the
    ascending polynomial coefficients of the smooth part, ``mu = 0..n-2``.
    """

    order: int
    length: float
    nu: tuple = ()
    q: tuple = ()

    def __post_init__(self):
        n = self.order
        nu = tuple(complex(v) for v in self.nu) + (0j,) * max(0, n - 1 - len(self.nu))
        q = tuple(tuple(complex(c) for c in poly) for poly in self.q)
        q = q + ((),) * max(0, n - 1 - len(q))
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "q", q)

    @property
    def has_potential(self) -> bool:
        return any(c != 0 for poly in self.q for c in poly)

    def q_coeffs(self, mu: int) -> np.ndarray:
        return np.array(self.q[mu], dtype=complex)

    def with_potential(self, q) -> "EdgeSpec":
        return EdgeSpec(self.order, self.length, self.nu, tuple(tuple(p) for p in q))

    def potential_at(self, x: float) -> np.ndarray:
        """Values q_mu(x), mu = 0..n-2."""
        out = np.zeros(self.order - 1, dtype=complex)
        for mu, poly in enumerate(self.q):
            if poly:
                out[mu] = np.polyval(np.array(poly[::-1]), x)
        return out


@dataclass(frozen=True, eq=False)
class MatchingForms:
    """gamma[j-1][nu, mu] for the forms U_{j nu}(y) = sum_mu gamma y^(mu)(l_j)."""

    gamma: tuple

    @classmethod
    def identity(cls, orders) -> "MatchingForms":
        return cls(tuple(np.eye(n, dtype=complex) for n in orders))

    def matrix(self, j: int) -> np.ndarray:
        return self.gamma[j - 1]


@dataclass(frozen=True)
class GroupStructure:
    """Edges grouped by equal order: omegas strictly decreasing, bounds p_0..p_m."""

    omegas: tuple
    bounds: tuple
    w: int | None = None

    @property
    def m(self) -> int:
        return len(self.omegas)

    @property
    def N(self) -> int | None:
        if self.w is None:
            return None
        return self.group_of(self.w)

    def group_of(self, j: int) -> int:
        for i in range(1, self.m + 1):
            if self.bounds[i - 1] < j <= self.bounds[i]:
                return i
        raise IndexError(j)

    def omega(self, i: int) -> int:
        """omega_i with omega_{m+1} = 1."""
        return self.omegas[i - 1] if i <= self.m else 1

    def orders(self) -> list:
        out = []
        for i in range(1, self.m + 1):
            out += [self.omegas[i - 1]] * (self.bounds[i] - self.bounds[i - 1])
        return out

    def admissible_s(self) -> list:
        """Boundary vertices allowed as the reference s for omitted edge w."""
        if self.w is None:
            raise ConfigError("no omitted edge set")
        p1 = self.bounds[1]
        last = p1 if self.N > 1 else p1 - 1
        return list(range(1, last + 1))


def group_structure(orders, w: int | None = None) -> GroupStructure:
    orders = list(orders)
    omegas, bounds = [], [0]
    for j, n in enumerate(orders, start=1):
        if omegas and n == omegas[-1]:
            bounds[-1] = j
        else:
            omegas.append(n)
            bounds.append(j)
    g = GroupStructure(tuple(omegas), tuple(bounds), w)
    if w is not None:
        if not 1 <= w <= len(orders):
            raise ConfigError(f"omitted edge {w} out of range")
        if w not in g.bounds[1:]:
            raise ConfigError(f"omitted edge {w} is not the last edge of its order group")
        if len(orders) < 2 or (g.N == 1 and g.bounds[1] < 2):
            raise ConfigError("no admissible boundary vertex for this omitted edge")
    return g


@dataclass(frozen=True)
class GraphSpec:
    edges: tuple
    forms: MatchingForms | None = None

    @property
    def p(self) -> int:
        return len(self.edges)

    @property
    def orders(self) -> tuple:
        return tuple(e.order for e in self.edges)


@dataclass(frozen=True, eq=False)
class StarGraph:
    """A validated graph. Frobenius data per edge is built lazily."""

    edges: tuple
    forms: MatchingForms
    groups: GroupStructure
    max_degree: int = DEFAULT_MAX_DEGREE

    @property
    def p(self) -> int:
        return len(self.edges)

    @property
    def orders(self) -> tuple:
        return tuple(e.order for e in self.edges)

    def edge(self, j: int) -> EdgeSpec:
        return self.edges[j - 1]

    @cached_property
    def bases(self) -> tuple:
        from .frobenius import build_basis

        return tuple(build_basis(e, edge_index=j) for j, e in enumerate(self.edges, start=1))

    def basis(self, j: int):
        return self.bases[j - 1]

    def replace_edge(self, j: int, edge: EdgeSpec) -> "StarGraph":
        edges = list(self.edges)
        edges[j - 1] = edge
        return validate(GraphSpec(tuple(edges), self.forms), w=self.groups.w,
                        max_degree=self.max_degree)

    def with_omitted(self, w: int | None) -> "StarGraph":
        return validate(GraphSpec(self.edges, self.forms), w=w, max_degree=self.max_degree)

    def spec_dict(self) -> dict:
        return graph_to_dict(self)

    def digest(self) -> str:
        blob = json.dumps(graph_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def validate(spec: GraphSpec, w: int | None = None,
             max_degree: int = DEFAULT_MAX_DEGREE) -> StarGraph:
    """Structural checks; exponent conditions are checked when bases are built."""
    if spec.p < 2:
        raise EmptyGraph(f"need at least two edges, got {spec.p}")
    orders = spec.orders
    for j, e in enumerate(spec.edges, start=1):
        if e.order < 2:
            raise ConfigError(f"edge {j}: order must be >= 2")
        if not e.length > 0:
            raise ConfigError(f"edge {j}: length must be positive")
        if len(e.nu) != e.order - 1 or len(e.q) != e.order - 1:
            raise ConfigError(f"edge {j}: expected {e.order - 1} nu and q entries")
        for mu, poly in enumerate(e.q):
            if len(poly) - 1 > max_degree:
                raise ConfigError(f"edge {j}: q_{mu} degree exceeds cap {max_degree}")
    for j in range(1, spec.p):
        if orders[j] > orders[j - 1]:
            raise UnsortedOrders(f"orders must be non-increasing, got {orders}")
    forms = spec.forms or MatchingForms.identity(orders)
    if len(forms.gamma) != spec.p:
        raise ConfigError("gamma must have one block per edge")
    gam = []
    for j, (g, n) in enumerate(zip(forms.gamma, orders), start=1):
        g = np.array(g, dtype=complex)
        if g.shape != (n, n):
            raise ConfigError(f"edge {j}: gamma must be {n}x{n}")
        if np.any(np.triu(g, 1) != 0):
            raise ConfigError(f"edge {j}: gamma must be lower triangular")
        if np.any(np.diag(g) == 0):
            raise ZeroGammaDiagonal(f"edge {j}: zero diagonal matching coefficient")
        g.setflags(write=False)
        gam.append(g)
    return StarGraph(tuple(spec.edges), MatchingForms(tuple(gam)),
                     group_structure(orders, w), max_degree)


@dataclass
class SolutionJet:
    """Derivatives 0..n-1 of a solution on edge j at point x."""

    edge: int
    x: float
    lam: complex
    d: np.ndarray = field(repr=False)


def apply_form(forms: MatchingForms, j: int, nu: int, jet: SolutionJet, length: float) -> complex:
    if not np.isclose(jet.x, length, rtol=1e-14, atol=0):
        raise JetAtWrongPoint(f"jet at x={jet.x}, vertex at {length}")
    g = forms.matrix(j)
    return complex(g[nu, : nu + 1] @ np.asarray(jet.d)[: nu + 1])


def invert_forms(forms: MatchingForms, j: int, u, known=()) -> np.ndarray:
    """Recover jet entries from form values by forward substitution.

    ``known`` holds d_0..d_{a-1}; ``u`` holds U_{j nu} for nu = a..V.
    Returns the full list d_0..d_V.
    """
    g = forms.matrix(j)
    d = list(np.asarray(known, dtype=complex))
    for val in u:
        nu = len(d)
        acc = val - sum(g[nu, mu] * d[mu] for mu in range(nu))
        d.append(acc / g[nu, nu])
    return np.array(d, dtype=complex)


# ---------------------------------------------------------------------------
# config files (JSON; complex numbers as [re, im] pairs)

def _c(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex value must be [re, im], got {v}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _enc(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def graph_from_dict(cfg: dict, max_degree: int = DEFAULT_MAX_DEGREE):
    """Build a validated graph from a config dict.

    Returns ``(graph, permutation)``. If ``omitted_edge`` is given and is not
    the last edge of its order group, it is swapped with that last edge;
    ``permutation[new_index - 1]`` is the original index.
    """
    try:
        raw = cfg["edges"]
    except KeyError:
        raise ConfigError("config needs an 'edges' list") from None
    edges = []
    for e in raw:
        n = int(e["order"])
        nu = [_c(v) for v in e.get("nu", [])]
        q = [[_c(c) for c in poly] for poly in e.get("q", [])]
        edges.append(EdgeSpec(n, float(e["length"]), tuple(nu), tuple(tuple(p) for p in q)))
    forms = None
    if cfg.get("gamma") is not None:
        blocks = []
        for j, rows in enumerate(cfg["gamma"]):
            n = edges[j].order
            g = np.zeros((n, n), dtype=complex)
            for nu, row in enumerate(rows):
                for mu, v in enumerate(row):
                    g[nu, mu] = _c(v)
            blocks.append(g)
        forms = MatchingForms(tuple(blocks))
    perm = list(range(1, len(edges) + 1))
    w = cfg.get("omitted_edge")
    if w is not None:
        w = int(w)
        orders = [e.order for e in edges]
        if not 1 <= w <= len(edges):
            raise ConfigError(f"omitted edge {w} out of range")
        last = max(j for j in range(1, len(edges) + 1) if orders[j - 1] == orders[w - 1])
        if last != w:
            edges[w - 1], edges[last - 1] = edges[last - 1], edges[w - 1]
            perm[w - 1], perm[last - 1] = perm[last - 1], perm[w - 1]
            if forms is not None:
                gl = list(forms.gamma)
                gl[w - 1], gl[last - 1] = gl[last - 1], gl[w - 1]
                forms = MatchingForms(tuple(gl))
            w = last
    graph = validate(GraphSpec(tuple(edges), forms), w=w, max_degree=max_degree)
    return graph, perm


def load_graph(path, max_degree: int = DEFAULT_MAX_DEGREE):
    with open(path) as fh:
        cfg = json.load(fh)
    return graph_from_dict(cfg, max_degree=max_degree)


def graph_to_dict(graph: StarGraph) -> dict:
    out = {"edges": []}
    for e in graph.edges:
        out["edges"].append({
            "order": e.order,
            "length": e.length,
            "nu": [_enc(v) for v in e.nu],
            "q": [[_enc(c) for c in poly] for poly in e.q],
        })
    out["gamma"] = [[[_enc(g[nu, mu]) for mu in range(nu + 1)] for nu in range(g.shape[0])]
                    for g in graph.forms.gamma]
    if graph.groups.w is not None:
        out["omitted_edge"] = graph.groups.w
    return out


def star(orders, lengths=None, nu=None, q=None, w=None, gamma=None) -> StarGraph:
    """Convenience constructor used by tests and scripts."""
    p = len(orders)
    lengths = lengths or [1.0] * p
    nu = nu or [()] * p
    q = q or [()] * p
    edges = tuple(EdgeSpec(n, float(l), tuple(v), tuple(tuple(pp) for pp in qq))
                  for n, l, v, qq in zip(orders, lengths, nu, q))
    forms = MatchingForms(tuple(np.array(g, dtype=complex) for g in gamma)) if gamma else None
    return validate(GraphSpec(edges, forms), w=w)
