"""Forward spectral objects on the star: Weyl-type solutions and matrices.

For a boundary vertex s and order k < n_s the Weyl-type solution Psi_sk is
expanded edgewise in the S-basis,

    psi_sks = S_ks + sum_{mu > k} M_skmu S_mus,
    psi_skj = sum_{mu >= r_j} M_skjmu S_muj,   r_j = <n_j - k - 1> + 2  (j != s),

and the coefficients follow from the vertex conditions: equality of the forms
U_{j nu} with U_{1 nu} for nu < k (where n_j > nu + 1) and the Kirchhoff-type
sums over edges with n_j > nu for nu = k..n_s-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edge_basis import DEFAULT_OPTIONS, EdgeBasisOptions, jets_at
from .errors import BoundaryZero, CountOverflow, NearEigenvalue, NonConvergence, SingularSystem
from .frobenius import rho_power, sector_data
from .graph import EdgeSpec, StarGraph, bracket
from .numerics import cond_estimate, solve_dense

NEAR_EIGENVALUE_COND = 1e12


def lower_index(n_j: int, k: int) -> int:
    """First S-index allowed on an edge j != s: <n_j - k - 1> + 2."""
    return bracket(n_j - k - 1) + 2


@dataclass(frozen=True)
class PsiLayout:
    """Unknowns [(edge, mu)] and equations [('match', j, nu) | ('sum', None, nu)]."""

    s: int
    k: int
    unknowns: tuple
    equations: tuple


def psi_layout(orders, s: int, k: int) -> PsiLayout:
    orders = list(orders)
    p = len(orders)
    n_s = orders[s - 1]
    if not 1 <= s <= p or not 1 <= k <= n_s - 1:
        raise ValueError(f"need 1 <= s <= {p} and 1 <= k <= {n_s - 1}")
    unknowns = [(s, mu) for mu in range(k + 1, n_s + 1)]
    for j in range(1, p + 1):
        if j != s:
            unknowns += [(j, mu) for mu in range(lower_index(orders[j - 1], k), orders[j - 1] + 1)]
    equations = []
    for j in range(2, p + 1):
        for nu in range(k):
            if orders[j - 1] > nu + 1:
                equations.append(("match", j, nu))
    for nu in range(k, n_s):
        equations.append(("sum", None, nu))
    return PsiLayout(s, k, tuple(unknowns), tuple(equations))


def vertex_jets(graph: StarGraph, lam: complex, opts: EdgeBasisOptions = DEFAULT_OPTIONS,
                edges=None) -> dict:
    """{j: [k-1, nu] jets of S_kj at l_j}."""
    edges = range(1, graph.p + 1) if edges is None else edges
    out = {}
    for j in edges:
        e = graph.edge(j)
        graph.basis(j)
        out[j] = np.asarray(jets_at(e, e.length, lam, opts, j))
    return out


def assemble_psi_system(graph: StarGraph, jets: dict, s: int, k: int):
    """Square system (A, rhs, layout) for the coefficients of Psi_sk."""
    layout = psi_layout(graph.orders, s, k)
    col = {u: c for c, u in enumerate(layout.unknowns)}
    # ujet[j][mu-1, nu] = U_{j nu}(S_mu j)
    ujet = {j: jets[j] @ graph.forms.matrix(j).T for j in jets}
    size = len(layout.unknowns)
    a = np.zeros((len(layout.equations), size), dtype=complex)
    rhs = np.zeros(len(layout.equations), dtype=complex)
    for row, (kind, j, nu) in enumerate(layout.equations):
        if kind == "match":
            terms = [(1, 1.0), (j, -1.0)]
        else:
            terms = [(e, 1.0) for e in range(1, graph.p + 1) if graph.orders[e - 1] > nu]
        for e, sign in terms:
            if e == s:
                rhs[row] -= sign * ujet[e][k - 1, nu]
            for mu in range(1, graph.orders[e - 1] + 1):
                c = col.get((e, mu))
                if c is not None:
                    a[row, c] += sign * ujet[e][mu - 1, nu]
    return a, rhs, layout


def psi_row_scale(graph: StarGraph, jets: dict, layout: PsiLayout) -> np.ndarray:
    """Natural size of each equation: largest |U_{e nu}(S_mu e)| over all mu
    and all edges e in the row, whether or not S_mu e is an unknown."""
    out = np.empty(len(layout.equations))
    for row, (kind, j, nu) in enumerate(layout.equations):
        edges = (1, j) if kind == "match" else [e for e in range(1, graph.p + 1) if graph.orders[e - 1] > nu]
        out[row] = max(np.max(np.abs(jets[e] @ graph.forms.matrix(e)[nu])) for e in edges)
    return out


@dataclass
class PsiCoefficients:
    """coeffs[j] has length n_j: psi_skj = coeffs[j] @ [S_1j .. S_nj]."""

    s: int
    k: int
    lam: complex
    coeffs: dict
    cond: float = 1.0

    def jet(self, j: int, jets: np.ndarray) -> np.ndarray:
        return self.coeffs[j] @ jets

    def vertex_jets(self, jets: dict) -> dict:
        return {j: self.coeffs[j] @ jets[j] for j in self.coeffs}


def solve_psi(graph: StarGraph, s: int, k: int, lam: complex, jets: dict | None = None,
              opts: EdgeBasisOptions = DEFAULT_OPTIONS,
              max_cond: float = NEAR_EIGENVALUE_COND) -> PsiCoefficients:
    if jets is None:
        jets = vertex_jets(graph, lam, opts)
    a, rhs, layout = assemble_psi_system(graph, jets, s, k)
    try:
        x, cond = solve_dense(a, rhs, max_cond, psi_row_scale(graph, jets, layout))
    except SingularSystem as exc:
        raise NearEigenvalue(f"lam={complex(lam):.6g} is at/near an eigenvalue of L_{s}{k}: {exc}",
                             s=s, k=k, lam=lam) from None
    coeffs = {j: np.zeros(n, dtype=complex) for j, n in enumerate(graph.orders, start=1)}
    coeffs[s][k - 1] = 1.0
    for (j, mu), v in zip(layout.unknowns, x):
        coeffs[j][mu - 1] = v
    return PsiCoefficients(s, k, complex(lam), coeffs, cond)


@dataclass
class WeylMatrixSample:
    s: int
    lam: complex
    M: np.ndarray
    conds: list = field(default_factory=list)


@dataclass
class InternalWeylSample:
    j: int
    lam: complex
    m: np.ndarray
    cond: float = 1.0


def weyl_matrix_Ms(graph: StarGraph, s: int, lam: complex,
                   opts: EdgeBasisOptions = DEFAULT_OPTIONS, jets: dict | None = None
                   ) -> WeylMatrixSample:
    """Boundary Weyl-type matrix: row k holds the edge-s coefficients of psi_sks."""
    if jets is None:
        jets = vertex_jets(graph, lam, opts)
    n = graph.orders[s - 1]
    M = np.eye(n, dtype=complex)
    conds = []
    for k in range(1, n):
        psi = solve_psi(graph, s, k, lam, jets)
        M[k - 1] = psi.coeffs[s]
        conds.append(psi.cond)
    return WeylMatrixSample(s, complex(lam), M, conds)


def jet_scales(jets: np.ndarray, k: int, rows):
    """Row scales (derivatives nu < k) and column scales (solutions in ``rows``)
    for a k x k minor of the jet matrix, both taken from the whole matrix."""
    jets = np.asarray(jets)
    col = np.max(np.abs(jets), axis=0)
    col = np.where(col > 0, col, 1.0)
    full = np.max(np.abs(jets / col[None, :]), axis=1)
    return col[:k], full[list(rows)]


def internal_weyl(edge: EdgeSpec, lam: complex, opts: EdgeBasisOptions = DEFAULT_OPTIONS,
                  index=None, jets: np.ndarray | None = None,
                  max_cond: float = NEAR_EIGENVALUE_COND):
    """(m, cond) with m[k-1, nu-1] = phi_k^(nu-1)(l) with phi_k in span{S_{n-k+1..n}}."""
    n = edge.order
    if jets is None:
        jets = np.asarray(jets_at(edge, edge.length, lam, opts, index))
    m = np.eye(n, dtype=complex)
    worst = 1.0
    for k in range(1, n):
        sub = jets[n - k:, :]  # rows mu = n-k+1..n
        a = sub[:, :k].T
        rhs = np.zeros(k, dtype=complex)
        rhs[k - 1] = 1.0
        try:
            rs, cs = jet_scales(jets, k, range(n - k, n))
            coef, cond = solve_dense(a, rhs, max_cond, rs, cs)
        except SingularSystem as exc:
            raise NearEigenvalue(f"edge {index}: singular minor for phi_{k} at lam={complex(lam):.6g}: {exc}",
                                 k=k, lam=lam) from None
        worst = max(worst, cond)
        m[k - 1] = coef @ sub
    return m, worst


def weyl_matrix_mj(graph: StarGraph, j: int, lam: complex,
                   opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> InternalWeylSample:
    graph.basis(j)
    m, cond = internal_weyl(graph.edge(j), lam, opts, j)
    return InternalWeylSample(j, complex(lam), m, cond)


@dataclass
class CharacteristicSample:
    s: int
    k: int
    lam: complex
    value: complex
    cond: float


def characteristic_fn(graph: StarGraph, s: int, k: int, lam: complex,
                      opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> CharacteristicSample:
    """Determinant of the assembled system (rows/cols in :func:`psi_layout` order)."""
    jets = vertex_jets(graph, lam, opts)
    a, _, layout = assemble_psi_system(graph, jets, s, k)
    cond = cond_estimate(a, psi_row_scale(graph, jets, layout))
    return CharacteristicSample(s, k, complex(lam), complex(np.linalg.det(a)), cond)


def psi_at(graph: StarGraph, s: int, k: int, j: int, x: float, lam: complex,
           opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Jet of psi_skj at an interior point x of edge j (k = n_s gives S_ns)."""
    edge = graph.edge(j)
    graph.basis(j)
    local = np.asarray(jets_at(edge, x, lam, opts, j))
    if k == graph.orders[s - 1]:
        if j != s:
            raise ValueError("psi_sns is only defined on edge s")
        return local[k - 1].copy()
    psi = solve_psi(graph, s, k, lam, opts=opts)
    return psi.coeffs[j] @ local


def asymptotic_reference(graph: StarGraph, s: int, k: int, nu: int, x: float,
                         rho: complex) -> complex:
    """Leading term omega_sk rho^-xi_ks (rho R_sk)^nu exp(rho R_sk x)."""
    basis = graph.basis(s)
    sd = sector_data(basis.xi, rho)
    R = sd.R[k - 1]
    return complex(sd.omega[k - 1] * rho_power(rho, -basis.xi[k - 1])
                   * (rho * R) ** nu * np.exp(rho * R * x))


# ---------------------------------------------------------------------------
# eigenvalues by the argument principle

@dataclass
class EigenResult:
    eigenvalues: list
    multiplicities: list
    winding: int
    boundary_scale: float


def _winding(f, rect, n0=32, max_points=20000):
    re0, re1, im0, im1 = rect
    corners = [complex(re0, im0), complex(re1, im0), complex(re1, im1), complex(re0, im1)]
    zs = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        for t in np.linspace(0, 1, n0, endpoint=False):
            zs.append(a + t * (b - a))
    vals = [f(z) for z in zs]
    zs.append(zs[0])
    vals.append(vals[0])
    pts = list(zip(zs, vals))
    i = 0
    while i < len(pts) - 1:
        (za, fa), (zb, fb) = pts[i], pts[i + 1]
        if fa == 0 or fb == 0:
            raise BoundaryZero(f"zero of the characteristic function on the contour near {za:.6g}")
        dphi = np.angle(fb / fa)
        if abs(dphi) > np.pi / 6:
            if len(pts) > max_points or abs(zb - za) < 1e-12 * max(1.0, abs(za)):
                raise BoundaryZero(f"contour passes too close to a zero near {za:.6g}")
            zm = 0.5 * (za + zb)
            pts.insert(i + 1, (zm, f(zm)))
            continue
        i += 1
    total = sum(np.angle(fb / fa) for (_, fa), (_, fb) in zip(pts, pts[1:]))
    wind = total / (2 * np.pi)
    count = int(round(wind))
    mods = np.array([abs(v) for _, v in pts])
    if abs(wind - count) > 0.05 or count < 0:
        raise BoundaryZero(f"non-integer winding {wind:.4f}")
    if mods.min() < 1e-10 * np.median(mods):
        raise BoundaryZero("contour passes too close to a zero (minimum modulus)")
    return count, float(np.median(mods))


def _newton(f, z, rect, max_iter=60):
    re0, re1, im0, im1 = rect
    wr, wi = re1 - re0, im1 - im0
    for _ in range(max_iter):
        h = 1e-7 * max(1.0, abs(z))
        fz = f(z)
        df = (f(z + h) - f(z - h)) / (2 * h)
        if df == 0:
            return None
        step = fz / df
        z = z - step
        if not (re0 - 0.1 * wr <= z.real <= re1 + 0.1 * wr and im0 - 0.1 * wi <= z.imag <= im1 + 0.1 * wi):
            return None
        if abs(step) <= 1e-14 * max(1.0, abs(z)):
            return z
    return z if abs(step) <= 1e-10 * max(1.0, abs(z)) else None


def find_zeros(f, rect, max_count: int = 50, min_size: float = 1e-9):
    """Zeros of an entire function inside a rectangle, with multiplicities."""
    count, scale = _winding(f, rect)
    if count > max_count:
        raise CountOverflow(f"{count} zeros in rectangle exceeds max_count={max_count}")
    found = []

    def split(r, frac, horizontal):
        re0, re1, im0, im1 = r
        if horizontal:
            c = re0 + frac * (re1 - re0)
            return (re0, c, im0, im1), (c, re1, im0, im1)
        c = im0 + frac * (im1 - im0)
        return (re0, re1, im0, c), (re0, re1, c, im1)

    def search(r, cnt, depth=0):
        if cnt == 0:
            return
        re0, re1, im0, im1 = r
        if cnt == 1:
            z = _newton(f, complex(0.5 * (re0 + re1), 0.5 * (im0 + im1)), r)
            if z is not None and re0 <= z.real <= re1 and im0 <= z.imag <= im1:
                found.append((z, 1))
                return
        if max(re1 - re0, im1 - im0) < min_size * max(1.0, abs(complex(re0, im0))) or depth > 80:
            z = complex(0.5 * (re0 + re1), 0.5 * (im0 + im1))
            found.append((z, cnt))
            return
        horizontal = (re1 - re0) >= (im1 - im0)
        for frac in (0.5 + 0.0137, 0.41, 0.59, 0.3, 0.7):
            a, b = split(r, frac, horizontal)
            try:
                ca, _ = _winding(f, a)
                cb, _ = _winding(f, b)
            except BoundaryZero:
                continue
            if ca + cb == cnt:
                search(a, ca, depth + 1)
                search(b, cb, depth + 1)
                return
        raise NonConvergence(f"could not separate zeros in {r}")

    search(rect, count)
    found.sort(key=lambda t: (t[0].real, t[0].imag))
    return found, count, scale


def locate_eigenvalues(graph: StarGraph, s: int, k: int, rect, max_count: int = 50,
                       opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> EigenResult:
    """Eigenvalues of L_sk inside rect = (re0, re1, im0, im1)."""

    def f(lam):
        return characteristic_fn(graph, s, k, lam, opts).value

    zeros, count, scale = find_zeros(f, rect, max_count)
    return EigenResult([z for z, _ in zeros], [m for _, m in zeros], count, scale)


def asymptotic_deviation(graph: StarGraph, s: int, k: int, nu: int, x: float, rho: complex,
                         opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> float:
    """|psi_sks^(nu)(x, rho^n_s) / reference - 1|."""
    lam = complex(rho) ** graph.orders[s - 1]
    val = psi_at(graph, s, k, s, x, lam, opts)[nu]
    return float(abs(val / asymptotic_reference(graph, s, k, nu, x, rho) - 1))
