"""The fundamental system S_k(x, lam) of the full edge equation.

S_k is the solution behaving like c_k0 x^xi_k at the singular end. With
polynomial potentials the equation x^n (L - lam) y = 0 has polynomial
coefficients, so S_k is a Frobenius series in x with infinite radius:

    S_k = x^xi_k sum_i a_i x^i,   a_0 = c_k0,

with a_i = 0 at indices where xi_k + i hits another exponent (the component
along the larger-exponent solution is fixed to zero, which is what makes S_k
agree with C_k when q = 0). The series is summed directly when it is
numerically benign; otherwise it seeds the companion ODE at a cut point x0,
which is then integrated up to x.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CutPointTooLarge, LogarithmicCase, SeriesTruncation
from .frobenius import FrobeniusBasis, build_basis, c_jets, falling_vec
from .graph import EdgeSpec, SolutionJet, StarGraph
from .numerics import OdeSystem, integrate_linear_ode

SERIES_CAP = 4000


@dataclass(frozen=True)
class EdgeBasisOptions:
    """x0=None picks the cut point from |lam| and the edge length."""

    x0: float | None = None
    rel_tol: float = 1e-12
    series_tol: float = 1e-15
    method: str = "auto"  # "auto" | "series" | "integrate"
    ratio_max: float = 1e3
    richardson: bool = False


DEFAULT_OPTIONS = EdgeBasisOptions()


@dataclass
class EdgeBasisSample:
    edge: int
    lam: complex
    x: float
    jets: np.ndarray  # [k-1, nu]
    wronskian: complex


def _shifts(edge: EdgeSpec):
    """(shift, mu, coeff) for every monomial b x^d of q_mu; shift = d + n - mu."""
    n = edge.order
    out = []
    for mu, poly in enumerate(edge.q):
        for d, b in enumerate(poly):
            if b != 0:
                out.append((d + n - mu, mu, complex(b)))
    return out


def series_jets(basis: FrobeniusBasis, x: float, lam: complex, tol: float = 1e-15,
                cap: int = SERIES_CAP):
    """Jets [k-1, nu] of all S_k at x by the perturbed Frobenius series.

    Returns ``(jets, ratio)`` with ``ratio`` the worst sum|terms|/|sum|.
    """
    edge = basis.edge
    if not edge.has_potential:
        return c_jets(basis, x, lam, tol)
    n = basis.n
    lam = complex(lam)
    shifts = _shifts(edge)
    width = max([n] + [s for s, _, _ in shifts])
    nus = np.arange(n)
    lnx = np.log(x)
    zx = lam * x ** n
    scaled = [(s, mu, b * x ** s) for s, mu, b in shifts]
    jets = np.empty((n, n), dtype=complex)
    ratio = 1.0
    for k in range(n):
        xi = basis.xi[k]
        resonant = set()
        for m in range(k + 1, n):
            d = basis.xi[m] - xi
            if abs(d.imag) < 1e-9 and abs(d.real - round(d.real)) < 1e-9 and round(d.real) > 0:
                resonant.add(int(round(d.real)))
        u = [basis.c0[k]]
        acc = u[0] * falling_vec(xi, nus)
        absacc = np.abs(acc)
        small_run = 0
        i = 0
        while True:
            i += 1
            if i > cap:
                raise SeriesTruncation(f"S-series did not converge in {cap} terms")
            num = zx * u[i - n] if i >= n else 0j
            mag = abs(num)
            for s, mu, bs in scaled:
                if i >= s:
                    part = bs * falling_vec(xi + i - s, [mu])[0] * u[i - s]
                    num -= part
                    mag += abs(part)
            if i in resonant:
                if abs(num) > 1e-10 * max(mag, 1e-300) and mag > 0:
                    raise LogarithmicCase(
                        f"edge {basis.index}: exponent xi_{k + 1}+{i} is resonant with nonzero forcing")
                ui = 0j
            else:
                ui = num / basis.delta_at(xi + i)
            u.append(ui)
            term = ui * falling_vec(xi + i, nus)
            acc = acc + term
            absacc = absacc + np.abs(term)
            if np.all(np.abs(term) <= tol * absacc):
                small_run += 1
            else:
                small_run = 0
            if small_run >= width and i > width + abs(zx) ** (1.0 / n):
                break
        jets[k] = acc * np.exp((xi - nus) * lnx)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(np.abs(acc) > 0, absacc / np.abs(acc), np.inf)
        ratio = max(ratio, float(np.max(r)))
    return jets, ratio


def companion(edge: EdgeSpec, lam: complex) -> OdeSystem:
    n = edge.order
    nu = np.array(edge.nu, dtype=complex)
    powers = np.arange(n - 1) - n
    polys = [np.array(p[::-1], dtype=complex) if p else None for p in edge.q]
    base = np.diag(np.ones(n - 1, dtype=complex), 1)

    def coefficient(x):
        a = base.copy()
        row = -nu * x ** powers
        for mu, p in enumerate(polys):
            if p is not None:
                row[mu] -= np.polyval(p, x)
        row[0] += lam
        a[n - 1, : n - 1] = row
        return a

    return OdeSystem(n, coefficient)


def _auto_cut(edge: EdgeSpec, x: float, lam: complex) -> float:
    rho = abs(lam) ** (1.0 / edge.order)
    return min(x, 0.25 * edge.length, 1.0 / max(rho, 1e-300))


def _propagate(basis, x0, x, lam, opts):
    seed, ratio = series_jets(basis, x0, lam, opts.series_tol)
    while ratio > opts.ratio_max and x0 > 1e-8 * x:
        x0 *= 0.5
        seed, ratio = series_jets(basis, x0, lam, opts.series_tol)
    y = integrate_linear_ode(companion(basis.edge, lam), seed.T, x0, x, opts.rel_tol)
    return y.T


def _jets_uncached(basis: FrobeniusBasis, x: float, lam: complex, opts: EdgeBasisOptions):
    edge = basis.edge
    if not 0 < x <= edge.length * (1 + 1e-12):
        raise ValueError(f"x={x} outside (0, {edge.length}]")
    if opts.method == "series":
        return series_jets(basis, x, lam, opts.series_tol)[0]
    if opts.method == "auto" and opts.x0 is None:
        try:
            jets, ratio = series_jets(basis, x, lam, opts.series_tol)
            if ratio <= opts.ratio_max:
                return jets
        except SeriesTruncation:
            pass
    x0 = opts.x0 if opts.x0 is not None else _auto_cut(edge, x, lam)
    if x0 >= x:
        return series_jets(basis, x, lam, opts.series_tol)[0]
    jets = _propagate(basis, x0, x, lam, opts)
    if opts.richardson:
        half = _propagate(basis, 0.5 * x0, x, lam, opts)
        scale = np.max(np.abs(jets), axis=1, keepdims=True)
        dev = float(np.max(np.abs(half - jets) / scale))
        if dev > 10 * opts.rel_tol:
            raise CutPointTooLarge(f"halving x0={x0:.3g} moved the jets by {dev:.3g}")
    return jets


@lru_cache(maxsize=256)
def _basis_for(edge: EdgeSpec, index):
    return build_basis(edge, index)


@lru_cache(maxsize=4096)
def _jets_cached(edge: EdgeSpec, index, x: float, lam: complex, opts: EdgeBasisOptions):
    jets = _jets_uncached(_basis_for(edge, index), x, lam, opts)
    jets.setflags(write=False)
    return jets


def jets_at(edge: EdgeSpec, x: float, lam: complex, opts: EdgeBasisOptions = DEFAULT_OPTIONS,
            index=None) -> np.ndarray:
    """Matrix [k-1, nu] of S_k^(nu)(x, lam), k = 1..n."""
    return _jets_cached(edge, index, float(x), complex(lam), opts)


def eval_S(edge: EdgeSpec, basis: FrobeniusBasis | None, k: int, x: float, lam: complex,
           opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> SolutionJet:
    index = basis.index if basis is not None else None
    jets = jets_at(edge, x, lam, opts, index)
    return SolutionJet(index, float(x), complex(lam), np.array(jets[k - 1]))


def wronskian(sample) -> complex:
    jets = sample.jets if isinstance(sample, EdgeBasisSample) else np.asarray(sample)
    return complex(np.linalg.det(jets))


def basis_at_vertex(graph: StarGraph, j: int, lam: complex,
                    opts: EdgeBasisOptions = DEFAULT_OPTIONS) -> EdgeBasisSample:
    edge = graph.edge(j)
    graph.basis(j)  # exponent validation
    jets = np.array(jets_at(edge, edge.length, lam, opts, j))
    return EdgeBasisSample(j, complex(lam), edge.length, jets, wronskian(jets))
