"""Local data at the singular endpoint x = 0 of one edge.

The unperturbed equation y^(n) + sum_mu nu_mu x^(mu-n) y^(mu) = lam y has the
series solutions

    C_k(x, lam) = x^xi_k * sum_mu c_kmu (lam x^n)^mu,
    c_kmu = c_k,mu-1 / delta(xi_k + mu n),

where xi_k are the roots of the indicial polynomial delta.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EqualRealParts,
    IntegerCollision,
    ResonantExponents,
    SectorBoundary,
    SeriesTruncation,
)
from .graph import EdgeSpec, SolutionJet
from .numerics import poly_roots

EXPONENT_TOL = 1e-9
SERIES_TOL = 1e-15
SERIES_CAP = 200


def falling(z, k: int):
    """z (z-1) ... (z-k+1); works elementwise on arrays."""
    out = np.ones_like(np.asarray(z, dtype=complex))
    for i in range(k):
        out = out * (z - i)
    return out


def characteristic_poly(edge: EdgeSpec) -> np.ndarray:
    """Indicial polynomial delta, highest degree first (monic, degree n)."""
    n = edge.order
    nus = list(edge.nu) + [0j, 1.0 + 0j]
    coeffs = np.zeros(n + 1, dtype=complex)
    for mu, v in enumerate(nus):
        if v == 0:
            continue
        ff = np.poly(np.arange(mu)) if mu else np.array([1.0])
        coeffs[n - mu:] += v * ff
    return coeffs


def vandermonde(xi) -> complex:
    """det[xi_k^(nu-1)]_{k,nu}."""
    xi = np.asarray(xi, dtype=complex)
    det = 1.0 + 0j
    for i in range(len(xi)):
        for j in range(i + 1, len(xi)):
            det *= xi[j] - xi[i]
    return det


def exponents(edge: EdgeSpec, edge_index: int | None = None) -> np.ndarray:
    """Sorted exponents, checked against the admissibility conditions."""
    n = edge.order
    where = f"edge {edge_index}: " if edge_index is not None else ""
    xi = poly_roots(characteristic_poly(edge))
    xi = np.where(np.abs(xi.imag) < 1e-12 * np.maximum(1, np.abs(xi)), xi.real + 0j, xi)
    xi = xi[np.argsort(xi.real, kind="stable")]
    for a in range(n):
        for b in range(a + 1, n):
            d = (xi[b] - xi[a]) / n
            if abs(d.imag) < EXPONENT_TOL and abs(d.real - round(d.real)) < EXPONENT_TOL:
                raise ResonantExponents(f"{where}xi_{a + 1} - xi_{b + 1} is a multiple of {n}")
    if np.any(np.diff(xi.real) < EXPONENT_TOL):
        raise EqualRealParts(f"{where}exponents {xi} have coinciding real parts")
    for k, z in enumerate(xi, start=1):
        for m in range(0, n - 2):
            if abs(z - m) < EXPONENT_TOL:
                raise IntegerCollision(f"{where}xi_{k} = {m} lies in {{0..{n - 3}}}")
    return xi


@dataclass(frozen=True, eq=False)
class FrobeniusBasis:
    edge: EdgeSpec
    index: int | None
    delta: np.ndarray
    xi: np.ndarray
    c0: np.ndarray

    @property
    def n(self) -> int:
        return self.edge.order

    @property
    def theta(self) -> float:
        return float(self.n - 1 - (self.xi[-1] - self.xi[0]).real)

    def delta_at(self, z):
        return np.polyval(self.delta, z)


def normalization(xi) -> np.ndarray:
    """c_k0 with c_10 = 1/Vandermonde and c_k0 = 1 for k >= 2."""
    c0 = np.ones(len(xi), dtype=complex)
    c0[0] = 1.0 / vandermonde(xi)
    return c0


def build_basis(edge: EdgeSpec, edge_index: int | None = None) -> FrobeniusBasis:
    xi = exponents(edge, edge_index)
    return FrobeniusBasis(edge, edge_index, characteristic_poly(edge), xi, normalization(xi))


def series_coefficients(basis: FrobeniusBasis, k: int, mu_max: int) -> np.ndarray:
    """c_k0 .. c_k,mu_max (k is 1-based)."""
    xi, n = basis.xi[k - 1], basis.n
    out = np.empty(mu_max + 1, dtype=complex)
    out[0] = basis.c0[k - 1]
    for mu in range(1, mu_max + 1):
        out[mu] = out[mu - 1] / basis.delta_at(xi + mu * n)
    return out


def c_jets(basis: FrobeniusBasis, x: float, lam: complex, tol: float = SERIES_TOL,
           cap: int = SERIES_CAP):
    """Jets of all C_k at x: matrix [k-1, nu] and the cancellation ratio.

    The ratio is max over entries of sum|terms| / |sum|; it bounds the
    relative rounding error amplification of the summation.
    """
    n = basis.n
    lnx = np.log(x)
    z = complex(lam) * x ** n
    jets = np.empty((n, n), dtype=complex)
    ratio = 1.0
    nus = np.arange(n)
    for k in range(n):
        xi = basis.xi[k]
        t = basis.c0[k]
        acc = t * falling_vec(xi, nus)
        absacc = np.abs(acc)
        mu = 0
        while True:
            mu += 1
            if mu > cap:
                raise SeriesTruncation(f"C-series did not converge in {cap} terms (z={z:.3g})")
            dnext = basis.delta_at(xi + mu * n)
            t = t * z / dnext
            term = t * falling_vec(xi + mu * n, nus)
            acc = acc + term
            absacc = absacc + np.abs(term)
            step = abs(z / basis.delta_at(xi + (mu + 1) * n))
            if step < 0.5 and np.all(np.abs(term) <= tol * absacc):
                break
        pref = np.exp((xi - nus) * lnx)
        jets[k] = acc * pref
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(np.abs(acc) > 0, absacc / np.abs(acc), np.inf)
        ratio = max(ratio, float(np.max(r)))
    return jets, ratio


def falling_vec(z, nus):
    """[falling(z, nu) for nu in nus]."""
    return np.array([falling(z, int(v)) for v in nus], dtype=complex).ravel()


def eval_C(basis: FrobeniusBasis, k: int, x: float, lam: complex,
           tol: float = SERIES_TOL) -> SolutionJet:
    if not x > 0:
        raise ValueError("x must be positive")
    jets, _ = c_jets(basis, x, lam, tol)
    return SolutionJet(basis.index, x, complex(lam), jets[k - 1])


# ---------------------------------------------------------------------------
# sectors of the rho-plane

def rho_arg(rho: complex) -> float:
    a = float(np.angle(rho))
    return np.pi if a <= -np.pi else a


def rho_power(rho: complex, mu) -> complex:
    """rho^mu with arg rho in (-pi, pi]."""
    return np.exp(mu * (np.log(abs(rho)) + 1j * rho_arg(rho)))


@dataclass(frozen=True, eq=False)
class SectorData:
    n: int
    sector: int
    eta: np.ndarray
    R: np.ndarray
    Omega: np.ndarray
    omega: np.ndarray

    def R_power(self, k: int, mu) -> complex:
        """R_k^mu = exp(2 pi i mu eta_k / n)."""
        return np.exp(2j * np.pi * mu * self.eta[k - 1] / self.n)


def sector_data(xi, rho: complex) -> SectorData:
    """Root ordering Re(rho R_1) < ... < Re(rho R_n) and the Omega/omega constants."""
    xi = np.asarray(xi, dtype=complex)
    n = len(xi)
    eps = np.exp(2j * np.pi * np.arange(n) / n)
    vals = (rho * eps).real
    eta = np.argsort(vals, kind="stable")
    gaps = np.diff(vals[eta])
    if np.any(gaps < 1e-12 * max(1.0, abs(rho))):
        raise SectorBoundary(f"arg rho = {rho_arg(rho):.6g} lies on a sector boundary")
    sector = int(np.floor(rho_arg(rho) * n / np.pi))
    sector = min(max(sector, -n), n - 1)
    Rpow = np.exp(2j * np.pi * np.outer(eta, xi) / n)  # [l, mu] = R_l^{xi_mu}
    Omega = np.ones(n + 1, dtype=complex)
    for k in range(1, n + 1):
        Omega[k] = np.linalg.det(Rpow[:k, :k])
    omega = Omega[:-1] / Omega[1:]
    return SectorData(n, sector, eta, eps[eta], Omega, omega)
