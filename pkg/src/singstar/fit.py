"""Least-squares recovery of a polynomial potential on one edge from m samples.

The parameter vector theta stacks the (real) ascending coefficients of
q_0, ..., q_{n-2} with the degrees given in ``FitProblem.degrees``. The model
m(lam; theta) is the internal Weyl matrix of the edge with that potential.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edge_basis import DEFAULT_OPTIONS, EdgeBasisOptions
from .errors import ConfigError, NearEigenvalue, NonConvergence
from .graph import EdgeSpec
from .weyl import internal_weyl


@dataclass(frozen=True)
class FitOptions:
    tol_abs: float = 1e-12
    tol_step: float = 1e-12
    max_iter: int = 50
    fd_step: float = 1e-6
    damping0: float = 1e-3


@dataclass
class FitProblem:
    """edge: structural data of edge w (its potential is ignored).
    degrees[mu]: max degree of q_mu, or -1 to keep q_mu = 0."""

    edge: EdgeSpec
    degrees: tuple
    lams: list
    targets: list
    weights: list | None = None
    opts: EdgeBasisOptions = DEFAULT_OPTIONS
    fit: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        n = self.edge.order
        self.degrees = tuple(int(d) for d in self.degrees) + (-1,) * (n - 1 - len(self.degrees))
        if len(self.degrees) != n - 1:
            raise ConfigError(f"need {n - 1} degrees")
        self.lams = [complex(z) for z in self.lams]
        self.targets = [np.asarray(t, dtype=complex) for t in self.targets]
        if len(self.lams) != len(self.targets):
            raise ConfigError("lams and targets differ in length")
        for t in self.targets:
            if t.shape != (n, n):
                raise ConfigError(f"target must be {n}x{n}")
        if self.weights is None:
            self.weights = [1.0] * len(self.lams)
        entries = n * (n - 1) // 2
        if self.lams and self.n_params > 2 * len(self.lams) * entries:
            raise ConfigError("more parameters than real data")
        self.dropped = {}

    @property
    def n_params(self) -> int:
        return sum(d + 1 for d in self.degrees if d >= 0)

    def edge_for(self, theta) -> EdgeSpec:
        theta = np.asarray(theta, dtype=float)
        q, pos = [], 0
        for d in self.degrees:
            q.append(tuple(theta[pos: pos + d + 1]) if d >= 0 else ())
            pos += max(d + 1, 0)
        return self.edge.with_potential(q)


def _upper(m: np.ndarray) -> np.ndarray:
    return m[np.triu_indices(m.shape[0], 1)]


def residual(problem: FitProblem, theta) -> np.ndarray:
    """Stacked [Re, Im] of the strictly upper entries of m_model - m_target."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    edge = problem.edge_for(theta)
    parts = []
    for i, (lam, target, wt) in enumerate(zip(problem.lams, problem.targets, problem.weights)):
        try:
            m, _ = internal_weyl(edge, lam, problem.opts)
            d = _upper(m) - _upper(target)
        except NearEigenvalue as exc:
            problem.dropped[i] = str(exc)
            d = np.zeros(len(_upper(target)), dtype=complex)
            wt = 0.0
        parts.append(wt * d)
    if not parts:
        return np.zeros(0)
    d = np.concatenate(parts)
    return np.concatenate([d.real, d.imag])


def fd_jacobian(problem: FitProblem, theta, step: float | None = None, r0=None) -> np.ndarray:
    """Forward differences with step h_i = step * max(|theta_i|, 1)."""
    theta = np.asarray(theta, dtype=float)
    step = problem.fit.fd_step if step is None else step
    r0 = residual(problem, theta) if r0 is None else r0
    jac = np.empty((r0.size, theta.size))
    for i in range(theta.size):
        h = step * max(abs(theta[i]), 1.0)
        t = theta.copy()
        t[i] += h
        jac[:, i] = (residual(problem, t) - r0) / h
    return jac


def central_jacobian(problem: FitProblem, theta, step: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    cols = []
    for i in range(theta.size):
        h = step * max(abs(theta[i]), 1.0)
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        cols.append((residual(problem, tp) - residual(problem, tm)) / (2 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


@dataclass
class FitReport:
    theta: np.ndarray
    residual: float
    iterations: int
    jac_cond: float
    converged: bool
    reason: str
    dropped: dict

    def text(self) -> str:
        lines = [
            f"converged: {self.converged} ({self.reason})",
            f"iterations: {self.iterations}",
            f"final residual: {self.residual:.6e}",
            f"jacobian condition: {self.jac_cond:.6e}",
            "theta: " + " ".join(f"{v:.12g}" for v in self.theta),
        ]
        for i, why in sorted(self.dropped.items()):
            lines.append(f"dropped sample {i}: {why}")
        return "\n".join(lines) + "\n"


def fit(problem: FitProblem, theta0, raise_on_failure: bool = True) -> FitReport:
    """Levenberg-Marquardt with a diagonal (Marquardt) scaling of the damping."""
    opt = problem.fit
    theta = np.asarray(theta0, dtype=float).copy()
    if theta.size != problem.n_params:
        raise ConfigError(f"theta0 has {theta.size} entries, expected {problem.n_params}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta0 must be finite")
    r = residual(problem, theta)
    cost = float(r @ r)
    lam_d = opt.damping0
    jac_cond = np.inf
    reason = "iteration cap"
    it = 0
    for it in range(1, opt.max_iter + 1):
        if np.sqrt(cost) < opt.tol_abs:
            reason = "residual below tolerance"
            it -= 1
            break
        jac = fd_jacobian(problem, theta, r0=r)
        jac_cond = float(np.linalg.cond(jac)) if jac.size else 1.0
        jtj = jac.T @ jac
        g = jac.T @ r
        diag = np.maximum(np.diag(jtj), 1e-300)
        accepted = False
        tiny = False
        for _ in range(30):
            try:
                dx = -np.linalg.solve(jtj + lam_d * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam_d *= 10
                continue
            tiny = np.linalg.norm(dx) < opt.tol_step * (1 + np.linalg.norm(theta))
            trial = theta + dx
            r_new = residual(problem, trial)
            c_new = float(r_new @ r_new)
            if c_new < cost:
                theta, r, cost = trial, r_new, c_new
                lam_d = max(lam_d / 10, 1e-12)
                accepted = True
                break
            if tiny:
                break
            lam_d *= 10
        if tiny:
            reason = "step below tolerance"
            break
        if not accepted:
            reason = "no decrease"
            break
    else:
        if np.sqrt(cost) < opt.tol_abs:
            reason = "residual below tolerance"
    res = float(np.sqrt(cost))
    converged = reason in ("residual below tolerance", "step below tolerance")
    report = FitReport(theta, res, it, jac_cond, converged, reason, dict(problem.dropped))
    if not converged and raise_on_failure:
        err = NonConvergence(f"fit stopped ({reason}) at residual {res:.3e}; best theta {theta}")
        err.report = report
        raise err
    return report
