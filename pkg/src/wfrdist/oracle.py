"""Slow, independent maximizers of the value function for small instances.

These exist to check the alternating solver.  They share only the problem
definition with it: the weight matrix, the marginals and ``value_function``.

In square-root variables ``P = sqrt(A)``, ``Q = sqrt(B)`` the objective is
the smooth bilinear form ``sum P_ij Q_ij omega_ij`` and the marginal
constraints become ``||P_i.|| = sqrt(a_i)``, ``||Q_.j|| = sqrt(b_j)``, so
projection is a nonnegative clip followed by rescaling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .coupling import RestrictedCoupling, uniform_interior_start, value_function
from .errors import InvalidInputError
from .measure import build_cost_matrix
from .solver import SolverConfig, maximize

MAX_CELLS = 16
GRID_POINTS = 21


@dataclass
class OracleResult:
    f_star: float
    argmax_coupling: RestrictedCoupling
    method: str  # "projected_ascent" or "grid"


def _guard(omega):
    m, n = omega.shape
    if m * n > MAX_CELLS:
        raise InvalidInputError(f"oracle limited to m*n <= {MAX_CELLS}, got {m}x{n}")


def _assemble(P, Q, pos, a, b, omega):
    m, n = omega.shape
    A = np.zeros((m + 1, n + 1))
    B = np.zeros((m + 1, n + 1))
    A[1:, 1:] = P * P
    B[1:, 1:] = Q * Q
    A[1:, 0] = np.where(pos.any(axis=1), 0.0, a)
    B[0, 1:] = np.where(pos.any(axis=0), 0.0, b)
    return RestrictedCoupling(A, B, omega)


class _SqrtProblem:
    def __init__(self, a, b, omega):
        self.omega = omega
        self.pos = omega > 0
        self.w = np.where(self.pos, omega, 0.0)
        self.ra = np.sqrt(a)
        self.rb = np.sqrt(b)
        self.rows = self.pos.any(axis=1)
        self.cols = self.pos.any(axis=0)

    def value(self, P, Q):
        return float(np.sum(P * Q * self.w))

    def project(self, P, Q):
        P = np.where(self.pos, np.maximum(P, 0.0), 0.0)
        Q = np.where(self.pos, np.maximum(Q, 0.0), 0.0)
        pn = np.linalg.norm(P, axis=1)
        qn = np.linalg.norm(Q, axis=0)
        # a row clipped to zero restarts uniformly on its allowed cells
        for i in np.flatnonzero(self.rows & (pn == 0)):
            P[i] = self.pos[i]
            pn[i] = np.sqrt(self.pos[i].sum())
        for j in np.flatnonzero(self.cols & (qn == 0)):
            Q[:, j] = self.pos[:, j]
            qn[j] = np.sqrt(self.pos[:, j].sum())
        P = P * np.divide(self.ra, pn, out=np.zeros_like(pn), where=pn > 0)[:, None]
        Q = Q * np.divide(self.rb, qn, out=np.zeros_like(qn), where=qn > 0)[None, :]
        return P, Q

    def tangent_gradient(self, P, Q):
        """Gradient with the radial (constraint-normal) component removed."""
        gP = Q * self.w
        gQ = P * self.w
        pn2 = np.maximum((P * P).sum(axis=1), 1e-300)
        qn2 = np.maximum((Q * Q).sum(axis=0), 1e-300)
        gP = gP - P * ((gP * P).sum(axis=1) / pn2)[:, None]
        gQ = gQ - Q * ((gQ * Q).sum(axis=0) / qn2)[None, :]
        # at the nonnegativity boundary only inward directions count
        gP = np.where((P <= 0) & (gP < 0), 0.0, gP)
        gQ = np.where((Q <= 0) & (gQ < 0), 0.0, gQ)
        return gP, gQ


def _ascend(problem: _SqrtProblem, P, Q, grad_tol=1e-12, max_steps=100_000):
    P, Q = problem.project(P, Q)
    value = problem.value(P, Q)
    step = 1.0
    for _ in range(max_steps):
        gP, gQ = problem.tangent_gradient(P, Q)
        gnorm = np.sqrt((gP * gP).sum() + (gQ * gQ).sum())
        if gnorm < grad_tol:
            break
        fullP, fullQ = Q * problem.w, P * problem.w
        step = min(step * 2.0, 1e6)
        while True:
            nP, nQ = problem.project(P + step * fullP, Q + step * fullQ)
            nvalue = problem.value(nP, nQ)
            gain = (fullP * (nP - P)).sum() + (fullQ * (nQ - Q)).sum()
            if nvalue >= value + 1e-4 * gain or step < 1e-14:
                break
            step *= 0.5
        if nvalue <= value:
            break
        P, Q, value = nP, nQ, nvalue
    return P, Q, value


def brute_force_max(mu, nu, omega=None, restarts: int = 8, seed=0) -> OracleResult:
    """Maximize the value function by projected gradient ascent.

    Runs from the uniform interior start plus ``restarts`` random interior
    starts and keeps the best.  Restricted to ``m * n <= 16``.
    """
    if omega is None:
        omega = build_cost_matrix(mu, nu)
    omega = np.asarray(omega, dtype=float)
    _guard(omega)
    a, b = mu.weights, nu.weights
    problem = _SqrtProblem(a, b, omega)
    start = uniform_interior_start(mu, nu, omega)
    starts = [(np.sqrt(start.A[1:, 1:]), np.sqrt(start.B[1:, 1:]))]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        starts.append((rng.random(omega.shape) + 0.05, rng.random(omega.shape) + 0.05))

    best = None
    for P0, Q0 in starts:
        P, Q, value = _ascend(problem, P0, Q0)
        if best is None or value > best[2]:
            best = (P, Q, value)
    coupling = _assemble(best[0], best[1], problem.pos, a, b, omega)
    return OracleResult(value_function(coupling, omega), coupling, "projected_ascent")


def _simplex_grid(k, resolution):
    """All points of the (k-1)-simplex with coordinates in multiples of 1/resolution."""
    if k == 0:
        return np.zeros((1, 0))
    if k == 1:
        return np.ones((1, 1))
    pts = [c for c in itertools.product(range(resolution + 1), repeat=k - 1)
           if sum(c) <= resolution]
    pts = np.array(pts, dtype=float).reshape(-1, k - 1)
    return np.hstack([pts, resolution - pts.sum(axis=1, keepdims=True)]) / resolution


def grid_max(mu, nu, omega=None, points: int = GRID_POINTS, max_evaluations=5_000_000):
    """Exhaustive search over a grid of the restricted set.

    Each atom's mass is split over its positive-weight cells in multiples of
    ``1 / (points - 1)``.  Only practical for m, n <= 2.
    """
    if omega is None:
        omega = build_cost_matrix(mu, nu)
    omega = np.asarray(omega, dtype=float)
    _guard(omega)
    a, b = mu.weights, nu.weights
    m, n = omega.shape
    pos = omega > 0
    res = points - 1
    row_opts = [_simplex_grid(int(pos[i].sum()), res) for i in range(m)]
    col_opts = [_simplex_grid(int(pos[:, j].sum()), res) for j in range(n)]
    total = np.prod([len(o) for o in row_opts + col_opts], dtype=float)
    if total > max_evaluations:
        raise InvalidInputError(f"grid of {total:.0f} points is too large")

    # enumerate row splits of A, evaluate all column splits of B vectorized
    col_choices = list(itertools.product(*[range(len(o)) for o in col_opts]))
    Bs = np.zeros((len(col_choices), m, n))
    for k, choice in enumerate(col_choices):
        for j, idx in enumerate(choice):
            Bs[k, pos[:, j], j] = b[j] * col_opts[j][idx]
    best_value, best_A, best_B = -np.inf, None, None
    for choice in itertools.product(*[range(len(o)) for o in row_opts]):
        A = np.zeros((m, n))
        for i, idx in enumerate(choice):
            A[i, pos[i]] = a[i] * row_opts[i][idx]
        vals = np.sum(np.sqrt(A[None] * Bs) * omega[None], axis=(1, 2))
        k = int(np.argmax(vals))
        if vals[k] > best_value:
            best_value, best_A, best_B = vals[k], A, Bs[k]

    P, Q = np.sqrt(best_A), np.sqrt(best_B)
    coupling = _assemble(P, Q, pos, a, b, omega)
    return OracleResult(value_function(coupling, omega), coupling, "grid")


@dataclass
class ComparisonReport:
    max_deviation: float
    tolerance: float
    deviations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def compare_solver_to_oracle(instances, tolerance: float = 1e-6,
                             config: SolverConfig = SolverConfig(), restarts: int = 8):
    """Run solver and oracle on ``(mu, nu, kernel)`` instances.

    Reports the largest ``|F_solver - F_oracle|``; ``report.passed`` tells
    whether it is within ``tolerance``.
    """
    deviations = []
    for mu, nu, kernel in instances:
        omega = build_cost_matrix(mu, nu, kernel)
        _guard(omega)
        f_solver = maximize(mu, nu, omega, config)[1]
        f_oracle = brute_force_max(mu, nu, omega, restarts=restarts).f_star
        deviations.append(abs(f_solver - f_oracle))
    return ComparisonReport(max(deviations, default=0.0), tolerance, deviations)
