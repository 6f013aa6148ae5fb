"""Exact WFR distance by alternating block maximization over semi-couplings.

Each half-step maximizes the value function over one matrix of the
semi-coupling with the other held fixed; both maximizers are closed form
(row-wise resp. column-wise rescaling of ``B * omega**2`` resp.
``A * omega**2``).  The value function is nondecreasing along the iteration
and converges to its maximum ``F*`` over the restricted set, from which

    distance = sqrt(sum(a) + sum(b) - 2 F*).

That difference cancels badly when the measures are close, so the reported
distance is assembled from the equivalent sum of nonnegative terms
(see :func:`distance_squared`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .coupling import RestrictedCoupling, uniform_interior_start, value_function
from .errors import InvalidInputError, NumericFailureError
from .measure import WFR, DiscreteMeasure, Kernel, build_cost_matrix, cost_complement

log = logging.getLogger(__name__)

TINY_VALUE = 1e-300
# entries this far below their atom's mass are flushed to zero; keeps the
# iteration out of subnormal arithmetic, which is ~50x slower
FLUSH_RATIO = 1e-250
# below this epsilon successive values of F agree to the last bit long before
# the coupling settles, so improvement is measured through distance_squared
PRECISE_EPSILON = 1e-13


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-10
    max_iterations: int = 10000
    record_history: bool = False
    # apply the column update before the row update
    t2_first: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be > 0")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")


@dataclass
class SolveReport:
    distance: float
    f_star: float
    iterations: int
    converged: bool
    coupling: RestrictedCoupling
    total_mass: tuple[float, float]
    history: list[float] | None = field(default=None)

    def distance_history(self):
        if self.history is None:
            return None
        total = sum(self.total_mass)
        return [float(np.sqrt(max(total - 2.0 * f, 0.0))) for f in self.history]

    def to_dict(self, include_history=True) -> dict:
        out = {
            "distance": self.distance,
            "f_star": self.f_star,
            "iterations": self.iterations,
            "converged": self.converged,
            "total_mass": list(self.total_mass),
        }
        if include_history and self.history is not None:
            out["history"] = list(self.history)
        return out


def _positive_sq(omega):
    return np.where(omega > 0, omega * omega, 0.0)


def _block_d2(A, B, gap, slot):
    sa = np.sqrt(A)
    sb = np.sqrt(B)
    diff = sa - sb
    return slot + float(np.sum(diff * diff)) + 2.0 * float(np.sum(sa * sb * gap))


def distance_squared(c: RestrictedCoupling, omega, gap=None) -> float:
    """``sum(a) + sum(b) - 2 F`` for a feasible coupling, free of cancellation.

    Equals slot mass ``+ sum (sqrt(A_ij) - sqrt(B_ij))^2 + 2 sqrt(A_ij B_ij) gap_ij``
    with ``gap = 1 - omega``; pass an accurately computed ``gap`` (see
    :func:`~wfrdist.measure.cost_complement`) for distances near zero.
    """
    omega = np.asarray(omega, dtype=float)
    if gap is None:
        gap = 1.0 - omega
    slot = float(c.A[1:, 0].sum() + c.B[0, 1:].sum())
    A, B = c.A[1:, 1:], c.B[1:, 1:]
    return _block_d2(A, B, np.where(omega > 0, gap, 0.0), slot)


def t1_update(c: RestrictedCoupling, mu: DiscreteMeasure, omega, _w=None) -> RestrictedCoupling:
    """Replace ``A`` by the maximizer of ``F(., B)``: ``A_ij ~ a_i B_ij omega_ij^2``.

    Rows whose normalizer vanishes are set to zero; the slot row and column
    of ``A`` are copied unchanged.
    """
    omega = np.asarray(omega, dtype=float)
    w = _positive_sq(omega) if _w is None else _w
    bw = c.B[1:, 1:] * w
    denom = bw.sum(axis=1)
    safe = np.where(denom > 0, denom, 1.0)
    E = np.array(c.A)
    E[1:, 1:] = np.where((denom > 0)[:, None], mu.weights[:, None] * bw / safe[:, None], 0.0)
    return RestrictedCoupling(E, c.B, omega)


def t2_update(c: RestrictedCoupling, nu: DiscreteMeasure, omega, _w=None) -> RestrictedCoupling:
    """Replace ``B`` by the maximizer of ``F(A, .)``: ``B_ij ~ b_j A_ij omega_ij^2``."""
    omega = np.asarray(omega, dtype=float)
    w = _positive_sq(omega) if _w is None else _w
    aw = c.A[1:, 1:] * w
    denom = aw.sum(axis=0)
    safe = np.where(denom > 0, denom, 1.0)
    E = np.array(c.B)
    E[1:, 1:] = np.where((denom > 0)[None, :], nu.weights[None, :] * aw / safe[None, :], 0.0)
    return RestrictedCoupling(c.A, E, omega)


def maximize(mu, nu, omega, config: SolverConfig = SolverConfig(), start=None, gap=None):
    """Run the alternating iteration for an explicit weight matrix.

    ``gap`` is ``1 - omega`` (recomputed from ``omega`` when omitted); it is
    only consulted when ``config.epsilon < PRECISE_EPSILON``.
    Returns ``(coupling, f_star, iterations, converged, history)``.
    """
    omega = np.asarray(omega, dtype=float)
    w = _positive_sq(omega)
    c = uniform_interior_start(mu, nu, omega) if start is None else start
    a, b = mu.weights, nu.weights
    value = value_function(c, omega)
    history = [value] if config.record_history else None
    if not np.isfinite(value):
        raise NumericFailureError("non-finite value at the starting point", 0)

    # Transport blocks only; slot entries are never touched by the updates.
    A = np.array(c.A[1:, 1:])
    B = np.array(c.B[1:, 1:])
    if config.t2_first:
        # iterate on transposed blocks so the same loop body applies
        A, B, a, b, w = B.T.copy(), A.T.copy(), b, a, w.T.copy()

    precise = config.epsilon < PRECISE_EPSILON
    if precise:
        gap = 1.0 - omega if gap is None else np.asarray(gap, dtype=float)
        gap = np.where(omega > 0, gap, 0.0)
        if config.t2_first:
            gap = gap.T
        slot = float(c.A[1:, 0].sum() + c.B[0, 1:].sum())
        d2 = _block_d2(A, B, gap, slot)

    a_floor = (FLUSH_RATIO * a)[:, None]
    b_floor = (FLUSH_RATIO * b)[None, :]
    converged = value < TINY_VALUE
    iterations = 0
    while not converged and iterations < config.max_iterations:
        np.multiply(B, w, out=A)
        rho = A.sum(axis=1)
        scale = np.divide(a, rho, out=np.zeros_like(rho), where=rho > 0)
        A *= scale[:, None]
        np.copyto(A, 0.0, where=A < a_floor)
        np.multiply(A, w, out=B)
        sigma = B.sum(axis=0)
        scale = np.divide(b, sigma, out=np.zeros_like(sigma), where=sigma > 0)
        B *= scale[None, :]
        np.copyto(B, 0.0, where=B < b_floor)
        # after the column update sqrt(A_ij B_ij) omega_ij = A_ij w_ij sqrt(b_j / sigma_j)
        iterations += 1
        previous, value = value, float(np.sqrt(b * sigma).sum())
        if not np.isfinite(value):
            raise NumericFailureError("non-finite value function", iterations)
        if history is not None:
            history.append(value)
        if precise:
            d2_prev, d2 = d2, _block_d2(A, B, gap, slot)
            gain = 0.5 * (d2_prev - d2)
        else:
            gain = value - previous
        if value < TINY_VALUE or gain / value < config.epsilon:
            converged = True
    if not converged:
        log.warning("stopped after %d iterations without meeting epsilon", iterations)

    if config.t2_first:
        A, B = B.T, A.T
    if iterations:
        full_a, full_b = np.array(c.A), np.array(c.B)
        full_a[1:, 1:] = A
        full_b[1:, 1:] = B
        c = RestrictedCoupling(full_a, full_b, omega)
        value = value_function(c, omega)
    return c, value, iterations, converged, history


def solve(mu: DiscreteMeasure, nu: DiscreteMeasure, kernel: Kernel = WFR,
          config: SolverConfig = SolverConfig()) -> SolveReport:
    """Distance between ``mu`` and ``nu`` for ``kernel`` (WFR with rho=1 by default).

    For kernels other than the default the returned distance is the
    normalized value ``sqrt(|mu| + |nu| - 2 F*)``.
    """
    omega = build_cost_matrix(mu, nu, kernel)
    gap = cost_complement(mu, nu, kernel)
    c, f_star, iterations, converged, history = maximize(mu, nu, omega, config, gap=gap)
    total = (mu.total_mass, nu.total_mass)
    d2 = distance_squared(c, omega, gap)
    return SolveReport(
        distance=float(np.sqrt(max(d2, 0.0))),
        f_star=f_star,
        iterations=iterations,
        converged=converged,
        coupling=c,
        total_mass=total,
        history=history,
    )


def closed_form_single_atom(a: float, b: float, u, v) -> float:
    """Distance between ``a delta_u`` and ``b delta_v``."""
    if not (a > 0 and b > 0):
        raise InvalidInputError("masses must be positive")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cos = float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.sqrt(max(a + b - 2.0 * np.sqrt(a * b) * max(cos, 0.0), 0.0)))
