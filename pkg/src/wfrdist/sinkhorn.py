"""Entropic unbalanced Sinkhorn reference solver and plan conversion.

The static formulation of WFR on S^2 minimizes, over plans ``gamma >= 0``,

    G(gamma) = KL(gamma 1 | a) + KL(gamma^T 1 | b) + sum_ij gamma_ij c_ij,
    c_ij = -log(cos^2(min(d_ij, pi/2))),

whose infimum is WFR^2.  Cells with ``d_ij >= pi/2`` have infinite cost and
are forbidden outright.  The Sinkhorn solver adds ``lam * KL(gamma | a b^T)``
and runs log-domain scaling iterations; :func:`transport_cost` evaluates the
unregularized ``G`` of whatever plan it is handed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .coupling import SemiCoupling
from .errors import InvalidInputError, NumericFailureError
from .measure import DiscreteMeasure, pairwise_dots


@dataclass(frozen=True, eq=False)
class TransportPlan:
    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2:
            raise InvalidInputError("a transport plan is a 2-D matrix")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise InvalidInputError("plan entries must be finite and >= 0")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)


def transport_cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """``c_ij = -log(cos^2(min(d_ij, pi/2)))``; ``inf`` on forbidden cells."""
    dots = np.clip(pairwise_dots(mu.supports, nu.supports), -1.0, 1.0)
    with np.errstate(divide="ignore"):
        return np.where(dots > 0, -2.0 * np.log(np.maximum(dots, 0.0)), np.inf)


def _kl(p, q):
    return float(np.sum(xlogy(p, p) - xlogy(p, q) - p + q))


def transport_cost(plan, mu: DiscreteMeasure, nu: DiscreteMeasure, cost=None) -> float:
    """Unregularized objective ``G(gamma)``; ``inf`` if the plan uses a forbidden cell."""
    gamma = plan.gamma if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    if cost is None:
        cost = transport_cost_matrix(mu, nu)
    if gamma.shape != cost.shape:
        raise InvalidInputError("plan shape does not match the measures")
    used = gamma > 0
    if np.any(np.isinf(cost[used])):
        return np.inf
    transport = float(np.sum(gamma[used] * cost[used]))
    return _kl(gamma.sum(axis=1), mu.weights) + _kl(gamma.sum(axis=0), nu.weights) + transport


def _lse(x, axis):
    """Log-sum-exp along ``axis``; overwrites ``x``."""
    mx = np.max(x, axis=axis, keepdims=True)
    mx[~np.isfinite(mx)] = 0.0
    x -= mx
    np.exp(x, out=x)
    with np.errstate(divide="ignore"):
        return np.log(np.sum(x, axis=axis)) + np.squeeze(mx, axis=axis)


def sinkhorn_solve(mu: DiscreteMeasure, nu: DiscreteMeasure, lam: float = 1e-3,
                   max_iterations: int = 2000, tol: float = 1e-10):
    """Entropic unbalanced transport plan between ``mu`` and ``nu``.

    Marginal penalties are ``KL`` with unit weight, entropy weight ``lam``
    relative to ``a b^T``.  The proximal step on the potentials is

        f_i <- -lam/(1 + lam) * LSE_j(log b_j - c_ij / lam + g_j / lam)

    and symmetrically for ``g``; the plan is
    ``gamma_ij = a_i b_j exp((f_i + g_j - c_ij) / lam)``.  Returns
    ``(plan, cost)`` where ``cost`` is the unregularized ``G(plan)``.
    """
    if not lam > 0:
        raise InvalidInputError("lam must be > 0")
    if max_iterations < 1:
        raise InvalidInputError("max_iterations must be >= 1")
    a, b = mu.weights, nu.weights
    cost = transport_cost_matrix(mu, nu)
    with np.errstate(over="ignore"):
        log_gibbs = -cost / lam
    if np.any(np.isfinite(cost) & ~np.isfinite(log_gibbs)):
        raise NumericFailureError(f"cost / lam overflows at lam={lam:g}; try a larger lam", 0)
    log_k = np.log(a)[:, None] + np.log(b)[None, :] + log_gibbs
    row_ok = np.isfinite(log_k).any(axis=1)
    col_ok = np.isfinite(log_k).any(axis=0)
    tau = lam / (1.0 + lam)

    f = np.zeros(len(a))
    g = np.zeros(len(b))
    for it in range(1, max_iterations + 1):
        f_new = np.where(
            row_ok, -tau * _lse(log_gibbs + (np.log(b) + g / lam)[None, :], axis=1), 0.0)
        g_new = np.where(
            col_ok, -tau * _lse(log_gibbs + (np.log(a) + f_new / lam)[:, None], axis=0), 0.0)
        if not (np.all(np.isfinite(f_new)) and np.all(np.isfinite(g_new))):
            raise NumericFailureError(
                f"Sinkhorn potentials overflowed at lam={lam:g}; try a larger lam", it
            )
        delta = max(np.max(np.abs(f_new - f), initial=0.0), np.max(np.abs(g_new - g), initial=0.0))
        f, g = f_new, g_new
        if delta < tol:
            break

    with np.errstate(under="ignore"):
        gamma = np.exp(log_k + (f[:, None] + g[None, :]) / lam)
    if not np.all(np.isfinite(gamma)):
        raise NumericFailureError(f"Sinkhorn plan overflowed at lam={lam:g}; try a larger lam")
    plan = TransportPlan(gamma)
    return plan, transport_cost(plan, mu, nu, cost)


def plan_from_semicoupling(c: SemiCoupling, omega_for_distance) -> TransportPlan:
    """``gamma_ij = sqrt(A_ij B_ij) * cos(min(d_ij, pi/2))``.

    ``omega_for_distance`` is the WFR (rho = 1) weight matrix ``u_i . v_j``;
    cells with nonpositive weight map to zero.
    """
    omega = np.asarray(omega_for_distance, dtype=float)
    if omega.shape != c.shape:
        raise InvalidInputError("omega shape does not match the coupling")
    return TransportPlan(np.sqrt(c.A[1:, 1:] * c.B[1:, 1:]) * np.maximum(omega, 0.0))


def save_plan(plan: TransportPlan, path) -> None:
    np.savetxt(path, plan.gamma, delimiter=",", fmt="%.17g")
