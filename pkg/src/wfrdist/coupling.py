"""Discrete semi-couplings, the value function and the restricted set.

A semi-coupling of ``mu = sum a_i delta_{u_i}`` (m atoms) and
``nu = sum b_j delta_{v_j}`` (n atoms) is a pair of ``(m+1, n+1)`` matrices
``(A, B)``.  Row 0 / column 0 are the creation and destruction slots: the
1-based atom ``i`` of ``mu`` lives in row ``i`` and the 1-based atom ``j`` of
``nu`` lives in column ``j``.

Feasibility:

* ``A, B >= 0``
* ``A[i, :].sum() == a_i`` for ``i >= 1`` and ``A[0, :] == 0``
* ``B[:, j].sum() == b_j`` for ``j >= 1`` and ``B[:, 0] == 0``

The restricted set additionally forbids transport through cells with
``omega <= 0`` and forbids pure creation/destruction of an atom that has at
least one cell with positive weight.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, MeshFormatError

FEASIBILITY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SemiCoupling:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.ndim != 2 or A.shape != B.shape or min(A.shape) < 2:
            raise InvalidInputError(
                f"A and B must be equal-shape (m+1, n+1) matrices, got {A.shape}, {B.shape}"
            )
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def shape(self):
        """``(m, n)``: atom counts of the two measures."""
        return self.A.shape[0] - 1, self.A.shape[1] - 1

    def scaled(self, t: float):
        return type(self)(self.A * t, self.B * t)


@dataclass(frozen=True, eq=False)
class RestrictedCoupling(SemiCoupling):
    """A semi-coupling known to lie in the restricted set for ``omega``."""

    omega: np.ndarray | None = None

    def scaled(self, t: float):
        return RestrictedCoupling(self.A * t, self.B * t, self.omega)


def _check_dims(c: SemiCoupling, omega):
    omega = np.asarray(omega, dtype=float)
    if omega.shape != c.shape:
        raise InvalidInputError(
            f"coupling is for {c.shape[0]}x{c.shape[1]} atoms, omega has shape {omega.shape}"
        )
    return omega


def value_function(c: SemiCoupling, omega) -> float:
    """``F(A, B) = sum_{i,j >= 1} sqrt(A_ij B_ij) omega_ij``."""
    omega = _check_dims(c, omega)
    return float(np.sum(np.sqrt(c.A[1:, 1:] * c.B[1:, 1:]) * omega))


def feasibility_violations(c: SemiCoupling, a, b, rtol=FEASIBILITY_RTOL):
    """List human-readable violations of the semi-coupling constraints."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = c.shape
    problems = []
    if a.shape != (m,) or b.shape != (n,):
        return [f"marginals of length {a.shape}, {b.shape} do not match coupling {c.shape}"]
    if np.any(c.A < 0) or np.any(c.B < 0):
        problems.append("negative entries")
    if np.any(c.A[0, :] != 0):
        problems.append("A has mass in row 0")
    if np.any(c.B[:, 0] != 0):
        problems.append("B has mass in column 0")
    row_err = np.abs(c.A[1:, :].sum(axis=1) - a)
    if np.any(row_err > rtol * a):
        problems.append(f"A row sums off by up to {row_err.max():.3g}")
    col_err = np.abs(c.B[:, 1:].sum(axis=0) - b)
    if np.any(col_err > rtol * b):
        problems.append(f"B column sums off by up to {col_err.max():.3g}")
    return problems


def restriction_violations(c: SemiCoupling, omega):
    """List violations of the restricted-set conditions (feasibility not checked)."""
    omega = _check_dims(c, omega)
    nonpos = omega <= 0
    problems = []
    if np.any(c.A[1:, 1:][nonpos] != 0) or np.any(c.B[1:, 1:][nonpos] != 0):
        problems.append("transport through a cell with omega <= 0")
    if np.any(c.B[0, 1:][(~nonpos).any(axis=0)] != 0):
        problems.append("creation at a column that has a positive-weight cell")
    if np.any(c.A[1:, 0][(~nonpos).any(axis=1)] != 0):
        problems.append("destruction at a row that has a positive-weight cell")
    return problems


def best_targets(omega):
    """Per-row and per-column best partner (1-based), 0 when no weight is positive.

    Ties go to the lowest index.
    """
    omega = np.asarray(omega, dtype=float)
    k = np.argmax(omega, axis=1) + 1
    k[omega.max(axis=1) <= 0] = 0
    l = np.argmax(omega, axis=0) + 1
    l[omega.max(axis=0) <= 0] = 0
    return k, l


def project_to_restricted(c: SemiCoupling, omega) -> RestrictedCoupling:
    """Move mass so that ``c`` lands in the restricted set without lowering ``F``.

    Mass sitting on cells with ``omega <= 0`` is moved, row-wise in ``A`` and
    column-wise in ``B``, to the best partner of that row/column (or to the
    slot when none has positive weight).  Slot mass is then moved onto the
    best partner whenever one exists.  Inputs already in the restricted set
    are returned unchanged.
    """
    omega = _check_dims(c, omega)
    k, l = best_targets(omega)
    rows = np.arange(1, omega.shape[0] + 1)
    cols = np.arange(1, omega.shape[1] + 1)
    nonpos = omega <= 0

    A = np.array(c.A)
    moved = np.where(nonpos, A[1:, 1:], 0.0).sum(axis=1)
    A[1:, 1:][nonpos] = 0.0
    A[rows, k] += moved
    has_k = k != 0
    A[rows[has_k], k[has_k]] += A[rows[has_k], 0]
    A[rows[has_k], 0] = 0.0

    B = np.array(c.B)
    moved = np.where(nonpos, B[1:, 1:], 0.0).sum(axis=0)
    B[1:, 1:][nonpos] = 0.0
    B[l, cols] += moved
    has_l = l != 0
    B[l[has_l], cols[has_l]] += B[0, cols[has_l]]
    B[0, cols[has_l]] = 0.0

    out = RestrictedCoupling(A, B, omega)
    if __debug__:
        before, after = value_function(c, omega), value_function(out, omega)
        assert after >= before - 1e-12 * max(1.0, abs(before)), (before, after)
    return out


def uniform_interior_start(mu, nu, omega) -> RestrictedCoupling:
    """Split each atom's mass evenly over its positive-weight cells.

    Atoms with no positive-weight cell are sent entirely to the slot.
    """
    omega = np.asarray(omega, dtype=float)
    a, b = mu.weights, nu.weights
    m, n = omega.shape
    if (m, n) != (len(a), len(b)):
        raise InvalidInputError("omega shape does not match the measures")
    pos = omega > 0
    row_count = pos.sum(axis=1)
    col_count = pos.sum(axis=0)

    A = np.zeros((m + 1, n + 1))
    A[1:, 1:] = np.where(pos, (a / np.maximum(row_count, 1))[:, None], 0.0)
    A[1:, 0] = np.where(row_count == 0, a, 0.0)

    B = np.zeros((m + 1, n + 1))
    B[1:, 1:] = np.where(pos, (b / np.maximum(col_count, 1))[None, :], 0.0)
    B[0, 1:] = np.where(col_count == 0, b, 0.0)
    return RestrictedCoupling(A, B, omega)


# -- export -------------------------------------------------------------------


def save_coupling(c: SemiCoupling, path) -> None:
    """Write ``A`` then ``B``, each preceded by a label line, 17 significant digits."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for label, mat in (("A", c.A), ("B", c.B)):
            writer.writerow([label])
            for row in mat:
                writer.writerow([f"{x:.17g}" for x in row])


def load_coupling(path) -> SemiCoupling:
    blocks = {}
    current = None
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) == 1 and row[0] in ("A", "B"):
                current = blocks.setdefault(row[0], [])
                continue
            if current is None:
                raise MeshFormatError("data before block label", path, lineno)
            try:
                current.append([float(x) for x in row])
            except ValueError as exc:
                raise MeshFormatError(str(exc), path, lineno) from exc
    if set(blocks) != {"A", "B"}:
        raise MeshFormatError("coupling file needs blocks A and B", path)
    return SemiCoupling(np.array(blocks["A"]), np.array(blocks["B"]))
