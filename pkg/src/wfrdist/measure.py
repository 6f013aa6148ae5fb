"""Finitely supported measures on the unit sphere and kernel weight matrices.

A measure ``sum_i a_i delta_{u_i}`` is stored as a weight vector ``a`` of
shape ``(m,)`` and a support array ``u`` of shape ``(m, 3)`` whose rows are
unit vectors.  The transport reward between two measures is driven by a
weight matrix ``omega`` of shape ``(m, n)`` built from a :class:`Kernel`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidInputError, MeshFormatError

NORMALIZATION_TOL = 1e-12
CONSOLIDATION_TOL = 1e-12


def normalize_vectors(vectors):
    """Return ``vectors`` (shape ``(k, 3)``) scaled to unit length row-wise."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise InvalidInputError(f"expected an array of 3-vectors, got shape {v.shape}")
    norms = np.linalg.norm(v, axis=1)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0.0):
        raise InvalidInputError("support vectors must be finite and nonzero")
    return v / norms[:, None]


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Positive measure ``sum_i weights[i] * delta_{supports[i]}`` on S^2.

    Supports are renormalized on construction; weights must be strictly
    positive.  Arrays are read-only after construction.
    """

    weights: np.ndarray
    supports: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise InvalidInputError("a measure needs at least one atom")
        s = np.asarray(self.supports, dtype=float)
        if s.ndim == 1 and s.size == 3:
            s = s[None, :]
        if s.ndim != 2 or s.shape[1] != 3:
            raise InvalidInputError(f"supports must be an (m, 3) array, got shape {s.shape}")
        s = normalize_vectors(s)
        if s.shape[0] != w.size:
            raise InvalidInputError(
                f"{w.size} weights but {s.shape[0]} support vectors"
            )
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise InvalidInputError("measure weights must be finite and > 0")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "supports", _frozen(s))

    def __len__(self):
        return self.weights.size

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.weights * factor, self.supports)

    def rotated(self, rotation) -> "DiscreteMeasure":
        return DiscreteMeasure(self.weights, self.supports @ np.asarray(rotation).T)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "supports": self.supports.tolist()}


@dataclass(frozen=True)
class Kernel:
    """Weight kernel: ``wfr`` uses ``cos(d / rho)``, ``ghk`` uses ``exp(-d^2 / (2 rho))``."""

    variant: str = "wfr"
    rho: float = 1.0

    def __post_init__(self):
        if self.variant not in ("wfr", "ghk"):
            raise InvalidInputError(f"unknown kernel variant {self.variant!r}")
        if not (self.rho > 0 and np.isfinite(self.rho)):
            raise InvalidInputError("kernel scale rho must be positive")


WFR = Kernel("wfr", 1.0)


def pairwise_dots(u, v):
    """Dot products ``u_i . v_j`` with an evaluation order symmetric in (u, v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (
        np.multiply.outer(u[:, 0], v[:, 0])
        + np.multiply.outer(u[:, 1], v[:, 1])
        + np.multiply.outer(u[:, 2], v[:, 2])
    )


def geodesic_distances(u, v):
    return np.arccos(np.clip(pairwise_dots(u, v), -1.0, 1.0))


def build_cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, kernel: Kernel = WFR):
    """Weight matrix ``omega[i, j]`` between the supports of ``mu`` and ``nu``.

    For the ``wfr`` kernel with ``rho == 1`` the raw dot product is returned
    (no arccos round trip).  For other ``rho`` the angle ``d / rho`` is capped
    at pi so the weight never turns positive again past the antipode.
    """
    if len(mu) == 0 or len(nu) == 0:
        raise InvalidInputError("measures must be nonempty")
    if kernel.variant == "wfr":
        if kernel.rho == 1.0:
            return pairwise_dots(mu.supports, nu.supports)
        d = geodesic_distances(mu.supports, nu.supports)
        return np.cos(np.minimum(d / kernel.rho, np.pi))
    d = geodesic_distances(mu.supports, nu.supports)
    return np.exp(-(d**2) / (2.0 * kernel.rho))


def cost_complement(mu: DiscreteMeasure, nu: DiscreteMeasure, kernel: Kernel = WFR):
    """``1 - omega`` evaluated without cancellation near coincident supports.

    Uses the chord ``|u - v|``: ``1 - u.v = |u - v|^2 / 2`` for the default
    kernel and ``theta = 2 asin(|u - v| / 2)`` for the others.
    """
    u, v = mu.supports, nu.supports
    chord2 = sum(np.subtract.outer(u[:, k], v[:, k]) ** 2 for k in range(3))
    if kernel.variant == "wfr" and kernel.rho == 1.0:
        return 0.5 * chord2
    theta = 2.0 * np.arcsin(np.minimum(np.sqrt(chord2) / 2.0, 1.0))
    if kernel.variant == "wfr":
        return 2.0 * np.sin(np.minimum(theta / kernel.rho, np.pi) / 2.0) ** 2
    return -np.expm1(-(theta**2) / (2.0 * kernel.rho))


def random_measure(n: int, seed=None, mass_scale: float = 1.0) -> DiscreteMeasure:
    """``n`` atoms uniform on S^2 with weights uniform on ``(0, mass_scale]``."""
    if n < 1:
        raise InvalidInputError("random_measure needs n >= 1")
    if mass_scale <= 0:
        raise InvalidInputError("mass_scale must be positive")
    rng = np.random.default_rng(seed)
    supports = rng.standard_normal((n, 3))
    # 1 - U[0, 1) lies in (0, 1]
    weights = mass_scale * (1.0 - rng.random(n))
    return DiscreteMeasure(weights, supports)


def consolidate(mu: DiscreteMeasure, tol: float = CONSOLIDATION_TOL, return_labels=False):
    """Merge atoms whose supports satisfy ``u_i . u_j > 1 - tol``.

    Weights of merged atoms are summed; the merged support is the
    weight-averaged direction.  Merging is transitive (connected components
    of the closeness graph).  With ``return_labels`` the atom-to-cluster map
    is returned as well.
    """
    # |u - v|^2 = 2 - 2 u.v  <  2 tol
    radius = np.sqrt(2.0 * tol)
    pairs = cKDTree(mu.supports).query_pairs(radius, output_type="ndarray")
    m = len(mu)
    if len(pairs):
        dots = np.einsum("ij,ij->i", mu.supports[pairs[:, 0]], mu.supports[pairs[:, 1]])
        pairs = pairs[dots > 1.0 - tol]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    n_clusters, raw_labels = connected_components(graph, directed=False)
    # relabel clusters by first occurrence so output order follows input order
    _, first = np.unique(raw_labels, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(n_clusters, dtype=int)
    relabel[order] = np.arange(n_clusters)
    labels = relabel[raw_labels]

    weights = np.bincount(labels, weights=mu.weights, minlength=n_clusters)
    summed = np.zeros((n_clusters, 3))
    np.add.at(summed, labels, mu.weights[:, None] * mu.supports)
    out = DiscreteMeasure(weights, summed)
    if return_labels:
        return out, labels
    return out


# -- file formats -------------------------------------------------------------


def load_measure(path) -> DiscreteMeasure:
    """Read a measure from CSV (``weight,x,y,z`` with header) or JSON."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshFormatError(f"cannot read measure file: {exc}", path) from exc
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
            return DiscreteMeasure(data["weights"], data["supports"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise MeshFormatError(f"bad measure JSON: {exc}", path) from exc
        except InvalidInputError as exc:
            raise MeshFormatError(str(exc), path) from exc

    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise MeshFormatError("empty measure file", path)
    weights, supports = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 4:
            raise MeshFormatError(f"expected 4 columns, got {len(row)}", path, lineno)
        try:
            vals = [float(x) for x in row]
        except ValueError as exc:
            raise MeshFormatError(str(exc), path, lineno) from exc
        weights.append(vals[0])
        supports.append(vals[1:])
    try:
        return DiscreteMeasure(weights, np.asarray(supports).reshape(-1, 3))
    except InvalidInputError as exc:
        raise MeshFormatError(str(exc), path) from exc


def save_measure(mu: DiscreteMeasure, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(mu.to_dict()))
        return
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["weight", "x", "y", "z"])
        for w, s in zip(mu.weights, mu.supports):
            writer.writerow([f"{w:.17g}"] + [f"{c:.17g}" for c in s])
