"""Classical (Torgerson) multidimensional scaling."""

import logging

import numpy as np

from .errors import InvalidInputError

log = logging.getLogger(__name__)


def classical_mds(distances, dims: int = 3):
    """Embed a distance matrix in ``dims`` dimensions.

    Double-centers the squared distances and scales the top eigenvectors by
    the square roots of their eigenvalues.  Negative eigenvalues among the
    kept ones are clamped to zero with a warning.  Returns
    ``(coords, eigenvalues)``; ``coords`` always has ``dims`` columns.
    """
    D = np.asarray(distances, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidInputError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InvalidInputError("distance matrix has non-finite entries")
    if not np.allclose(D, D.T, rtol=0.0, atol=1e-7 * max(np.abs(D).max(initial=0.0), 1.0)):
        raise InvalidInputError("distance matrix is not symmetric")
    n = len(D)
    J = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * J @ (D**2) @ J
    evals, evecs = np.linalg.eigh((gram + gram.T) / 2.0)
    order = np.argsort(evals)[::-1][:dims]
    evals, evecs = evals[order], evecs[:, order]
    scale = np.abs(evals).max(initial=0.0)
    if np.any(evals < -1e-9 * max(scale, 1e-300)):
        log.warning("clamping negative MDS eigenvalues %s to zero", evals[evals < 0])
    evals = np.maximum(evals, 0.0)
    coords = np.zeros((n, dims))
    coords[:, : len(evals)] = evecs * np.sqrt(evals)
    return coords, evals
