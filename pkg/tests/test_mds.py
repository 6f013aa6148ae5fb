import logging

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from wfrdist.errors import InvalidInputError
from wfrdist.mds import classical_mds


def test_recovers_planar_configuration():
    pts = np.random.default_rng(0).standard_normal((8, 2))
    D = squareform(pdist(pts))
    coords, evals = classical_mds(D)
    assert coords.shape == (8, 3)
    assert np.allclose(squareform(pdist(coords)), D, atol=1e-9)
    assert abs(evals[2]) < 1e-9


def test_two_points_embed_on_a_line():
    coords, _ = classical_mds(np.array([[0.0, 2.5], [2.5, 0.0]]))
    assert abs(coords[0, 0] - coords[1, 0]) == pytest.approx(2.5, abs=1e-6)
    assert np.allclose(coords[:, 1:], 0.0)


def test_zero_matrix_gives_zero_coordinates():
    coords, _ = classical_mds(np.zeros((3, 3)))
    assert np.allclose(coords, 0.0)


def test_non_euclidean_input_warns(caplog):
    D = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    with caplog.at_level(logging.WARNING):
        coords, _ = classical_mds(D)
    assert "negative" in caplog.text
    assert np.all(np.isfinite(coords))


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[0, 1], [2, 0]]),
                                 np.array([[0, np.nan], [np.nan, 0]])])
def test_rejects_invalid_matrices(bad):
    with pytest.raises(InvalidInputError):
        classical_mds(bad)
