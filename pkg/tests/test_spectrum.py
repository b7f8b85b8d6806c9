import math

import numpy as np
import pytest
from scipy import integrate

from fracspde.spectrum import eval_basis, interval_basis, li_yau_bound


def test_eigenvalues():
    b = interval_basis(5)
    np.testing.assert_allclose(b.eigenvalues, (math.pi * np.arange(1, 6)) ** 2, rtol=1e-15)
    np.testing.assert_allclose(b.wavenumbers, math.pi * np.arange(1, 6), rtol=1e-15)


def test_orthonormal():
    b = interval_basis(6)
    gram = np.empty((6, 6))
    for i in range(6):
        for j in range(6):
            gram[i, j] = integrate.quad(lambda x: b(i + 1, x) * b(j + 1, x), 0, 1, limit=200)[0]
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-12)


def test_boundary_values_are_exact_zero():
    phi = eval_basis(interval_basis(64), [0.0, 1.0])
    assert np.all(phi == 0.0)


def test_eval_matches_formula():
    x = np.linspace(0, 1, 11)
    phi = eval_basis(interval_basis(3), x)
    np.testing.assert_allclose(phi[:, 2], math.sqrt(2) * np.sin(3 * math.pi * x), atol=1e-15)


def test_rejects_points_outside():
    with pytest.raises(ValueError):
        eval_basis(interval_basis(3), [1.5])


def test_li_yau_one_dimension():
    j = np.arange(1, 50)
    bound = li_yau_bound(1, 1.0, j)
    np.testing.assert_allclose(bound, math.pi**2 * j**2 / 3, rtol=1e-14)
    assert np.all(interval_basis(49).eigenvalues >= bound)


def test_li_yau_unit_square():
    # Dirichlet square: the running mean of lam = pi^2 (m^2 + n^2) stays above the bound
    m = np.arange(1, 40)
    lam = np.sort((math.pi**2 * (m[:, None] ** 2 + m[None, :] ** 2)).ravel())[:200]
    j = np.arange(1, 201)
    partial = np.cumsum(lam) / j
    assert np.all(partial >= li_yau_bound(2, 1.0, j))
