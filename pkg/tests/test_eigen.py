import dataclasses

import numpy as np
import pytest

from singular_pucci.eigen import EigenPair, dense_oracle, eig_residual, principal_eig
from singular_pucci.errors import ValidationError
from singular_pucci.grid import GridFunction, RadialGrid
from singular_pucci.params import AnnulusGeometry, Ellipticity

GEO = AnnulusGeometry(1.0, 2.0)
ELL = Ellipticity(1.0, 2.0, 3)


def test_one_dimensional_laplacian():
    pair = principal_eig(Ellipticity(1, 1, 1), 0.0, GEO)
    assert pair.eigenvalue == pytest.approx(np.pi ** 2, rel=1e-6)
    assert eig_residual(pair, Ellipticity(1, 1, 1), 0.0, GEO) <= 1e-8


def test_dense_oracle_agrees():
    g = RadialGrid.uniform(1, 2, 513)
    pair = principal_eig(ELL, 0.3, GEO, grid=g)
    assert dense_oracle(pair, ELL, 0.3, GEO) == pytest.approx(pair.eigenvalue, rel=1e-8)


def test_positivity_and_residual():
    pair = principal_eig(ELL, 0.5, GEO)
    psi = pair.eigenfunction.values
    assert psi[0] == psi[-1] == 0 and np.all(psi[1:-1] > 0)
    assert eig_residual(pair, ELL, 0.5, GEO) <= 1e-8


def test_perturbed_eigenvalue_has_large_residual():
    pair = principal_eig(ELL, 0.0, GEO)
    wrong = dataclasses.replace(pair, eigenvalue=1.1 * pair.eigenvalue)
    assert eig_residual(wrong, ELL, 0.0, GEO) >= 0.01


def test_independent_of_start():
    g = RadialGrid.uniform(1, 2, 513)
    rng = np.random.default_rng(3)
    vals = [principal_eig(ELL, 0.2, GEO, grid=g, start=rng.uniform(0.1, 1.0, g.size)).eigenvalue
            for _ in range(5)]
    assert max(vals) - min(vals) <= 1e-9 * max(vals)


def test_scaling_with_ellipticity():
    base = principal_eig(ELL, 0.0, GEO).eigenvalue
    doubled = principal_eig(Ellipticity(2.0, 4.0, 3), 0.0, GEO).eigenvalue
    assert doubled == pytest.approx(2 * base, rel=1e-10)


def test_domain_monotonicity():
    narrow = principal_eig(ELL, 0.1, AnnulusGeometry(1.0, 1.5)).eigenvalue
    wide = principal_eig(ELL, 0.1, GEO).eigenvalue
    assert narrow > wide


def test_pucci_plus_lowers_eigenvalue():
    # both isotropic operators are admissible frozen policies of F2+
    iso_lo = principal_eig(Ellipticity(1, 1, 3), 0.0, GEO).eigenvalue
    iso_hi = principal_eig(Ellipticity(2, 2, 3), 0.0, GEO).eigenvalue
    lam = principal_eig(ELL, 0.0, GEO).eigenvalue
    assert 0 < lam <= min(iso_lo, iso_hi)


def test_weighted_pair():
    pair = principal_eig(ELL, 0.2, GEO, weight_mu=1.0)
    assert pair.weighted and pair.weight_mu == 1.0
    assert np.all(pair.eigenfunction.values[1:-1] > 0)
    assert eig_residual(pair, ELL, 0.2, GEO) <= 1e-8


def test_rejects_invalid_inputs():
    g = RadialGrid.uniform(1, 2, 9)
    with pytest.raises(ValidationError):
        EigenPair(1.0, GridFunction(g, np.zeros(9)))
    with pytest.raises(ValidationError):
        principal_eig(ELL, -1.0, GEO)
    with pytest.raises(ValidationError):
        principal_eig(ELL, 0.0, GEO, weight_mu=-0.5)
