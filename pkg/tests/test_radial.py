import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singular_pucci.errors import PreconditionError, SingularityBreach, ValidationError
from singular_pucci.grid import GridFunction, RadialGrid, interior_derivatives
from singular_pucci.params import Ellipticity, from_flat, pucci
from singular_pucci.radial import (hopf_point, integrating_factors, radial_pucci,
                                   residual_parts, sabu_residual, theta)


def test_grid_geometric():
    g = RadialGrid.geometric(1.0, 2.0)
    assert g.size == 2049 and g.nodes[0] == 1.0 and g.nodes[-1] == 2.0
    assert g.h[0] == pytest.approx(1e-6, rel=1e-9)
    assert g.h[-1] / g.h[0] == pytest.approx(g.grading ** 2047, rel=1e-9)
    assert np.all(np.diff(g.nodes) > 0)


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValidationError):
        RadialGrid(np.array([1.0, 1.0, 2.0]))
    with pytest.raises(ValidationError):
        GridFunction(RadialGrid.uniform(1, 2, 5), [0, 1, np.nan, 1, 0])


def test_csv_round_trip(tmp_path):
    g = RadialGrid.geometric(1, 2, 65)
    w = GridFunction(g, np.sin(g.nodes))
    back = GridFunction.from_csv(w.to_csv(tmp_path / "w.csv"))
    assert np.array_equal(back.values, w.values) and np.array_equal(back.r, w.r)


def test_stencils_exact_for_quadratics():
    r = RadialGrid.geometric(1, 2, 101, first_cell=1e-3).nodes
    w = 3 - 2 * r + 5 * r ** 2
    d1, d2 = interior_derivatives(r, w)
    assert np.allclose(d1, -2 + 10 * r[1:-1], rtol=1e-9)
    assert np.allclose(d2, 10.0, rtol=1e-7)


def test_theta_examples():
    ell = Ellipticity(1, 2)
    assert theta(0.0, ell) == 2 and theta(-0.1, ell) == 1
    assert np.all(theta(np.array([-1.0, 0.0, 3.0]), Ellipticity(1, 1)) == 1)


def test_radial_pucci_examples():
    ell = Ellipticity(1, 2, 2)
    assert radial_pucci(2.0, 2.0, 1.0, ell) == 8.0
    assert radial_pucci(-1.0, 0.0, 1.0, ell) == -1.0
    assert radial_pucci(1.5, 0.5, 2.0, Ellipticity(1, 1, 3)) == pytest.approx(1.5 + 2 * 0.5 / 2)
    with pytest.raises(ValidationError):
        radial_pucci(1.0, 1.0, 0.0, ell)


@settings(max_examples=100)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.1, 5), st.integers(1, 5))
def test_radial_pucci_matches_matrix_form(wpp, wp, r, n):
    ell = Ellipticity(0.7, 2.3, n)
    X = np.diag([wp / r] * (n - 1) + [wpp])
    for sign in ("plus", "minus"):
        assert radial_pucci(wpp, wp, r, ell, sign) == pytest.approx(pucci(X, ell, sign), abs=1e-12 * (1 + abs(wpp) + abs(wp) / r))


def test_constant_residual():
    spec = from_flat({"B": 0, "b": 0, "mu": 0, "alpha": 2, "c0": 0.3, "M": 1.5})
    g = RadialGrid.uniform(1, 2, 33)
    K, delta = 0.7, 0.01
    res = sabu_residual(GridFunction(g, np.full(g.size, K)), spec, delta)
    assert np.allclose(res.values[1:-1], -0.3 * K + 1.5 * (K + delta) ** -2, atol=1e-12)
    assert res.values[0] == res.values[-1] == 0.0


def test_singular_breach_and_negative_delta():
    spec = from_flat({})
    g = RadialGrid.uniform(1, 2, 9)
    w = GridFunction(g, np.zeros(g.size))
    with pytest.raises(SingularityBreach):
        sabu_residual(w, spec, 0.0)
    with pytest.raises(PreconditionError):
        sabu_residual(w, spec, -1.0)


def _manufactured(r, spec, exact, d1, d2):
    wp, wpp = d1(r), d2(r)
    ell, g = spec.ellipticity, spec.growth
    return (theta(wpp, ell) * wpp + theta(wp, ell) * (ell.dim - 1) * wp / r
            + g.B * wp ** 2 - g.c0 * exact(r) + spec.forcing.M * (r - 1) ** spec.forcing.mu
            * (exact(r) + 0.01) ** -spec.forcing.alpha)


def test_quadratic_manufactured_solution_is_reproduced_exactly():
    # the three-point stencils are exact for quadratics, so the residual is at rounding level
    spec = from_flat({"lambda": 1, "Lambda": 2})
    exact = lambda r: (r - 1) + (r - 1) ** 2
    src = lambda r: _manufactured(r, spec, exact, lambda r: 1 + 2 * (r - 1), lambda r: 2 + 0 * r)
    for n in (129, 257, 513):
        g = RadialGrid.geometric(1, 2, n, first_cell=1e-3)
        res = sabu_residual(GridFunction(g, exact(g.nodes)), spec, 0.01, src(g.nodes[1:-1]))
        assert np.max(np.abs(res.values)) <= 1e-9


def test_residual_second_order_on_smooth_solution():
    spec = from_flat({"lambda": 1, "Lambda": 2})
    exact = lambda r: np.sin(2 * (r - 1)) + (r - 1)
    d1 = lambda r: 2 * np.cos(2 * (r - 1)) + 1
    d2 = lambda r: -4 * np.sin(2 * (r - 1))
    errs = []
    for n in (65, 129, 257, 513):
        g = RadialGrid.uniform(1, 2, n)
        src = _manufactured(g.nodes[1:-1], spec, exact, d1, d2)
        errs.append(np.max(np.abs(sabu_residual(GridFunction(g, exact(g.nodes)), spec, 0.01, src).values)))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(q >= 3.5 for q in ratios), ratios


def test_integrating_factors_isotropic():
    g = RadialGrid.geometric(1, 2, 513)
    w = GridFunction(g, np.log(g.nodes))
    f = integrating_factors(w, Ellipticity(1, 1, 3))
    assert np.allclose(f.chi.values, 2 / g.nodes, rtol=1e-12)
    assert np.allclose(f.xi.values, g.nodes ** 2, rtol=1e-8)
    f1 = integrating_factors(w, Ellipticity(1, 1, 1))
    assert np.all(f1.chi.values == 0) and np.allclose(f1.xi.values, 1.0)


@settings(max_examples=30)
@given(st.integers(0, 2 ** 31), st.floats(0.6, 3.0))
def test_integrating_factor_bounds(seed, rho):
    rng = np.random.default_rng(seed)
    ell = Ellipticity(1, 2, 3)
    g = RadialGrid.uniform(rho, rho + 1.5, 101)
    w = GridFunction(g, rng.standard_normal(g.size).cumsum())
    f = integrating_factors(w, ell)
    xi, xt, r = f.xi.values, f.xi_tilde.values, g.nodes
    assert np.all(xi / ell.Lam <= xt * (1 + 1e-14)) and np.all(xt <= xi / ell.lam * (1 + 1e-14))
    Np, Nm = (1 / 2) * 2 + 1, 2 * 2 + 1
    lo = np.minimum(r ** (Np - 1), r ** (Nm - 1))
    hi = np.maximum(r ** (Np - 1), r ** (Nm - 1))
    assert np.all(lo * (1 - 1e-12) <= xi) and np.all(xi <= hi * (1 + 1e-12))


def test_hopf_point_examples():
    g = RadialGrid.uniform(1, 2, 1001)
    h = hopf_point(GridFunction(g, np.sin(np.pi * (g.nodes - 1))))
    assert abs(h - 1.5) <= g.h.max()
    assert hopf_point(GridFunction(g, g.nodes)) == 2.0


def test_residual_scale_is_nonnegative():
    spec = from_flat({})
    g = RadialGrid.geometric(1, 2, 65)
    parts = residual_parts(g.nodes, 1 + np.sin(g.nodes), spec, 0.1)
    assert np.all(parts.scale >= np.abs(parts.residual) * (1 - 1e-12))
