import numpy as np
import pytest

from wavedecay.core import DecayProfile, DomainError, NullPoint
from wavedecay.quadrature import CharGrid, GridSpec
from wavedecay.radial import (RadialField, RadialSource, constant_source, du_psi, dv_psi, h_of_uv, inner_integral,
                              phi_point, psi_point, read_field_csv, solve, source_lemma1, source_lemma2)

L1 = DecayProfile(1.0, 3.0, 2.0)


def zero_source():
    return RadialSource(lambda t, r: np.zeros(np.broadcast(t, r).shape), "zero")


@pytest.mark.parametrize("profile, t, r, expected", [
    ((1, 3, 2), 0, 0, 1.0),
    ((1, 3, 2), 1, 1, 1 / 27),
    ((2, 1, 1), 3, 1, 2 / 15),
])
def test_source_lemma1_examples(profile, t, r, expected):
    assert source_lemma1(DecayProfile(*profile))(t, r) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("profile, t, r, expected", [
    ((1, 1, 3, 3), 0, 0, 1.0),
    # <r>^3 <t+r> <t-r>^3 = 8 * 3 * 1 at (1, 1)
    ((1, 1, 3, 3), 1, 1, 1 / 24),
    ((1, 2, 2, 4), 2, 0, 1 / 81),
])
def test_source_lemma2_examples(profile, t, r, expected):
    assert source_lemma2(DecayProfile(*profile))(t, r) == pytest.approx(expected, rel=1e-15)


def test_source_lemma2_needs_lambda():
    with pytest.raises(DomainError):
        source_lemma2(L1)


def test_h_of_uv_examples():
    assert h_of_uv(source_lemma1(L1), NullPoint(3.0, 3.0)) == 0.0
    assert h_of_uv(source_lemma1(L1), NullPoint(1.0, 0.0)) == pytest.approx(0.0625)
    assert h_of_uv(constant_source(1.0), NullPoint(3.0, 1.0)) == pytest.approx(1.0)


def test_h_matches_null_form():
    src = source_lemma1(DecayProfile(0.7, 2.5, 3.0))
    rng = np.random.default_rng(3)
    u = rng.uniform(0, 50, 200)
    v = u * rng.uniform(-1, 1, 200)
    expected = 0.7 / 2 * (u - v) / ((1 + u) ** 2.5 * (1 + np.abs(v)) ** 3)
    np.testing.assert_allclose(src.h(u, v), expected, rtol=1e-13)


def test_du_psi_examples():
    assert du_psi(source_lemma1(L1), (2.0, -2.0)) == 0.0
    assert du_psi(constant_source(1.0), (2.0, 1.0)) == pytest.approx(0.9375, abs=1e-12)
    # golden; equals 1/64 since the odd part of the integrand cancels
    assert du_psi(source_lemma1(L1), (1.0, 1.0)) == pytest.approx(0.015625, abs=1e-12)


def test_dv_psi_constant_source():
    # psi = (v u^2 - v^2 u + u^3 - v^3)/16 for v >= 0
    assert dv_psi(constant_source(1.0), (2.0, 1.0)) == pytest.approx(-0.1875, abs=1e-12)
    # v < 0: psi = t^2 r / 2 still
    u, v = 3.0, -1.0
    t, r = 0.5 * (u + v), 0.5 * (u - v)
    assert dv_psi(constant_source(1.0), (u, v)) == pytest.approx(0.5 * (t * r - 0.5 * t * t), abs=1e-12)


def test_axis_derivatives_give_phi():
    src = source_lemma1(L1)
    t = 3.0
    val = du_psi(src, (t, t)) - dv_psi(src, (t, t))
    assert val == pytest.approx(t * t / (2 * (1 + t) ** 4), rel=1e-10)


def test_inner_integral_empty():
    assert inner_integral(constant_source(), 2.0, -2.0) == 0.0


def test_psi_point_constant_source():
    assert psi_point(constant_source(1.0), (2.0, 1.0)) == pytest.approx(0.5625, rel=1e-10)
    assert psi_point(constant_source(1.0), (2.0, 2.0)) == 0.0


def test_phi_point_closed_forms():
    src = source_lemma1(L1)
    for t in (0.5, 4.0, 37.0):
        assert phi_point(src, t, 0.0) == pytest.approx(t * t / (2 * (1 + t) ** 4), rel=1e-10)
    assert phi_point(src, 2.0, 1.0) == pytest.approx(0.02398510215927105, rel=1e-9)
    assert phi_point(constant_source(), 3.0, 2.5) == pytest.approx(4.5, rel=1e-10)


def test_solve_zero_source():
    field = solve(zero_source(), CharGrid.uniform(5.0, 10))
    *_, psi, phi = field.nodes()
    assert np.all(psi == 0.0) and np.all(phi == 0.0)


def test_solve_constant_source():
    grid = CharGrid.from_spec(GridSpec(u_max=20.0, per_unit=4))
    field = solve(constant_source(1.0), grid)
    u, v, t, r, psi, phi = field.nodes()
    np.testing.assert_allclose(phi, t * t / 2, rtol=1e-12, atol=1e-14)
    assert field.interpolate(2.0, 1.0) == pytest.approx(2.0, rel=1e-12)


def test_solve_lemma1_axis(lemma1_field):
    assert lemma1_field.interpolate(4.0, 0.0) == pytest.approx(0.0128, rel=1e-10)
    assert lemma1_field.interpolate(4.0, 0.0) <= 0.625 / 25
    t, phi = lemma1_field.axis()
    np.testing.assert_allclose(phi, t * t / (2 * (1 + t) ** 4), rtol=1e-8, atol=1e-18)


def test_solve_matches_point_evaluation(lemma1_field, lemma1_source):
    u, v, t, r, psi, phi = lemma1_field.nodes()
    rng = np.random.default_rng(5)
    for k in rng.choice(np.nonzero((r > 0) & (t < 400))[0], 12, replace=False):
        assert phi[k] == pytest.approx(phi_point(lemma1_source, t[k], r[k]), rel=1e-7)
    # off-node: bilinear interpolation error only
    assert lemma1_field.interpolate(7.25, 3.5) == pytest.approx(phi_point(lemma1_source, 7.25, 3.5), rel=1e-3)


def test_null_data(lemma1_field):
    grid = lemma1_field.grid
    idx = np.arange(grid.n_u)
    assert np.all(lemma1_field.psi_values[idx, grid.center + idx] == 0.0)
    assert np.all(lemma1_field.psi_values[idx, grid.center - idx] == 0.0)
    src = source_lemma1(L1)
    for u in (0.5, 10.0, 300.0):
        assert psi_point(src, (u, u)) == 0.0
        assert psi_point(src, (u, -u)) == 0.0


def test_positivity_and_monotonicity():
    grid = CharGrid.from_spec(GridSpec(u_max=40.0, per_unit=8))
    g1 = source_lemma1(DecayProfile(1.0, 2.5, 1.5))
    bump = RadialSource(lambda t, r: g1(t, r) + 0.3 * np.exp(-(t - 3) ** 2 - (r - 2) ** 2))
    f1 = solve(g1, grid)
    f2 = solve(bump, grid)
    valid = grid.valid_mask()
    assert np.all(f1.psi_values[valid] >= 0) and np.all(f1.phi_values[valid] >= 0)
    assert np.all(f2.psi_values[valid] >= f1.psi_values[valid])


def test_pde_residual_converges():
    H = lambda u, v: 0.5 * (u - v) / (1 + np.abs(u)) ** 3 / (1 + np.abs(v)) ** 2
    src = RadialSource(lambda t, r: 1.0 / (1 + t + r) ** 3 / (1 + np.abs(t - r)) ** 2)
    errs = []
    for n in (20, 40, 80):
        grid = CharGrid.uniform(4.0, n)
        P = solve(src, grid).psi_values
        U, V = grid.u_nodes, grid.v_nodes
        mixed = 4 * (P[1:, 1:] - P[1:, :-1] - P[:-1, 1:] + P[:-1, :-1]) / (np.diff(U)[:, None] * np.diff(V)[None, :])
        worst = 0.0
        for u, v in [(1.03, 0.47), (2.21, -1.13), (3.07, 1.58), (3.52, -0.71)]:
            i = np.searchsorted(U, u) - 1
            j = np.searchsorted(V, v) - 1
            uc, vc = 0.5 * (U[i] + U[i + 1]), 0.5 * (V[j] + V[j + 1])
            worst = max(worst, abs(mixed[i, j] - H(uc, vc)))
        errs.append(worst)
    # second-order stencil
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_axis_consistency():
    src = source_lemma1(L1)
    t = 4.0
    axis = phi_point(src, t, 0.0)
    d1 = abs(phi_point(src, t, 1e-2) - axis)
    d2 = abs(phi_point(src, t, 5e-3) - axis)
    assert d1 < 1e-2 * 1e-2  # O(r) with a small constant: phi is even in r
    assert d2 <= d1


def test_interpolation_domain(lemma1_field):
    with pytest.raises(DomainError):
        lemma1_field.interpolate(-1.0, 0.0)
    with pytest.raises(DomainError):
        lemma1_field.interpolate(600.0, 500.0)


def test_interpolation_exact_at_nodes(lemma1_field):
    u, v, t, r, psi, phi = lemma1_field.nodes()
    pick = np.random.default_rng(0).choice(len(t), 500, replace=False)
    np.testing.assert_allclose(lemma1_field.interpolate(t[pick], r[pick]), phi[pick], rtol=1e-12, atol=1e-300)


def test_field_is_read_only(lemma1_field):
    with pytest.raises(ValueError):
        lemma1_field.phi_values[0, 0] = 1.0


def test_csv_round_trip(tmp_path):
    field = solve(source_lemma1(L1), CharGrid.uniform(3.0, 6))
    path = tmp_path / "field.csv"
    field.to_csv(path)
    data = read_field_csv(path)
    u, v, t, r, psi, phi = field.nodes()
    for name, col in zip(("u", "v", "t", "r", "psi", "phi"), (u, v, t, r, psi, phi)):
        np.testing.assert_array_equal(data[name], col)


def test_from_function_and_subtraction():
    grid = CharGrid.uniform(4.0, 8)
    a = RadialField.from_function(grid, lambda t, r: t + r)
    b = RadialField.from_function(grid, lambda t, r: r)
    *_, t, r, psi, phi = (a - b).nodes()
    np.testing.assert_allclose(phi, t)
    np.testing.assert_allclose(psi, r * t)
    with pytest.raises(ValueError):
        a - RadialField.from_function(CharGrid.uniform(4.0, 8), lambda t, r: t)
