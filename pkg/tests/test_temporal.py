import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pevclock.errors import GridMismatch, GridTooCoarse, NotNormalized, ShiftTooLarge
from pevclock.temporal import (
    Potential,
    TemporalGrid,
    TemporalGridFunction,
    TemporalModel,
    chi_overlap,
    overlap_matrix,
    read_eigenpairs_csv,
    shift,
    solve_temporal_eigenproblem,
    temporal_momentum_expectation,
    time_expectation,
    time_matrix,
    time_variance,
    write_eigenpairs_csv,
)


@pytest.fixture(scope="module")
def harmonic_levels():
    return solve_temporal_eigenproblem(TemporalModel.harmonic(), 10)


def gaussian(grid, center=0.0, width=1.0):
    return TemporalGridFunction.from_callable(grid, lambda t: np.exp(-((t - center) ** 2) / (4 * width**2)))


def test_harmonic_levels_match_oscillator(harmonic_levels):
    for p in harmonic_levels:
        assert p.energy == pytest.approx(p.lambda_index + 0.5, abs=1e-3)
        assert p.epsilon_T == pytest.approx(0.5 - p.energy)


@pytest.mark.parametrize("m_T,omega", [(2.0, 1.0), (1.0, 3.0), (0.5, 0.5)])
def test_harmonic_levels_scale_with_omega(m_T, omega):
    pairs = solve_temporal_eigenproblem(TemporalModel.harmonic(m_T, omega), 5)
    for p in pairs:
        assert p.energy == pytest.approx((p.lambda_index + 0.5) * omega, rel=1e-3)


def test_box_levels_match_infinite_well():
    grid = TemporalGrid.symmetric(1.0, 2049)
    pairs = solve_temporal_eigenproblem(TemporalModel(1.0, Potential("box"), grid), 4)
    for p in pairs:
        n = p.lambda_index + 1
        assert p.energy == pytest.approx(n**2 * math.pi**2 / (2 * grid.extent**2), rel=1e-5)


def test_square_well_has_bound_ground_state():
    grid = TemporalGrid.symmetric(8.0, 4096)
    pairs = solve_temporal_eigenproblem(TemporalModel(1.0, Potential("square_well", depth=5.0), grid), 2)
    assert -5.0 < pairs[0].energy < 0.0
    assert time_expectation(pairs[0].f) == pytest.approx(0.0, abs=1e-8)


def test_levels_orthonormal_and_parity(harmonic_levels):
    gram = np.array([[a.f.inner(b.f) for b in harmonic_levels] for a in harmonic_levels])
    np.testing.assert_allclose(gram, np.eye(10), atol=1e-10)
    for p in harmonic_levels:
        vals = p.f.values.real
        sign = (-1) ** p.lambda_index
        # grid is symmetric, so reversal maps t to -t
        np.testing.assert_allclose(vals[::-1], sign * vals, atol=1e-9)


def test_ground_state_moments(harmonic_levels):
    f0 = harmonic_levels[0].f
    assert time_expectation(f0) == pytest.approx(0.0, abs=1e-8)
    assert time_variance(f0) == pytest.approx(0.5, rel=1e-4)
    assert temporal_momentum_expectation(f0, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert temporal_momentum_expectation(f0, 2.5) == pytest.approx(2.5, abs=1e-8)


def test_excited_state_variance(harmonic_levels):
    # oscillator <t^2> = (n + 1/2) / (m omega)
    for p in harmonic_levels[:4]:
        assert time_variance(p.f) == pytest.approx(p.lambda_index + 0.5, rel=1e-4)


@pytest.mark.parametrize("m_T,omega", [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)])
def test_displaced_overlap_gaussian_oracle(m_T, omega):
    f0 = solve_temporal_eigenproblem(TemporalModel.harmonic(m_T, omega), 1)[0].f
    for xi in np.linspace(0.0, 0.5, 6):
        amp = chi_overlap(f0, f0, xi, m_T)
        assert abs(amp) == pytest.approx(math.exp(-m_T * omega * xi**2 / 4), abs=1e-4)
        assert np.angle(amp * np.exp(1j * m_T * xi)) == pytest.approx(0.0, abs=1e-9)


def test_overlap_matrix_matches_pairwise(harmonic_levels):
    fs = [p.f for p in harmonic_levels[:3]]
    mat = overlap_matrix(fs, 0.2, 1.0)
    for i in range(3):
        for j in range(3):
            assert mat[i, j] == pytest.approx(chi_overlap(fs[i], fs[j], 0.2, 1.0), abs=1e-13)
    np.testing.assert_allclose(overlap_matrix(fs, 0.0, 1.0), np.eye(3), atol=1e-10)


def test_time_matrix_oscillator_ladder(harmonic_levels):
    # <n|t|n+1> = sqrt((n+1)/2) for m = omega = 1
    tm = time_matrix([p.f for p in harmonic_levels[:4]])
    for n in range(3):
        assert abs(tm[n, n + 1]) == pytest.approx(math.sqrt((n + 1) / 2), rel=1e-4)
        assert tm[n, n] == pytest.approx(0.0, abs=1e-8)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        solve_temporal_eigenproblem(TemporalModel.harmonic(n_points=64), 17)


def test_unnormalized_input_rejected():
    grid = TemporalGrid.symmetric(5.0, 256)
    raw = TemporalGridFunction(grid, np.exp(-grid.points**2))
    with pytest.raises(NotNormalized):
        time_expectation(raw)


def test_shift_too_large_and_grid_mismatch():
    g1 = TemporalGrid.symmetric(5.0, 256)
    f = gaussian(g1)
    with pytest.raises(ShiftTooLarge):
        shift(f, 2.5)
    with pytest.raises(GridMismatch):
        overlap_matrix([f, gaussian(TemporalGrid.symmetric(6.0, 256))], 0.1, 1.0)


def test_bad_potential_and_mass():
    with pytest.raises(ValueError):
        Potential("quartic")
    with pytest.raises(ValueError):
        TemporalModel.harmonic(m_T=0.0)


def test_eigenpairs_csv_roundtrip(tmp_path, harmonic_levels):
    path = tmp_path / "eig.csv"
    write_eigenpairs_csv(path, harmonic_levels[:3])
    t, rows = read_eigenpairs_csv(path)
    np.testing.assert_array_equal(t, harmonic_levels[0].f.grid.points)
    for (idx, eps, vals), p in zip(rows, harmonic_levels):
        assert idx == p.lambda_index
        assert eps == p.epsilon_T
        np.testing.assert_array_equal(vals, p.f.values.real)


GRID = TemporalGrid.symmetric(12.0, 2048)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.5, 1.5), st.floats(-2, 2))
def test_shift_moves_center_by_xi(center, width, xi):
    f = gaussian(GRID, center, width)
    moved = shift(f, xi).normalized()
    assert time_expectation(moved) == pytest.approx(center + xi, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.5, 2.0), st.floats(-3, 3), st.floats(0.5, 2.0), st.floats(-2, 2))
def test_overlap_bounded_by_one(c1, w1, c2, w2, xi):
    a, b = gaussian(GRID, c1, w1), gaussian(GRID, c2, w2)
    assert abs(chi_overlap(a, b, xi, 1.0)) <= 1.0 + 1e-9
    assert abs(chi_overlap(a, a, 0.0, 1.0)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.1, 5.0))
def test_momentum_expectation_equals_inertia_for_real_states(width, m_T):
    f = gaussian(GRID, 0.0, width)
    assert temporal_momentum_expectation(f, m_T) == pytest.approx(m_T, abs=1e-10)
