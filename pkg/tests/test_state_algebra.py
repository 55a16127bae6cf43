import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pevclock.errors import BasisMismatch, NonUnitary, NotHermitian, ZeroProjection
from pevclock.state_algebra import (
    Basis,
    HermitianOperator,
    Projector,
    ProjectorSet,
    StateVector,
    conjugate,
    group_eigenvalues,
    is_unitary,
    luders_update,
    multinomial_choice,
    spectral_projectors,
    transition_probability,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def hermitian_matrices(draw, max_dim=6):
    dim = draw(st.integers(1, max_dim))
    re = draw(arrays(float, (dim, dim), elements=finite))
    im = draw(arrays(float, (dim, dim), elements=finite))
    m = re + 1j * im
    return 0.5 * (m + m.conj().T)


@st.composite
def degenerate_hermitian(draw, max_dim=6):
    """Random unitary conjugation of an integer spectrum, so eigenvalues repeat."""
    dim = draw(st.integers(2, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    w = draw(arrays(float, dim, elements=st.integers(-2, 2).map(float)))
    m = (q * w) @ q.conj().T
    return 0.5 * (m + m.conj().T), w


@st.composite
def states(draw, dim):
    re = draw(arrays(float, dim, elements=finite))
    im = draw(arrays(float, dim, elements=finite))
    v = re + 1j * im
    if np.linalg.norm(v) < 1e-3:
        v = np.eye(dim)[0].astype(complex)
    return StateVector.of(v / np.linalg.norm(v))


# -- oracle examples -----------------------------------------------------------


def test_pauli_z_spectral_projectors():
    ps = spectral_projectors(HermitianOperator.of(np.diag([1.0, -1.0])))
    assert ps.labels == [-1.0, 1.0]
    np.testing.assert_allclose(ps.by_label(1.0).matrix, np.diag([1, 0]), atol=1e-15)
    np.testing.assert_allclose(ps.by_label(-1.0).matrix, np.diag([0, 1]), atol=1e-15)


def test_pauli_x_plus_state_probability_half():
    ps = spectral_projectors(HermitianOperator.of([[0, 1], [1, 0]]))
    plus = StateVector.of([1, 0])
    probs = [transition_probability(plus, p) for p in ps]
    assert probs == pytest.approx([0.5, 0.5], abs=1e-15)


def test_degenerate_identity_gives_one_projector():
    ps = spectral_projectors(HermitianOperator.of(np.eye(3)))
    assert len(ps) == 1
    assert ps[0].rank == 3


def test_luders_update_basis_state():
    state = StateVector.of([0.6, 0.8j])
    p1 = Projector(np.diag([0, 1]), label=1)
    out = luders_update(state, p1)
    np.testing.assert_allclose(out.amplitudes, [0, 1j])
    assert transition_probability(state, p1) == pytest.approx(0.64)


def test_luders_update_orthogonal_state_raises():
    with pytest.raises(ZeroProjection):
        luders_update(StateVector.of([1, 0]), Projector(np.diag([0, 1])))


def test_dimension_mismatch_raises():
    with pytest.raises(BasisMismatch):
        luders_update(StateVector.of([1, 0, 0]), Projector(np.eye(2)))
    with pytest.raises(BasisMismatch):
        StateVector(np.ones(3), Basis("b", 2))


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitian):
        HermitianOperator.of([[0, 1], [0, 0]])


def test_conjugate_needs_unitary():
    op = HermitianOperator.of(np.diag([1.0, 2.0]))
    with pytest.raises(NonUnitary):
        conjugate(op, np.array([[1, 1], [0, 1]]))
    swap = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(conjugate(op, swap).matrix, np.diag([2.0, 1.0]))


def test_group_eigenvalues_relative_tolerance():
    assert group_eigenvalues([1.0, 1.0 + 1e-12, 2.0]) == [[0, 1], [2]]
    assert group_eigenvalues([1e6, 1e6 + 1e-4], tol=1e-9) == [[0, 1]]
    assert group_eigenvalues([0.0, 1e-8], tol=1e-9) == [[0], [1]]


def test_multinomial_choice_edges():
    assert multinomial_choice([0.5, 0.5], 0.0) == 0
    assert multinomial_choice([0.5, 0.5], 0.5) == 1
    assert multinomial_choice([0.0, 1.0, 0.0], 0.999999) == 1
    assert multinomial_choice([2.0, 2.0], 0.75) == 1
    with pytest.raises(ZeroProjection):
        multinomial_choice([0.0, 0.0], 0.3)


def test_invalid_set_detected():
    bad = ProjectorSet((Projector(np.diag([1, 0])), Projector(np.diag([1, 1]))), Basis("b", 2))
    assert not bad.is_valid()


# -- properties ----------------------------------------------------------------


@given(hermitian_matrices())
def test_spectral_projectors_resolve_identity(m):
    ps = spectral_projectors(HermitianOperator.of(m))
    err = ps.invariant_errors()
    assert err["hermitian"] <= 1e-12
    assert err["idempotent"] <= 1e-10
    assert err["orthogonal"] <= 1e-10
    assert err["complete"] <= 1e-10
    np.testing.assert_allclose(ps.reconstruct(), m, atol=1e-9 * max(1.0, np.abs(m).max()))


@given(degenerate_hermitian())
def test_degenerate_spectra_grouped_by_multiplicity(data):
    m, w = data
    ps = spectral_projectors(HermitianOperator.of(m))
    assert ps.is_valid()
    values, counts = np.unique(w, return_counts=True)
    assert len(ps) == len(values)
    for value, count in zip(values, counts):
        assert ps.by_label(pytest.approx(value, abs=1e-9)).rank == count


@given(hermitian_matrices(max_dim=5), st.data())
def test_born_probabilities_sum_to_one(m, data):
    ps = spectral_projectors(HermitianOperator.of(m))
    psi = data.draw(states(m.shape[0]))
    total = sum(transition_probability(psi, p) for p in ps)
    assert total == pytest.approx(1.0, abs=1e-10)


@given(hermitian_matrices(max_dim=5), st.data())
def test_luders_update_is_idempotent(m, data):
    ps = spectral_projectors(HermitianOperator.of(m))
    psi = data.draw(states(m.shape[0]))
    p = max(ps, key=lambda q: transition_probability(psi, q))
    once = luders_update(psi, p)
    twice = luders_update(once, p)
    assert once.norm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(twice.amplitudes, once.amplitudes, atol=1e-10)
    assert transition_probability(once, p) == pytest.approx(1.0, abs=1e-10)


@given(hermitian_matrices(max_dim=4), st.integers(0, 2**32 - 1))
def test_conjugated_operator_keeps_spectrum(m, seed):
    rng = np.random.default_rng(seed)
    dim = m.shape[0]
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    assert is_unitary(q, tol=1e-10)
    out = conjugate(HermitianOperator.of(m), q)
    np.testing.assert_allclose(np.linalg.eigvalsh(out.matrix), np.linalg.eigvalsh(m), atol=1e-9)


@given(arrays(float, st.integers(1, 8), elements=st.floats(0, 1)), st.floats(0, 1, exclude_max=True))
def test_multinomial_choice_never_picks_zero_weight(w, u):
    if w.sum() <= 0:
        return
    idx = multinomial_choice(w, u)
    assert w[idx] > 0
