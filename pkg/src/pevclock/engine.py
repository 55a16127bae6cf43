"""General clock cycle on the truncated product space.

The state space is span{chi_lambda} (tracked temporal levels) tensored with
the interface basis {phi_j}. Product vectors are flattened row-major, index
``lambda * n_interface + j``, so ``kron(A_T, B_I)`` acts on a coefficient
matrix ``c`` as ``A_T @ c @ B_I.T``.

At step n the temporal factor is written in the shifted basis chi^(n) and the
interface factor in the fixed basis phi. The generator eigenbasis at step n
is chi^(n) tensor R_n phi with ``R_n = exp(-i k gamma A)``; ``k`` is n in the
cumulative frame and 1 in the per-step frame (see ``ClockModel.frame``).

A cycle maps the normalized post-readout coefficients c_{n-1} to

    a   = O(xi_n) @ c_{n-1} @ conj(R_n)          components in the eigenbasis
    G   = P_sigma[(M_u * a) @ R_n.T]             evolution projector, then readout

where ``O(xi)[l, l2] = <chi^(n)_l | chi^(n-1)_l2>`` and ``M_u`` masks the
(lambda, j) pairs whose generator eigenvalue is u. The branch probability is
``N^2 = sum |G|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import polar

from .errors import TruncationTooSmall, ZeroBranch
from .state_algebra import (
    DEFAULT_GROUP_TOL,
    Basis,
    HermitianOperator,
    Projector,
    ProjectorSet,
    StateVector,
    group_eigenvalues,
)
from .temporal import (
    TemporalEigenpair,
    TemporalModel,
    overlap_matrix,
    solve_temporal_eigenproblem,
    time_matrix,
)

ZERO_BRANCH_TOL = 1e-14
CLOSURES = ("unitary", "raw")
FRAMES = ("per-step", "cumulative")


@dataclass(frozen=True)
class EigenGroup:
    index: int
    w: float
    members: tuple[tuple[int, int], ...]  # (lambda, flat interface index)


@dataclass(frozen=True, eq=False)
class ClockModel:
    """Truncated clock: temporal levels, interface levels and the reconfigurer.

    ``closure`` controls the temporal overlap matrix restricted to the tracked
    levels: ``raw`` keeps the grid overlaps as computed (probability leaks to
    untracked levels when xi != 0), ``unitary`` replaces the matrix by its
    polar unitary factor so every cycle conserves probability.
    """

    temporal: TemporalModel
    levels: tuple[TemporalEigenpair, ...]
    hamiltonian_levels: tuple[float, ...]
    reconfigurer: np.ndarray
    gamma: float
    multiplicities: tuple[int, ...] = ()
    group_tol: float = DEFAULT_GROUP_TOL
    closure: str = "unitary"
    frame: str = "per-step"
    untracked_epsilon: tuple[float, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.closure not in CLOSURES:
            raise ValueError(f"closure must be one of {CLOSURES}")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        energies = tuple(float(e) for e in self.hamiltonian_levels)
        if not energies or list(energies) != sorted(energies) or not np.all(np.isfinite(energies)):
            raise ValueError("hamiltonian_levels must be finite, non-empty and sorted")
        object.__setattr__(self, "hamiltonian_levels", energies)
        mult = tuple(self.multiplicities) or (1,) * len(energies)
        if len(mult) != len(energies) or min(mult) < 1:
            raise ValueError("multiplicities must be positive and match hamiltonian_levels")
        object.__setattr__(self, "multiplicities", mult)
        n_i = sum(mult)
        a = np.array(self.reconfigurer, dtype=complex)
        if a.shape != (n_i, n_i):
            raise ValueError(f"reconfigurer must be {n_i}x{n_i}")
        if np.max(np.abs(a - a.conj().T)) > 1e-12:
            raise ValueError("reconfigurer must be Hermitian")
        a.flags.writeable = False
        object.__setattr__(self, "reconfigurer", a)
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("need at least one temporal level")

    # -- static structure -------------------------------------------------

    @classmethod
    def build(
        cls,
        temporal: TemporalModel,
        n_temporal: int,
        hamiltonian_levels: Sequence[float],
        gamma: float,
        reconfigurer=None,
        multiplicities: Sequence[int] = (),
        **kw,
    ) -> ClockModel:
        """Solve the temporal problem and assemble the model.

        The default reconfigurer couples neighbouring interface basis states
        with unit strength; for two levels it is the swap operator.
        """
        pairs = solve_temporal_eigenproblem(temporal, n_temporal + 1)
        n_i = sum(multiplicities) if multiplicities else len(hamiltonian_levels)
        if reconfigurer is None:
            reconfigurer = np.diag(np.ones(n_i - 1), 1) + np.diag(np.ones(n_i - 1), -1)
        return cls(
            temporal=temporal,
            levels=tuple(pairs[:n_temporal]),
            hamiltonian_levels=tuple(hamiltonian_levels),
            reconfigurer=np.asarray(reconfigurer, dtype=complex),
            gamma=gamma,
            multiplicities=tuple(multiplicities),
            untracked_epsilon=(pairs[n_temporal].epsilon_T,),
            **kw,
        )

    @property
    def m_T(self) -> float:
        return self.temporal.m_T

    @property
    def n_temporal(self) -> int:
        return len(self.levels)

    @property
    def n_interface(self) -> int:
        return sum(self.multiplicities)

    @property
    def n_readouts(self) -> int:
        return len(self.hamiltonian_levels)

    @property
    def dim(self) -> int:
        return self.n_temporal * self.n_interface

    @property
    def basis(self) -> Basis:
        return Basis("clock", self.dim)

    @property
    def epsilon(self) -> np.ndarray:
        return np.array([p.epsilon_T for p in self.levels])

    @property
    def level_of(self) -> np.ndarray:
        """Readout level of each flat interface basis index."""
        return np.repeat(np.arange(self.n_readouts), self.multiplicities)

    @property
    def interface_energies(self) -> np.ndarray:
        return np.asarray(self.hamiltonian_levels)[self.level_of]

    @property
    def groups(self) -> tuple[EigenGroup, ...]:
        """Distinct generator eigenvalues w = epsilon_lambda - E_nu.

        Groups are numbered by their first member in (lambda, j) order, so a
        single temporal level gives group index == interface index.
        """
        if "groups" not in self._cache:
            w = np.subtract.outer(self.epsilon, self.interface_energies)
            flat = w.reshape(-1)
            clusters = group_eigenvalues(flat, self.group_tol)
            clusters.sort(key=min)
            out = []
            for b, members in enumerate(clusters):
                members = sorted(members)
                pairs = tuple(divmod(m, self.n_interface) for m in members)
                out.append(EigenGroup(b, float(np.mean(flat[members])), pairs))
            self._cache["groups"] = tuple(out)
        return self._cache["groups"]

    def group_mask(self, u: int) -> np.ndarray:
        key = ("mask", u)
        if key not in self._cache:
            if not 0 <= u < len(self.groups):
                raise ValueError(f"no generator eigenvalue group {u}")
            m = np.zeros((self.n_temporal, self.n_interface), dtype=bool)
            for lam, j in self.groups[u].members:
                m[lam, j] = True
            self._cache[key] = m
        return self._cache[key]

    def group_of(self, lam: int, j: int) -> int:
        for g in self.groups:
            if (lam, j) in g.members:
                return g.index
        raise KeyError((lam, j))

    def cut_groups(self) -> list[int]:
        """Groups whose eigenvalue is shared with an untracked temporal level."""
        cut = []
        for g in self.groups:
            for eps in self.untracked_epsilon:
                ws = eps - self.interface_energies
                if np.any(np.abs(ws - g.w) <= self.group_tol * (1.0 + abs(g.w))):
                    cut.append(g.index)
                    break
        return cut

    @property
    def time_matrix(self) -> np.ndarray:
        if "tmat" not in self._cache:
            self._cache["tmat"] = time_matrix([p.f for p in self.levels])
        return self._cache["tmat"]

    # -- step-dependent pieces ------------------------------------------

    def rotation_power(self, n: int) -> int:
        if n <= 0:
            return 0
        return n if self.frame == "cumulative" else 1

    def interface_rotation(self, n: int) -> np.ndarray:
        """R_n = exp(-i k gamma A); column j holds phi^(n)_j in the phi basis."""
        k = self.rotation_power(n)
        key = ("rot", k)
        if key not in self._cache:
            if "a_eig" not in self._cache:
                self._cache["a_eig"] = np.linalg.eigh(self.reconfigurer)
            vals, vecs = self._cache["a_eig"]
            self._cache[key] = (vecs * np.exp(-1j * k * self.gamma * vals)) @ vecs.conj().T
        return self._cache[key]

    def _overlaps(self, xi: float) -> tuple[np.ndarray, np.ndarray]:
        # only the latest shift is memoized: continuous xi rarely repeats
        hit = self._cache.get("ov")
        if hit is not None and hit[0] == xi:
            return hit[1], hit[2]
        if xi == 0.0:
            raw = np.eye(self.n_temporal, dtype=complex)
            closed = raw
        else:
            raw = overlap_matrix([p.f for p in self.levels], xi, self.m_T)
            closed = raw if self.closure == "raw" else polar(raw)[0]
        self._cache["ov"] = (float(xi), raw, closed)
        return raw, closed

    def raw_overlap(self, xi: float) -> np.ndarray:
        return self._overlaps(float(xi))[0]

    def temporal_overlap(self, xi: float) -> np.ndarray:
        """O[l, l2] = <chi^(n)_l | chi^(n-1)_l2> after the configured closure."""
        return self._overlaps(float(xi))[1]


@dataclass(frozen=True)
class GeneratorSnapshot:
    step_index: int
    beta: float
    rotation: np.ndarray
    eigenvalues: tuple[float, ...]


@dataclass(frozen=True)
class GCoefficients:
    """Post-readout expansion coefficients over chi^(n)_lambda tensor phi_j.

    ``values`` is unnormalized; ``norm`` is its Frobenius norm N, and N^2 is
    the conditional probability of the cycle that produced it.
    """

    values: np.ndarray
    step_index: int
    norm: float
    sigma: int
    u: int
    beta: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def normalized(self) -> np.ndarray:
        return self.values / self.norm


def snapshot(model: ClockModel, step_index: int, beta: float = 0.0) -> GeneratorSnapshot:
    return GeneratorSnapshot(
        step_index=step_index,
        beta=beta,
        rotation=model.interface_rotation(step_index),
        eigenvalues=tuple(g.w for g in model.groups),
    )


def generator_matrix(model: ClockModel, snap: GeneratorSnapshot) -> HermitianOperator:
    """Evolution generator restricted to the tracked space, in the step basis."""
    r = snap.rotation
    h_rot = r @ np.diag(model.interface_energies) @ r.conj().T
    w = np.kron(np.diag(model.epsilon), np.eye(model.n_interface)) - np.kron(np.eye(model.n_temporal), h_rot)
    return HermitianOperator(0.5 * (w + w.conj().T), model.basis)


def build_evolution_operators(model: ClockModel, snap: GeneratorSnapshot, strict: bool = False) -> ProjectorSet:
    """Projectors onto the generator eigenspaces at one step, labeled by w.

    With ``strict`` a group that also contains untracked temporal levels
    raises TruncationTooSmall.
    """
    if strict and model.cut_groups():
        raise TruncationTooSmall(f"eigenvalue groups {model.cut_groups()} extend past the temporal truncation")
    r = snap.rotation
    eye_t = np.eye(model.n_temporal)
    projectors = []
    for g in model.groups:
        mat = np.zeros((model.dim, model.dim), dtype=complex)
        for lam, j in g.members:
            col = r[:, j]
            mat += np.kron(np.outer(eye_t[lam], eye_t[lam]), np.outer(col, col.conj()))
        projectors.append(Projector(mat, label=g.w))
    return ProjectorSet(tuple(projectors), model.basis)


def interface_projectors(model: ClockModel) -> ProjectorSet:
    """Readout projectors |phi_nu><phi_nu| tensor identity on the temporal factor."""
    level = model.level_of
    projectors = []
    for nu in range(model.n_readouts):
        p_i = np.diag((level == nu).astype(complex))
        projectors.append(Projector(np.kron(np.eye(model.n_temporal), p_i), label=nu))
    return ProjectorSet(tuple(projectors), model.basis)


def initial_coefficients(model: ClockModel, lambda0: int = 0, nu0: int = 0) -> GCoefficients:
    """Start in the generator eigenstate chi_lambda0 tensor phi_nu0."""
    j0 = int(np.flatnonzero(model.level_of == nu0)[0])
    vals = np.zeros((model.n_temporal, model.n_interface), dtype=complex)
    vals[lambda0, j0] = 1.0
    return GCoefficients(vals, 0, 1.0, nu0, model.group_of(lambda0, j0), 0.0)


def prepare_initial(model: ClockModel, coefficients, u0: int, sigma0: int) -> GCoefficients:
    """Project an arbitrary starting state with E(tau_0; u0), then read sigma0."""
    c = np.asarray(coefficients, dtype=complex).reshape(model.n_temporal, model.n_interface)
    nrm = np.linalg.norm(c)
    if nrm <= ZERO_BRANCH_TOL:
        raise ZeroBranch("initial state is null")
    prev = GCoefficients(c, -1, float(nrm), -1, -1, 0.0)
    return _step(model, prev, sigma0, u0, 0.0, step_index=0)


def _amplitudes(model: ClockModel, prev: GCoefficients, xi: float, n: int) -> np.ndarray:
    r = model.interface_rotation(n)
    return model.temporal_overlap(xi) @ prev.normalized @ r.conj()


def _step(model, prev, sigma, u, xi, step_index) -> GCoefficients:
    n = step_index
    r = model.interface_rotation(n)
    a = _amplitudes(model, prev, xi, n)
    g = np.where(model.group_mask(u), a, 0.0) @ r.T
    g[:, model.level_of != sigma] = 0.0
    nrm = float(np.linalg.norm(g))
    if nrm <= ZERO_BRANCH_TOL:
        raise ZeroBranch(f"branch (u={u}, sigma={sigma}) has zero probability at step {n}")
    return GCoefficients(g, n, nrm, sigma, u, prev.beta + xi)


def g_recurrence_step(model: ClockModel, prev: GCoefficients, sigma_n: int, u_n: int, xi_n: float) -> GCoefficients:
    """Advance the expansion coefficients through one clock cycle."""
    if not 0 <= sigma_n < model.n_readouts:
        raise ValueError(f"no readout level {sigma_n}")
    return _step(model, prev, sigma_n, u_n, xi_n, prev.step_index + 1)


def branch_table(model: ClockModel, prev: GCoefficients, xi_n: float) -> np.ndarray:
    """N^2 of every (u, sigma) alternative of the next cycle, shape (groups, readouts)."""
    n = prev.step_index + 1
    r = model.interface_rotation(n)
    a = _amplitudes(model, prev, xi_n, n)
    level = model.level_of
    out = np.zeros((len(model.groups), model.n_readouts))
    for g in model.groups:
        weights = np.sum(np.abs(np.where(model.group_mask(g.index), a, 0.0) @ r.T) ** 2, axis=0)
        out[g.index] = np.bincount(level, weights=weights, minlength=model.n_readouts)
    return out


def path_probability(g: GCoefficients) -> float:
    return g.norm**2


def clock_reading_expectation(g: GCoefficients, beta_n: float, tmat: np.ndarray) -> float:
    """Expected time-operator reading of the post-readout state.

    ``tmat`` holds <chi_l1|t|chi_l2> for the unshifted tracked levels.
    """
    c = g.normalized
    # sum over interface index of conj(c[l1, j]) c[l2, j]
    rho = c.conj() @ c.T
    return float(beta_n + np.sum(rho * tmat).real)


def state_vector(model: ClockModel, g: GCoefficients) -> StateVector:
    """Normalized post-readout state, flattened over chi^(n) tensor phi."""
    return StateVector(g.normalized.reshape(-1), model.basis)


def carried_state(model: ClockModel, g: GCoefficients, xi_next: float) -> StateVector:
    """The same state re-expanded over the next step's temporal basis chi^(n+1).

    Under the ``raw`` closure the result is not normalized; its squared norm is
    the probability retained within the tracked levels.
    """
    v = model.temporal_overlap(xi_next) @ g.normalized
    amps = v.reshape(-1)
    return StateVector(amps, model.basis)
