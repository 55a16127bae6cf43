"""Dense state vectors, projectors and resolutions of unity.

Everything here works on small, truncated, finite-dimensional spaces with
plain numpy arrays. Objects are frozen after construction; the arrays they
hold are flagged read-only so they can be shared between threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BasisMismatch,
    EigenFailure,
    NonUnitary,
    NotHermitian,
    ZeroProjection,
)

ZERO_PROJECTION_TOL = 1e-14
DEFAULT_GROUP_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Basis:
    """Identifies a truncated basis by name and dimension."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"basis dimension must be positive, got {self.dim}")


def _check_basis(a: Basis, b: Basis) -> None:
    if a != b:
        raise BasisMismatch(f"basis {a} does not match {b}")


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    basis: Basis

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        amps.flags.writeable = False
        if amps.shape[0] != self.basis.dim:
            raise BasisMismatch(
                f"state has {amps.shape[0]} amplitudes, basis {self.basis.name} has dim {self.basis.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def of(cls, amplitudes, name: str = "default") -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amps, Basis(name, amps.shape[0]))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> StateVector:
        nrm = self.norm
        if nrm <= ZERO_PROJECTION_TOL:
            raise ZeroProjection("cannot normalize a null vector")
        return StateVector(self.amplitudes / nrm, self.basis)


@dataclass(frozen=True)
class HermitianOperator:
    matrix: np.ndarray
    basis: Basis

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise BasisMismatch(f"operator shape {m.shape} does not fit basis dim {self.basis.dim}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
            raise NotHermitian("operator is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def of(cls, matrix, name: str = "default") -> HermitianOperator:
        m = np.asarray(matrix, dtype=complex)
        return cls(m, Basis(name, m.shape[0]))


@dataclass(frozen=True)
class Projector:
    matrix: np.ndarray
    label: object = None

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def apply(self, state: StateVector) -> np.ndarray:
        if self.matrix.shape[0] != state.basis.dim:
            raise BasisMismatch(
                f"projector dim {self.matrix.shape[0]} does not match state dim {state.basis.dim}"
            )
        return self.matrix @ state.amplitudes

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def idempotence_error(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix)))


@dataclass(frozen=True)
class ProjectorSet:
    """Labeled orthogonal resolution of unity."""

    projectors: tuple[Projector, ...]
    basis: Basis

    def __post_init__(self):
        object.__setattr__(self, "projectors", tuple(self.projectors))
        for p in self.projectors:
            if p.matrix.shape != (self.basis.dim, self.basis.dim):
                raise BasisMismatch("projector shape does not fit the basis")

    def __len__(self) -> int:
        return len(self.projectors)

    def __iter__(self):
        return iter(self.projectors)

    def __getitem__(self, i) -> Projector:
        return self.projectors[i]

    @property
    def labels(self) -> list:
        return [p.label for p in self.projectors]

    def by_label(self, label) -> Projector:
        for p in self.projectors:
            if p.label == label:
                return p
        raise KeyError(label)

    def invariant_errors(self) -> dict[str, float]:
        """Largest violation of each resolution-of-unity property."""
        mats = [p.matrix for p in self.projectors]
        herm = max(p.hermiticity_error() for p in self.projectors)
        idem = max(p.idempotence_error() for p in self.projectors)
        orth = 0.0
        for i in range(len(mats)):
            for j in range(len(mats)):
                if i != j:
                    orth = max(orth, float(np.max(np.abs(mats[i] @ mats[j]))))
        comp = float(np.max(np.abs(sum(mats) - np.eye(self.basis.dim))))
        return {"hermitian": herm, "idempotent": idem, "orthogonal": orth, "complete": comp}

    def is_valid(self) -> bool:
        err = self.invariant_errors()
        return (
            err["hermitian"] <= 1e-12
            and err["idempotent"] <= 1e-10
            and err["orthogonal"] <= 1e-10
            and err["complete"] <= 1e-10
        )

    def reconstruct(self) -> np.ndarray:
        """Sum of label * projector; labels must be numeric eigenvalues."""
        return sum(float(p.label) * p.matrix for p in self.projectors)


def luders_update(state: StateVector, projector: Projector) -> StateVector:
    """Project and renormalize, with the global phase fixed to zero."""
    v = projector.apply(state)
    nrm = np.linalg.norm(v)
    if nrm <= ZERO_PROJECTION_TOL:
        raise ZeroProjection(f"projector {projector.label!r} annihilates the state")
    return StateVector(v / nrm, state.basis)


def transition_probability(state: StateVector, projector: Projector) -> float:
    if projector.matrix.shape[0] != state.basis.dim:
        raise BasisMismatch("projector and state live in different spaces")
    psi = state.amplitudes
    prob = float(np.vdot(psi, projector.matrix @ psi).real)
    return min(max(prob, 0.0), 1.0)


def group_eigenvalues(values: Sequence[float], tol: float = DEFAULT_GROUP_TOL) -> list[list[int]]:
    """Cluster indices of (approximately) equal eigenvalues.

    Two neighbours in sorted order share a cluster when their gap is at most
    ``tol * (1 + |w|)``. Clusters are returned in ascending eigenvalue order.
    """
    if tol <= 0:
        raise ValueError("group_tol must be positive")
    vals = np.asarray(values, dtype=float)
    order = np.argsort(vals, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups:
            last = vals[groups[-1][-1]]
            if abs(vals[idx] - last) <= tol * (1.0 + abs(last)):
                groups[-1].append(int(idx))
                continue
        groups.append([int(idx)])
    return groups


def spectral_projectors(op: HermitianOperator, group_tol: float = DEFAULT_GROUP_TOL) -> ProjectorSet:
    """Resolution of unity built from the eigenspaces of ``op``.

    Projector labels are the (cluster-averaged) eigenvalues.
    """
    try:
        w, v = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigenFailure("non-finite eigenvalues")
    projectors = []
    for group in group_eigenvalues(w, group_tol):
        vecs = v[:, group]
        projectors.append(Projector(vecs @ vecs.conj().T, label=float(np.mean(w[group]))))
    return ProjectorSet(tuple(projectors), op.basis)


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def conjugate(op: HermitianOperator, u) -> HermitianOperator:
    """Return ``u @ op @ u^dagger``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != op.matrix.shape:
        raise BasisMismatch("unitary and operator shapes differ")
    if not is_unitary(u):
        raise NonUnitary("conjugating matrix is not unitary")
    m = u @ op.matrix @ u.conj().T
    return HermitianOperator(0.5 * (m + m.conj().T), op.basis)


def multinomial_choice(probabilities, u: float) -> int:
    """Index picked by a uniform draw ``u`` in [0, 1) against cumulative weights.

    Weights need not be normalized; they are scaled by their sum. Zero-weight
    entries are never returned.
    """
    p = np.asarray(probabilities, dtype=float)
    total = p.sum()
    if total <= 0:
        raise ZeroProjection("all branches have zero probability")
    cdf = np.cumsum(p) / total
    idx = int(np.searchsorted(cdf, u, side="right"))
    idx = min(idx, len(p) - 1)
    while p[idx] <= 0:
        idx -= 1
    return idx
