"""Closed forms for the two-level clock interface.

The interface lives in span{phi_0, phi_1}; the reconfigurer swaps the two
states and the interface reads in the fixed phi basis. A readout flip
sigma_{n-1} != sigma_n is a click.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

OVERLAP_MODES = ("unit", "exact-grid")

RECONFIGURER = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class TwoStateParams:
    """Parameters of the two-state clock.

    ``overlap_mode`` selects how the temporal overlap entering the click
    probability is evaluated: ``unit`` sets it to one, ``exact-grid``
    computes it on the temporal grid for the harmonic ground state.
    """

    gamma: float
    m_T: float = 1.0
    xi_mean: float = 0.01
    overlap_mode: str = "unit"
    omega: float = 1.0
    energies: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.gamma <= math.pi / 2:
            raise ValueError(f"gamma must lie in [0, pi/2], got {self.gamma}")
        if self.xi_mean < 0:
            raise ValueError("xi_mean must be non-negative")
        if self.m_T <= 0:
            raise ValueError("m_T must be positive")
        if self.overlap_mode not in OVERLAP_MODES:
            raise ValueError(f"overlap_mode must be one of {OVERLAP_MODES}")

    @property
    def p_unit(self) -> float:
        return 0.5 * math.sin(2.0 * self.gamma) ** 2


@dataclass(frozen=True)
class InterfaceState:
    sigma: int

    def __post_init__(self):
        if self.sigma not in (0, 1):
            raise ValueError("sigma must be 0 or 1")

    def flipped(self) -> InterfaceState:
        return InterfaceState(1 - self.sigma)


def reconfigure_unitary(gamma: float) -> np.ndarray:
    """exp(-i gamma A) for the swap reconfigurer, using A^2 = 1 on the pair."""
    a = RECONFIGURER
    return np.eye(2) - 1j * math.sin(gamma) * a + (math.cos(gamma) - 1.0) * (a @ a)


def _amplitude_table(gamma: float) -> dict[tuple[int, int, int], complex]:
    s2 = math.sin(2.0 * gamma)
    c2 = math.cos(gamma) ** 2
    sn2 = math.sin(gamma) ** 2
    # key: (sigma_from, nu, sigma_to)
    return {
        (0, 1, 1): 0.5j * s2,
        (0, 0, 1): -0.5j * s2,
        (0, 1, 0): sn2,
        (0, 0, 0): c2,
        (1, 1, 0): -0.5j * s2,
        (1, 0, 0): 0.5j * s2,
        (1, 1, 1): c2,
        (1, 0, 1): sn2,
    }


def transition_amplitude(sigma_from: int, nu: int, sigma_to: int, gamma: float) -> complex:
    """<phi_to|phi_nu rotated><phi_nu rotated|phi_from> in closed form."""
    for x in (sigma_from, nu, sigma_to):
        if x not in (0, 1):
            raise ValueError("indices must be 0 or 1")
    return _amplitude_table(gamma)[(sigma_from, nu, sigma_to)]


def branch_probabilities(sigma_from: int, gamma: float, chi_overlap_sq: float = 1.0) -> dict[tuple[int, int], float]:
    """Probability of each (nu, sigma_to) outcome of one clock cycle."""
    return {
        (nu, to): chi_overlap_sq * abs(transition_amplitude(sigma_from, nu, to, gamma)) ** 2
        for nu in (0, 1)
        for to in (0, 1)
    }


def click_probability(params: TwoStateParams, chi_overlap_sq: float = 1.0) -> float:
    """Chance that the readout flips in one cycle; never exceeds 1/2."""
    if not 0.0 <= chi_overlap_sq <= 1.0 + 1e-12:
        raise DomainError("chi_overlap_sq must lie in [0, 1]")
    if params.overlap_mode == "unit":
        chi_overlap_sq = 1.0
    return params.p_unit * min(chi_overlap_sq, 1.0)


def click_at_step_probability(p: float, ell: int) -> float:
    """First click exactly at step ``ell`` with a constant click chance ``p``."""
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    if not 0.0 < p <= 1.0:
        raise DomainError("p must lie in (0, 1]")
    return p * (1.0 - p) ** (ell - 1)


def click_at_step_probability_varying(ps) -> float:
    """First click at step len(ps) when step k clicks with chance ps[k-1]."""
    ps = list(ps)
    if not ps:
        raise DomainError("need at least one step")
    out = ps[-1]
    for q in ps[:-1]:
        out *= 1.0 - q
    return out


@lru_cache(maxsize=16)
def _ground_state(m_T: float, omega: float):
    from .temporal import TemporalModel, solve_temporal_eigenproblem

    return solve_temporal_eigenproblem(TemporalModel.harmonic(m_T, omega), 1)[0].f


@lru_cache(maxsize=4096)
def exact_overlap_sq(m_T: float, omega: float, xi: float) -> float:
    """|<chi shifted by xi|chi>|^2 for the harmonic ground state on the grid."""
    from .temporal import chi_overlap

    f = _ground_state(m_T, omega)
    return abs(chi_overlap(f, f, xi, m_T)) ** 2


def overlap_sq(params: TwoStateParams, xi: float) -> float:
    if params.overlap_mode == "unit":
        return 1.0
    return exact_overlap_sq(params.m_T, params.omega, float(xi))
