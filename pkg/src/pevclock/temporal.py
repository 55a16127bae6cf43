"""The one-dimensional temporal sector of the proper clock.

Wavefunctions of the time coordinate are sampled on a uniform grid whose end
points carry Dirichlet zeros. The localizing problem

    (p0^2 / 2 m_T + V_T(t)) f = e f,      p0 = i d/dt,

is discretized with second-order central differences and solved as a real
symmetric tridiagonal eigenproblem. The generator eigenvalue of a level is
``epsilon_T = m_T / 2 - e``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .errors import (
    GridMismatch,
    GridTooCoarse,
    NonConvergence,
    NotNormalized,
    ShiftTooLarge,
)

NORM_TOL = 1e-6


@dataclass(frozen=True)
class TemporalGrid:
    t_min: float
    t_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 16:
            raise GridTooCoarse(f"need at least 16 grid points, got {self.n_points}")
        if not self.t_max > self.t_min:
            raise ValueError("t_max must exceed t_min")

    @classmethod
    def symmetric(cls, half_width: float, n_points: int = 4096) -> TemporalGrid:
        return cls(-half_width, half_width, n_points)

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n_points - 1)

    @property
    def extent(self) -> float:
        return self.t_max - self.t_min

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_points)


@dataclass(frozen=True)
class TemporalGridFunction:
    grid: TemporalGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.shape[0] != self.grid.n_points:
            raise GridMismatch("sample count does not match the grid")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def norm_sq(self) -> float:
        return float(self.grid.spacing * np.sum(np.abs(self.values) ** 2))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_sq - 1.0) <= NORM_TOL

    def normalized(self) -> TemporalGridFunction:
        return TemporalGridFunction(self.grid, self.values / math.sqrt(self.norm_sq))

    def inner(self, other: TemporalGridFunction) -> complex:
        """Grid inner product <self|other>."""
        _same_grid(self, other)
        return complex(self.grid.spacing * np.vdot(self.values, other.values))

    @classmethod
    def from_callable(cls, grid: TemporalGrid, fn, normalize: bool = True) -> TemporalGridFunction:
        f = cls(grid, fn(grid.points))
        return f.normalized() if normalize else f


def _same_grid(a: TemporalGridFunction, b: TemporalGridFunction) -> None:
    if a.grid != b.grid:
        raise GridMismatch("functions live on different grids")


def _require_normalized(f: TemporalGridFunction) -> None:
    if not f.is_normalized:
        raise NotNormalized(f"grid norm^2 is {f.norm_sq:.12g}, expected 1")


@dataclass(frozen=True)
class Potential:
    """Named temporal localizing potential.

    ``harmonic``: 0.5 * m_T * omega**2 * t**2.
    ``square_well``: -depth for |t| < half_width, 0 outside.
    ``box``: zero everywhere (the grid ends act as hard walls).
    """

    kind: str = "harmonic"
    omega: float = 1.0
    depth: float = 10.0
    half_width: float = 1.0

    KINDS = ("harmonic", "square_well", "box")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown potential {self.kind!r}; choose from {self.KINDS}")

    def __call__(self, t: np.ndarray, m_T: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "harmonic":
            return 0.5 * m_T * self.omega**2 * t**2
        if self.kind == "square_well":
            return np.where(np.abs(t) < self.half_width, -self.depth, 0.0)
        return np.zeros_like(t)


@dataclass(frozen=True)
class TemporalModel:
    m_T: float
    potential: Potential
    grid: TemporalGrid

    def __post_init__(self):
        if not self.m_T > 0:
            raise ValueError("temporal inertia m_T must be positive")

    @classmethod
    def harmonic(cls, m_T: float = 1.0, omega: float = 1.0, n_points: int = 4096,
                 half_width: float | None = None) -> TemporalModel:
        if not (m_T > 0 and omega > 0):
            raise ValueError("m_T and omega must be positive")
        if half_width is None:
            half_width = 12.0 / math.sqrt(m_T * omega)
        return cls(m_T, Potential("harmonic", omega=omega), TemporalGrid.symmetric(half_width, n_points))


@dataclass(frozen=True)
class TemporalEigenpair:
    lambda_index: int
    epsilon_T: float
    f: TemporalGridFunction
    energy: float = field(default=float("nan"))
    residual: float = 0.0


def _fd_diagonals(model: TemporalModel) -> tuple[np.ndarray, np.ndarray]:
    h = model.grid.spacing
    t_inner = model.grid.points[1:-1]
    kinetic = 1.0 / (2.0 * model.m_T * h * h)
    diag = 2.0 * kinetic + model.potential(t_inner, model.m_T)
    off = np.full(t_inner.size - 1, -kinetic)
    return diag, off


def solve_temporal_eigenproblem(model: TemporalModel, n_states: int) -> list[TemporalEigenpair]:
    """Lowest ``n_states`` levels of the temporal localization problem.

    Eigenfunctions are real, normalized in the grid norm and sign-fixed so
    that their first sizeable lobe is positive.
    """
    if n_states < 1:
        raise ValueError("n_states must be at least 1")
    if n_states > model.grid.n_points // 4:
        raise GridTooCoarse(
            f"{n_states} states requested but a {model.grid.n_points}-point grid resolves at most "
            f"{model.grid.n_points // 4}"
        )
    diag, off = _fd_diagonals(model)
    try:
        e, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_states - 1))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    if not np.all(np.isfinite(e)):
        raise NonConvergence("eigensolver returned non-finite values")

    h = model.grid.spacing
    pairs = []
    for k in range(n_states):
        inner = v[:, k] / math.sqrt(h)
        big = np.flatnonzero(np.abs(inner) > 1e-3 * np.max(np.abs(inner)))
        if inner[big[0]] < 0:
            inner = -inner
        resid_vec = diag * inner
        resid_vec[:-1] += off * inner[1:]
        resid_vec[1:] += off * inner[:-1]
        resid_vec -= e[k] * inner
        residual = math.sqrt(h * float(np.sum(resid_vec**2)))
        if residual > 1e-6:
            raise NonConvergence(f"level {k} residual {residual:.3g} exceeds 1e-6")
        full = np.zeros(model.grid.n_points)
        full[1:-1] = inner
        pairs.append(
            TemporalEigenpair(
                lambda_index=k,
                epsilon_T=model.m_T / 2.0 - float(e[k]),
                f=TemporalGridFunction(model.grid, full),
                energy=float(e[k]),
                residual=residual,
            )
        )
    return pairs


def time_expectation(f: TemporalGridFunction) -> float:
    _require_normalized(f)
    h = f.grid.spacing
    return float(h * np.sum(f.grid.points * np.abs(f.values) ** 2))


def time_variance(f: TemporalGridFunction) -> float:
    _require_normalized(f)
    h = f.grid.spacing
    t = f.grid.points
    dens = np.abs(f.values) ** 2
    mean = h * np.sum(t * dens)
    return max(float(h * np.sum((t - mean) ** 2 * dens)), 0.0)


def temporal_momentum_expectation(f: TemporalGridFunction, m_T: float) -> float:
    """<chi|p0|chi> for chi = exp(-i m_T t) f, with p0 = i d/dt.

    The derivative uses central differences with the Dirichlet zeros beyond
    the grid ends.
    """
    _require_normalized(f)
    h = f.grid.spacing
    padded = np.concatenate(([0.0], f.values, [0.0]))
    deriv = (padded[2:] - padded[:-2]) / (2.0 * h)
    return float(m_T + (h * np.vdot(f.values, 1j * deriv)).real)


def _shift_values(grid: TemporalGrid, values: np.ndarray, xi: float) -> np.ndarray:
    if abs(xi) >= grid.extent / 4.0:
        raise ShiftTooLarge(f"shift {xi} exceeds a quarter of the grid extent {grid.extent}")
    if xi == 0.0:
        return np.array(values, dtype=complex)
    t = grid.points
    spline = CubicSpline(t, values, axis=0, bc_type="natural", extrapolate=False)
    out = spline(t - xi)
    return np.nan_to_num(out, nan=0.0)


def shift(f: TemporalGridFunction, xi: float) -> TemporalGridFunction:
    """Return the function t -> f(t - xi), zero where t - xi leaves the grid."""
    return TemporalGridFunction(f.grid, _shift_values(f.grid, f.values, xi))


def chi_overlap(f_a: TemporalGridFunction, f_b: TemporalGridFunction, xi: float, m_T: float) -> complex:
    """Amplitude <chi_a shifted by xi | chi_b> between temporal clock states.

    Equals exp(-i m_T xi) * integral conj(f_a(t - xi)) f_b(t) dt.
    """
    _same_grid(f_a, f_b)
    _require_normalized(f_a)
    _require_normalized(f_b)
    shifted = _shift_values(f_a.grid, f_a.values, xi)
    integral = f_a.grid.spacing * np.vdot(shifted, f_b.values)
    return complex(np.exp(-1j * m_T * xi) * integral)


def overlap_matrix(functions: Sequence[TemporalGridFunction], xi: float, m_T: float) -> np.ndarray:
    """Matrix of ``chi_overlap(f_i, f_j, xi, m_T)`` over a list of levels.

    Shifts every level in a single spline pass.
    """
    grid = functions[0].grid
    for g in functions[1:]:
        if g.grid != grid:
            raise GridMismatch("functions live on different grids")
    stack = np.stack([g.values for g in functions], axis=1)
    shifted = _shift_values(grid, stack, xi)
    return np.exp(-1j * m_T * xi) * grid.spacing * (shifted.conj().T @ stack)


def time_matrix(functions: Sequence[TemporalGridFunction]) -> np.ndarray:
    """Matrix elements <chi_i|t|chi_j> of the unshifted levels."""
    grid = functions[0].grid
    stack = np.stack([g.values for g in functions], axis=1)
    return grid.spacing * (stack.conj().T @ (grid.points[:, None] * stack))


def write_eigenpairs_csv(path, pairs: Sequence[TemporalEigenpair]) -> None:
    """One row per level: lambda_index, epsilon_T, then the real samples.

    The header carries the grid times after the two leading columns.
    """
    grid = pairs[0].f.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_index", "epsilon_T"] + [f"{t:.17g}" for t in grid.points])
        for p in pairs:
            w.writerow([p.lambda_index, f"{p.epsilon_T:.17g}"] + [f"{x:.17g}" for x in p.f.values.real])


def read_eigenpairs_csv(path) -> tuple[np.ndarray, list[tuple[int, float, np.ndarray]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    t = np.array([float(x) for x in rows[0][2:]])
    out = []
    for r in rows[1:]:
        out.append((int(r[0]), float(r[1]), np.array([float(x) for x in r[2:]])))
    return t, out
