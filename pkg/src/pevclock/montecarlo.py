"""Stochastic clock trajectories and their click statistics.

Each step of a trajectory consumes exactly two uniforms from the
trajectory's counter stream (see ``pevclock.rng``): draw ``2(n-1)`` sets the
shift xi_n, draw ``2(n-1)+1`` drives the chooser. The closed-form two-state
runner and its vectorized batch counterpart follow the same layout and the
same comparisons, so they produce the same click steps.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erfinv

from .engine import (
    ClockModel,
    branch_table,
    clock_reading_expectation,
    g_recurrence_step,
    initial_coefficients,
)
from .rng import CounterStream, stream_keys, uniforms
from .state_algebra import multinomial_choice
from .two_state import TwoStateParams, exact_overlap_sq

XI_KINDS = ("exponential", "half-normal", "delta")
LEAK_LABEL = -1


@dataclass(frozen=True)
class XiDistribution:
    """Non-negative law of the per-step shift, parametrized by its mean."""

    kind: str = "exponential"
    mean: float = 0.01

    def __post_init__(self):
        if self.kind not in XI_KINDS:
            raise ValueError(f"xi kind must be one of {XI_KINDS}")
        if not self.mean >= 0:
            raise ValueError("xi mean must be non-negative")

    def from_uniform(self, u):
        """Inverse-CDF transform of uniforms in [0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "delta":
            return np.full_like(u, self.mean)
        if self.kind == "exponential":
            return -self.mean * np.log1p(-u)
        return self.mean * math.sqrt(math.pi) * erfinv(u)

    def upper_quantile(self, tail: float = 1e-12) -> float:
        if self.kind == "delta":
            return self.mean
        return float(self.from_uniform(1.0 - tail))


def sample_xi(dist: XiDistribution, rng) -> float:
    """One shift drawn with ``rng.random()`` (a Generator or CounterStream)."""
    return float(dist.from_uniform(rng.random()))


@dataclass(frozen=True)
class SimulationConfig:
    model: TwoStateParams | ClockModel
    xi: XiDistribution = field(default_factory=XiDistribution)
    n_trajectories: int = 1000
    max_steps: int = 10_000
    seed: int = 0
    stop_after: int | None = 1
    initial_sigma: int = 0
    initial_level: int = 0

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.stop_after is not None and self.stop_after < 1:
            raise ValueError("stop_after must be positive or None")

    @property
    def uses_engine(self) -> bool:
        return isinstance(self.model, ClockModel)


@dataclass(frozen=True)
class StepRecord:
    step: int
    xi: float
    beta: float
    sigma: int
    u_label: int
    clicked: bool
    t_reading: float | None = None


@dataclass(frozen=True)
class TrajectoryResult:
    trajectory_id: int
    sigma0: int
    steps: tuple[StepRecord, ...]
    max_steps: int
    stop_after: int | None

    @property
    def click_steps(self) -> tuple[int, ...]:
        return tuple(s.step for s in self.steps if s.clicked)

    @property
    def first_click(self) -> int | None:
        c = self.click_steps
        return c[0] if c else None

    @property
    def second_click(self) -> int | None:
        c = self.click_steps
        return c[1] if len(c) > 1 else None

    @property
    def final_beta(self) -> float:
        return self.steps[-1].beta if self.steps else 0.0


class OverlapFactor:
    """|temporal overlap|^2 per step as a function of xi, for the two-state runner.

    Delta shifts use the exact grid value; continuous laws interpolate a
    table of exact grid values on [0, upper quantile] and fall back to the
    direct computation beyond it.
    """

    def __init__(self, params: TwoStateParams, dist: XiDistribution):
        self.unit = params.overlap_mode == "unit"
        self.params = params
        self.dist = dist
        if self.unit:
            return
        if dist.kind == "delta":
            self.constant = exact_overlap_sq(params.m_T, params.omega, float(dist.mean))
            self.table = None
        else:
            self.constant = None
            self.xmax = dist.upper_quantile()
            self.table = _overlap_table(params.m_T, params.omega, self.xmax)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.unit:
            return np.ones_like(xi)
        if self.constant is not None:
            return np.full_like(xi, self.constant)
        out = np.asarray(self.table(np.minimum(xi, self.xmax)), dtype=float)
        beyond = xi > self.xmax
        if np.any(beyond):
            out = np.array(out, copy=True)
            for i in np.flatnonzero(beyond.reshape(-1)):
                out.flat[i] = exact_overlap_sq(self.params.m_T, self.params.omega, float(xi.flat[i]))
        return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=8)
def _overlap_table(m_T: float, omega: float, xmax: float) -> CubicSpline:
    nodes = np.linspace(0.0, xmax, 129)
    vals = [exact_overlap_sq(m_T, omega, float(x)) for x in nodes]
    return CubicSpline(nodes, vals)


def _two_state_step(p: float, q: float, cos4: float, sin4: float, sigma: int, u: float) -> tuple[bool, int]:
    """Decide one cycle from the chooser uniform; returns (clicked, nu).

    Branch order along [0, 1): the two flip branches (nu = 0, 1, each p/2),
    then stay with nu = sigma (q cos^4), stay with nu != sigma (q sin^4),
    then the mass lost from the tracked temporal level (1 - q).
    """
    if u < p:
        return True, 0 if u < 0.5 * p else 1
    r = u - p
    if r < q * cos4:
        return False, sigma
    if r < q * (cos4 + sin4):
        return False, 1 - sigma
    return False, LEAK_LABEL


def run_two_state_trajectory(config: SimulationConfig, rng, trajectory_id: int = 0) -> TrajectoryResult:
    """One closed-form two-state trajectory."""
    params = config.model
    if not isinstance(params, TwoStateParams):
        raise TypeError("run_two_state_trajectory needs TwoStateParams")
    factor = OverlapFactor(params, config.xi)
    cos4 = math.cos(params.gamma) ** 4
    sin4 = math.sin(params.gamma) ** 4
    sigma = config.initial_sigma
    beta = 0.0
    records = []
    n_clicks = 0
    for n in range(1, config.max_steps + 1):
        xi = float(config.xi.from_uniform(rng.random()))
        beta += xi
        q = float(factor(xi))
        p = params.p_unit * q
        clicked, nu = _two_state_step(p, q, cos4, sin4, sigma, rng.random())
        if clicked:
            sigma = 1 - sigma
            n_clicks += 1
        records.append(StepRecord(n, xi, beta, sigma, nu, clicked))
        if config.stop_after is not None and n_clicks >= config.stop_after:
            break
    return TrajectoryResult(trajectory_id, config.initial_sigma, tuple(records), config.max_steps, config.stop_after)


def run_engine_trajectory(config: SimulationConfig, rng, trajectory_id: int = 0) -> TrajectoryResult:
    """One trajectory of the general engine, sampling (u, sigma) per cycle.

    Branch weights are renormalized by their total, which only differs from
    one under the ``raw`` temporal closure.
    """
    model = config.model
    if not isinstance(model, ClockModel):
        raise TypeError("run_engine_trajectory needs a ClockModel")
    g = initial_coefficients(model, config.initial_level, config.initial_sigma)
    sigma = config.initial_sigma
    beta = 0.0
    records = []
    n_clicks = 0
    n_r = model.n_readouts
    tmat = model.time_matrix
    for n in range(1, config.max_steps + 1):
        xi = float(config.xi.from_uniform(rng.random()))
        beta += xi
        table = branch_table(model, g, xi)
        idx = multinomial_choice(table.reshape(-1), rng.random())
        u, s = divmod(idx, n_r)
        g = g_recurrence_step(model, g, s, u, xi)
        clicked = s != sigma
        sigma = s
        if clicked:
            n_clicks += 1
        t_n = clock_reading_expectation(g, beta, tmat)
        records.append(StepRecord(n, xi, beta, sigma, u, clicked, t_n))
        if config.stop_after is not None and n_clicks >= config.stop_after:
            break
    return TrajectoryResult(trajectory_id, config.initial_sigma, tuple(records), config.max_steps, config.stop_after)


# -- statistics ---------------------------------------------------------------


def _readonly(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ClickStatistics:
    """Click statistics over a set of trajectories.

    ``first_click[l-1]`` counts trajectories whose first click came at step
    l. In continue mode ``window[l-1]`` counts trajectories with exactly one
    click among their first l steps, and ``window_sums`` holds
    (sum b, sum a, sum a^2, sum b^2, sum a*b) with b the window length and a
    the sum of l over the window, for ratio-estimator standard errors.
    """

    n_trajectories: int
    max_steps: int
    first_click: np.ndarray
    window: np.ndarray | None = None
    window_sums: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "first_click", _readonly(self.first_click, np.int64))
        if self.window is not None:
            object.__setattr__(self, "window", _readonly(self.window, np.int64))

    @classmethod
    def from_click_steps(cls, first, second, max_steps: int, continue_mode: bool) -> ClickStatistics:
        """Build from per-trajectory first/second click steps (0 = none)."""
        first = np.asarray(first, dtype=np.int64)
        second = np.asarray(second, dtype=np.int64)
        clicked = first > 0
        hist = np.bincount(first[clicked] - 1, minlength=0) if clicked.any() else np.zeros(0, np.int64)
        window = sums = None
        if continue_mode:
            c1 = first[clicked]
            c2 = np.where(second[clicked] > 0, second[clicked], max_steps + 1)
            diff = np.zeros(max_steps + 2, dtype=np.int64)
            np.add.at(diff, c1, 1)
            np.add.at(diff, c2, -1)
            window = np.cumsum(diff)[1 : max_steps + 1]
            last = np.flatnonzero(window)
            window = window[: last[-1] + 1] if last.size else window[:0]
            b = (c2 - c1).astype(float)
            a = 0.5 * (c1 + c2 - 1).astype(float) * b
            sums = (float(b.sum()), float(a.sum()), float((a * a).sum()), float((b * b).sum()), float((a * b).sum()))
        return cls(int(first.size), max_steps, hist, window, sums)

    @property
    def continue_mode(self) -> bool:
        return self.window is not None

    @property
    def n_clicked(self) -> int:
        return int(self.first_click.sum())

    @property
    def n_no_click(self) -> int:
        return self.n_trajectories - self.n_clicked

    @property
    def ells(self) -> np.ndarray:
        return np.arange(1, self.first_click.size + 1)

    def _moment(self, k: int) -> float:
        n = self.n_clicked
        if n == 0:
            return float("nan")
        return float(np.sum(self.ells.astype(float) ** k * self.first_click) / n)

    @property
    def mean(self) -> float:
        return self._moment(1)

    @property
    def second_moment(self) -> float:
        return self._moment(2)

    @property
    def variance(self) -> float:
        n = self.n_clicked
        if n == 0:
            return float("nan")
        dev = self.ells - self.mean
        return float(np.sum(dev**2 * self.first_click) / n)

    @property
    def se_mean(self) -> float:
        n = self.n_clicked
        return math.sqrt(self.variance / n) if n > 0 else float("nan")

    @property
    def se_variance(self) -> float:
        n = self.n_clicked
        if n == 0:
            return float("nan")
        dev = self.ells - self.mean
        m4 = float(np.sum(dev**4 * self.first_click) / n)
        return math.sqrt(max(m4 - self.variance**2, 0.0) / n)

    def merge(self, other: ClickStatistics) -> ClickStatistics:
        if self.max_steps != other.max_steps or self.continue_mode != other.continue_mode:
            raise ValueError("cannot merge statistics from different run settings")
        window = sums = None
        if self.continue_mode:
            window = _padded_add(self.window, other.window)
            sums = tuple(x + y for x, y in zip(self.window_sums, other.window_sums))
        return ClickStatistics(
            self.n_trajectories + other.n_trajectories,
            self.max_steps,
            _padded_add(self.first_click, other.first_click),
            window,
            sums,
        )


def _padded_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(max(a.size, b.size), dtype=np.int64)
    out[: a.size] += a
    out[: b.size] += b
    return out


def aggregate(trajectories: Sequence[TrajectoryResult]) -> ClickStatistics:
    if not trajectories:
        raise ValueError("need at least one trajectory")
    first = [t.first_click or 0 for t in trajectories]
    second = [t.second_click or 0 for t in trajectories]
    max_steps = trajectories[0].max_steps
    continue_mode = all(t.stop_after is None or t.stop_after >= 2 for t in trajectories)
    return ClickStatistics.from_click_steps(first, second, max_steps, continue_mode)


def _merge_all(parts: Iterable[ClickStatistics]) -> ClickStatistics:
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    return out


# -- batch runners --------------------------------------------------------------


def two_state_click_steps(config: SimulationConfig, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second click steps (0 = none) for a block of trajectories.

    Vectorized over trajectories; gives the same click steps as
    ``run_two_state_trajectory`` on the same streams.
    """
    params = config.model
    factor = OverlapFactor(params, config.xi)
    keys = stream_keys(config.seed, ids)
    n = keys.size
    need = 1 if config.stop_after == 1 else 2
    first = np.zeros(n, dtype=np.int64)
    second = np.zeros(n, dtype=np.int64)
    clicks = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    p_unit = params.p_unit
    for step in range(1, config.max_steps + 1):
        if active.size == 0:
            break
        k = active
        if factor.unit:
            p = p_unit
        else:
            xi = config.xi.from_uniform(uniforms(keys[k], 2 * (step - 1)))
            p = p_unit * factor(xi)
        u = uniforms(keys[k], 2 * (step - 1) + 1)
        hit = u < p
        idx = k[hit]
        clicks[idx] += 1
        first[idx[clicks[idx] == 1]] = step
        second[idx[clicks[idx] == 2]] = step
        active = k[clicks[k] < need]
    return first, second


@dataclass(frozen=True)
class SimulationResult:
    config: SimulationConfig
    stats: ClickStatistics
    trajectories: tuple[TrajectoryResult, ...] | None = None


def _chunks(n: int, size: int) -> list[np.ndarray]:
    return [np.arange(s, min(s + size, n), dtype=np.int64) for s in range(0, n, size)]


def simulate(config: SimulationConfig, threads: int = 1, record: bool = False,
             chunk_size: int = 1 << 16) -> SimulationResult:
    """Run all trajectories and aggregate their click statistics.

    Trajectories are split into fixed index blocks and merged in block order,
    so the result does not depend on ``threads``.
    """
    continue_mode = config.stop_after is None or config.stop_after >= 2
    scalar = record or config.uses_engine
    runner = run_engine_trajectory if config.uses_engine else run_two_state_trajectory

    def work(ids: np.ndarray):
        if scalar:
            trajs = tuple(runner(config, CounterStream(config.seed, int(i)), int(i)) for i in ids)
            return aggregate(trajs), trajs
        first, second = two_state_click_steps(config, ids)
        return ClickStatistics.from_click_steps(first, second, config.max_steps, continue_mode), None

    blocks = _chunks(config.n_trajectories, chunk_size if not scalar else max(1, min(chunk_size, 4096)))
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    stats = _merge_all(p[0] for p in parts)
    trajs = tuple(t for p in parts for t in p[1]) if record else None
    return SimulationResult(config, stats, trajs)


TRAJECTORY_COLUMNS = ["trajectory_id", "step", "xi", "beta", "sigma", "u_label", "clicked"]


def write_trajectories_csv(path, trajectories: Iterable[TrajectoryResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for t in trajectories:
            for s in t.steps:
                w.writerow([t.trajectory_id, s.step, f"{s.xi:.17g}", f"{s.beta:.17g}", s.sigma, s.u_label, int(s.clicked)])
