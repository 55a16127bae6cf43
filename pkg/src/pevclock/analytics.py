"""Closed-form click statistics and comparison against Monte Carlo output.

Two laws for the step index l of a click under a constant click chance p:

* first-click law ``p (1-p)^(l-1)``: the step at which the first flip occurs;
* single-click law ``l p^2 (1-p)^(l-1)``: chance of exactly one click during
  an l-step run, normalized over l. Its moments are (2-p)/p and
  (p^2-6p+6)/p^2, giving var = (2-2p)/p^2.

The empirical single-click law is estimated from continue-mode runs: a
trajectory has exactly one click among its first l steps for
``first_click <= l < second_click``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import chi2_contingency

from .errors import DomainError
from .montecarlo import ClickStatistics, OverlapFactor, XiDistribution
from .two_state import TwoStateParams

READINGS = ("first_click", "single_click")


def _check_p(p: float, allow_one: bool = True) -> None:
    if not (0.0 < p < 1.0 or (allow_one and p == 1.0)):
        raise DomainError(f"p must lie in (0, 1{']' if allow_one else ')'}, got {p}")


@dataclass(frozen=True)
class ClickLaw:
    p: float

    def __post_init__(self):
        _check_p(self.p)

    @classmethod
    def from_gamma(cls, gamma: float) -> ClickLaw:
        return cls(0.5 * math.sin(2.0 * gamma) ** 2)

    @classmethod
    def from_params(cls, params: TwoStateParams, xi: XiDistribution) -> ClickLaw:
        """Effective per-step click chance, averaging the overlap over xi.

        Steps are independent, so the first click stays geometric with this p.
        """
        if params.overlap_mode == "unit":
            return cls(params.p_unit)
        factor = OverlapFactor(params, xi)
        if xi.kind == "delta":
            return cls(params.p_unit * float(factor(xi.mean)))
        # E[q(xi)] = integral over u in [0, 1) of q(F^-1(u))
        mean_q, _ = integrate.quad(lambda u: float(factor(xi.from_uniform(u))), 0.0, 1.0, limit=200)
        return cls(params.p_unit * mean_q)

    def pmf(self, reading: str, ells) -> np.ndarray:
        ells = np.asarray(ells, dtype=float)
        if reading == "first_click":
            return self.p * (1.0 - self.p) ** (ells - 1)
        if reading == "single_click":
            return ells * self.p**2 * (1.0 - self.p) ** (ells - 1)
        raise ValueError(f"reading must be one of {READINGS}")


def prob_click_at(p: float, ell: int) -> float:
    """Normalized probability of a single click within an ell-step run."""
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    _check_p(p)
    return ell * p * p * (1.0 - p) ** (ell - 1)


def first_click_at(p: float, ell: int) -> float:
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    _check_p(p)
    return p * (1.0 - p) ** (ell - 1)


def mean_ell(p: float) -> float:
    _check_p(p)
    return (2.0 - p) / p


def second_moment_ell(p: float) -> float:
    _check_p(p)
    return (p * p - 6.0 * p + 6.0) / (p * p)


def var_ell(p: float) -> float:
    _check_p(p)
    return (2.0 - 2.0 * p) / (p * p)


def ell_max(p: float) -> float:
    """Continuous maximizer of the single-click law in l."""
    _check_p(p, allow_one=False)
    return -1.0 / math.log1p(-p)


def series_moment(p: float, k: int, reading: str = "single_click", tail_tol: float = 1e-12) -> float:
    """sum_l l^k P(l), summed until a geometric tail bound drops below tail_tol."""
    _check_p(p)
    law = ClickLaw(p)
    total = 0.0
    ell = 1
    extra = 1 if reading == "single_click" else 0
    while True:
        term = float(ell**k * law.pmf(reading, [ell])[0])
        total += term
        # successive-term ratio, decreasing in l
        ratio = ((ell + 1) / ell) ** (k + extra) * (1.0 - p)
        if ratio < 1.0 and term * ratio / (1.0 - ratio) < tail_tol:
            return total
        ell += 1


# -- figures ----------------------------------------------------------------------

FIG1_P = (0.1, 0.25, 0.5)


@dataclass(frozen=True)
class FigureTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(x) for x in r])


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def figure_data(kind: str, p_values=None, ell_range: int = 40, n_grid: int = 100) -> FigureTable:
    """Data behind the click-law plot (fig1) or the variance curve (fig2)."""
    if kind == "fig1":
        ps = tuple(p_values) if p_values else FIG1_P
        cols = ("ell",) + tuple(f"prob_p{p:g}" for p in ps)
        rows = tuple((ell,) + tuple(prob_click_at(p, ell) for p in ps) for ell in range(1, ell_range + 1))
        return FigureTable(cols, rows)
    if kind == "fig2":
        ps = tuple(p_values) if p_values else tuple(round(i / n_grid, 12) for i in range(1, n_grid + 1))
        return FigureTable(("p", "var"), tuple((p, var_ell(p)) for p in ps))
    raise ValueError("kind must be fig1 or fig2")


# -- comparison ---------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    reading: str
    p: float
    n_trajectories: int
    n_events: int
    rows: tuple[tuple[int, int, float, float, float], ...]
    tv_distance: float
    mean_empirical: float
    mean_analytic: float
    z_mean: float
    var_empirical: float
    var_analytic: float
    z_var: float
    passed: bool
    insufficient: bool = False
    thresholds: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "reading": self.reading,
            "p": self.p,
            "n_trajectories": self.n_trajectories,
            "n_events": self.n_events,
            "tv_distance": self.tv_distance,
            "mean_empirical": self.mean_empirical,
            "mean_analytic": self.mean_analytic,
            "z_mean": self.z_mean,
            "var_empirical": self.var_empirical,
            "var_analytic": self.var_analytic,
            "z_var": self.z_var,
            "insufficient_data": self.insufficient,
            **{f"threshold_{k}": v for k, v in self.thresholds.items()},
            "passed": self.passed,
        }

    def to_text(self) -> str:
        return "".join(f"{k}: {_fmt_any(v)}\n" for k, v in self.as_dict().items())

    def write_csv(self, path) -> None:
        """Per-step table: ell, count, empirical_prob, analytic_prob, abs_error."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ell", "count", "empirical_prob", "analytic_prob", "abs_error"])
            for ell, count, e, a, err in self.rows:
                w.writerow([ell, count, _fmt(e), _fmt(a), _fmt(err)])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "value"])
            for k, v in self.as_dict().items():
                w.writerow([k, _fmt_any(v)])


def _fmt_any(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def compare(stats: ClickStatistics, law: ClickLaw, reading: str = "first_click",
            tv_max: float = 0.01, z_max: float = 3.0) -> ComparisonReport:
    """Compare empirical click statistics with a closed-form law.

    The analytic law is truncated at ``stats.max_steps``. For the first-click
    reading the never-clicked trajectories form an extra bucket in the total
    variation distance, and moments are conditioned on a click.
    """
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    thresholds = {"tv_max": tv_max, "z_max": z_max}
    nan = float("nan")
    ells_all = np.arange(1, stats.max_steps + 1)
    analytic = law.pmf(reading, ells_all)

    if reading == "first_click":
        counts = stats.first_click
        n_events = stats.n_clicked
        denom = stats.n_trajectories
    else:
        if not stats.continue_mode:
            raise ValueError("single-click reading needs continue-mode statistics")
        counts = stats.window
        n_events = int(counts.sum())
        denom = n_events

    if n_events == 0:
        return ComparisonReport(reading, law.p, stats.n_trajectories, 0, (), nan, nan, nan, nan, nan, nan, nan,
                                passed=False, insufficient=True, thresholds=thresholds)

    if reading == "single_click":
        analytic = analytic / analytic.sum()
    emp = np.zeros(stats.max_steps)
    emp[: counts.size] = counts / denom
    tv = 0.5 * float(np.sum(np.abs(emp - analytic)))
    if reading == "first_click":
        tv += 0.5 * abs(stats.n_no_click / denom - max(1.0 - float(analytic.sum()), 0.0))

    rows = tuple(
        (int(l), int(counts[l - 1]), float(emp[l - 1]), float(analytic[l - 1]), float(abs(emp[l - 1] - analytic[l - 1])))
        for l in range(1, counts.size + 1)
    )

    cond = analytic / analytic.sum()
    mean_a = float(np.sum(ells_all * cond))
    var_a = float(np.sum((ells_all - mean_a) ** 2 * cond))

    if reading == "first_click":
        mean_e, var_e = stats.mean, stats.variance
        z_mean = (mean_e - mean_a) / stats.se_mean if stats.se_mean > 0 else (0.0 if mean_e == mean_a else math.inf)
        z_var = (var_e - var_a) / stats.se_variance if stats.se_variance > 0 else (0.0 if var_e == var_a else math.inf)
    else:
        ells = np.arange(1, counts.size + 1)
        mean_e = float(np.sum(ells * counts) / n_events)
        var_e = float(np.sum((ells - mean_e) ** 2 * counts) / n_events)
        z_mean = (mean_e - mean_a) / _ratio_se(stats, mean_e)
        # no independent-sample error model for the window variance
        z_var = nan

    ok = tv < tv_max and abs(z_mean) < z_max and (math.isnan(z_var) or abs(z_var) < z_max)
    return ComparisonReport(reading, law.p, stats.n_trajectories, n_events, rows, tv, mean_e, mean_a, z_mean,
                            var_e, var_a, z_var, passed=bool(ok), thresholds=thresholds)


def _ratio_se(stats: ClickStatistics, ratio: float) -> float:
    """Delta-method standard error of sum(a)/sum(b) over trajectories."""
    sb, sa, saa, sbb, sab = stats.window_sums
    n = stats.n_trajectories
    b_bar = sb / n
    # sample variance of (a - ratio * b) around its mean (which is ~0)
    s2 = (saa - 2 * ratio * sab + ratio * ratio * sbb) / n - ((sa - ratio * sb) / n) ** 2
    return math.sqrt(max(s2, 0.0) / n) / b_bar if b_bar > 0 else math.inf


@dataclass(frozen=True)
class TwoSampleResult:
    statistic: float
    p_value: float
    dof: int
    passed: bool


def two_sample_test(a: ClickStatistics, b: ClickStatistics, alpha: float = 1e-3, min_expected: float = 5.0) -> TwoSampleResult:
    """Chi-square homogeneity test between two first-click histograms.

    Tail bins are pooled until every expected count reaches ``min_expected``;
    never-clicked trajectories form their own bin.
    """
    size = max(a.first_click.size, b.first_click.size)
    ca = np.zeros(size + 1)
    cb = np.zeros(size + 1)
    ca[: a.first_click.size] = a.first_click
    cb[: b.first_click.size] = b.first_click
    ca[-1] = a.n_no_click
    cb[-1] = b.n_no_click
    if ca[-1] == 0 and cb[-1] == 0:
        ca, cb = ca[:-1], cb[:-1]
    table = np.vstack([ca, cb])
    frac = table.sum(axis=1) / table.sum()
    # sweep left to right, closing a bin once its expected counts suffice
    bins: list[np.ndarray] = []
    acc = np.zeros(2)
    for j in range(table.shape[1]):
        acc = acc + table[:, j]
        if np.min(acc.sum() * frac) >= min_expected:
            bins.append(acc)
            acc = np.zeros(2)
    if acc.sum() > 0:
        if bins:
            bins[-1] = bins[-1] + acc
        else:
            bins.append(acc)
    pooled = np.array(bins).T
    if pooled.shape[1] < 2:
        return TwoSampleResult(0.0, 1.0, 0, True)
    stat, pval, dof, _ = chi2_contingency(pooled, correction=False)
    return TwoSampleResult(float(stat), float(pval), int(dof), bool(pval > alpha))
