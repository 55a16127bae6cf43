"""Projection-evolution quantum clock.

Submodules: ``state_algebra`` (states, projectors, Lüders updates),
``temporal`` (temporal localization eigenproblem), ``engine`` (general
evolution-operator engine), ``two_state`` (closed-form two-state clock),
``montecarlo`` (trajectory runners), ``analytics`` (closed-form click laws
and comparisons) and ``cli``.
"""

__version__ = "0.1.0"

from .analytics import ClickLaw, compare, figure_data, two_sample_test
from .engine import ClockModel
from .montecarlo import SimulationConfig, XiDistribution, simulate
from .temporal import TemporalModel, solve_temporal_eigenproblem
from .two_state import TwoStateParams

__all__ = [
    "ClickLaw",
    "ClockModel",
    "SimulationConfig",
    "TemporalModel",
    "TwoStateParams",
    "XiDistribution",
    "compare",
    "figure_data",
    "simulate",
    "solve_temporal_eigenproblem",
    "two_sample_test",
]
