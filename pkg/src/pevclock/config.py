"""Run configuration: INI-style ``key = value`` files with sections.

Every field has an explicit default; ``RunConfig.resolved()`` returns the
fully resolved values that go into the run manifest. Errors name the section,
field and, where the key appears in the file, its line number.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .montecarlo import XI_KINDS, SimulationConfig, XiDistribution
from .temporal import Potential, TemporalGrid, TemporalModel
from .two_state import OVERLAP_MODES, TwoStateParams

_PI_EXPR = re.compile(r"^\s*([-+]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_real(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/4`` or ``0.5*pi``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_EXPR.match(text)
    if not m:
        raise ValueError(f"expected a number, got {text!r}")
    coef = m.group(1)
    coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
    den = float(m.group(2)) if m.group(2) else 1.0
    return coef * math.pi / den


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(parse_real(x) for x in text.split(",") if x.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _parse_optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


def _parse_optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else parse_real(text)


def _parse_matrix(text: str):
    if text.strip().lower() in ("", "none", "default"):
        return None
    rows = [r for r in text.split(";") if r.strip()]
    return tuple(tuple(parse_real(x) for x in r.split()) for r in rows)


@dataclass
class RunSection:
    seed: int = 42
    n_trajectories: int = 100_000
    max_steps: int = 10_000
    mode: str = "stop"
    engine: bool = False
    threads: int = 1
    record_trajectories: bool = False
    initial_sigma: int = 0


@dataclass
class ClockSection:
    gamma: float = math.pi / 4
    m_T: float = 1.0
    overlap_mode: str = "unit"
    energies: tuple[float, ...] = (0.0, 1.0)


@dataclass
class XiSection:
    kind: str = "exponential"
    mean: float = 0.01


@dataclass
class TemporalSection:
    potential: str = "harmonic"
    omega: float = 1.0
    depth: float = 10.0
    well_half_width: float = 1.0
    grid_half_width: float | None = None
    n_points: int = 4096
    n_states: int = 10
    clock_resolution: float | None = None


@dataclass
class EngineSection:
    n_temporal: int = 1
    multiplicities: tuple[int, ...] = ()
    reconfigurer: tuple | None = None
    closure: str = "unitary"
    frame: str = "per-step"
    initial_level: int = 0
    group_tol: float = 1e-9


@dataclass
class ChecksSection:
    tv_max: float = 0.01
    z_max: float = 3.0
    two_sample_alpha: float = 1e-3


# field annotations are strings under postponed evaluation
_PARSERS = {
    "int": int,
    "float": parse_real,
    "str": str.strip,
    "bool": _parse_bool,
    "tuple[float, ...]": _parse_floats,
    "tuple[int, ...]": _parse_ints,
    "int | None": _parse_optional_int,
    "float | None": _parse_optional_float,
    "tuple | None": _parse_matrix,
}

_SECTIONS = {
    "run": RunSection,
    "clock": ClockSection,
    "xi": XiSection,
    "temporal": TemporalSection,
    "engine": EngineSection,
    "checks": ChecksSection,
}


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    clock: ClockSection = field(default_factory=ClockSection)
    xi: XiSection = field(default_factory=XiSection)
    temporal: TemporalSection = field(default_factory=TemporalSection)
    engine: EngineSection = field(default_factory=EngineSection)
    checks: ChecksSection = field(default_factory=ChecksSection)
    source: str | None = None

    def resolved(self) -> dict:
        out = {}
        for name in _SECTIONS:
            sec = asdict(getattr(self, name))
            if name == "temporal" and sec["grid_half_width"] is None:
                sec["grid_half_width"] = self.grid_half_width
            out[name] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sec.items()}
        return out

    @property
    def grid_half_width(self) -> float:
        t = self.temporal
        if t.grid_half_width is not None:
            return t.grid_half_width
        scale = self.clock.m_T * t.omega if t.potential == "harmonic" else self.clock.m_T
        return 12.0 / math.sqrt(scale)

    # -- object builders ----------------------------------------------------

    def temporal_model(self) -> TemporalModel:
        t = self.temporal
        pot = Potential(t.potential, omega=t.omega, depth=t.depth, half_width=t.well_half_width)
        return TemporalModel(self.clock.m_T, pot, TemporalGrid.symmetric(self.grid_half_width, t.n_points))

    def two_state_params(self) -> TwoStateParams:
        c = self.clock
        return TwoStateParams(c.gamma, c.m_T, self.xi.mean, c.overlap_mode, self.temporal.omega,
                              tuple(c.energies[:2]))

    def clock_model(self):
        from .engine import ClockModel

        e = self.engine
        rec = None if e.reconfigurer is None else np.array(e.reconfigurer, dtype=complex)
        return ClockModel.build(
            self.temporal_model(),
            e.n_temporal,
            self.clock.energies,
            self.clock.gamma,
            reconfigurer=rec,
            multiplicities=e.multiplicities,
            group_tol=e.group_tol,
            closure=e.closure,
            frame=e.frame,
        )

    def xi_distribution(self) -> XiDistribution:
        return XiDistribution(self.xi.kind, self.xi.mean)

    def simulation_config(self, engine: bool | None = None) -> SimulationConfig:
        use_engine = self.run.engine if engine is None else engine
        model = self.clock_model() if use_engine else self.two_state_params()
        return SimulationConfig(
            model=model,
            xi=self.xi_distribution(),
            n_trajectories=self.run.n_trajectories,
            max_steps=self.run.max_steps,
            seed=self.run.seed,
            stop_after=1 if self.run.mode == "stop" else None,
            initial_sigma=self.run.initial_sigma,
            initial_level=self.engine.initial_level,
        )


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and re.match(rf"^{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return no
    return None


def _err(text, section, key, msg) -> ConfigError:
    line = _line_of(text, section, key) if text else None
    where = f"line {line}: " if line else ""
    return ConfigError(f"{where}[{section}] {key}: {msg}")


def loads(text: str, source: str | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = RunConfig(source=source)
    for section in parser.sections():
        key_sec = section.strip().lower()
        if key_sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(_SECTIONS)}")
        target = getattr(cfg, key_sec)
        types = {f.name: f.type for f in fields(target)}
        lower = {k.lower(): k for k in types}
        for key, raw in parser.items(section):
            name = lower.get(key.lower())
            if name is None:
                raise _err(text, key_sec, key, f"unknown field; expected one of {sorted(types)}")
            ftype = types[name]
            parse = _PARSERS[ftype]
            try:
                setattr(target, name, parse(raw))
            except (ValueError, TypeError) as exc:
                raise _err(text, key_sec, key, str(exc)) from exc
    validate(cfg, text)
    return cfg


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return loads(text, str(p))


def validate(cfg: RunConfig, text: str = "") -> None:
    def need(cond, section, key, msg):
        if not cond:
            raise _err(text, section, key, msg)

    r, c, x, t, e, k = cfg.run, cfg.clock, cfg.xi, cfg.temporal, cfg.engine, cfg.checks
    need(0 <= r.seed < 2**64, "run", "seed", "must be a 64-bit unsigned integer")
    need(r.n_trajectories >= 1, "run", "n_trajectories", "must be at least 1")
    need(r.max_steps >= 1, "run", "max_steps", "must be at least 1")
    need(r.mode in ("stop", "continue"), "run", "mode", "must be 'stop' or 'continue'")
    need(r.threads >= 1, "run", "threads", "must be at least 1")
    need(r.initial_sigma in (0, 1) or r.engine, "run", "initial_sigma", "must be 0 or 1 for the two-state clock")
    need(0.0 <= c.gamma <= math.pi / 2, "clock", "gamma", "must lie in [0, pi/2]")
    need(c.m_T > 0, "clock", "m_T", "must be positive")
    need(c.overlap_mode in OVERLAP_MODES, "clock", "overlap_mode", f"must be one of {OVERLAP_MODES}")
    need(len(c.energies) >= 1 and list(c.energies) == sorted(c.energies), "clock", "energies",
         "must be a sorted, non-empty list")
    need(x.kind in XI_KINDS, "xi", "kind", f"must be one of {XI_KINDS}")
    need(x.mean >= 0, "xi", "mean", "must be non-negative")
    need(t.potential in Potential.KINDS, "temporal", "potential", f"must be one of {Potential.KINDS}")
    need(t.omega > 0, "temporal", "omega", "must be positive")
    need(t.n_points >= 16, "temporal", "n_points", "must be at least 16")
    need(1 <= t.n_states <= t.n_points // 4, "temporal", "n_states", "must lie in [1, n_points/4]")
    need(t.grid_half_width is None or t.grid_half_width > 0, "temporal", "grid_half_width", "must be positive")
    need(t.clock_resolution is None or t.clock_resolution > 0, "temporal", "clock_resolution", "must be positive")
    need(e.n_temporal >= 1, "engine", "n_temporal", "must be at least 1")
    need(e.closure in ("unitary", "raw"), "engine", "closure", "must be 'unitary' or 'raw'")
    need(e.frame in ("per-step", "cumulative"), "engine", "frame", "must be 'per-step' or 'cumulative'")
    need(0 <= e.initial_level < e.n_temporal, "engine", "initial_level", "must index a tracked temporal level")
    need(e.group_tol > 0, "engine", "group_tol", "must be positive")
    need(not e.multiplicities or len(e.multiplicities) == len(c.energies), "engine", "multiplicities",
         "must match the number of clock energies")
    need(k.tv_max > 0 and k.z_max > 0 and 0 < k.two_sample_alpha < 1, "checks", "tv_max",
         "thresholds must be positive (alpha in (0, 1))")
    if not r.engine:
        need(len(c.energies) == 2, "clock", "energies", "the two-state clock needs exactly two energies")
