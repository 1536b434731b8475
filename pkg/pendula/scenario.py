"""
Scenario configuration: flat key = value files, command-line overrides and the published Lyapunov runs.
"""
import hashlib
import os
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from dotenv import dotenv_values

from pendula import __version__
from pendula.config import (
    ABS_TOL,
    LYAPUNOV_T,
    MAX_STEP,
    OUTPUT_DIR,
    REL_TOL,
    REORTH_PERIOD,
    RK4_STEP,
    SAMPLE_INTERVAL,
    SEED,
    JOBS,
)
from pendula.dynamics import CoupledSystem, SystemState, load_potential, random_state, state_from_values
from pendula.errors import ConfigError, InputError
from pendula.graph_core import graph_from_spec
from pendula.integrator import IntegratorConfig


def parse_number(text: str) -> float:
    """Float or fraction such as ``1/7``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}")


def parse_vector(text: str) -> Tuple[float, ...]:
    """Comma- or whitespace-separated numbers."""
    parts = [p for p in text.replace(',', ' ').split() if p]
    if not parts:
        raise ConfigError("empty vector")
    return tuple(parse_number(p) for p in parts)


def parse_range(text: str) -> np.ndarray:
    """``start:stop:count`` into a strictly increasing grid."""
    parts = text.split(':')
    if len(parts) != 3:
        raise ConfigError(f"range must be start:stop:count, got {text!r}")
    start, stop = parse_number(parts[0]), parse_number(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise ConfigError(f"range count must be an integer, got {parts[2]!r}")
    if count < 2 or not stop > start:
        raise ConfigError(f"range {text!r} must have count >= 2 and stop > start")
    return np.linspace(start, stop, count)


def read_scenario_file(path: str) -> Dict[str, str]:
    """
    Read a flat ``key = value`` file with python-dotenv. Comments and quotes
    follow .env rules; dashes in keys become underscores.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"cannot read scenario file {path}: no such file")
    values = {}
    for key, value in dotenv_values(path, interpolate=False).items():
        if value is None:
            raise ConfigError(f"{path}: expected 'key = value', got {key!r}")
        values[key.replace('-', '_')] = value
    return values


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs; all resolved values are written into output metadata."""

    graph: str = 'complete:2'
    potential: str = 'double-well'
    kappa: float = 0.2
    kappa_range: Optional[str] = None
    ic: Optional[str] = None
    T: float = 100.0
    method: str = 'rk45'
    tol: Optional[float] = None
    abs_tol: float = ABS_TOL
    rel_tol: float = REL_TOL
    max_step: float = MAX_STEP
    step: float = RK4_STEP
    sample_interval: float = SAMPLE_INTERVAL
    reorth_period: float = REORTH_PERIOD
    lyapunov_T: float = LYAPUNOV_T
    x_range: str = '-3.14159:3.14159:121'
    sign_vector: Optional[str] = None
    a: float = 1.0
    alpha: float = -1.0
    beta: float = -1.0
    level: float = -0.25
    grid: str = '-1.5:1.5:121'
    com: bool = False
    out: str = OUTPUT_DIR
    jobs: int = JOBS
    seed: int = SEED

    @classmethod
    def from_mapping(cls, values: Dict[str, object]) -> 'ScenarioConfig':
        """Build from string or typed values; unknown keys are an error."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown scenario key {key!r}")
            kwargs[key] = _coerce(key, raw, cls.__dataclass_fields__[key].default)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> 'ScenarioConfig':
        """File values first, then non-None overrides (command-line flags) on top."""
        values: Dict[str, object] = read_scenario_file(path) if path else {}
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return cls.from_mapping(values)

    def updated(self, **changes) -> 'ScenarioConfig':
        return replace(self, **changes)

    @property
    def kappas(self) -> np.ndarray:
        if self.kappa_range:
            return parse_range(self.kappa_range)
        return np.array([self.kappa])

    @property
    def xs(self) -> np.ndarray:
        return parse_range(self.x_range)

    @property
    def grid_axis(self) -> np.ndarray:
        return parse_range(self.grid)

    def integrator_config(self) -> IntegratorConfig:
        abs_tol = self.tol if self.tol is not None else self.abs_tol
        rel_tol = self.tol if self.tol is not None else self.rel_tol
        return IntegratorConfig(method=self.method, abs_tol=abs_tol, rel_tol=rel_tol, max_step=self.max_step,
                                step=self.step, sample_interval=self.sample_interval)

    def build_system(self, kappa: Optional[float] = None) -> CoupledSystem:
        return CoupledSystem(graph_from_spec(self.graph), load_potential(self.potential),
                             self.kappa if kappa is None else kappa)

    def initial_state(self, sys: CoupledSystem) -> SystemState:
        """The configured IC, or a seeded random state near the origin when none is given."""
        if self.ic:
            return state_from_values(sys, parse_vector(self.ic))
        return random_state(sys.n, np.random.default_rng(self.seed), q_scale=0.2, p_scale=0.0)

    def as_metadata(self) -> Dict[str, object]:
        meta = {'tool': f"pendula {__version__}"}
        meta.update(asdict(self))
        meta['config_hash'] = self.config_hash()
        return meta

    def config_hash(self) -> str:
        payload = "\n".join(f"{k}={v!r}" for k, v in sorted(asdict(self).items()) if k not in ('out', 'jobs'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]


def _coerce(key: str, raw: object, default: object) -> object:
    if not isinstance(raw, str):
        return raw
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ('1', 'true', 'yes', 'on')
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float) or key == 'tol':
            return parse_number(raw)
    except (ValueError, InputError):
        raise ConfigError(f"bad value for {key}: {raw!r}")
    return raw


@dataclass(frozen=True)
class LyapunovTableRow:
    """One published Lyapunov run: graph, coupling, initial condition and reference values."""

    label: str
    graph: str
    kappa: float
    ic: Tuple[float, ...]
    energy: float
    regime: str
    exponents: Tuple[float, ...]


_K2_IC = (1 / 5, 1 / 7, 0.0, 0.0)
_K3_IC = (1 / 5, 1 / 7, 1 / 10, 0.0, 0.0, 0.0)
_P3_IC = (1 / 5, 1 / 10, 1 / 7, 0.0, 0.0, 0.0)

# Double-well coupling on every row
LYAPUNOV_TABLE: List[LyapunovTableRow] = [
    LyapunovTableRow('K2 kappa=1/5', 'complete:2', 1 / 5, _K2_IC, -1.92, 'REGULAR',
                     (1.4e-3, 1.5e-3, -1.4e-3, -1.5e-3)),
    LyapunovTableRow('K2 kappa=1/2', 'complete:2', 1 / 2, _K2_IC, -1.85, 'CHAOTIC',
                     (8.4e-2, 1.9e-3, -1.6e-3, -8.4e-2)),
    LyapunovTableRow('K3 kappa=1/8', 'complete:3', 1 / 8, _K3_IC, -2.87, 'REGULAR',
                     (1.8e-3, 7.9e-4, 7.0e-4, -8.7e-4, -5.2e-4, -1.9e-3)),
    LyapunovTableRow('K3 kappa=1/4', 'complete:3', 1 / 4, _K3_IC, -2.78, 'CHAOTIC',
                     (7.4e-2, 4.4e-2, 8.3e-4, -1.4e-3, -4.2e-2, -7.6e-2)),
    LyapunovTableRow('P3 kappa=1/8', 'path:3', 1 / 8, _P3_IC, -2.90, 'REGULAR',
                     (1.8e-3, 1.6e-3, 3.2e-4, -9.5e-3, -2.2e-3, -5.9e-4)),
    LyapunovTableRow('P3 kappa=1/4', 'path:3', 1 / 4, _P3_IC, -2.84, 'CHAOTIC',
                     (7.2e-2, -2.5e-4, 5.0e-4, 4.8e-4, -1.4e-4, -7.3e-2)),
    LyapunovTableRow('P3 kappa=1', 'path:3', 1.0, _P3_IC, -2.48, 'CHAOTIC',
                     (3.1e-1, 2.4e-2, 2.9e-3, -2.5e-3, -2.4e-2, -3.2e-1)),
]
