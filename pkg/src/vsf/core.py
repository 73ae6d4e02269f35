"""Shared domain types, trace windowing and configuration checks."""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class VSFError(Exception):
    """Base class for every error raised by this package."""


class RangeError(VSFError, IndexError):
    pass


class GapError(VSFError, ValueError):
    pass


class SizeError(VSFError, ValueError):
    pass


class ArityError(VSFError, ValueError):
    pass


class ProtocolError(VSFError, RuntimeError):
    pass


class StateError(VSFError, RuntimeError):
    pass


class ComparisonError(VSFError, ValueError):
    pass


class ConfigError(VSFError, ValueError):
    """Invalid configuration. ``violations`` lists every broken constraint."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SensorTrace:
    """Slot-aligned readings of one physical sensor.

    ``valid[i]`` is False for a gap slot; the value stored there is NaN and
    must not be used.
    """

    node_id: str
    values: np.ndarray
    valid: np.ndarray | None = None
    unit: str = ""

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise SizeError("trace values must be one-dimensional")
        if self.valid is None:
            valid = _frozen_array(np.isfinite(values), dtype=bool)
        else:
            valid = _frozen_array(self.valid, dtype=bool)
            if valid.shape != values.shape:
                raise SizeError("validity mask length differs from values")
            valid = _frozen_array(valid & np.isfinite(values), dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, SensorTrace):
            return NotImplemented
        return (
            self.node_id == other.node_id
            and self.unit == other.unit
            and np.array_equal(self.valid, other.valid)
            and np.array_equal(self.values[self.valid], other.values[other.valid])
        )

    __hash__ = None

    @property
    def has_gaps(self) -> bool:
        return not bool(self.valid.all())

    def gap_slots(self) -> np.ndarray:
        return np.flatnonzero(~self.valid)


def window(trace: SensorTrace, start: int, length: int, allow_gaps: bool = False) -> SensorTrace:
    """Return the contiguous sub-trace ``[start, start + length)``."""
    if start < 0 or length < 0 or start + length > len(trace):
        raise RangeError(
            f"window [{start}, {start + length}) outside trace of length {len(trace)}"
        )
    sl = slice(start, start + length)
    valid = trace.valid[sl]
    if not allow_gaps and not valid.all():
        first = start + int(np.flatnonzero(~valid)[0])
        raise GapError(f"gap at slot {first} of node {trace.node_id!r}")
    return SensorTrace(trace.node_id, trace.values[sl], valid, trace.unit)


class Phase(str, enum.Enum):
    TRAINING = "Training"
    OPERATIONAL = "Operational"
    REVALIDATION = "Revalidation"


@dataclass(frozen=True)
class PhaseSchedule:
    training_len: int
    operational_len: int
    revalidation_len: int
    current_phase: Phase = Phase.TRAINING
    phase_slot: int = 0

    def __post_init__(self):
        if min(self.training_len, self.operational_len, self.revalidation_len) <= 0:
            raise ConfigError(["phase lengths must be positive"])
        if self.revalidation_len >= self.training_len:
            raise ConfigError(["R_p must be less than T_p"])

    @property
    def current_len(self) -> int:
        return {
            Phase.TRAINING: self.training_len,
            Phase.OPERATIONAL: self.operational_len,
            Phase.REVALIDATION: self.revalidation_len,
        }[self.current_phase]

    @property
    def at_boundary(self) -> bool:
        return self.phase_slot >= self.current_len

    def tick(self) -> PhaseSchedule:
        if self.at_boundary:
            raise StateError(f"{self.current_phase.value} phase already complete")
        return dataclasses.replace(self, phase_slot=self.phase_slot + 1)


class EnergyMode(str, enum.Enum):
    EVENTS_ONLY = "EventsOnly"
    FULL = "Full"


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    Defaults follow the evaluation setup: 30 s slots, O_p=20, R_p=5.
    ``refit_window`` bounds how many of the most recent fully reported slots
    (training plus revalidation) the sink keeps for refitting regressors and
    rescoring companions; set it equal to ``revalidation_len`` to refit on
    the latest revalidation window alone.
    """

    filter_order: int = 4
    mu: float = 0.5
    epsilon: float = 0.5
    delta_min: float = 0.5
    max_companions: int = 1
    training_len: int = 100
    operational_len: int = 20
    revalidation_len: int = 5
    slot_duration: float = 30.0
    energy_mode: EnergyMode = EnergyMode.EVENTS_ONLY
    awake_fraction: float = 1.0
    switch_duration: float = 0.01
    retrain_error_limit: float = 2.0
    rng_seed: int = 0
    normalize_lms: bool = True
    rotation_band: float = 0.02
    refit_window: int | None = None
    no_vsf: bool = False

    def __post_init__(self):
        if not isinstance(self.energy_mode, EnergyMode):
            try:
                object.__setattr__(self, "energy_mode", EnergyMode(self.energy_mode))
            except ValueError:
                pass  # reported by validate_config

    @property
    def p(self) -> int:
        return self.filter_order

    @property
    def T_p(self) -> int:
        return self.training_len

    @property
    def O_p(self) -> int:
        return self.operational_len

    @property
    def R_p(self) -> int:
        return self.revalidation_len

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)


# config-file / grid aliases for SimConfig fields
CONFIG_ALIASES = {
    "p": "filter_order",
    "learning_rate": "mu",
    "error_threshold": "epsilon",
    "T_p": "training_len",
    "O_p": "operational_len",
    "R_p": "revalidation_len",
    "seed": "rng_seed",
}


def config_violations(cfg: SimConfig) -> list[str]:
    v = []

    def is_int(x):
        return isinstance(x, (int, np.integer)) and not isinstance(x, bool)

    for name in ("filter_order", "training_len", "operational_len", "revalidation_len",
                 "max_companions"):
        if not is_int(getattr(cfg, name)):
            v.append(f"{name} must be an integer")
    if v:
        return v
    if cfg.filter_order < 1:
        v.append("filter_order (p) must be >= 1")
    if cfg.training_len <= 0:
        v.append("training_len (T_p) must be > 0")
    if cfg.operational_len <= 0:
        v.append("operational_len (O_p) must be > 0")
    if cfg.revalidation_len <= 0:
        v.append("revalidation_len (R_p) must be > 0")
    if cfg.training_len <= cfg.filter_order:
        v.append("T_p must exceed p")
    if cfg.revalidation_len >= cfg.training_len:
        v.append("R_p must be less than T_p")
    if not cfg.mu > 0:
        v.append("mu must be > 0")
    if not cfg.epsilon >= 0:
        v.append("epsilon must be >= 0")
    if not 0.0 <= cfg.delta_min <= 1.0:
        v.append("delta_min must lie in [0, 1]")
    if cfg.max_companions < 1:
        v.append("max_companions must be >= 1")
    if not cfg.slot_duration > 0:
        v.append("slot_duration must be > 0")
    if not isinstance(cfg.energy_mode, EnergyMode):
        v.append(f"energy_mode must be one of {[m.value for m in EnergyMode]}")
    if not 0.0 < cfg.awake_fraction <= 1.0:
        v.append("awake_fraction must lie in (0, 1]")
    if not cfg.switch_duration >= 0:
        v.append("switch_duration must be >= 0")
    if not cfg.retrain_error_limit > 0:
        v.append("retrain_error_limit must be > 0")
    if not 0.0 <= cfg.rotation_band <= 1.0:
        v.append("rotation_band must lie in [0, 1]")
    if cfg.refit_window is not None and (not is_int(cfg.refit_window) or cfg.refit_window < 3):
        v.append("refit_window must be an integer >= 3")
    return v


def validate_config(cfg: SimConfig) -> SimConfig:
    """Return ``cfg`` unchanged, or raise ConfigError listing every violation."""
    violations = config_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg
