"""Sink-side virtual sensors.

A Type-I virtual sensor stands in for a dormant node and predicts it from a
hybrid of its own temporal filter and a regression on active companions.
A Type-II virtual sensor mirrors an active node that only transmits when
its own prediction misses by more than ``epsilon``.

``Sink`` is the stateful coordinator used by the simulator; the module-level
functions are the individual steps and can be used on their own.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    ArityError,
    GapError,
    Phase,
    PhaseSchedule,
    ProtocolError,
    SensorTrace,
    SimConfig,
    SizeError,
    StateError,
)
from .node import ActivateWith, Command, ReportAll, SleepFor
from .predictors import (
    FitTracker,
    SpatialRegressor,
    TemporalFilter,
    fit_spatial,
    fit_temporal,
    lms_update,
    predict_spatial,
    predict_temporal,
    spatial_tracker,
    temporal_tracker,
    update_fit,
)

WEIGHT_FLOOR = 1e-12
# scores closer than this are treated as exact ties
TIE_TOLERANCE = 1e-9


class Role(str, enum.Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"


class Source(str, enum.Enum):
    MEASURED = "Measured"
    PREDICTED = "Predicted"


class Outcome(str, enum.Enum):
    CONTINUE = "Continue"
    RETRAIN = "Retrain"


@dataclass
class VirtualSensor:
    node_id: str
    role: Role
    temporal: TemporalFilter
    gamma_tracker: FitTracker
    history: deque
    spatial: SpatialRegressor | None = None
    delta_tracker: FitTracker | None = None
    companions: tuple = ()
    reconstructed: list = field(default_factory=list)

    @property
    def gamma(self) -> float:
        return self.gamma_tracker.score

    @property
    def delta(self) -> float:
        return self.delta_tracker.score if self.delta_tracker is not None else 0.0

    def push(self, value: float) -> None:
        self.history.appendleft(value)


@dataclass(frozen=True)
class RoleAssignment:
    roles: Mapping[str, Role]
    companions: Mapping[str, tuple]
    rotation_counter: int = 0

    def type1(self) -> list[str]:
        return sorted(n for n, r in self.roles.items() if r is Role.TYPE_I)

    def type2(self) -> list[str]:
        return sorted(n for n, r in self.roles.items() if r is Role.TYPE_II)

    def check(self) -> None:
        for node, comps in self.companions.items():
            if self.roles.get(node) is not Role.TYPE_I:
                raise StateError(f"{node!r} has companions but is not Type-I")
            if not comps:
                raise StateError(f"Type-I node {node!r} has no companion")
            for c in comps:
                if self.roles.get(c) is not Role.TYPE_II:
                    raise StateError(f"companion {c!r} of {node!r} is not Type-II")
        for node, role in self.roles.items():
            if role is Role.TYPE_I and node not in self.companions:
                raise StateError(f"Type-I node {node!r} has no companion")


def fixed_assignment(pairs: Mapping[str, Sequence[str]], node_ids: Iterable[str]) -> RoleAssignment:
    """Role assignment with the given Type-I nodes and companions; every
    other node is Type-II."""
    roles = {n: Role.TYPE_II for n in node_ids}
    comps = {}
    for node, cs in pairs.items():
        cs = (cs,) if isinstance(cs, str) else tuple(cs)
        roles[node] = Role.TYPE_I
        comps[node] = cs
    a = RoleAssignment(roles, comps)
    a.check()
    return a


# ---------------------------------------------------------------- scoring

def pairwise_scores(window: Mapping[str, np.ndarray], p: int = 0,
                    nu: int | None = None) -> dict[tuple[str, str], float]:
    """Fit score of every ordered pair ``(dependent, companion)``.

    Rows before ``p`` are skipped so the regression targets line up with the
    temporal filter's targets. ``nu`` defaults to ``len(window) - 1``.
    """
    ids = sorted(window)
    length = len(window[ids[0]])
    nu = length - 1 if nu is None else nu
    out = {}
    for i in ids:
        d = np.asarray(window[i], dtype=float)[p:]
        for j in ids:
            if i == j:
                continue
            a = np.asarray(window[j], dtype=float)[p:]
            reg = fit_spatial(d, [a])
            out[(i, j)] = spatial_tracker(d, [a], reg, nu=nu).score
    return out


def _greedy(scores: Mapping[tuple[str, str], float], node_ids: Sequence[str],
            delta_min: float, max_companions: int,
            active_counts: Mapping[str, int] | None, band: float,
            rotation_counter: int) -> RoleAssignment:
    ids = sorted(node_ids)
    counts = active_counts or {}
    roles: dict[str, Role] = {}
    first: dict[str, str] = {}

    def available():
        return [
            (i, j, s) for (i, j), s in scores.items()
            if s >= delta_min and i not in roles and roles.get(j) is not Role.TYPE_I
        ]

    cands = available()
    while cands:
        best = max(s for _, _, s in cands)
        tied = [c for c in cands if c[2] >= best - max(band, TIE_TOLERANCE)]
        # more active nodes go dormant first; then score; lower id stays active
        tied.sort(key=lambda c: (-counts.get(c[0], 0), -round(c[2], 9), c[1], c[0]))
        i, j, _ = tied[0]
        roles[i] = Role.TYPE_I
        roles[j] = Role.TYPE_II
        first[i] = j
        cands = available()
    for n in ids:
        roles.setdefault(n, Role.TYPE_II)

    companions = {}
    for i, j in first.items():
        extra = sorted(
            (
                (s, c) for (d, c), s in scores.items()
                if d == i and c != j and s >= delta_min and roles[c] is Role.TYPE_II
            ),
            key=lambda t: (-round(t[0], 9), t[1]),
        )
        companions[i] = (j,) + tuple(c for _, c in extra[: max_companions - 1])
    return RoleAssignment(dict(sorted(roles.items())), dict(sorted(companions.items())),
                          rotation_counter)


def select_companions(training_traces, p: int, delta_min: float,
                      max_companions: int = 1) -> RoleAssignment:
    """Greedy role assignment that maximises the number of Type-I nodes.

    ``training_traces`` is a mapping ``node_id -> values`` or a sequence of
    SensorTrace. Pairs are scored on the training rows after the first
    ``p``; ties keep the lower node id active.
    """
    window = _as_window(training_traces)
    if len(window) < 2:
        raise ArityError("companion selection needs at least two nodes")
    length = {len(v) for v in window.values()}
    if len(length) != 1:
        raise SizeError("training traces differ in length")
    T = length.pop()
    if T <= p:
        raise SizeError(f"training length {T} must exceed filter order {p}")
    scores = pairwise_scores(window, p, nu=T - 1)
    return _greedy(scores, list(window), delta_min, max_companions, None, 0.0, 0)


def rotate_roles(assignment: RoleAssignment, fresh_scores: Mapping[tuple[str, str], float],
                 delta_min: float, max_companions: int = 1,
                 active_counts: Mapping[str, int] | None = None,
                 band: float = 0.02) -> RoleAssignment:
    """Re-run the greedy assignment on fresh scores; within ``band`` of the
    best score, nodes that have been active longer are sent dormant first."""
    return _greedy(fresh_scores, list(assignment.roles), delta_min, max_companions,
                   active_counts, band, assignment.rotation_counter + 1)


def _as_window(traces) -> dict[str, np.ndarray]:
    if isinstance(traces, Mapping):
        return {k: np.asarray(v, dtype=float) for k, v in traces.items()}
    out = {}
    for t in traces:
        if not isinstance(t, SensorTrace):
            raise TypeError("expected SensorTrace items or a mapping of node_id -> values")
        if t.has_gaps:
            raise GapError(f"trace {t.node_id!r} has gaps")
        out[t.node_id] = np.asarray(t.values)
    return out


# ------------------------------------------------------------- prediction

def combine(gamma: float, delta: float, d_tem: float, d_spa: float) -> float:
    """Fit-weighted average of the temporal and spatial predictions."""
    total = gamma + delta
    if total < WEIGHT_FLOOR:
        return d_tem
    return (gamma * d_tem + delta * d_spa) / total


def hybrid_predict(vs: VirtualSensor, companion_values) -> float:
    if vs.spatial is None:
        raise StateError(f"{vs.node_id!r} has no spatial regressor")
    values = np.atleast_1d(np.asarray(companion_values, dtype=float))
    if values.size != len(vs.companions) or values.size != vs.spatial.companion_count:
        raise SizeError(f"{vs.node_id!r} expects {len(vs.companions)} companion value(s)")
    d_tem = predict_temporal(vs.temporal, tuple(vs.history))
    d_spa = predict_spatial(vs.spatial, values)
    out = combine(vs.gamma, vs.delta, d_tem, d_spa)
    vs.push(out)
    return out


def step_type1(vs: VirtualSensor, companion_reconstructed) -> float:
    """Predict a dormant node's reading for the current slot."""
    vals = list(companion_reconstructed)
    if len(vals) != len(vs.companions) or any(v is None or not math.isfinite(v) for v in vals):
        raise ProtocolError(f"missing companion value for Type-I node {vs.node_id!r}")
    out = hybrid_predict(vs, vals)
    vs.reconstructed.append((out, Source.PREDICTED))
    return out


def step_type2(vs: VirtualSensor, message: float | None) -> float:
    """Reconstruct an active node's reading from an optional transmission."""
    inputs = tuple(vs.history)
    predicted = predict_temporal(vs.temporal, inputs)
    if message is None:
        vs.push(predicted)
        vs.reconstructed.append((predicted, Source.PREDICTED))
        return predicted
    vs.temporal = lms_update(vs.temporal, inputs, message, predicted)
    vs.push(message)
    vs.reconstructed.append((message, Source.MEASURED))
    return message


# ----------------------------------------------------------- revalidation

def revalidation_step(vs: VirtualSensor, actual: float,
                      companion_actuals: Sequence[float] = (), slot: int | None = None) -> float:
    """Process one fully reported slot; returns the absolute error of the
    prediction this VS would have made (hybrid for Type-I).

    ``slot`` is the index within the revalidation window. The filter only
    adapts from slot ``p`` on, once its inputs are all measured values: an
    error caused by predicted inputs says nothing about the coefficients.
    ``slot=None`` always adapts.
    """
    inputs = tuple(vs.history)
    d_tem = predict_temporal(vs.temporal, inputs)
    e_tem = actual - d_tem
    if slot is None or slot >= vs.temporal.order:
        vs.temporal = lms_update(vs.temporal, inputs, actual, d_tem)
    err = abs(e_tem)
    if vs.role is Role.TYPE_I:
        d_spa = predict_spatial(vs.spatial, companion_actuals)
        err = abs(actual - combine(vs.gamma, vs.delta, d_tem, d_spa))
        vs.delta_tracker = update_fit(vs.delta_tracker, actual - d_spa)
    vs.gamma_tracker = update_fit(vs.gamma_tracker, e_tem)
    vs.push(actual)
    vs.reconstructed.append((actual, Source.MEASURED))
    return err


def conclude_revalidation(vss: Mapping[str, VirtualSensor], errors: Mapping[str, Sequence[float]],
                          refit_window: Mapping[str, np.ndarray] | None,
                          cfg: SimConfig) -> Outcome:
    """Refit Type-I regressors on ``refit_window`` and decide whether to
    retrain. The error rule is strict: a mean error equal to the limit
    continues."""
    outcome = Outcome.CONTINUE
    for nid, vs in vss.items():
        errs = errors.get(nid, ())
        if errs and float(np.mean(errs)) > cfg.retrain_error_limit:
            outcome = Outcome.RETRAIN
        if vs.role is Role.TYPE_I:
            if vs.delta < cfg.delta_min:
                outcome = Outcome.RETRAIN
            if refit_window is not None:
                d = refit_window[nid]
                comps = [refit_window[c] for c in vs.companions]
                if len(d) >= len(comps) + 2:
                    vs.spatial = fit_spatial(d, comps)
    return outcome


def revalidate(vss: Mapping[str, VirtualSensor], revalidation_data: Mapping[str, Sequence[float]],
               cfg: SimConfig, refit_window: Mapping[str, np.ndarray] | None = None
               ) -> tuple[Outcome, Mapping[str, VirtualSensor]]:
    """Run a whole revalidation window through ``vss`` (updated in place).

    ``refit_window`` defaults to the revalidation data itself.
    """
    data = {k: np.asarray(v, dtype=float) for k, v in revalidation_data.items()}
    missing = set(vss) - set(data)
    if missing:
        raise SizeError(f"no revalidation data for {sorted(missing)}")
    if any(len(v) < cfg.revalidation_len for v in data.values()):
        raise SizeError(f"revalidation data shorter than R_p={cfg.revalidation_len}")
    errors = {nid: [] for nid in vss}
    for t in range(cfg.revalidation_len):
        for nid in sorted(vss):
            vs = vss[nid]
            comps = [data[c][t] for c in vs.companions]
            errors[nid].append(revalidation_step(vs, data[nid][t], comps, t))
    if refit_window is None:
        refit_window = {k: v[: cfg.revalidation_len] for k, v in data.items()}
    return conclude_revalidation(vss, errors, refit_window, cfg), vss


# ------------------------------------------------------------ phase machine

_NEXT = {
    (Phase.TRAINING, None): Phase.OPERATIONAL,
    (Phase.OPERATIONAL, None): Phase.REVALIDATION,
    (Phase.REVALIDATION, Outcome.CONTINUE): Phase.OPERATIONAL,
    (Phase.REVALIDATION, Outcome.RETRAIN): Phase.TRAINING,
}


def advance_phase(schedule: PhaseSchedule, outcome: Outcome | None = None) -> PhaseSchedule:
    if not schedule.at_boundary:
        raise StateError(
            f"{schedule.current_phase.value} phase at slot {schedule.phase_slot} "
            f"of {schedule.current_len} is not complete"
        )
    key = (schedule.current_phase, None if outcome is None else Outcome(outcome))
    if key not in _NEXT:
        raise StateError(f"no transition from {schedule.current_phase.value} with {outcome}")
    return dataclasses.replace(schedule, current_phase=_NEXT[key], phase_slot=0)


# ------------------------------------------------------------------- sink

class Sink:
    """Sequential sink state machine for one deployment.

    The sink only learns readings through ``receive``; silence from an
    active node means its transmission was suppressed.
    """

    def __init__(self, node_ids: Iterable[str], cfg: SimConfig,
                 assignment: RoleAssignment | None = None):
        self.cfg = cfg
        self.node_ids = sorted(node_ids)
        self.fixed = assignment
        if assignment is not None:
            if set(assignment.roles) != set(self.node_ids):
                raise ArityError("fixed assignment must cover exactly the dataset's nodes")
            assignment.check()
        self.assignment: RoleAssignment | None = None
        self.vss: dict[str, VirtualSensor] = {}
        self.active_counts = {n: 0 for n in self.node_ids}
        self.training_rows: list[list[float]] = []
        self.buffer: deque = deque(maxlen=cfg.refit_window or cfg.training_len)
        self.reval_errors: dict[str, list[float]] = {}
        self.assignments: list[RoleAssignment] = []

    # commands -----------------------------------------------------------
    def commands(self, phase: Phase) -> dict[str, Command]:
        cfg = self.cfg
        if phase is Phase.TRAINING:
            return {n: ReportAll(cfg.training_len) for n in self.node_ids}
        out = {}
        for n, vs in self.vss.items():
            hist = tuple(vs.history)
            # commands carry copies, as they would over the air
            filt = dataclasses.replace(vs.temporal)
            if phase is Phase.REVALIDATION:
                out[n] = ReportAll(cfg.revalidation_len, filt, hist)
            elif vs.role is Role.TYPE_I:
                out[n] = SleepFor(cfg.operational_len, filt, hist)
            else:
                out[n] = ActivateWith(filt, cfg.epsilon, hist)
        return out

    # per-slot -----------------------------------------------------------
    def receive(self, phase: Phase, messages: Mapping[str, float]) -> dict[str, tuple[float, Source]]:
        if phase is Phase.OPERATIONAL:
            out = self._operational(messages)
        else:
            missing = [n for n in self.node_ids if n not in messages]
            if missing:
                raise ProtocolError(f"{phase.value}: no report from {missing}")
            if phase is Phase.TRAINING:
                self.training_rows.append([messages[n] for n in self.node_ids])
                out = {n: (messages[n], Source.MEASURED) for n in self.node_ids}
            else:
                out = self._revalidation(messages)
        for n in self.node_ids:
            if phase is not Phase.OPERATIONAL or self.vss[n].role is Role.TYPE_II:
                self.active_counts[n] += 1
        return out

    def _operational(self, messages):
        out = {}
        for n in self.assignment.type2():
            vs = self.vss[n]
            value = step_type2(vs, messages.get(n))
            out[n] = (value, vs.reconstructed[-1][1])
        for n in self.assignment.type1():
            if n in messages:
                raise ProtocolError(f"dormant node {n!r} transmitted")
            vs = self.vss[n]
            out[n] = (step_type1(vs, [out[c][0] for c in vs.companions]), Source.PREDICTED)
        return out

    def _revalidation(self, messages):
        for n in self.node_ids:
            vs = self.vss[n]
            comps = [messages[c] for c in vs.companions]
            slot = len(self.reval_errors[n])
            self.reval_errors[n].append(revalidation_step(vs, messages[n], comps, slot))
        self.buffer.append([messages[n] for n in self.node_ids])
        return {n: (messages[n], Source.MEASURED) for n in self.node_ids}

    # phase ends ---------------------------------------------------------
    def end_training(self) -> None:
        cfg = self.cfg
        p = cfg.filter_order
        rows = np.asarray(self.training_rows, dtype=float)
        window = {n: rows[:, k] for k, n in enumerate(self.node_ids)}
        self.training_rows = []
        self.buffer.clear()
        self.buffer.extend(rows.tolist())
        if self.fixed is not None:
            assignment = dataclasses.replace(
                self.fixed, rotation_counter=len(self.assignments))
        elif len(self.node_ids) < 2:
            assignment = RoleAssignment({n: Role.TYPE_II for n in self.node_ids}, {})
        else:
            assignment = select_companions(window, p, cfg.delta_min, cfg.max_companions)
        T = rows.shape[0]
        vss = {}
        for n in self.node_ids:
            temporal = fit_temporal(window[n], p, cfg.mu, cfg.normalize_lms)
            hist = deque(window[n][::-1][:p].tolist(), maxlen=p)
            old = self.vss.get(n)
            vss[n] = VirtualSensor(n, Role.TYPE_II, temporal, temporal_tracker(window[n], temporal),
                                   hist, reconstructed=old.reconstructed if old else [])
        self.vss = vss
        self._apply_assignment(assignment, window, skip=p, nu=T - 1, force=True)

    def begin_revalidation(self) -> None:
        self.reval_errors = {n: [] for n in self.node_ids}

    def end_revalidation(self) -> Outcome:
        cfg = self.cfg
        window = self._buffer_window()
        outcome = conclude_revalidation(self.vss, self.reval_errors, window, cfg)
        if outcome is Outcome.CONTINUE and self.fixed is None and len(self.node_ids) > 1:
            scores = pairwise_scores(window)
            new = rotate_roles(self.assignment, scores, cfg.delta_min, cfg.max_companions,
                               self.active_counts, cfg.rotation_band)
            self._apply_assignment(new, window, skip=0, nu=len(window[self.node_ids[0]]) - 1)
        return outcome

    def _buffer_window(self) -> dict[str, np.ndarray]:
        rows = np.asarray(self.buffer, dtype=float)
        return {n: rows[:, k] for k, n in enumerate(self.node_ids)}

    def _apply_assignment(self, assignment: RoleAssignment, window, skip: int, nu: int,
                          force: bool = False) -> None:
        old = self.assignment
        for n in self.node_ids:
            vs = self.vss[n]
            role = assignment.roles[n]
            comps = tuple(assignment.companions.get(n, ()))
            changed = force or old is None or old.roles[n] is not role or \
                tuple(old.companions.get(n, ())) != comps
            vs.role = role
            if role is Role.TYPE_II:
                vs.companions, vs.spatial, vs.delta_tracker = (), None, None
            elif changed:
                d = window[n][skip:]
                a = [window[c][skip:] for c in comps]
                vs.companions = comps
                vs.spatial = fit_spatial(d, a)
                vs.delta_tracker = spatial_tracker(d, a, vs.spatial, nu=nu)
        self.assignment = assignment
        self.assignments.append(assignment)
