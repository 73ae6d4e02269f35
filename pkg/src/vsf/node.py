"""Physical sensor node: dormant/active states, mirror predictor and
transmit suppression.

Commands optionally carry the sink's current coefficients and
reconstruction history so the node's mirror filter is the same object state
the sink will use for that node.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Union

from .core import ProtocolError
from .predictors import TemporalFilter, lms_update, predict_temporal


class NodeState(str, enum.Enum):
    DORMANT = "Dormant"
    ACTIVE = "Active"


class ActionKind(str, enum.Enum):
    SLEPT = "Slept"
    SENSED_ONLY = "SensedOnly"
    TRANSMITTED = "Transmitted"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    value: float | None = None

    @property
    def sensed(self) -> bool:
        return self.kind is not ActionKind.SLEPT

    @property
    def transmitted(self) -> bool:
        return self.kind is ActionKind.TRANSMITTED


@dataclass(frozen=True, eq=False)
class SleepFor:
    slots: int
    filter: TemporalFilter | None = None
    history: tuple | None = None


@dataclass(frozen=True, eq=False)
class ActivateWith:
    """Suppression mode with threshold ``epsilon``.

    ``coeffs`` may be a bare coefficient vector or a full TemporalFilter.
    """

    coeffs: object
    epsilon: float
    history: tuple | None = None


@dataclass(frozen=True, eq=False)
class ReportAll:
    """Sense and transmit every slot for ``slots`` slots. With a filter the
    node also keeps its mirror LMS-updated; without one it just reports."""

    slots: int
    filter: TemporalFilter | None = None
    history: tuple | None = None


Command = Union[SleepFor, ActivateWith, ReportAll]


class Mode(str, enum.Enum):
    SLEEP = "sleep"
    SUPPRESS = "suppress"
    REPORT = "report"


@dataclass
class PhysicalNode:
    node_id: str
    state: NodeState = NodeState.ACTIVE
    mode: Mode = Mode.REPORT
    mirror: TemporalFilter | None = None
    history: deque = field(default_factory=deque)
    epsilon: float = 0.0
    sleep_remaining: int = 0
    report_remaining: int | None = None
    # report-mode slots since the last ReportAll; LMS waits for p of them
    reported: int = 0
    senses: int = 0
    transmissions: int = 0
    suppressions: int = 0
    switches: int = 0

    def predicted(self) -> float:
        return predict_temporal(self.mirror, tuple(self.history))


def _set_sync(node: PhysicalNode, filt: TemporalFilter | None, history) -> None:
    if filt is not None:
        node.mirror = filt
    if history is not None:
        node.history = deque(history, maxlen=len(history))


def _become(node: PhysicalNode, state: NodeState) -> bool:
    switched = node.state is not state
    if switched:
        node.switches += 1
        node.state = state
    return switched


def apply_command(node: PhysicalNode, command: Command) -> bool:
    """Apply ``command`` in place. Returns True when the node changed state."""
    if isinstance(command, SleepFor):
        switched = _become(node, NodeState.DORMANT)
        node.mode = Mode.SLEEP
        node.sleep_remaining = command.slots
        _set_sync(node, command.filter, command.history)
    elif isinstance(command, ActivateWith):
        switched = _become(node, NodeState.ACTIVE)
        node.mode = Mode.SUPPRESS
        node.epsilon = command.epsilon
        filt = command.coeffs
        if not isinstance(filt, TemporalFilter):
            if node.mirror is not None:
                filt = TemporalFilter(filt, node.mirror.mu, node.mirror.normalize_lms)
            else:
                filt = TemporalFilter(filt)
        _set_sync(node, filt, command.history)
        node.sleep_remaining = 0
    elif isinstance(command, ReportAll):
        switched = _become(node, NodeState.ACTIVE)
        node.mode = Mode.REPORT
        node.report_remaining = command.slots
        node.reported = 0
        node.sleep_remaining = 0
        if command.filter is None:
            node.mirror = None
            node.history = deque()
        else:
            _set_sync(node, command.filter, command.history)
    else:
        raise TypeError(f"unknown command {command!r}")
    return switched


def _push(node: PhysicalNode, value: float) -> None:
    if node.history.maxlen:
        node.history.appendleft(value)


def node_step(node: PhysicalNode, actual_reading: float) -> Action:
    """Advance the node by one slot given the true reading of that slot."""
    if node.state is NodeState.DORMANT:
        if node.sleep_remaining <= 0:
            raise ProtocolError(f"node {node.node_id!r} slept past its command")
        node.sleep_remaining -= 1
        return Action(ActionKind.SLEPT)

    node.senses += 1
    if node.mode is Mode.REPORT:
        if node.mirror is not None:
            if node.reported >= node.mirror.order:
                inputs = tuple(node.history)
                predicted = predict_temporal(node.mirror, inputs)
                node.mirror = lms_update(node.mirror, inputs, actual_reading, predicted)
            _push(node, actual_reading)
        node.reported += 1
        node.transmissions += 1
        return Action(ActionKind.TRANSMITTED, actual_reading)

    inputs = tuple(node.history)
    predicted = predict_temporal(node.mirror, inputs)
    if abs(actual_reading - predicted) <= node.epsilon:
        _push(node, predicted)
        node.suppressions += 1
        return Action(ActionKind.SENSED_ONLY, actual_reading)
    node.mirror = lms_update(node.mirror, inputs, actual_reading, predicted)
    _push(node, actual_reading)
    node.transmissions += 1
    return Action(ActionKind.TRANSMITTED, actual_reading)
