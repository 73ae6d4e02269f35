"""Slot-driven simulation of a single-hop deployment.

Every slot: pending sink commands take effect, nodes step in ascending id
order, transmissions go through the channel, the sink reconstructs every
node, and the energy ledger is charged. Commands the sink issues at a phase
boundary take effect in the next slot.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import (
    ComparisonError,
    GapError,
    Phase,
    PhaseSchedule,
    SensorTrace,
    SimConfig,
    SizeError,
    validate_config,
)
from .energy import EnergyLedger, EnergyParams, EnergySummary, ratio, summarize, tally_slot
from .engine import Outcome, Role, RoleAssignment, Sink, Source, advance_phase, fixed_assignment
from .node import ActionKind, Mode, PhysicalNode, ReportAll, apply_command, node_step

NO_VSF_PHASE = "Reporting"


class Channel:
    """Lossless zero-delay node -> sink channel.

    ``listener(slot, node_id, value)`` is called for every message, which
    lets tests check that the sink never sees a reading that was not sent.
    """

    def __init__(self, listener: Callable | None = None):
        self.listener = listener
        self.log: list[tuple[int, str, float]] = []
        self._pending: dict[str, float] = {}
        self._slot: int | None = None

    def send(self, slot: int, node_id: str, value: float) -> None:
        if self._slot is not None and slot != self._slot:
            raise RuntimeError("undelivered messages from an earlier slot")
        self._slot = slot
        self._pending[node_id] = value
        self.log.append((slot, node_id, value))
        if self.listener is not None:
            self.listener(slot, node_id, value)

    def deliver(self, slot: int) -> dict[str, float]:
        out, self._pending, self._slot = self._pending, {}, None
        return out


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    node_id: str
    phase: str
    actual: float
    reconstructed: float
    abs_error: float
    source: str
    action: str
    mode: str


@dataclass(frozen=True)
class PhaseSpan:
    phase: str
    start: int
    length: int
    partial: bool = False
    outcome: str = ""


@dataclass
class NodeStats:
    mae: float
    rmse: float
    max_error: float
    mae_predicted: float
    senses: int
    transmissions: int
    suppressions: int
    dormant_slots: int
    predicted_slots: int


@dataclass
class SimReport:
    label: str
    config: SimConfig
    node_ids: list
    records: list
    node_stats: dict
    ledger: EnergyLedger
    energy: EnergySummary
    timeline: list
    pairs: list
    assignments: list = field(default_factory=list)
    messages: int = 0

    @property
    def slot_count(self) -> int:
        return len(self.records) // max(len(self.node_ids), 1)

    @property
    def rng_seed(self) -> int:
        return self.config.rng_seed

    @property
    def type1_count(self) -> int:
        return sum(1 for a in self.assignments[:1] for r in a.roles.values() if r is Role.TYPE_I)

    def records_for(self, node_id: str) -> list:
        return [r for r in self.records if r.node_id == node_id]

    def errors(self, node_id: str) -> np.ndarray:
        return np.array([r.abs_error for r in self.records if r.node_id == node_id])

    def type1_slots(self) -> list:
        """Records of nodes that were dormant in that slot."""
        return [r for r in self.records if r.action == ActionKind.SLEPT.value]


def _dataset(dataset) -> dict[str, np.ndarray]:
    if isinstance(dataset, Mapping):
        data = {str(k): np.asarray(v, dtype=float) for k, v in dataset.items()}
    else:
        data = {}
        for t in dataset:
            if t.has_gaps:
                raise GapError(f"trace {t.node_id!r} has gaps; align it first")
            data[t.node_id] = np.asarray(t.values, dtype=float)
    if not data:
        raise SizeError("empty dataset")
    lengths = {len(v) for v in data.values()}
    if len(lengths) != 1:
        raise SizeError("traces differ in length")
    if any(not np.all(np.isfinite(v)) for v in data.values()):
        raise GapError("dataset contains gaps; align it first")
    return dict(sorted(data.items()))


def _node_stats(records: Sequence[SlotRecord], node_ids) -> dict:
    by_node = {n: [] for n in node_ids}
    for r in records:
        by_node[r.node_id].append(r)
    out = {}
    for n, rs in by_node.items():
        err = np.array([r.abs_error for r in rs])
        pred = np.array([r.abs_error for r in rs if r.source == Source.PREDICTED.value])
        out[n] = NodeStats(
            mae=float(err.mean()) if err.size else 0.0,
            rmse=float(np.sqrt(np.mean(err ** 2))) if err.size else 0.0,
            max_error=float(err.max()) if err.size else 0.0,
            mae_predicted=float(pred.mean()) if pred.size else 0.0,
            senses=sum(r.action != ActionKind.SLEPT.value for r in rs),
            transmissions=sum(r.action == ActionKind.TRANSMITTED.value for r in rs),
            suppressions=sum(r.action == ActionKind.SENSED_ONLY.value for r in rs),
            dormant_slots=sum(r.action == ActionKind.SLEPT.value for r in rs),
            predicted_slots=int(pred.size),
        )
    return out


def _pairs(assignments: Sequence[RoleAssignment]) -> list[tuple[str, str]]:
    seen, out = set(), []
    for a in assignments:
        for n, comps in a.companions.items():
            key = frozenset((n, comps[0]))
            if key not in seen:
                seen.add(key)
                out.append((n, comps[0]))
    return out


def _run(cfg: SimConfig, dataset, label: str, assignment=None, channel=None, hook=None,
         ) -> SimReport:
    validate_config(cfg)
    data = _dataset(dataset)
    ids = list(data)
    n = len(data[ids[0]])
    needed = cfg.training_len + cfg.operational_len + cfg.revalidation_len
    if n < needed:
        raise SizeError(f"dataset has {n} slots, need at least T_p + O_p + R_p = {needed}")
    if isinstance(assignment, Mapping):
        assignment = fixed_assignment(assignment, ids)

    channel = channel or Channel()
    nodes = {i: PhysicalNode(i) for i in ids}
    ledger = EnergyLedger(cfg.energy_mode, EnergyParams.from_config(cfg))
    records: list[SlotRecord] = []
    timeline: list[PhaseSpan] = []
    sink = None

    if label == "no_vsf":
        schedule = None
        pending = {i: ReportAll(n) for i in ids}
    else:
        if label == "baseline":
            assignment = fixed_assignment({}, ids)
            schedule = PhaseSchedule(cfg.training_len, n - cfg.training_len, cfg.revalidation_len)
        else:
            schedule = PhaseSchedule(cfg.training_len, cfg.operational_len, cfg.revalidation_len)
        sink = Sink(ids, cfg, assignment)
        pending = sink.commands(Phase.TRAINING)
    span_start = 0

    for t in range(n):
        phase = schedule.current_phase if schedule else None
        switched = {i: apply_command(nodes[i], pending[i]) if i in pending else False
                    for i in ids}
        pending = {}
        actions = {}
        for i in ids:
            a = node_step(nodes[i], float(data[i][t]))
            actions[i] = a
            if a.transmitted:
                channel.send(t, i, a.value)
        messages = channel.deliver(t)
        if sink is None:
            recon = {i: (messages[i], Source.MEASURED) for i in ids}
        else:
            recon = sink.receive(phase, messages)
        phase_name = phase.value if phase else NO_VSF_PHASE
        for i in ids:
            value, source = recon[i]
            actual = float(data[i][t])
            records.append(SlotRecord(
                t, i, phase_name, actual, float(value), abs(actual - value),
                source.value, actions[i].kind.value, nodes[i].mode.value,
            ))
            tally_slot(ledger, i, actions[i], nodes[i].state, switched[i])
        if hook is not None:
            hook(t, nodes, sink)
        if schedule is None:
            continue
        schedule = schedule.tick()
        if schedule.at_boundary:
            outcome = None
            if phase is Phase.TRAINING:
                sink.end_training()
            elif phase is Phase.OPERATIONAL:
                sink.begin_revalidation()
            else:
                outcome = sink.end_revalidation()
            timeline.append(PhaseSpan(phase.value, span_start, t + 1 - span_start, False,
                                      outcome.value if outcome else ""))
            span_start = t + 1
            schedule = advance_phase(schedule, outcome)
            pending = sink.commands(schedule.current_phase)
    if schedule is None:
        timeline.append(PhaseSpan(NO_VSF_PHASE, 0, n))
    elif span_start < n:
        timeline.append(PhaseSpan(schedule.current_phase.value, span_start, n - span_start, True))

    assignments = sink.assignments if sink else []
    pairs = _pairs(assignments)
    return SimReport(
        label=label,
        config=cfg,
        node_ids=ids,
        records=records,
        node_stats=_node_stats(records, ids),
        ledger=ledger,
        energy=summarize(ledger, pairs=pairs),
        timeline=timeline,
        pairs=pairs,
        assignments=list(assignments),
        messages=len(channel.log),
    )


def run_simulation(cfg: SimConfig, dataset, assignment=None, channel: Channel | None = None,
                   hook: Callable | None = None) -> SimReport:
    """Run the virtual sensing protocol over ``dataset``.

    ``dataset`` is a sequence of gap-free SensorTrace or a mapping
    ``node_id -> values``. ``assignment`` pins the roles (a RoleAssignment
    or a mapping ``type1_node -> companion(s)``) instead of selecting and
    rotating them. ``hook(slot, nodes, sink)`` runs after every slot.
    With ``cfg.no_vsf`` every node reports every slot.
    """
    label = "no_vsf" if cfg.no_vsf else "vsf"
    return _run(cfg, dataset, label, assignment, channel, hook)


def run_baseline_lms(cfg: SimConfig, dataset, channel: Channel | None = None,
                     hook: Callable | None = None) -> SimReport:
    """Every node stays active in LMS dual-prediction mode after the same
    training fit; no dormancy and no spatial prediction."""
    label = "no_vsf" if cfg.no_vsf else "baseline"
    return _run(cfg, dataset, label, None, channel, hook)


@dataclass
class ComparisonRow:
    scope: str
    nodes: str
    energy_vsf: float
    energy_baseline: float
    energy_ratio: float
    tx_vsf: int
    tx_baseline: int
    tx_ratio: float
    senses_vsf: int
    senses_baseline: int
    mae_vsf: float
    mae_baseline: float


def compare(vsf: SimReport, baseline: SimReport) -> list[ComparisonRow]:
    """Side-by-side energy, transmission and error statistics."""
    if vsf.node_ids != baseline.node_ids or vsf.slot_count != baseline.slot_count:
        raise ComparisonError("reports cover different nodes or slot ranges")
    if vsf.config.epsilon != baseline.config.epsilon:
        raise ComparisonError("reports use different error thresholds")

    def row(scope, group):
        ev = sum(vsf.ledger.node(n).total_uj for n in group) / 1e6
        eb = sum(baseline.ledger.node(n).total_uj for n in group) / 1e6
        tv = sum(vsf.node_stats[n].transmissions for n in group)
        tb = sum(baseline.node_stats[n].transmissions for n in group)
        sv = sum(vsf.node_stats[n].senses for n in group)
        sb = sum(baseline.node_stats[n].senses for n in group)
        mv = float(np.mean([vsf.node_stats[n].mae for n in group]))
        mb = float(np.mean([baseline.node_stats[n].mae for n in group]))
        return ComparisonRow(scope, "+".join(group), ev, eb, ratio(ev, eb), tv, tb,
                             ratio(tv, tb), sv, sb, mv, mb)

    rows = [row("node", [n]) for n in vsf.node_ids]
    rows += [row("combined", list(p)) for p in vsf.pairs]
    rows.append(row("total", vsf.node_ids))
    return rows
