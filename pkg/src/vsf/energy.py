"""Per-node energy accounting.

Accumulators are kept in microjoules: the per-event costs are whole
microjoules, so events-only totals are exact sums of integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import ComparisonError, ConfigError, EnergyMode
from .node import Action, NodeState


@dataclass(frozen=True)
class EnergyParams:
    msg_size: int = 128              # bytes
    tx_power_dbm: float = 0.0
    e_tx_msg: float = 341.0          # uJ per message
    e_sense: float = 330.0           # uJ per temperature reading
    p_active: float = 4.898          # mW
    p_lpm: float = 0.144             # mW, LPM3
    p_switch: float = 0.016          # mW while switching LPM -> active
    switch_duration: float = 0.01    # s
    slot_duration: float = 30.0      # s
    awake_fraction: float = 1.0

    def __post_init__(self):
        for name in ("msg_size", "e_tx_msg", "e_sense", "p_active", "p_lpm", "p_switch",
                     "slot_duration"):
            if not getattr(self, name) > 0:
                raise ConfigError([f"{name} must be > 0"])
        if not 0.0 < self.awake_fraction <= 1.0:
            raise ConfigError(["awake_fraction must lie in (0, 1]"])

    @classmethod
    def from_config(cls, cfg) -> EnergyParams:
        return cls(switch_duration=cfg.switch_duration, slot_duration=cfg.slot_duration,
                   awake_fraction=cfg.awake_fraction)


@dataclass
class NodeEnergy:
    # microjoules
    sensing: float = 0.0
    tx: float = 0.0
    mode: float = 0.0
    switch: float = 0.0
    senses: int = 0
    transmissions: int = 0
    switches: int = 0
    active_slots: int = 0
    dormant_slots: int = 0

    @property
    def total_uj(self) -> float:
        return self.sensing + self.tx + self.mode + self.switch

    @property
    def total(self) -> float:
        """Total in joules."""
        return self.total_uj / 1e6

    @property
    def slots(self) -> int:
        return self.active_slots + self.dormant_slots


@dataclass
class EnergyLedger:
    mode: EnergyMode = EnergyMode.EVENTS_ONLY
    params: EnergyParams = field(default_factory=EnergyParams)
    nodes: dict = field(default_factory=dict)

    def node(self, node_id: str) -> NodeEnergy:
        return self.nodes.setdefault(node_id, NodeEnergy())

    def total(self, node_id: str) -> float:
        return self.node(node_id).total

    def grand_total(self) -> float:
        return sum(n.total_uj for n in self.nodes.values()) / 1e6


def tally_slot(ledger: EnergyLedger, node_id: str, action: Action, state: NodeState,
               switched: bool = False, params: EnergyParams | None = None,
               mode: EnergyMode | str | None = None) -> EnergyLedger:
    """Charge one slot of ``node_id``'s activity to ``ledger`` (in place)."""
    params = params or ledger.params
    try:
        mode = EnergyMode(mode or ledger.mode)
    except ValueError:
        raise ConfigError([f"unknown energy mode {mode!r}"]) from None
    acc = ledger.node(node_id)
    if action.sensed:
        acc.senses += 1
        acc.sensing += params.e_sense
    if action.transmitted:
        acc.transmissions += 1
        acc.tx += params.e_tx_msg
    if switched:
        acc.switches += 1
    if state is NodeState.ACTIVE:
        acc.active_slots += 1
    else:
        acc.dormant_slots += 1
    if mode is EnergyMode.FULL:
        # mW * s = mJ; x1000 -> uJ
        slot = params.slot_duration
        if state is NodeState.ACTIVE:
            f = params.awake_fraction
            acc.mode += 1e3 * (params.p_active * slot * f + params.p_lpm * slot * (1.0 - f))
        else:
            acc.mode += 1e3 * params.p_lpm * slot
        if switched:
            acc.switch += 1e3 * params.p_switch * params.switch_duration
    return ledger


def events_energy(senses: int, transmissions: int, params: EnergyParams | None = None) -> float:
    """Events-only energy in joules from raw counts."""
    params = params or EnergyParams()
    return (senses * params.e_sense + transmissions * params.e_tx_msg) / 1e6


@dataclass
class EnergySummary:
    per_node: dict
    combined: dict
    grand_total: float
    ratio_per_node: dict | None = None
    ratio_combined: dict | None = None
    ratio_total: float | None = None


def ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else float("inf")
    return a / b


def summarize(ledger: EnergyLedger, baseline: EnergyLedger | None = None,
              pairs: Iterable[Sequence[str]] = ()) -> EnergySummary:
    """Per-node totals (joules), combined totals for the given node pairs,
    and optional ratios against a baseline ledger."""
    per_node = {n: acc.total for n, acc in sorted(ledger.nodes.items())}
    combined = {}
    for pair in pairs:
        key = tuple(pair)
        combined[key] = sum(ledger.node(n).total_uj for n in key) / 1e6
    out = EnergySummary(per_node, combined, ledger.grand_total())
    if baseline is not None:
        if set(baseline.nodes) != set(ledger.nodes) or any(
            baseline.nodes[n].slots != ledger.nodes[n].slots for n in ledger.nodes
        ):
            raise ComparisonError("ledgers cover different nodes or slot ranges")
        out.ratio_per_node = {n: ratio(per_node[n], baseline.total(n)) for n in per_node}
        out.ratio_combined = {
            k: ratio(v, sum(baseline.node(n).total_uj for n in k) / 1e6)
            for k, v in combined.items()
        }
        out.ratio_total = ratio(out.grand_total, baseline.grand_total())
    return out
