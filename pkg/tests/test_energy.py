import pytest
from hypothesis import given, strategies as st

from vsf.core import ComparisonError, ConfigError, EnergyMode
from vsf.energy import (
    EnergyLedger,
    EnergyParams,
    events_energy,
    ratio,
    summarize,
    tally_slot,
)
from vsf.node import Action, ActionKind, NodeState

SENSE_TX = Action(ActionKind.TRANSMITTED, 1.0)
SENSE = Action(ActionKind.SENSED_ONLY, 1.0)
SLEPT = Action(ActionKind.SLEPT)


def test_defaults_match_table():
    p = EnergyParams()
    assert (p.msg_size, p.tx_power_dbm, p.e_tx_msg, p.e_sense) == (128, 0.0, 341.0, 330.0)
    assert (p.p_active, p.p_lpm, p.p_switch) == (4.898, 0.144, 0.016)


def test_sense_and_transmit_is_671uj():
    led = tally_slot(EnergyLedger(), "a", SENSE_TX, NodeState.ACTIVE)
    assert led.node("a").total_uj == 671.0


def test_dormant_events_only_is_zero():
    led = tally_slot(EnergyLedger(), "a", SLEPT, NodeState.DORMANT)
    assert led.node("a").total == 0.0


def test_dormant_full_mode_lpm():
    led = EnergyLedger(EnergyMode.FULL)
    tally_slot(led, "a", SLEPT, NodeState.DORMANT)
    assert led.node("a").total_uj == pytest.approx(4320.0)


def test_full_mode_switch_and_active():
    led = EnergyLedger(EnergyMode.FULL, EnergyParams(awake_fraction=0.5))
    tally_slot(led, "a", SENSE, NodeState.ACTIVE, switched=True)
    acc = led.node("a")
    assert acc.mode == pytest.approx(1e3 * (4.898 * 15 + 0.144 * 15))
    assert acc.switch == pytest.approx(1e3 * 0.016 * 0.01)
    assert acc.total_uj == pytest.approx(acc.sensing + acc.tx + acc.mode + acc.switch)


def test_unknown_mode():
    with pytest.raises(ConfigError):
        tally_slot(EnergyLedger(), "a", SENSE, NodeState.ACTIVE, mode="Bogus")


def test_params_positive():
    with pytest.raises(ConfigError):
        EnergyParams(e_sense=0)


def test_thousand_slots_exact():
    led = EnergyLedger()
    for _ in range(1000):
        tally_slot(led, "a", SENSE_TX, NodeState.ACTIVE)
    assert led.node("a").total == 0.671
    assert summarize(led).per_node["a"] == 0.671


def test_combined_with_dormant_partner():
    led = EnergyLedger()
    for _ in range(10):
        tally_slot(led, "a", SENSE_TX, NodeState.ACTIVE)
        tally_slot(led, "b", SLEPT, NodeState.DORMANT)
    s = summarize(led, pairs=[("b", "a")])
    assert s.combined[("b", "a")] == s.per_node["a"]


def test_identical_ledgers_ratio_one():
    led = EnergyLedger()
    for k in range(7):
        tally_slot(led, "a", SENSE_TX if k % 2 else SENSE, NodeState.ACTIVE)
        tally_slot(led, "b", SLEPT, NodeState.DORMANT)
    s = summarize(led, led, pairs=[("a", "b")])
    assert set(s.ratio_per_node.values()) == {1.0}
    assert s.ratio_combined[("a", "b")] == 1.0 and s.ratio_total == 1.0


def test_mismatched_ledgers():
    a, b = EnergyLedger(), EnergyLedger()
    tally_slot(a, "x", SENSE, NodeState.ACTIVE)
    tally_slot(b, "x", SENSE, NodeState.ACTIVE)
    tally_slot(b, "x", SENSE, NodeState.ACTIVE)
    with pytest.raises(ComparisonError):
        summarize(a, b)


def test_ratio_zero_over_zero():
    assert ratio(0.0, 0.0) == 1.0


slot = st.tuples(st.sampled_from([SENSE_TX, SENSE, SLEPT]), st.booleans())


@given(st.lists(slot, max_size=80), st.floats(0.05, 1.0))
def test_ledger_properties(slots, awake):
    params = EnergyParams(awake_fraction=awake)
    ev, full = EnergyLedger(EnergyMode.EVENTS_ONLY, params), EnergyLedger(EnergyMode.FULL, params)
    prev = (0.0, 0.0, 0.0, 0.0)
    for action, switched in slots:
        state = NodeState.DORMANT if action is SLEPT else NodeState.ACTIVE
        tally_slot(ev, "n", action, state, switched)
        tally_slot(full, "n", action, state, switched)
        acc = full.node("n")
        now = (acc.sensing, acc.tx, acc.mode, acc.switch)
        assert all(x >= y for x, y in zip(now, prev))
        prev = now
    e, f = ev.node("n"), full.node("n")
    assert f.total_uj >= e.total_uj
    assert e.total == pytest.approx(events_energy(e.senses, e.transmissions, params), abs=1e-12)
    assert f.total_uj == f.sensing + f.tx + f.mode + f.switch
