import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vsf.core import (
    ConfigError,
    GapError,
    Phase,
    PhaseSchedule,
    RangeError,
    SensorTrace,
    SimConfig,
    StateError,
    config_violations,
    validate_config,
    window,
)


def test_window_slices():
    t = SensorTrace("a", [1.0, 2.0, 3.0, 4.0], unit="C")
    w = window(t, 1, 2)
    assert list(w.values) == [2.0, 3.0]
    assert (w.node_id, w.unit) == ("a", "C")


def test_window_identity():
    assert list(window(SensorTrace("a", [5.0]), 0, 1).values) == [5.0]


def test_window_out_of_range():
    with pytest.raises(RangeError):
        window(SensorTrace("a", [1.0, 2.0, 3.0, 4.0]), 3, 2)


def test_window_gap():
    t = SensorTrace("a", [1.0, np.nan, 3.0])
    with pytest.raises(GapError):
        window(t, 0, 3)
    w = window(t, 0, 3, allow_gaps=True)
    assert list(w.gap_slots()) == [1]


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.data())
def test_window_side_effect_free(values, data):
    t = SensorTrace("x", values)
    before = SensorTrace("x", np.array(t.values))
    start = data.draw(st.integers(0, len(values) - 1))
    length = data.draw(st.integers(0, len(values) - start))
    window(t, start, length)
    assert t == before


def test_trace_values_are_read_only():
    t = SensorTrace("a", [1.0, 2.0])
    with pytest.raises(ValueError):
        t.values[0] = 3.0


def test_paper_config_valid():
    cfg = SimConfig(training_len=100, filter_order=4, revalidation_len=5,
                    operational_len=20, epsilon=0.5)
    assert validate_config(cfg) is cfg


def test_training_must_exceed_order():
    with pytest.raises(ConfigError) as exc:
        validate_config(SimConfig(training_len=4, filter_order=4, revalidation_len=2))
    assert "T_p must exceed p" in exc.value.violations


def test_revalidation_shorter_than_training():
    with pytest.raises(ConfigError) as exc:
        validate_config(SimConfig(revalidation_len=200, training_len=100))
    assert "R_p must be less than T_p" in exc.value.violations


def test_all_violations_reported():
    cfg = SimConfig(training_len=4, filter_order=4, revalidation_len=200, epsilon=-1,
                    delta_min=2.0, mu=0.0)
    v = config_violations(cfg)
    assert len(v) == 5
    assert any("epsilon" in m for m in v) and any("delta_min" in m for m in v)


def test_non_integer_lengths_rejected():
    assert config_violations(SimConfig(training_len=10.5))


@given(st.integers(1, 10), st.integers(2, 300), st.integers(1, 50), st.integers(1, 299),
       st.floats(0, 5), st.floats(0, 1))
def test_validate_idempotent(p, T, O, R, eps, dmin):
    cfg = SimConfig(filter_order=p, training_len=T, operational_len=O, revalidation_len=R,
                    epsilon=eps, delta_min=dmin)
    if config_violations(cfg):
        with pytest.raises(ConfigError):
            validate_config(cfg)
    else:
        assert validate_config(validate_config(cfg)) == cfg


def test_aliases():
    cfg = SimConfig(filter_order=3, training_len=50, operational_len=10, revalidation_len=4)
    assert (cfg.p, cfg.T_p, cfg.O_p, cfg.R_p) == (3, 50, 10, 4)


def test_schedule_tick_and_boundary():
    s = PhaseSchedule(3, 2, 1)
    for _ in range(3):
        assert not s.at_boundary
        s = s.tick()
    assert s.at_boundary and s.current_phase is Phase.TRAINING
    with pytest.raises(StateError):
        s.tick()


def test_schedule_rejects_long_revalidation():
    with pytest.raises(ConfigError):
        PhaseSchedule(5, 2, 5)


def test_config_is_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        SimConfig().epsilon = 1.0
