"""Acceptance criteria, one test per criterion.

Every test records a PASS/FAIL line (shown in the pytest terminal summary)
and then asserts. Run ``python3 tests/test_acceptance.py`` to print the
lines without pytest.
"""
import hashlib
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_RESULTS, affine_pair  # noqa: E402
from vsf import (  # noqa: E402
    AR1,
    AffineLink,
    RandomWalk,
    SineDrift,
    SyntheticSpec,
    align_traces,
    generate_synthetic,
    load_csv,
)
from vsf.cli import main as cli_main  # noqa: E402
from vsf.core import SimConfig  # noqa: E402
from vsf.energy import EnergyLedger, tally_slot  # noqa: E402
from vsf.node import Action, ActionKind, Mode, NodeState  # noqa: E402
from vsf.predictors import fit_spatial, fit_temporal  # noqa: E402
from vsf.sim import run_baseline_lms, run_simulation  # noqa: E402

DATA = Path(__file__).parent / "data"
SEEDS = range(10)


def record(name, ok, detail):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


def predicted_errors(report, node):
    return np.array([r.abs_error for r in report.records
                     if r.node_id == node and r.source == "Predicted"])


# 1 ------------------------------------------------------------------------

def _random_dataset(seed):
    rng = np.random.default_rng(seed)
    kind = seed % 3
    if kind == 0:
        proc = SineDrift(rng.uniform(40, 250), rng.uniform(1, 6), rng.uniform(0, 0.5),
                         offset=rng.uniform(-10, 30))
    elif kind == 1:
        proc = AR1(rng.uniform(0.5, 0.99), rng.uniform(0.05, 1.0), start=rng.uniform(0, 20),
                   mean=rng.uniform(0, 20))
    else:
        proc = RandomWalk(rng.uniform(0.05, 1.0), rng.uniform(-5, 5))
    n = int(rng.integers(2, 5))
    links = (AffineLink(0, 1, rng.uniform(-3, 3), rng.uniform(-5, 5), rng.uniform(0, 0.5)),)
    return generate_synthetic(SyntheticSpec(n, 300, proc, links, rng_seed=seed))


def test_1_suppression_bound():
    eps_grid = (0.0, 0.05, 0.25, 0.5, 1.0, 2.0)
    runs = slots = violations = 0
    worst_margin = -np.inf
    for seed in range(120):
        eps = eps_grid[seed % len(eps_grid)]
        cfg = SimConfig(epsilon=eps, filter_order=1 + seed % 5, rng_seed=seed)
        r = run_simulation(cfg, _random_dataset(seed))
        runs += 1
        for x in r.records:
            if x.mode == Mode.SUPPRESS.value:
                slots += 1
                worst_margin = max(worst_margin, x.abs_error - eps)
                violations += x.abs_error > eps
    ok = record("1 suppression bound", violations == 0 and runs >= 100,
                f"{runs} runs, {slots} suppression-mode slots, {violations} violations, "
                f"max(|err| - eps) = {worst_margin:.3g}")
    assert ok


# 2 ------------------------------------------------------------------------

def _breaking_pair(seed):
    rng = np.random.default_rng(seed)
    t = np.arange(800)
    a = 20 + 4 * np.sin(2 * np.pi * t / 150) + rng.normal(0, 0.1, 800)
    b = 2 * a + 1 + rng.normal(0, 0.1, 800)
    b[400:] = 30 + 4 * np.cos(2 * np.pi * t[400:] / 37) + rng.normal(0, 0.5, 400)
    return {"a": a, "b": b, "c": 10 + np.cumsum(rng.normal(0, 0.3, 800))}


def test_2_coefficient_sync():
    checks = mismatches = retrains = 0

    def hook(t, nodes, sink):
        nonlocal checks, mismatches
        for n, node in nodes.items():
            if node.mirror is None or n not in sink.vss:
                continue
            checks += 1
            vs = sink.vss[n]
            same = node.mirror.coeffs.tobytes() == vs.temporal.coeffs.tobytes()
            if node.state is NodeState.ACTIVE:
                same = same and list(node.history) == list(vs.history)
            mismatches += not same

    for seed in range(6):
        r = run_simulation(SimConfig(epsilon=0.3 + 0.2 * seed), _breaking_pair(seed), hook=hook)
        retrains += sum(s.phase == "Training" for s in r.timeline) - 1
    for seed in range(6):
        run_simulation(SimConfig(filter_order=1 + seed % 4), _random_dataset(seed), hook=hook)
    ok = record("2 coefficient sync", mismatches == 0 and retrains > 0,
                f"{checks} node-slot comparisons, {mismatches} mismatches, "
                f"{retrains} retraining phases exercised")
    assert ok


# 3 ------------------------------------------------------------------------

def test_3_least_squares_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(20, 201))
        p = int(rng.integers(1, 9))
        k = int(rng.integers(1, 4))
        d = np.cumsum(rng.normal(size=T)) + rng.normal(size=T)
        U = np.array([[d[t - i] for i in range(1, p + 1)] for t in range(p, T)])
        alpha = np.linalg.pinv(U) @ d[p:]
        got = fit_temporal(d, p).coeffs
        worst = max(worst, np.linalg.norm(got - alpha) / np.linalg.norm(alpha))
        comps = [rng.normal(size=T) for _ in range(k)]
        y = rng.normal() + sum(rng.normal() * c for c in comps) + rng.normal(size=T)
        V = np.column_stack([np.ones(T)] + comps)
        beta = np.linalg.pinv(V) @ y
        got = fit_spatial(y, comps).coeffs
        worst = max(worst, np.linalg.norm(got - beta) / np.linalg.norm(beta))
    ok = record("3 least-squares oracle", worst <= 1e-9,
                f"100 instances, worst relative error {worst:.2e} (bound 1e-9)")
    assert ok


# 4 ------------------------------------------------------------------------

def test_4_affine_companion():
    cfg = SimConfig(filter_order=3)
    exact = run_simulation(cfg, affine_pair(0, link_noise=0.0, base_noise=0.0),
                           assignment={"s1": "s0"})
    max_err = predicted_errors(exact, "s1").max()
    rmses = []
    for seed in SEEDS:
        r = run_simulation(cfg, affine_pair(seed, link_noise=0.1, base_noise=0.0),
                           assignment={"s1": "s0"})
        e = predicted_errors(r, "s1")
        rmses.append(float(np.sqrt(np.mean(e ** 2))))
    ok = record("4 affine companion", max_err <= 1e-6 and np.mean(rmses) <= 0.3,
                f"exact: max Type-I error {max_err:.2e} over {exact.node_stats['s1'].dormant_slots} "
                f"dormant slots (bound 1e-6); noisy s=0.1: mean RMSE {np.mean(rmses):.3f} over "
                f"{len(rmses)} seeds, worst {max(rmses):.3f} (bound 0.3)")
    assert ok


# 5 ------------------------------------------------------------------------

def test_5_energy_table():
    one = tally_slot(EnergyLedger(), "n", Action(ActionKind.TRANSMITTED, 1.0), NodeState.ACTIVE)
    led = EnergyLedger()
    for _ in range(1000):
        tally_slot(led, "n", Action(ActionKind.TRANSMITTED, 1.0), NodeState.ACTIVE)
    ok = record("5 energy parameters", one.node("n").total_uj == 671 and led.node("n").total == 0.671,
                f"one slot {one.node('n').total_uj:g} uJ, 1000 slots {led.node('n').total!r} J")
    assert ok


# 6 ------------------------------------------------------------------------

def _mean_mae(cfg):
    return float(np.mean([
        np.mean([x.abs_error for x in run_simulation(cfg, affine_pair(s)).records])
        for s in SEEDS
    ]))


def test_6_window_trends():
    base = SimConfig()
    m_20_5 = _mean_mae(base)
    m_20_10 = _mean_mae(base.replace(revalidation_len=10))
    m_40_5 = _mean_mae(base.replace(operational_len=40))
    ok = record("6 window trends", m_20_10 <= m_20_5 <= m_40_5,
                f"MAE O=20,R=5: {m_20_5:.4f}; O=20,R=10: {m_20_10:.4f}; "
                f"O=40,R=5: {m_40_5:.4f} (mean over {len(SEEDS)} seeds)")
    assert ok


# 7 ------------------------------------------------------------------------

def test_7_threshold_energy():
    grid = (0.25, 0.5, 1.0, 2.0)
    vsf, base = [], []
    per_seed_breaks = 0
    for s in SEEDS:
        data = affine_pair(s)
        v = [run_simulation(SimConfig(epsilon=e), data).ledger.grand_total() for e in grid]
        b = [run_baseline_lms(SimConfig(epsilon=e), data).ledger.grand_total() for e in grid]
        per_seed_breaks += any(x < y for x, y in zip(v, v[1:]))
        vsf.append(v)
        base.append(b)
    v, b = np.mean(vsf, axis=0), np.mean(base, axis=0)
    mono = all(x >= y for x, y in zip(v, v[1:]))
    below = all(v[k] < b[k] for k, e in enumerate(grid) if e >= 0.5)
    ok = record("7 threshold energy", mono and below,
                "combined J (VSF / LMS) " + ", ".join(
                    f"eps={e}: {x:.4f}/{y:.4f}" for e, x, y in zip(grid, v, b))
                + f"; mean over {len(SEEDS)} seeds, {per_seed_breaks} seed(s) non-monotone alone")
    assert ok


# 8 ------------------------------------------------------------------------

def test_8_public_temperatures():
    traces = align_traces(load_csv(DATA / "seattle_sf_2010_hourly.csv", unit="degC"))
    r = run_simulation(SimConfig(operational_len=20, revalidation_len=5), traces)
    rel = [x.abs_error / abs(x.actual) for x in r.records if x.action == ActionKind.SLEPT.value]
    value = float(np.mean(rel))
    ok = record("8 public temperature pair", value <= 0.10,
                f"mean relative error of dormant-slot predictions {100 * value:.2f}% over "
                f"{len(rel)} slots (soft bound 10%)")
    assert ok


# 9 ------------------------------------------------------------------------

def test_9_determinism(tmp_path=None):
    root = Path(tmp_path) if tmp_path else Path(tempfile.mkdtemp())
    cfg = root / "vsf.cfg"
    cfg.write_text("epsilon = 0.5\nsynth.nodes = 3\nsynth.length = 600\nsynth.period = 150\n"
                   "synth.amplitude = 4\nsynth.offset = 18\nsynth.noise_std = 0.1\n"
                   "synth.links = 0>1:1.5:2:0.1\nsynth.seed = 11\n")
    digests = []
    for k in range(2):
        out = root / f"run{k}"
        assert cli_main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        digests.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                        for p in sorted(out.iterdir())})
    ok = record("9 determinism", digests[0] == digests[1] and len(digests[0]) == 3,
                ", ".join(f"{n} {h[:12]}" for n, h in digests[0].items()) + " identical across runs")
    assert ok


# 10 -----------------------------------------------------------------------

def _two_source(seed):
    spec = SyntheticSpec(3, 1000, SineDrift(200, 5.0, 0.3, offset=20.0),
                         links=(AffineLink(0, 2, 1.0, 0.0, 0.1), AffineLink(1, 2, 1.0, 0.5)),
                         rng_seed=seed)
    return generate_synthetic(spec)


def test_10_two_companions():
    one, two = [], []
    for s in SEEDS:
        data = _two_source(s)
        for comps, acc in ((("s0",), one), (("s0", "s1"), two)):
            r = run_simulation(SimConfig(max_companions=len(comps)), data,
                               assignment={"s2": comps})
            acc.append(float(np.sqrt(np.mean(predicted_errors(r, "s2") ** 2))))
    ok = record("10 two companions", np.mean(two) <= np.mean(one),
                f"Type-I RMSE one companion {np.mean(one):.3f}, two companions "
                f"{np.mean(two):.3f} (mean over {len(SEEDS)} seeds)")
    assert ok


if __name__ == "__main__":
    failed = 0
    tests = [(n, f) for n, f in globals().items() if n.startswith("test_") and callable(f)]
    for _, fn in sorted(tests, key=lambda item: int(item[0].split("_")[1])):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
