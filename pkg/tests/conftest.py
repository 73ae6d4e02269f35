import numpy as np
import pytest

from vsf import AffineLink, SineDrift, SyntheticSpec, generate_synthetic

# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_RESULTS: list = []


def affine_pair(seed: int, link_noise: float = 0.1, base_noise: float = 0.05,
                length: int = 1000, slope: float = 2.0, intercept: float = 1.0):
    """Two nodes, ``s1 = slope * s0 + intercept + noise`` over a slow sine."""
    spec = SyntheticSpec(
        2, length, SineDrift(200, 5.0, base_noise, offset=20.0),
        links=(AffineLink(0, 1, slope, intercept, link_noise),), rng_seed=seed,
    )
    return generate_synthetic(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
