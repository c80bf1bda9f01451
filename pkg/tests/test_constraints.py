import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dra_grid import (
    BoundInterval,
    CollapsedInterval,
    DomainError,
    active_bounds,
    barrier,
    reactive_envelope,
    slack_bounds,
)
from dra_grid.constraints import ReactiveEnvelope, barrier_slope

from conftest import pev_spec


def test_active_bounds_reference_case():
    # uniform 50 Wh row, first slot: SoC headroom dominates below,
    # charger cap dominates above
    iv = active_bounds(pev_spec(), 1, np.full(10, 50.0))
    assert iv.lower == -2000.0
    assert iv.upper == 3000.0


def test_active_bounds_with_accumulated_charge():
    # 2000 Wh already accumulated before slot 3
    row = np.array([1000.0, 1000.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    iv = active_bounds(pev_spec(), 3, row)
    assert iv.upper == 1000.0
    assert iv.lower == -3000.0


def test_active_bounds_charger_only():
    pev = pev_spec(soc_lower=-math.inf, soc_upper=math.inf)
    iv = active_bounds(pev, 5, np.full(10, 50.0))
    assert iv.lower == -3000.0
    assert iv.upper == 3000.0


def test_active_bounds_never_wider_than_charger():
    rng = np.random.default_rng(3)
    pev = pev_spec()
    for _ in range(200):
        row = rng.uniform(-250.0, 300.0, size=10)
        k = int(rng.integers(1, 11))
        iv = active_bounds(pev, k, row)
        assert iv.lower >= -3000.0 - 1e-12
        assert iv.upper <= 3000.0 + 1e-12


def test_active_bounds_collapse_detected():
    # accumulated SoC so far above the box that even a full-power
    # discharge cannot re-enter it within the slot
    pev = pev_spec(soc_upper=16000.0)
    row = np.array([3500.0] + [0.0] * 9)
    with pytest.raises(CollapsedInterval):
        active_bounds(pev, 2, row)


def test_reactive_envelope_zero_active():
    env = reactive_envelope(pev_spec(), np.zeros(10))
    assert np.all(env.per_slot_limit == 3000.0)
    assert env.total_capacity == 30000.0


def test_reactive_envelope_saturated_slot():
    row = np.zeros(10)
    row[4] = 3000.0
    env = reactive_envelope(pev_spec(), row)
    assert env.per_slot_limit[4] == 0.0


def test_reactive_envelope_345_triangle():
    row = np.zeros(10)
    row[0] = 1800.0
    env = reactive_envelope(pev_spec(), row)
    assert env.per_slot_limit[0] == pytest.approx(2400.0, rel=1e-12)


def test_reactive_envelope_rejects_over_rate():
    row = np.zeros(10)
    row[0] = 3000.1
    with pytest.raises(DomainError):
        reactive_envelope(pev_spec(), row)


def test_reactive_envelope_identity():
    rng = np.random.default_rng(5)
    pev = pev_spec()
    for _ in range(50):
        row = rng.uniform(-2999.0, 2999.0, size=10)
        env = reactive_envelope(pev, row)
        lhs = env.per_slot_limit**2 + row**2
        assert np.allclose(lhs, 3000.0**2, rtol=1e-9)
        assert env.total_capacity == float(np.sum(env.per_slot_limit))


def test_barrier_midpoint_zero():
    assert barrier(50.0, BoundInterval(-50.0, 150.0)) == 0.0
    assert barrier(0.0, BoundInterval(-7.5, 7.5)) == 0.0


def test_barrier_reference_value():
    assert barrier(0.0, BoundInterval(-50.0, 150.0)) == pytest.approx(
        math.log(50.0 / 150.0), rel=1e-12
    )


def test_barrier_divergence_near_upper():
    iv = BoundInterval(-50.0, 150.0)
    assert barrier(iv.upper - 1e-9 * iv.width, iv) > 15.0
    assert barrier(iv.lower + 1e-9 * iv.width, iv) < -15.0


def test_barrier_domain_checked():
    iv = BoundInterval(0.0, 1.0)
    for v in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(DomainError):
            barrier(v, iv)


@given(
    lo=st.floats(-1e6, 1e6),
    width=st.floats(1e-3, 1e6),
    f1=st.floats(1e-6, 1.0 - 1e-6),
    f2=st.floats(1e-6, 1.0 - 1e-6),
)
def test_barrier_strictly_increasing(lo, width, f1, f2):
    iv = BoundInterval(lo, lo + width)
    a, b = sorted((lo + f1 * width, lo + f2 * width))
    if a < b:
        assert barrier(a, iv) < barrier(b, iv)


def test_barrier_slope_positive():
    iv = BoundInterval(-2.0, 10.0)
    for v in (-1.9, 0.0, 4.0, 9.9):
        assert barrier_slope(v, iv) > 0.0


def test_slack_bounds():
    env = reactive_envelope(pev_spec(), np.zeros(10))
    iv = slack_bounds(env)
    assert (iv.lower, iv.upper) == (-30000.0, 30000.0)


def test_slack_bounds_explicit_capacity():
    env = ReactiveEnvelope(per_slot_limit=np.full(10, 3000.0), total_capacity=30000.0)
    iv = slack_bounds(env)
    assert (iv.lower, iv.upper) == (-30000.0, 30000.0)


def test_slack_bounds_collapse():
    env = ReactiveEnvelope(per_slot_limit=np.zeros(3), total_capacity=0.0)
    with pytest.raises(CollapsedInterval):
        slack_bounds(env)


def test_interval_collapse_is_error():
    with pytest.raises(CollapsedInterval):
        BoundInterval(1.0, 1.0)
    with pytest.raises(CollapsedInterval):
        BoundInterval(2.0, -2.0)
