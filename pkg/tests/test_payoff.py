import numpy as np
import pytest

from dra_grid import (
    AggregateLoads,
    BoundInterval,
    FleetState,
    GridProfile,
    ShapeError,
    active_consensus_output,
    active_payoff,
    aggregate_loads,
    extended_load,
    modified_active_output,
    modified_reactive_output,
    reactive_consensus_output,
    reactive_payoff,
)
from dra_grid.payoff import default_epsilon, slack_consensus_output, EPSILON_FLOOR

from conftest import pev_spec


def grid10(level=10000.0, reactive=0.0):
    return GridProfile(active_base=np.full(10, level), reactive_base=np.full(10, reactive))


def state_for(*x_rows, y_rows=None):
    x = np.vstack(x_rows)
    y = np.zeros_like(x) if y_rows is None else np.vstack(y_rows)
    return FleetState(x=x, y=y, slack=np.zeros(x.shape[0]))


def test_aggregate_empty_fleet():
    grid = grid10()
    loads = aggregate_loads(grid, [], FleetState(np.zeros((0, 10)), np.zeros((0, 10)), np.zeros(0)))
    assert np.array_equal(loads.active, grid.active_base)
    assert np.array_equal(loads.reactive, grid.reactive_base)


def test_aggregate_two_pevs():
    # x/t contributions of +500 W and -200 W on every slot
    fleet = [pev_spec(), pev_spec()]
    state = state_for(np.full(10, 500.0), np.full(10, -200.0))
    loads = aggregate_loads(grid10(), fleet, state)
    assert np.allclose(loads.active, 10300.0)


def test_aggregate_reactive_cancellation():
    fleet = [pev_spec(), pev_spec()]
    state = state_for(
        np.zeros(10), np.zeros(10), y_rows=[np.full(10, 100.0), np.full(10, -100.0)]
    )
    loads = aggregate_loads(grid10(reactive=0.0), fleet, state)
    assert np.allclose(loads.reactive, 0.0)


def test_aggregate_shape_check():
    with pytest.raises(ShapeError):
        aggregate_loads(grid10(), [pev_spec()], state_for(np.zeros(8)))


def test_extended_load_edges():
    loads = np.array([5.0, 7.0, 9.0])
    assert extended_load(loads, 1) == (5.0, 5.0, 7.0)
    assert extended_load(loads, 2) == (5.0, 7.0, 9.0)
    assert extended_load(loads, 3) == (7.0, 9.0, 9.0)


def test_active_payoff_zero_cases():
    loads = AggregateLoads(active=np.full(10, 12000.0), reactive=np.zeros(10))
    assert active_payoff(pev_spec(), 3, 50.0, loads, mean_mu=0.0, eta=0.8) == 0.0
    # coefficient collapse: mu=1, eta=1 leaves only the level term
    assert active_payoff(pev_spec(), 3, 777.0, loads, mean_mu=1.0, eta=1.0) == -12000.0


def test_active_payoff_reference_value():
    loads = AggregateLoads(
        active=np.array([10000.0, 10300.0, 10100.0]), reactive=np.zeros(3)
    )
    pev = pev_spec(slot_widths=np.ones(3), preferred_rates=np.full(3, 50.0))
    val = active_payoff(pev, 2, 100.0, loads, mean_mu=0.5, eta=0.8)
    assert val == pytest.approx(-4195.0, abs=1e-9)


def test_reactive_payoff_reference_value():
    loads = AggregateLoads(active=np.zeros(3), reactive=np.array([200.0, 260.0, 230.0]))
    val = reactive_payoff(2, 40.0, loads, mean_mu=0.5, eta=0.8)
    assert val == pytest.approx(-133.0, abs=1e-12)
    assert reactive_payoff(2, 0.0, loads, mean_mu=0.0, eta=0.8) == 0.0
    assert reactive_payoff(2, 123.0, loads, mean_mu=1.0, eta=1.0) == -260.0


def test_modified_outputs_at_midpoint():
    loads = AggregateLoads(active=np.full(10, 10300.0), reactive=np.full(10, 260.0))
    pev = pev_spec()
    iv = BoundInterval(-2000.0, 3000.0)
    raw = active_payoff(pev, 1, iv.midpoint, loads, 0.5, 0.8)
    assert modified_active_output(pev, 1, iv.midpoint, iv, loads, 0.5, 0.8, 7.0) == raw
    sym = BoundInterval(-400.0, 400.0)
    assert modified_reactive_output(1, 0.0, sym, loads, 0.0, 0.8, 3.0) == 0.0


def test_modified_output_near_upper_bound():
    loads = AggregateLoads(active=np.full(10, 10300.0), reactive=np.zeros(10))
    pev = pev_spec()
    iv = BoundInterval(-2000.0, 3000.0)
    eps = 2.0
    v = iv.upper - 1e-9 * iv.width
    raw = active_payoff(pev, 1, v, loads, 0.5, 0.8)
    assert modified_active_output(pev, 1, v, iv, loads, 0.5, 0.8, eps) - raw >= eps * 15.0


def test_modified_output_epsilon_zero():
    loads = AggregateLoads(active=np.full(10, 10300.0), reactive=np.full(10, 260.0))
    pev = pev_spec()
    iv = BoundInterval(-2000.0, 3000.0)
    for v in (-1000.0, 50.0, 2000.0):
        assert modified_active_output(pev, 1, v, iv, loads, 0.5, 0.8, 0.0) == active_payoff(
            pev, 1, v, loads, 0.5, 0.8
        )
    sym = BoundInterval(-500.0, 500.0)
    loads3 = AggregateLoads(active=np.zeros(3), reactive=np.array([200.0, 260.0, 230.0]))
    assert modified_reactive_output(2, 40.0, sym, loads3, 0.5, 0.8, 0.0) == pytest.approx(
        -133.0, abs=1e-12
    )


def test_slack_output_zero_at_center():
    assert slack_consensus_output(0.0, BoundInterval(-30000.0, 30000.0), 5.0) == 0.0


def test_payoff_strictly_decreasing_in_own_strategy():
    # own contribution included in the aggregate: recompute loads per x
    grid = grid10()
    pev = pev_spec()
    rng = np.random.default_rng(9)
    for _ in range(100):
        mu = rng.uniform(0.0, 0.999)
        eta = rng.uniform(0.0, 1.0)
        a, b = sorted(rng.uniform(-2900.0, 2900.0, size=2))
        if a == b:
            continue
        k = int(rng.integers(1, 11))
        vals = []
        for v in (a, b):
            row = np.zeros(10)
            row[k - 1] = v
            loads = aggregate_loads(grid, [pev], state_for(row))
            vals.append(active_payoff(pev, k, v, loads, mu, eta))
        assert vals[0] > vals[1]


def test_consensus_output_strictly_increasing():
    grid = grid10()
    pev = pev_spec()
    iv = BoundInterval(-2000.0, 3000.0)
    prev = None
    for v in np.linspace(-1999.0, 2999.0, 41):
        row = np.zeros(10)
        row[0] = v
        loads = aggregate_loads(grid, [pev], state_for(row))
        cur = active_consensus_output(pev, 1, v, iv, loads, 0.5, 0.8, 1.0)
        if prev is not None:
            assert cur > prev
        prev = cur


def test_consensus_output_is_barrier_minus_payoff():
    loads = AggregateLoads(
        active=np.array([10000.0, 10300.0, 10100.0]), reactive=np.array([200.0, 260.0, 230.0])
    )
    pev = pev_spec(slot_widths=np.ones(3), preferred_rates=np.full(3, 50.0))
    iv = BoundInterval(-2000.0, 3000.0)
    from dra_grid import barrier

    v, eps = 100.0, 3.0
    assert active_consensus_output(pev, 2, v, iv, loads, 0.5, 0.8, eps) == pytest.approx(
        eps * barrier(v, iv) - active_payoff(pev, 2, v, loads, 0.5, 0.8), rel=1e-12
    )
    sym = BoundInterval(-500.0, 500.0)
    assert reactive_consensus_output(2, 40.0, sym, loads, 0.5, 0.8, eps) == pytest.approx(
        eps * barrier(40.0, sym) - reactive_payoff(2, 40.0, loads, 0.5, 0.8), rel=1e-12
    )


def test_pev_interchange_symmetry():
    grid = grid10()
    fleet = [pev_spec(), pev_spec()]
    row_a = np.linspace(-100.0, 120.0, 10)
    row_b = np.linspace(80.0, -60.0, 10)
    loads_ab = aggregate_loads(grid, fleet, state_for(row_a, row_b))
    loads_ba = aggregate_loads(grid, fleet, state_for(row_b, row_a))
    for k in range(1, 11):
        assert active_payoff(fleet[0], k, row_a[k - 1], loads_ab, 0.5, 0.8) == pytest.approx(
            active_payoff(fleet[1], k, row_a[k - 1], loads_ba, 0.5, 0.8), rel=1e-12
        )


def test_mu_zero_depends_only_on_deviation():
    pev = pev_spec()
    loads_a = AggregateLoads(active=np.full(10, 10000.0), reactive=np.zeros(10))
    loads_b = AggregateLoads(active=np.linspace(5000.0, 20000.0, 10), reactive=np.zeros(10))
    for v in (-500.0, 75.0):
        assert active_payoff(pev, 4, v, loads_a, 0.0, 0.3) == active_payoff(
            pev, 4, v, loads_b, 0.0, 0.9
        )


def test_default_epsilon():
    assert default_epsilon(np.array([-4195.0, 10.0])) == pytest.approx(41.95)
    assert default_epsilon(np.zeros(5)) == EPSILON_FLOOR
    assert default_epsilon(np.zeros((0, 10))) == EPSILON_FLOOR
