"""Minimum clearing time: frozen examples, structure, and the LP oracle."""

from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetcap.disclp import (
    DiscreteInstance,
    User,
    clear_time,
    dump_instance_csv,
    load_instance_csv,
    oracle_clear_time,
)

from oracles import random_instance


def test_single_macro_user():
    # one macro-only user: 4 Mbit at 2 Mbit/s takes 2 s, no pico phase
    inst = DiscreteInstance(users=(User(0, 1.0, 2e6, 4e6),))
    sol = clear_time(inst)
    assert sol.objective == pytest.approx(2.0, rel=1e-12)
    assert sol.f == 0.0
    assert sol.y == (4e6,)


def test_single_pico_user_rides_pico():
    # ratio 5 > 1: serve entirely from the pico in 0.4 s
    inst = DiscreteInstance(users=(User(1, 10e6, 2e6, 4e6),))
    sol = clear_time(inst)
    assert sol.objective == pytest.approx(0.4, rel=1e-12)
    assert sol.f == pytest.approx(0.4, rel=1e-12)
    assert sol.x == (4e6,)
    assert sol.y == (0.0,)


def test_two_picos_parallel_service():
    # both ratios > 1, picos run in parallel: the slower one sets f = 1 s
    inst = DiscreteInstance(
        users=(User(1, 4e6, 2e6, 4e6), User(2, 8e6, 2e6, 4e6))
    )
    sol = clear_time(inst)
    assert sol.objective == pytest.approx(1.0, rel=1e-12)
    assert sol.f == pytest.approx(1.0, rel=1e-12)
    assert sol.x == (4e6, 4e6)


def test_empty_instance():
    sol = clear_time(DiscreteInstance(users=()))
    assert sol.objective == 0.0 and sol.f == 0.0


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(10)
    for _ in range(100):
        inst = random_instance(rng)
        ours = clear_time(inst).objective
        ref = oracle_clear_time(inst)
        assert ours == pytest.approx(ref, rel=1e-9)


def test_oracle_refuses_large_instances():
    users = tuple(User(0, 1.0, 2e6, 4e6) for _ in range(13))
    with pytest.raises(ValueError):
        oracle_clear_time(DiscreteInstance(users=users))


def test_threshold_structure_at_most_one_fractional_per_pico():
    rng = np.random.default_rng(11)
    for _ in range(50):
        inst = random_instance(rng, max_users=10, max_picos=2)
        sol = clear_time(inst)
        for pico in range(1, inst.num_picos + 1):
            fractional = 0
            for i, u in enumerate(inst.users):
                if u.pico_index != pico:
                    continue
                assert sol.x[i] + sol.y[i] == pytest.approx(u.demand, rel=1e-12)
                if 1e-9 * u.demand < sol.x[i] < u.demand * (1 - 1e-9):
                    fractional += 1
                rho = u.pico_rate / u.macro_rate
                thr = sol.thresholds[pico - 1]
                if rho > thr:
                    assert sol.x[i] > 0
                if rho < thr:
                    assert sol.x[i] < u.demand * (1 + 1e-12)
            assert fractional <= 1
        # per-pico budget holds
        for pico in range(1, inst.num_picos + 1):
            used = sum(
                sol.x[i] / u.pico_rate
                for i, u in enumerate(inst.users)
                if u.pico_index == pico
            )
            assert used <= sol.f * (1 + 1e-9) + 1e-15


@settings(max_examples=60, deadline=None)
@given(scale=st.floats(0.1, 10.0), seed=st.integers(0, 1000))
def test_demand_scaling_homogeneity(scale, seed):
    inst = random_instance(np.random.default_rng(seed), max_users=6)
    scaled = DiscreteInstance(
        users=tuple(
            User(u.pico_index, u.pico_rate, u.macro_rate, u.demand * scale)
            for u in inst.users
        )
    )
    assert clear_time(scaled).objective == pytest.approx(
        scale * clear_time(inst).objective, rel=1e-9
    )


def test_adding_a_user_never_decreases_clear_time():
    rng = np.random.default_rng(12)
    for _ in range(30):
        inst = random_instance(rng, max_users=8)
        extra = random_instance(rng, max_users=1)
        bigger = DiscreteInstance(users=inst.users + extra.users)
        assert clear_time(bigger).objective >= clear_time(inst).objective - 1e-12


def test_subadditivity_of_union():
    rng = np.random.default_rng(13)
    for _ in range(30):
        a = random_instance(rng, max_users=6)
        b = random_instance(rng, max_users=6)
        both = DiscreteInstance(users=a.users + b.users)
        assert (
            clear_time(both).objective
            <= clear_time(a).objective + clear_time(b).objective + 1e-12
        )


def test_edge_gap_brackets_unity():
    rng = np.random.default_rng(14)
    for _ in range(40):
        inst = random_instance(rng, max_users=10, max_picos=2)
        sol = clear_time(inst)
        if not any(u.pico_index > 0 for u in inst.users):
            continue
        below, above = sol.edge_gap
        assert below >= 1.0 - 1e-12 or sol.f == 0.0
        assert above <= 1.0 + 1e-12 or sol.f > 0.0 and above == 0.0


def test_csv_roundtrip():
    inst = random_instance(np.random.default_rng(15), max_users=8)
    buf = io.StringIO()
    dump_instance_csv(inst, buf)
    buf.seek(0)
    again = load_instance_csv(buf)
    assert len(again.users) == len(inst.users)
    for a, b in zip(inst.users, again.users):
        assert a.pico_index == b.pico_index
        assert a.demand == b.demand
        assert a.macro_rate == b.macro_rate
