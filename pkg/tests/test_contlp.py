"""Threshold-structure solver against LP oracles and its own certificates."""

from __future__ import annotations

import numpy as np
import pytest

from hetcap.contlp import (
    capacity,
    dual_derivative,
    dual_value,
    edge_condition,
    feasible_f_range,
    fixed_budget_policy,
    policy_workloads,
    rho_of_f,
    solve,
    tau_curve,
    tau_of_f,
)
from hetcap.quadrature import (
    SampleCloud,
    build_cloud,
    fbar,
    fbar_max,
    region_from_arrays,
    scaled_cloud,
)
from hetcap.scenario import reference_scenario

from oracles import lp_total_time, synthetic_cloud


@pytest.fixture(scope="module")
def ref_cloud():
    return build_cloud(reference_scenario(), samples_per_region=3000, seed=1)


def test_rho_endpoints(ref_cloud):
    for k in range(1, 4):
        reg = ref_cloud.pico_region(k)
        assert rho_of_f(ref_cloud, k, 0.0) == reg.rate_ratio[0]  # max ratio
        assert rho_of_f(ref_cloud, k, fbar(ref_cloud, k)) == reg.rate_ratio[-1]


def test_rho_non_increasing_vs_exhaustive_scan():
    rng = np.random.default_rng(2)
    for trial in range(20):
        cloud = synthetic_cloud(rng, num_picos=2, atoms=12)
        for k in (1, 2):
            top = fbar(cloud, k)
            fs = np.sort(rng.uniform(0, top, 15))
            rhos = [rho_of_f(cloud, k, f) for f in fs]
            assert all(a >= b for a, b in zip(rhos, rhos[1:]))
            # exhaustive definition: ratio of the first atom whose prefix exceeds f
            reg = cloud.pico_region(k)
            for f, rho in zip(fs, rhos):
                j = 0
                while j < reg.count and reg.pico_prefix[j + 1] <= f:
                    j += 1
                assert rho == reg.rate_ratio[j]


def test_rho_domain_errors(ref_cloud):
    with pytest.raises(ValueError):
        rho_of_f(ref_cloud, 1, -1e-9)
    with pytest.raises(ValueError):
        rho_of_f(ref_cloud, 1, fbar(ref_cloud, 1) * 1.01)


def test_tau_of_f_matches_lp_oracle_at_fixed_budgets():
    rng = np.random.default_rng(3)
    for trial in range(15):
        cloud = synthetic_cloud(rng, num_picos=2, atoms=10)
        top = fbar_max(cloud)
        for f in rng.uniform(0, top, 4):
            ours, _ = tau_of_f(cloud, float(f))
            oracle = lp_total_time(cloud, f_fixed=float(f))
            assert ours == pytest.approx(oracle, rel=1e-9)


def test_tau_extremes(ref_cloud):
    tau0, _ = tau_of_f(ref_cloud, 0.0)
    total_macro = ref_cloud.macro_only_load + sum(
        ref_cloud.pico_region(k).macro_seconds.sum() for k in range(1, 4)
    )
    assert tau0 == pytest.approx(total_macro, rel=1e-12)
    top = fbar_max(ref_cloud)
    tau_full, _ = tau_of_f(ref_cloud, top)
    assert tau_full == pytest.approx(top + ref_cloud.macro_only_load, rel=1e-12)


def test_solve_matches_free_lp_oracle():
    rng = np.random.default_rng(4)
    for trial in range(15):
        cloud = synthetic_cloud(rng, num_picos=2, atoms=12)
        policy = solve(cloud)
        oracle = lp_total_time(cloud)
        assert policy.tau_star == pytest.approx(oracle, rel=1e-9)


def test_solve_edge_case_all_ratios_small():
    # every ratio < 1/L: a unit of shared time never pays for itself
    rng = np.random.default_rng(5)
    n = 20
    regions = [
        region_from_arrays(0, rng.normal(size=(4, 2)), rng.uniform(1e6, 2e6, 4),
                           np.zeros(4), 0.25, 4e6)
    ]
    for k in (1, 2):
        s = rng.uniform(10e6, 20e6, n)
        r = s * rng.uniform(0.05, 0.4, n)  # ratios in (0.05, 0.4), sum < 1
        regions.append(region_from_arrays(k, rng.normal(size=(n, 2)), s, r, 0.2, 4e6))
    cloud = SampleCloud(scenario=None, arrival_rate=1.0, seed=-1,
                        samples_per_region=n, regions=tuple(regions))
    assert solve(cloud).f_star == 0.0


def test_solve_edge_case_single_pico_all_ratios_above_one():
    rng = np.random.default_rng(6)
    n = 25
    s = rng.uniform(1e6, 5e6, n)
    r = s * rng.uniform(1.5, 4.0, n)
    regions = (
        region_from_arrays(0, rng.normal(size=(3, 2)), rng.uniform(1e6, 2e6, 3),
                           np.zeros(3), 0.2, 4e6),
        region_from_arrays(1, rng.normal(size=(n, 2)), s, r, 0.5, 4e6),
    )
    cloud = SampleCloud(scenario=None, arrival_rate=1.0, seed=-1,
                        samples_per_region=n, regions=regions)
    policy = solve(cloud)
    assert policy.f_star == pytest.approx(fbar(cloud, 1), rel=1e-12)


def test_edge_condition_brackets_optimum():
    rng = np.random.default_rng(7)
    for trial in range(25):
        cloud = synthetic_cloud(rng, num_picos=3, atoms=15)
        policy = solve(cloud)
        below, above = edge_condition(cloud, policy.f_star)
        assert below >= 1.0 - 1e-12 or policy.f_star == 0.0
        assert above <= 1.0 + 1e-12 or policy.f_star == fbar_max(cloud)


def test_tau_convex_and_rho_monotone_on_curve(ref_cloud):
    curve = tau_curve(ref_cloud)
    df = np.diff(curve.f)
    slopes = np.diff(curve.tau) / df
    assert np.all(np.diff(slopes) >= -1e-12)  # convexity of the vertex table
    for k in range(ref_cloud.num_picos):
        assert np.all(np.diff(curve.rho[:, k]) <= 1e-15)


def test_atom_swap_perturbations_never_improve():
    # move any single atom across its threshold, rebalance the shared budget
    # to the new maximum pico load, and check the objective cannot drop
    rng = np.random.default_rng(8)
    for trial in range(10):
        cloud = synthetic_cloud(rng, num_picos=2, atoms=10)
        policy = solve(cloud)
        tau_star = policy.tau_star
        macro_total = tau_star - policy.f_star
        for k in (1, 2):
            reg = cloud.pico_region(k)
            f_eff = min(policy.f_star, reg.total_pico_seconds)
            j_thr = int(np.searchsorted(reg.pico_prefix, f_eff, side="right")) - 1
            frac = (
                (f_eff - reg.pico_prefix[j_thr]) / reg.pico_seconds[j_thr]
                if j_thr < reg.count
                else 0.0
            )
            for i in range(reg.count):
                loads = list(policy.pico_load)
                if i < j_thr:  # fully pico-served atom forced onto the macro
                    loads[k - 1] -= reg.pico_seconds[i]
                    d_macro = reg.macro_seconds[i]
                else:  # (partially) macro-served atom forced fully onto the pico
                    residual = 1.0 - (frac if i == j_thr else 0.0)
                    loads[k - 1] += residual * reg.pico_seconds[i]
                    d_macro = -residual * reg.macro_seconds[i]
                f_new = max(max(loads), 0.0)
                tau_new = f_new + macro_total + d_macro
                assert tau_new >= tau_star - 1e-9 * tau_star


def test_homogeneity_shared_cloud(ref_cloud):
    base = solve(ref_cloud).tau_star
    for c in (0.5, 2.0, 10.0):
        scaledv = solve(scaled_cloud(ref_cloud, c * ref_cloud.arrival_rate)).tau_star
        assert scaledv == pytest.approx(c * base, rel=1e-9)


def test_capacity_arithmetic_and_recheck():
    scen = reference_scenario()
    result = capacity(scen, samples_per_region=3000, seed=2, se_replicates=2)
    assert result.capacity == pytest.approx(
        scen.traffic.arrival_rate / result.policy.tau_star, rel=1e-12
    )
    assert result.recheck_tau == pytest.approx(1.0, abs=1e-9)
    assert result.standard_error is not None and result.standard_error > 0
    # two independent seeds agree within 3 combined standard errors
    other = capacity(scen, samples_per_region=3000, seed=77, se_replicates=2)
    se = np.hypot(result.standard_error, other.standard_error)
    assert abs(result.capacity - other.capacity) < 3 * se


def test_capacity_requires_traffic():
    scen = reference_scenario(arrival_rate=0.0)
    with pytest.raises(ValueError):
        capacity(scen, samples_per_region=100, seed=0)


def test_feasible_f_range_structure(ref_cloud):
    cap = ref_cloud.arrival_rate / solve(ref_cloud).tau_star
    # vanishing load: every share short of starving the macro is feasible
    tiny = scaled_cloud(ref_cloud, 1e-6 * cap)
    lo, hi = feasible_f_range(tiny)
    assert lo == 0.0
    assert hi == pytest.approx(1.0 - tiny.macro_only_load, rel=1e-9)
    # beyond capacity: empty
    assert feasible_f_range(ref_cloud, arrival_rate=1.1 * cap) is None
    # at capacity: the interval degenerates to the optimal budget
    lo, hi = feasible_f_range(ref_cloud, arrival_rate=cap)
    f_at_cap = solve(scaled_cloud(ref_cloud, cap)).f_star
    assert hi - lo < 1e-6
    assert lo <= f_at_cap + 1e-9 and f_at_cap - 1e-9 <= hi
    # widths shrink monotonically in the arrival rate
    widths = []
    for lam in np.linspace(0.3 * cap, 0.95 * cap, 6):
        lo, hi = feasible_f_range(ref_cloud, arrival_rate=lam)
        widths.append(hi - lo)
        f_opt = solve(scaled_cloud(ref_cloud, lam)).f_star
        assert lo - 1e-12 <= f_opt <= hi + 1e-12
    assert all(a >= b for a, b in zip(widths, widths[1:]))


def test_workloads_nothing_offloaded(ref_cloud):
    thresholds = tuple(
        ref_cloud.pico_region(k).rate_ratio[0] for k in range(1, 4)
    )
    wl = policy_workloads(ref_cloud, thresholds=thresholds)
    assert wl.nu_pico == (0.0, 0.0, 0.0)
    assert wl.pico_workload == (0.0, 0.0, 0.0)
    assert wl.macro_workload == pytest.approx(tau_of_f(ref_cloud, 0.0)[0], rel=1e-12)


def test_workloads_at_optimum(ref_cloud):
    policy = solve(ref_cloud)
    wl = policy_workloads(ref_cloud, policy=policy)
    # whole-atom thresholds leave each pico's fractional boundary atom on the
    # macro, so utilizations match tau* only to one atom's worth of load
    atom_pico = max(ref_cloud.pico_region(k).pico_seconds.max() for k in range(1, 4))
    atom_macro = max(ref_cloud.pico_region(k).macro_seconds.max() for k in range(1, 4))
    macro_tol = 3 * atom_macro / policy.macro_time_share
    assert wl.partition_total == pytest.approx(1.0, abs=1e-9)
    assert wl.macro_utilization == pytest.approx(policy.tau_star, abs=macro_tol)
    assert wl.macro_utilization >= policy.tau_star - 1e-12  # extra load, never less
    for k in range(3):
        assert wl.pico_workload[k] <= policy.f_star + 1e-12
        assert wl.pico_utilization[k] <= policy.tau_star * (1 + 1e-9)
        if policy.saturated[k]:
            # within one atom of saturation
            assert policy.f_star - wl.pico_workload[k] <= atom_pico + 1e-12
    # utilization identity: the busiest queue pins tau* (to atom tolerance)
    assert max(wl.pico_utilization + (wl.macro_utilization,)) == pytest.approx(
        policy.tau_star, abs=macro_tol
    )


def test_dual_certificate_at_optimum():
    rng = np.random.default_rng(9)
    for trial in range(20):
        cloud = synthetic_cloud(rng, num_picos=2, atoms=30)
        policy = solve(cloud)
        for k in (1, 2):
            reg = cloud.pico_region(k)
            if not policy.saturated[k - 1]:
                continue
            atom = reg.pico_seconds.max()
            g = dual_derivative(cloud, k, policy.f_star, policy.rho_star[k - 1])
            assert abs(g) <= atom + 1e-15
            # the dual is minimized at the returned threshold
            val = dual_value(cloud, k, policy.f_star, policy.rho_star[k - 1])
            for rho in rng.uniform(reg.rate_ratio[-1], reg.rate_ratio[0], 8):
                assert dual_value(cloud, k, policy.f_star, float(rho)) >= val - atom


def test_fixed_budget_policy_extends_past_full_offload(ref_cloud):
    top = fbar_max(ref_cloud)
    pol = fixed_budget_policy(ref_cloud, top * 1.5)
    assert pol.tau_star == pytest.approx(
        top * 1.5 + ref_cloud.macro_only_load, rel=1e-12
    )
    assert all(pol.saturated[k] is False for k in range(3))
