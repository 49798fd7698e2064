"""Exact solver for the continuous time-sharing program on a sample cloud.

For a pico time budget f, each pico independently offloads its highest
rate-ratio mass until f is exhausted (a fractional knapsack, optimal because a
second of pico time spent on an atom saves rate-ratio seconds of macro time).
The resulting total transmission time per second

    tau(f) = f + macro_only_load + sum_l per_pico_macro_time_l(f)

is convex piecewise-linear in f on a fixed cloud, with vertices only at the
per-pico prefix boundaries, so the global minimum is found exactly by scanning
the merged boundary set: no iterative optimizer and no inner tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetcap.quadrature import RegionCloud, SampleCloud, build_cloud, fbar_max, scaled_cloud
from hetcap.rng import substream
from hetcap.scenario import Scenario


@dataclass(frozen=True)
class FractionalAtom:
    """The at-most-one atom per pico split between pico and macro service.

    The threshold rule serves whole atoms; exact pico saturation generally
    needs one boundary atom served fractionally by the pico.  It is reported
    rather than hidden: `fraction` of its demand rides on the pico.
    """

    pico_index: int
    atom_index: int
    fraction: float


@dataclass(frozen=True)
class ThresholdPolicy:
    """Solver output parameterizing the schedulers.

    rho_star[l] is the rate-ratio threshold of pico l+1 (arrivals strictly
    above it are pico-served), f_star the pico time budget and tau_star the
    total transmission time, both in seconds per second at `arrival_rate`.
    pico_load[l] is the pico time the optimum actually uses (including the
    fractional atom), pico_load_integral[l] the whole-atom load induced by the
    threshold rule.  A pico is `saturated` when its budget constraint is tight.
    """

    arrival_rate: float
    f_star: float
    tau_star: float
    rho_star: tuple[float, ...]
    pico_load: tuple[float, ...]
    pico_load_integral: tuple[float, ...]
    saturated: tuple[bool, ...]
    fractional_atoms: tuple[FractionalAtom, ...]

    @property
    def pico_time_share(self) -> float:
        """Fraction of wall-clock time the scheduler hands to the picos."""
        return self.f_star / self.tau_star if self.tau_star > 0 else 0.0

    @property
    def macro_time_share(self) -> float:
        return 1.0 - self.pico_time_share


@dataclass(frozen=True)
class TauCurve:
    """tau(f) and the per-pico thresholds tabulated at every vertex.

    `sum_rho_active` sums thresholds over picos still below full offload; it
    is the magnitude of tau's right slope minus one, so the minimizer of tau
    is the first vertex where this column drops to <= 1.
    """

    f: np.ndarray
    tau: np.ndarray
    rho: np.ndarray  # shape (len(f), num_picos), clamped at the extremes
    sum_rho_active: np.ndarray


# --- per-pico subproblem ------------------------------------------------------

def _prefix_index(reg: RegionCloud, f: float) -> int:
    """Largest k with pico_prefix[k] <= f (number of whole atoms offloaded)."""
    return int(np.searchsorted(reg.pico_prefix, f, side="right")) - 1


def rho_of_f(cloud: SampleCloud, pico_index: int, f: float) -> float:
    """Rate-ratio threshold exhausting pico time f on region `pico_index`.

    Non-increasing in f, from the region's maximum ratio at f=0 down to its
    minimum at full offload.  f outside [0, full offload time] is a domain
    error; callers wanting the saturated threshold clamp to the upper end.
    """
    reg = cloud.pico_region(pico_index)
    if not 0.0 <= f <= reg.total_pico_seconds:
        raise ValueError(
            f"f={f} outside [0, {reg.total_pico_seconds}] for pico {pico_index}"
        )
    k = _prefix_index(reg, f)
    return float(reg.rate_ratio[min(k, reg.count - 1)])


def _pico_macro_time(reg: RegionCloud, f: np.ndarray) -> np.ndarray:
    """Least macro time for one pico region given pico budget(s) f.

    Linear interpolation of the (prefix pico time, suffix macro time) table:
    the marginal atom is split fractionally, which is the subproblem optimum.
    """
    f = np.asarray(f, dtype=float)
    g = reg.pico_prefix
    k = np.minimum(np.searchsorted(g, f, side="right") - 1, reg.count - 1)
    interp = reg.macro_suffix[k] - (f - g[k]) * reg.rate_ratio[k]
    return np.where(f >= reg.total_pico_seconds, 0.0, interp)


def tau_of_f(cloud: SampleCloud, f: float) -> tuple[float, tuple[float, ...]]:
    """(total transmission time per second, per-pico thresholds) at budget f."""
    if not 0.0 <= f <= fbar_max(cloud) + 1e-15:
        raise ValueError(f"f={f} outside [0, {fbar_max(cloud)}]")
    tau = f + cloud.macro_only_load
    thresholds = []
    for k in range(1, cloud.num_picos + 1):
        reg = cloud.pico_region(k)
        f_eff = min(f, reg.total_pico_seconds)
        tau += float(_pico_macro_time(reg, f_eff))
        thresholds.append(rho_of_f(cloud, k, f_eff))
    return tau, tuple(thresholds)


def _tau_at(cloud: SampleCloud, f_values: np.ndarray) -> np.ndarray:
    tau = f_values + cloud.macro_only_load
    for k in range(1, cloud.num_picos + 1):
        tau = tau + _pico_macro_time(cloud.pico_region(k), f_values)
    return tau


def _merged_breakpoints(cloud: SampleCloud) -> np.ndarray:
    if cloud.num_picos == 0:
        return np.array([0.0])
    return np.unique(
        np.concatenate(
            [cloud.pico_region(k).pico_prefix for k in range(1, cloud.num_picos + 1)]
        )
    )


def edge_condition(cloud: SampleCloud, f: float) -> tuple[float, float]:
    """Threshold sums just below and above f over picos still offloading.

    tau has left slope 1 - below and right slope 1 - above, so optimality of
    f means below >= 1 >= above (with below read as +inf at f = 0).
    """
    below = 0.0 if f > 0 else np.inf
    above = 0.0
    for k in range(1, cloud.num_picos + 1):
        reg = cloud.pico_region(k)
        g = reg.pico_prefix
        if 0.0 < f <= reg.total_pico_seconds:
            below += float(reg.rate_ratio[np.searchsorted(g, f, side="left") - 1])
        if f < reg.total_pico_seconds:
            above += float(reg.rate_ratio[np.searchsorted(g, f, side="right") - 1])
    return below, above


# --- global solve -------------------------------------------------------------

def solve(cloud: SampleCloud) -> ThresholdPolicy:
    """Minimize tau over the pico time budget, exactly, on this cloud.

    The minimum of a convex piecewise-linear function lies at a vertex, so
    scanning the merged per-pico prefix boundaries is exact; ties resolve to
    the smallest budget.  The two degenerate regimes fall out automatically:
    if no pico's top ratios are worth a unit of shared time the minimum is at
    f=0, and if every ratio exceeds the trade-off the minimum is at full
    offload.
    """
    bps = _merged_breakpoints(cloud)
    taus = _tau_at(cloud, bps)
    best = int(np.argmin(taus))
    f_star = float(bps[best])
    tau_star = float(taus[best])

    rho_star: list[float] = []
    pico_load: list[float] = []
    pico_load_integral: list[float] = []
    saturated: list[bool] = []
    fractional: list[FractionalAtom] = []
    for k in range(1, cloud.num_picos + 1):
        reg = cloud.pico_region(k)
        f_eff = min(f_star, reg.total_pico_seconds)
        j = _prefix_index(reg, f_eff)
        rho_star.append(float(reg.rate_ratio[min(j, reg.count - 1)]))
        pico_load.append(f_eff)
        pico_load_integral.append(float(reg.pico_prefix[j]))
        saturated.append(reg.total_pico_seconds >= f_star)
        if j < reg.count and f_eff > reg.pico_prefix[j]:
            theta = (f_eff - reg.pico_prefix[j]) / reg.pico_seconds[j]
            fractional.append(FractionalAtom(k, j, float(theta)))
    return ThresholdPolicy(
        arrival_rate=cloud.arrival_rate,
        f_star=f_star,
        tau_star=tau_star,
        rho_star=tuple(rho_star),
        pico_load=tuple(pico_load),
        pico_load_integral=tuple(pico_load_integral),
        saturated=tuple(saturated),
        fractional_atoms=tuple(fractional),
    )


def fixed_budget_policy(cloud: SampleCloud, f: float) -> ThresholdPolicy:
    """Policy for an externally fixed pico budget (time share) f >= 0.

    Thresholds are chosen optimally for that budget; tau is extended past full
    offload by idle pico time, so any fixed share can be simulated.
    """
    if f < 0:
        raise ValueError("pico budget must be >= 0")
    tau = f + cloud.macro_only_load
    rho_star: list[float] = []
    pico_load: list[float] = []
    pico_load_integral: list[float] = []
    saturated: list[bool] = []
    fractional: list[FractionalAtom] = []
    for k in range(1, cloud.num_picos + 1):
        reg = cloud.pico_region(k)
        f_eff = min(f, reg.total_pico_seconds)
        tau += float(_pico_macro_time(reg, f_eff))
        j = _prefix_index(reg, f_eff)
        rho_star.append(float(reg.rate_ratio[min(j, reg.count - 1)]))
        pico_load.append(f_eff)
        pico_load_integral.append(float(reg.pico_prefix[j]))
        saturated.append(reg.total_pico_seconds >= f)
        if j < reg.count and f_eff > reg.pico_prefix[j]:
            theta = (f_eff - reg.pico_prefix[j]) / reg.pico_seconds[j]
            fractional.append(FractionalAtom(k, j, float(theta)))
    return ThresholdPolicy(
        arrival_rate=cloud.arrival_rate,
        f_star=f,
        tau_star=tau,
        rho_star=tuple(rho_star),
        pico_load=tuple(pico_load),
        pico_load_integral=tuple(pico_load_integral),
        saturated=tuple(saturated),
        fractional_atoms=tuple(fractional),
    )


def tau_curve(cloud: SampleCloud, max_points: int | None = None) -> TauCurve:
    """Tabulate tau, thresholds, and the active threshold sum at every vertex."""
    bps = _merged_breakpoints(cloud)
    if max_points is not None and len(bps) > max_points:
        idx = np.unique(
            np.round(np.linspace(0, len(bps) - 1, max_points)).astype(int)
        )
        bps = bps[idx]
    taus = _tau_at(cloud, bps)
    rho = np.empty((len(bps), cloud.num_picos))
    active = np.zeros(len(bps))
    for k in range(1, cloud.num_picos + 1):
        reg = cloud.pico_region(k)
        g = reg.pico_prefix
        j = np.minimum(np.searchsorted(g, bps, side="right") - 1, reg.count - 1)
        rho[:, k - 1] = reg.rate_ratio[j]
        active += np.where(bps < reg.total_pico_seconds, reg.rate_ratio[j], 0.0)
    return TauCurve(f=bps, tau=taus, rho=rho, sum_rho_active=active)


# --- capacity ------------------------------------------------------------------

@dataclass(frozen=True)
class CapacityResult:
    """Maximum supportable arrival rate and the policy at the probe rate."""

    capacity: float
    tau_star_unit: float  # tau* per unit arrival rate
    policy: ThresholdPolicy  # solved at the scenario's own arrival rate
    recheck_tau: float  # tau* re-solved at the returned capacity (same cloud)
    standard_error: float | None = None
    replicate_capacities: tuple[float, ...] = ()


def capacity(
    scenario: Scenario,
    samples_per_region: int = 200_000,
    seed: int = 0,
    se_replicates: int = 0,
) -> CapacityResult:
    """sup{arrival rate : tau* < 1}, via homogeneity of the program.

    tau* scales exactly linearly in the arrival rate on a shared cloud, so one
    solve at the scenario's rate gives capacity = rate / tau*.  The result is
    re-checked by re-solving the reweighted cloud at the returned capacity,
    and optionally replicated over fresh seeds for a Monte-Carlo standard
    error.
    """
    lam = scenario.traffic.arrival_rate
    if lam <= 0:
        raise ValueError("capacity needs a scenario with positive arrival rate")
    cloud = build_cloud(scenario, samples_per_region, seed)
    policy = solve(cloud)
    cap = lam / policy.tau_star
    recheck = solve(scaled_cloud(cloud, cap)).tau_star

    se = None
    reps: list[float] = []
    if se_replicates > 0:
        for i in range(se_replicates):
            rep_seed = int(substream(seed, "capacity-se", i).integers(2**63))
            rep_cloud = build_cloud(scenario, samples_per_region, rep_seed)
            reps.append(lam / solve(rep_cloud).tau_star)
        pool = np.array([cap] + reps)
        se = float(pool.std(ddof=1) / np.sqrt(len(pool)))
    return CapacityResult(
        capacity=cap,
        tau_star_unit=policy.tau_star / lam,
        policy=policy,
        recheck_tau=recheck,
        standard_error=se,
        replicate_capacities=tuple(reps),
    )


def feasible_f_range(
    cloud: SampleCloud, arrival_rate: float | None = None
) -> tuple[float, float] | None:
    """Blank-subframe shares f in [0, 1] with tau(f) <= 1, or None when empty.

    A fixed share f is sustainable exactly when the macro keeps up with what
    the picos cannot absorb, i.e. tau(f) <= 1 (past full offload the pico
    phase simply idles, tau(f) = f + macro-only load).  Convexity makes the
    set an interval; endpoints are exact because tau is linear between
    vertices.
    """
    if arrival_rate is not None:
        cloud = scaled_cloud(cloud, arrival_rate)
    bps = _merged_breakpoints(cloud)
    bps = np.concatenate([bps[bps < 1.0], [1.0]])
    taus = _tau_at(cloud, bps)
    feasible = taus <= 1.0
    if not feasible.any():
        return None

    def crossing(i: int, j: int) -> float:
        # linear segment between vertices i (infeasible) and j (feasible)
        t = (taus[i] - 1.0) / (taus[i] - taus[j])
        return float(bps[i] + t * (bps[j] - bps[i]))

    first = int(np.argmax(feasible))
    last = len(feasible) - 1 - int(np.argmax(feasible[::-1]))
    f_lo = bps[first] if first == 0 else crossing(first - 1, first)
    f_hi = bps[last] if last == len(bps) - 1 else crossing(last + 1, last)
    return float(f_lo), float(f_hi)


# --- workloads under a threshold policy ----------------------------------------

@dataclass(frozen=True)
class WorkloadReport:
    """Per-queue traffic split and load induced by rate-ratio thresholds.

    Probabilities are fractions of all arrivals; workloads are seconds of BS
    work per second.  Utilizations (load over time share) are filled in when
    the report is built from a solved policy.
    """

    region0_fraction: float  # arrivals landing in the macro-only region
    nu_pico: tuple[float, ...]  # P(arrival assigned to pico l)
    macro_served_region_fraction: tuple[float, ...]  # per pico region
    pico_workload: tuple[float, ...]
    macro_workload: float
    pico_mean_service: tuple[float, ...]  # BS-seconds per assigned file
    macro_mean_service: float
    pico_utilization: tuple[float, ...] | None
    macro_utilization: float | None

    @property
    def nu_macro(self) -> float:
        """P(arrival assigned to the macro queue)."""
        return self.region0_fraction + sum(self.macro_served_region_fraction)

    @property
    def partition_total(self) -> float:
        """Should be 1: every arrival lands in exactly one service class."""
        return (
            self.region0_fraction
            + sum(self.nu_pico)
            + sum(self.macro_served_region_fraction)
        )


def policy_workloads(
    cloud: SampleCloud,
    policy: ThresholdPolicy | None = None,
    thresholds: tuple[float, ...] | None = None,
) -> WorkloadReport:
    """Traffic split and per-queue workloads for a policy or raw thresholds.

    With raw thresholds, atoms strictly above the threshold go to the pico
    (equality goes to the macro, matching the solver's whole-atom rule) and
    thresholds are clamped into the region's ratio range.
    """
    lam = cloud.arrival_rate
    if (policy is None) == (thresholds is None):
        raise ValueError("pass exactly one of policy or thresholds")
    nu_pico: list[float] = []
    pico_workload: list[float] = []
    pico_mean: list[float] = []
    macro_region_fraction: list[float] = []
    macro_workload = cloud.macro_only_load
    for k in range(1, cloud.num_picos + 1):
        reg = cloud.pico_region(k)
        if policy is not None:
            j = _prefix_index(reg, min(policy.f_star, reg.total_pico_seconds))
        else:
            a = thresholds[k - 1]
            # rate_ratio is sorted descending; count atoms strictly above a
            j = int(
                reg.count
                - np.searchsorted(reg.rate_ratio[::-1], a, side="right")
            )
        nu = j * reg.weight / lam if lam > 0 else 0.0
        nu_pico.append(nu)
        w_p = float(reg.pico_prefix[j])
        pico_workload.append(w_p)
        pico_mean.append(w_p / (lam * nu) if nu > 0 else 0.0)
        macro_workload += float(reg.macro_suffix[j])
        macro_region_fraction.append(
            (reg.count - j) * reg.weight / lam if lam > 0 else 0.0
        )
    region0 = cloud.regions[0]
    region0_fraction = region0.count * region0.weight / lam if lam > 0 else 0.0
    nu_macro = region0_fraction + sum(macro_region_fraction)
    macro_mean = macro_workload / (lam * nu_macro) if lam > 0 and nu_macro > 0 else 0.0

    pico_util = None
    macro_util = None
    if policy is not None and policy.tau_star > 0:
        ps, ms = policy.pico_time_share, policy.macro_time_share
        pico_util = tuple(
            w / ps if ps > 0 else (0.0 if w == 0 else np.inf) for w in pico_workload
        )
        macro_util = macro_workload / ms if ms > 0 else np.inf
    return WorkloadReport(
        region0_fraction=region0_fraction,
        nu_pico=tuple(nu_pico),
        macro_served_region_fraction=tuple(macro_region_fraction),
        pico_workload=tuple(pico_workload),
        macro_workload=macro_workload,
        pico_mean_service=tuple(pico_mean),
        macro_mean_service=macro_mean,
        pico_utilization=pico_util,
        macro_utilization=macro_util,
    )


# --- dual verification (independent optimality certificate) --------------------

def dual_value(cloud: SampleCloud, pico_index: int, f: float, rho: float) -> float:
    """Convex dual of one pico's offload subproblem at multiplier rho.

    g(rho) = rho*f + sum over atoms above rho of (macro_seconds - rho *
    pico_seconds); minimized at the subproblem's optimal threshold.
    """
    reg = cloud.pico_region(pico_index)
    above = reg.rate_ratio > rho
    return float(
        rho * f + np.sum(reg.macro_seconds[above] - rho * reg.pico_seconds[above])
    )


def dual_derivative(
    cloud: SampleCloud, pico_index: int, f: float, rho: float
) -> float:
    """g'(rho) = f - pico time of the atoms above rho; ~0 at a tight optimum."""
    reg = cloud.pico_region(pico_index)
    j = int(reg.count - np.searchsorted(reg.rate_ratio[::-1], rho, side="right"))
    return float(f - reg.pico_prefix[j])
