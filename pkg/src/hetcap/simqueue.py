"""Discrete-event simulation of the threshold schedulers.

Each base station is one queue: arrivals are thinned onto the macro queue or
their region's pico queue by the policy's rate-ratio thresholds, and every
queue runs independently at its time-share of the channel.  Three service
disciplines are provided: slotted FCFS with per-slot job merging, processor
sharing (the small-slot limit, and the default), and a deliberately crude
round-robin rotation over queues used to demonstrate that overload growth is
scheduler-independent.

All randomness is pregenerated per replication from labeled substreams, so a
report is a pure function of (scenario, config).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from hetcap._kernels import ps_departures
from hetcap.contlp import (
    ThresholdPolicy,
    WorkloadReport,
    fixed_budget_policy,
    policy_workloads,
    solve,
)
from hetcap.disclp import DiscreteInstance, User
from hetcap.quadrature import SampleCloud, build_cloud, scaled_cloud
from hetcap.rng import substream
from hetcap.scenario import (
    Scenario,
    located_rates_batch,
    sample_file_sizes,
    sample_region_positions,
)


class Discipline(enum.Enum):
    SLOTTED_FCFS = "fcfs"
    PROCESSOR_SHARING = "ps"
    ROUND_ROBIN = "round-robin"


class DelayVariant(enum.Enum):
    """Closed-form sojourn predictions for bottleneck queues.

    REGION_RATE divides the queue's occupancy by the *regional* arrival rate
    (arrival_rate * region probability).  ASSIGNED_RATE uses the rate of
    arrivals actually assigned to the queue together with the standard
    mean occupancy tau/(1-tau) of an equal-split queue at utilization tau;
    simulation arbitrates between them (the assigned-rate form is the one the
    simulator reproduces).
    """

    REGION_RATE = "region-rate"
    ASSIGNED_RATE = "assigned-rate"


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign: policy, discipline, horizon, and seeds.

    `pico_share` overrides the policy-derived fraction of every second handed
    to the picos (used to simulate externally fixed blank-subframe shares);
    `thresholds` likewise overrides the assignment thresholds.
    """

    policy: ThresholdPolicy
    discipline: Discipline = Discipline.PROCESSOR_SHARING
    horizon: float = 1000.0
    warmup: float | None = None  # None: 20% of horizon
    slot_length: float = 1e-3
    seed: int = 0
    replications: int = 1
    pico_share: float | None = None
    thresholds: tuple[float, ...] | None = None
    trajectory_points: int = 129

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        w = self.effective_warmup
        if not 0 <= w < self.horizon:
            raise ValueError("need 0 <= warmup < horizon")
        if self.slot_length <= 0:
            raise ValueError("slot length must be positive")
        share = self.effective_pico_share
        if not 0.0 <= share <= 1.0:
            raise ValueError(f"pico time share {share} outside [0, 1]")
        if self.replications < 1:
            raise ValueError("need at least one replication")

    @property
    def effective_warmup(self) -> float:
        return 0.2 * self.horizon if self.warmup is None else self.warmup

    @property
    def effective_pico_share(self) -> float:
        if self.pico_share is not None:
            return self.pico_share
        return self.policy.pico_time_share

    @property
    def effective_thresholds(self) -> tuple[float, ...]:
        if self.thresholds is not None:
            return self.thresholds
        return self.policy.rho_star


@dataclass(frozen=True)
class ArrivalBatch:
    """Pregenerated arrivals of one replication, time-sorted."""

    times: np.ndarray
    region: np.ndarray
    queue: np.ndarray  # 0 = macro, k = pico k
    size: np.ndarray
    macro_rate: np.ndarray
    pico_rate: np.ndarray
    work: np.ndarray  # server-seconds on the assigned queue


@dataclass(frozen=True)
class QueueStats:
    """Post-warmup statistics of one queue in one replication."""

    arrivals: int
    departures: int
    mean_occupancy: float
    var_occupancy: float
    max_occupancy: int
    mean_sojourn: float
    sojourn_count: int
    utilization: float
    busy_time: float
    served_work: float
    served_bits: float
    slope: float
    slope_stderr: float
    residual_slope: float
    occupancy_at_arrival: np.ndarray
    trajectory_t: np.ndarray
    trajectory_n: np.ndarray
    trajectory_residual: np.ndarray


@dataclass(frozen=True)
class SimReport:
    """Per-replication, per-queue statistics plus cross-replication summaries."""

    config: SimConfig
    arrival_rate: float
    queue_labels: tuple[str, ...]
    reps: tuple[dict[int, QueueStats], ...]

    def stat(self, queue: int, name: str) -> np.ndarray:
        return np.array([getattr(r[queue], name) for r in self.reps], dtype=float)

    def mean(self, queue: int, name: str) -> float:
        return float(self.stat(queue, name).mean())

    def ci_halfwidth(self, queue: int, name: str) -> float:
        """~95% normal CI half-width across replications (0 for one rep)."""
        v = self.stat(queue, name)
        if len(v) < 2:
            return 0.0
        return float(1.96 * v.std(ddof=1) / math.sqrt(len(v)))

    def total_slopes(self) -> np.ndarray:
        """Growth slope of total occupancy, one entry per replication."""
        out = []
        for r in self.reps:
            n = sum(r[q].trajectory_n for q in r)
            t = r[0].trajectory_t
            out.append(_ols_slope(t, n)[0])
        return np.array(out)

    def pooled_sojourn(self, queue: int) -> float:
        num = sum(r[queue].mean_sojourn * r[queue].sojourn_count for r in self.reps)
        den = sum(r[queue].sojourn_count for r in self.reps)
        return num / den if den > 0 else math.nan

    def is_stable(self, queue: int) -> bool:
        """Declared classifier: slope CI straddles 0 and no runaway maximum.

        The slope band is 3 sigma across replications, and a drift amounting
        to under 10% of the mean occupancy (plus one occupant) over the whole
        window never counts as growth.  The runaway test compares the window
        maximum against 50x the mean occupancy, floored at half an occupant so
        nearly empty queues are not flagged by their own discreteness.
        """
        slopes = self.stat(queue, "slope")
        m = slopes.mean()
        s = slopes.std(ddof=1) if len(slopes) > 1 else 0.0
        half = 3.0 * s / math.sqrt(len(slopes)) if len(slopes) > 1 else math.inf
        mean_n = self.mean(queue, "mean_occupancy")
        window = self.config.horizon - self.config.effective_warmup
        negligible = abs(m) * window <= 0.1 * (mean_n + 1.0)
        max_n = max(r[queue].max_occupancy for r in self.reps)
        no_runaway = max_n < 50 * max(mean_n, 0.5)
        return (abs(m) <= half or negligible) and no_runaway


# --- arrival generation ---------------------------------------------------------

def generate_arrivals(
    scenario: Scenario,
    thresholds: tuple[float, ...],
    horizon: float,
    rng: np.random.Generator,
) -> ArrivalBatch:
    """Poisson arrivals over [0, horizon], located, sized, and assigned."""
    lam = scenario.traffic.arrival_rate
    n = int(rng.poisson(lam * horizon))
    times = np.sort(rng.random(n) * horizon)
    region = rng.choice(
        len(scenario.traffic.region_probs), size=n, p=scenario.traffic.region_probs
    ).astype(np.int64)
    macro_rate = np.empty(n)
    pico_rate = np.zeros(n)
    rho = np.zeros(n)
    for r in range(scenario.num_picos + 1):
        mask = region == r
        k = int(mask.sum())
        if k == 0:
            continue
        xy = sample_region_positions(scenario, r, k, rng)
        s, p, rr = located_rates_batch(scenario, r, xy)
        macro_rate[mask] = s
        pico_rate[mask] = p
        rho[mask] = rr
    size = sample_file_sizes(scenario, n, rng)
    queue = np.zeros(n, dtype=np.int64)
    for k in range(1, scenario.num_picos + 1):
        queue[(region == k) & (rho > thresholds[k - 1])] = k
    rate = np.where(queue > 0, pico_rate, macro_rate)
    work = size / rate
    return ArrivalBatch(
        times=times,
        region=region,
        queue=queue,
        size=size,
        macro_rate=macro_rate,
        pico_rate=pico_rate,
        work=work,
    )


# --- per-discipline departure processes ------------------------------------------

def _fcfs_departures(
    arr: np.ndarray, works_wall: np.ndarray, slot: float
) -> np.ndarray:
    """Slotted FCFS with per-slot merged jobs; service is fluid within slots.

    Files arriving during a slot enter as one job at the next slot boundary
    and the job queue obeys the waiting-time recursion of a fixed-interarrival
    single server; empty slots are skipped analytically.
    """
    n = len(arr)
    if n == 0:
        return np.empty(0)
    entry = (np.floor(arr / slot) + 1.0) * slot
    new_job = np.concatenate([[True], entry[1:] != entry[:-1]])
    starts = np.flatnonzero(new_job)
    job_id = np.cumsum(new_job) - 1
    job_entry = entry[starts]
    cw = np.cumsum(works_wall)
    job_work = np.diff(np.concatenate([[0.0], cw[np.concatenate([starts[1:] - 1, [n - 1]])]]))
    waits = np.zeros(len(starts))
    if len(starts) > 1:
        drift = job_work[:-1] - np.diff(job_entry)
        walk = np.cumsum(drift)
        waits[1:] = walk - np.minimum.accumulate(np.minimum(walk, 0.0))
    service_start = job_entry + waits
    base = cw[starts] - works_wall[starts]
    return service_start[job_id] + (cw - base[job_id])


def _active_clock(t: np.ndarray, slot: float, queue: int, n_queues: int):
    """Map wall time to this queue's cumulative activation time."""
    period = n_queues * slot
    block = np.floor(t / period)
    offset = t - block * period - queue * slot
    return block * slot + np.clip(offset, 0.0, slot)


def _rr_departures(
    arr: np.ndarray, works: np.ndarray, slot: float, queue: int, n_queues: int
) -> np.ndarray:
    """Round-robin rotation: the queue owns every n_queues-th slot outright.

    FCFS per file at full rate inside its own slots; implemented by running
    the waiting recursion on the queue's activation clock.
    """
    n = len(arr)
    if n == 0:
        return np.empty(0)
    a = _active_clock(arr, slot, queue, n_queues)
    ws = np.cumsum(works)
    prev = np.concatenate([[0.0], ws[:-1]])
    completion = ws + np.maximum.accumulate(a - prev)
    # invert the activation clock: completion lands inside some owned slot
    block = np.ceil(completion / slot) - 1.0
    rem = completion - block * slot
    return block * (n_queues * slot) + queue * slot + rem


# --- statistics -------------------------------------------------------------------

def _ols_slope(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(slope, stderr) of a least-squares line fit."""
    if len(t) < 3:
        return 0.0, math.inf
    tc = t - t.mean()
    denom = float(tc @ tc)
    if denom == 0.0:
        return 0.0, math.inf
    slope = float(tc @ (y - y.mean())) / denom
    resid = y - y.mean() - slope * tc
    dof = len(t) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / denom) if dof > 0 else math.inf
    return slope, stderr


def _interval_overlap_cum(starts: np.ndarray, ends: np.ndarray, t: np.ndarray):
    """Total measure of sorted disjoint intervals below each time in t."""
    lengths = ends - starts
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    k = np.searchsorted(ends, t, side="right")
    partial = np.clip(t - starts[np.minimum(k, len(starts) - 1)], 0.0, None)
    partial = np.where(k < len(starts), np.minimum(partial, lengths[np.minimum(k, len(starts) - 1)]), 0.0)
    return cum[k] + partial


def _queue_stats(
    arr: np.ndarray,
    dep: np.ndarray,
    works_bs: np.ndarray,
    sizes: np.ndarray,
    service_starts: np.ndarray,
    service_ends: np.ndarray,
    to_server_time,
    share: float,
    work_rate: float,
    warmup: float,
    horizon: float,
    grid_points: int,
) -> QueueStats:
    """Assemble one queue's statistics from its arrival/departure processes.

    service_starts/ends are the server's transmit intervals on its own clock
    (wall for FCFS/PS, activation time for round-robin); `to_server_time` maps
    wall instants onto that clock and `work_rate` converts interval measure to
    server-seconds of delivered work.  Work quantities are in server-seconds
    at full rate ("BS-seconds"), so served_work == work_rate * busy_time holds
    exactly, which is the work-conservation identity the tests assert.
    """
    n = len(arr)
    window = horizon - warmup
    grid = np.linspace(warmup, horizon, grid_points)

    departed = dep <= horizon
    dep_sorted = np.sort(dep)

    # occupancy walk over [0, horizon]
    ev_t = np.concatenate([arr, dep[departed]])
    ev_d = np.concatenate([np.ones(n), -np.ones(int(departed.sum()))])
    order = np.argsort(ev_t, kind="stable")
    ev_t = ev_t[order]
    ev_d = ev_d[order]
    occ = np.cumsum(ev_d)

    seg_start = np.concatenate([[0.0], ev_t])
    seg_end = np.concatenate([ev_t, [horizon]])
    seg_n = np.concatenate([[0.0], occ])
    lo = np.clip(seg_start, warmup, horizon)
    hi = np.clip(seg_end, warmup, horizon)
    dt = np.clip(hi - lo, 0.0, None)
    covered = dt.sum()
    mean_n = float((seg_n * dt).sum() / covered) if covered > 0 else 0.0
    var_n = float((seg_n**2 * dt).sum() / covered) - mean_n**2 if covered > 0 else 0.0
    in_window = dt > 0
    max_n = int(seg_n[in_window].max()) if in_window.any() else 0

    # service accounting on the server clock
    w0s, w1s = to_server_time(np.array([warmup, horizon]))
    if len(service_starts) > 0:
        served_at = _interval_overlap_cum(
            service_starts, service_ends, np.array([w0s, w1s])
        )
        served_interval = float(served_at[1] - served_at[0])
    else:
        served_interval = 0.0
    served_work = work_rate * served_interval
    busy_time = served_interval
    utilization = served_work / (window * share) if share > 0 and window > 0 else 0.0

    # sojourns of post-warmup arrivals that departed in time
    soj_mask = (arr >= warmup) & departed
    sojourns = dep[soj_mask] - arr[soj_mask]
    mean_sojourn = float(sojourns.mean()) if len(sojourns) else math.nan
    served_bits = float(sizes[(dep >= warmup) & departed].sum())

    # occupancy seen by post-warmup arrivals (departures at the same instant count)
    n_before = np.arange(n) - np.searchsorted(dep_sorted, arr, side="right")
    occupancy_at_arrival = n_before[arr >= warmup].astype(np.int64)

    # trajectories on the sampling grid, residual work in server-seconds
    idx = np.searchsorted(ev_t, grid, side="right")
    n_at = np.concatenate([[0.0], occ])[idx]
    arrived_work = np.concatenate([[0.0], np.cumsum(works_bs)])
    k_arr = np.searchsorted(arr, grid, side="right")
    if len(service_starts) > 0:
        served_cum = work_rate * _interval_overlap_cum(
            service_starts, service_ends, to_server_time(grid)
        )
    else:
        served_cum = np.zeros_like(grid)
    residual = arrived_work[k_arr] - served_cum
    slope, stderr = _ols_slope(grid, n_at)
    rslope, _ = _ols_slope(grid, residual)

    return QueueStats(
        arrivals=int((arr >= warmup).sum()),
        departures=int((dep[departed] >= warmup).sum()),
        mean_occupancy=mean_n,
        var_occupancy=max(var_n, 0.0),
        max_occupancy=max_n,
        mean_sojourn=mean_sojourn,
        sojourn_count=int(len(sojourns)),
        utilization=utilization,
        busy_time=busy_time,
        served_work=served_work,
        served_bits=served_bits,
        slope=slope,
        slope_stderr=stderr,
        residual_slope=rslope,
        occupancy_at_arrival=occupancy_at_arrival,
        trajectory_t=grid,
        trajectory_n=n_at,
        trajectory_residual=residual,
    )


# --- main entry -------------------------------------------------------------------

def _identity(x: np.ndarray) -> np.ndarray:
    return x


def _simulate_queue(
    batch: ArrivalBatch,
    queue: int,
    n_queues: int,
    config: SimConfig,
    pico_share: float,
) -> QueueStats:
    mask = batch.queue == queue
    arr = batch.times[mask]
    work = batch.work[mask]
    sizes = batch.size[mask]
    share = pico_share if queue > 0 else 1.0 - pico_share
    disc = config.discipline

    if disc is Discipline.ROUND_ROBIN:
        share = 1.0 / n_queues
        dep = _rr_departures(arr, work, config.slot_length, queue, n_queues)
        comp = _active_clock(dep, config.slot_length, queue, n_queues)
        starts, ends = comp - work, comp

        def to_server(t: np.ndarray) -> np.ndarray:
            return _active_clock(t, config.slot_length, queue, n_queues)

        work_rate = 1.0
    elif disc is Discipline.SLOTTED_FCFS:
        works_wall = work / share if share > 0 else np.full_like(work, np.inf)
        dep = _fcfs_departures(arr, works_wall, config.slot_length)
        starts, ends = dep - works_wall, dep
        to_server = _identity
        work_rate = share
    elif disc is Discipline.PROCESSOR_SHARING:
        dep = ps_departures(arr, work, share)
        # the server transmits exactly when the queue is non-empty
        starts, ends = _busy_intervals(arr, dep)
        to_server = _identity
        work_rate = share
    else:  # pragma: no cover
        raise ValueError(f"unknown discipline {disc}")

    return _queue_stats(
        arr=arr,
        dep=dep,
        works_bs=work,
        sizes=sizes,
        service_starts=starts,
        service_ends=ends,
        to_server_time=to_server,
        share=share,
        work_rate=work_rate,
        warmup=config.effective_warmup,
        horizon=config.horizon,
        grid_points=config.trajectory_points,
    )


def _busy_intervals(arr: np.ndarray, dep: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximal intervals with at least one job present (drained system)."""
    n = len(arr)
    if n == 0:
        return np.empty(0), np.empty(0)
    ev_t = np.concatenate([arr, dep])
    ev_d = np.concatenate([np.ones(n), -np.ones(n)])
    order = np.argsort(ev_t, kind="stable")
    ev_t, ev_d = ev_t[order], ev_d[order]
    occ = np.cumsum(ev_d)
    starts = ev_t[(occ > 0) & (np.concatenate([[0.0], occ[:-1]]) == 0)]
    ends = ev_t[(occ == 0) & (np.concatenate([[0.0], occ[:-1]]) > 0)]
    return starts, ends


def run(scenario: Scenario, config: SimConfig) -> SimReport:
    """Simulate every queue over all replications; deterministic given config."""
    thresholds = config.effective_thresholds
    if len(thresholds) != scenario.num_picos:
        raise ValueError("threshold vector length does not match pico count")
    pico_share = config.effective_pico_share
    n_queues = scenario.num_picos + 1
    reps = []
    for rep in range(config.replications):
        rng = substream(config.seed, "sim", rep)
        batch = generate_arrivals(scenario, thresholds, config.horizon, rng)
        reps.append(
            {
                q: _simulate_queue(batch, q, n_queues, config, pico_share)
                for q in range(n_queues)
            }
        )
    labels = ("macro",) + tuple(f"pico{k}" for k in range(1, n_queues))
    return SimReport(
        config=config,
        arrival_rate=scenario.traffic.arrival_rate,
        queue_labels=labels,
        reps=tuple(reps),
    )


# --- closed-form delay predictions ------------------------------------------------

def theoretical_ps_delay(
    policy: ThresholdPolicy,
    workloads: WorkloadReport,
    region_probs: tuple[float, ...],
    queue: int,
    variant: DelayVariant = DelayVariant.ASSIGNED_RATE,
) -> float:
    """Stationary mean sojourn prediction for a bottleneck queue.

    Returns inf when the system is at or beyond critical load.  Queue 0 is
    the macro queue; queues 1..L are picos (meaningful for saturated picos
    with a positive threshold, i.e. the bottleneck queues).
    """
    tau = policy.tau_star
    lam = policy.arrival_rate
    if tau >= 1.0:
        return math.inf
    if variant is DelayVariant.REGION_RATE:
        eta = region_probs[queue]
        return 1.0 / (lam * eta * (1.0 - tau))
    nu = workloads.nu_macro if queue == 0 else workloads.nu_pico[queue - 1]
    mean_occupancy = tau / (1.0 - tau)
    return mean_occupancy / (lam * nu)


# --- sweeps and clearing prefixes ---------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    arrival_rate: float
    pico_share: float
    queue: int
    queue_label: str
    utilization: float
    mean_occupancy: float
    mean_sojourn: float
    slope: float
    predicted_sojourn_assigned: float
    predicted_sojourn_region: float


def stability_sweep(
    scenario: Scenario,
    arrival_rates: tuple[float, ...],
    *,
    cloud: SampleCloud | None = None,
    samples_per_region: int = 20_000,
    solver_seed: int = 0,
    fixed_share: float | None = None,
    discipline: Discipline = Discipline.PROCESSOR_SHARING,
    horizon: float = 2000.0,
    replications: int = 2,
    seed: int = 0,
) -> list[SweepRow]:
    """Resolve and simulate across arrival rates (optionally at a fixed share).

    One cloud is shared across the sweep, reweighted per rate, so the policy
    path is free of fresh Monte-Carlo noise; each rate then runs its own
    simulation.  With `fixed_share`, the blank-subframe share is pinned and
    only the thresholds re-optimize.
    """
    if cloud is None:
        cloud = build_cloud(scenario, samples_per_region, solver_seed)
    rows: list[SweepRow] = []
    for lam in arrival_rates:
        c = scaled_cloud(cloud, lam)
        if fixed_share is None:
            policy = solve(c)
            share = policy.pico_time_share
        else:
            policy = fixed_budget_policy(c, fixed_share)
            share = fixed_share
        workloads = policy_workloads(c, policy=policy)
        scen = replace(
            scenario, traffic=replace(scenario.traffic, arrival_rate=lam)
        )
        config = SimConfig(
            policy=policy,
            discipline=discipline,
            horizon=horizon,
            seed=seed,
            replications=replications,
            pico_share=share,
        )
        report = run(scen, config)
        for q in range(scenario.num_picos + 1):
            rows.append(
                SweepRow(
                    arrival_rate=lam,
                    pico_share=share,
                    queue=q,
                    queue_label=report.queue_labels[q],
                    utilization=report.mean(q, "utilization"),
                    mean_occupancy=report.mean(q, "mean_occupancy"),
                    mean_sojourn=report.pooled_sojourn(q),
                    slope=float(report.stat(q, "slope").mean()),
                    predicted_sojourn_assigned=theoretical_ps_delay(
                        policy, workloads, scenario.traffic.region_probs, q,
                        DelayVariant.ASSIGNED_RATE,
                    ),
                    predicted_sojourn_region=theoretical_ps_delay(
                        policy, workloads, scenario.traffic.region_probs, q,
                        DelayVariant.REGION_RATE,
                    ),
                )
            )
    return rows


def simulate_clearing_prefix(
    scenario: Scenario,
    policy: ThresholdPolicy,
    prefix_horizon: float,
    seed: int,
    pico_share: float | None = None,
) -> tuple[float, DiscreteInstance]:
    """Run the scheduler on an arrival prefix until drained.

    Returns the realized clearing time (wall time with at least one pico
    transmitting, scaled by the pico share, plus the macro transmission time
    of macro-assigned files) together with the prefix as a clearing-time
    instance; the realized time can never beat the instance's optimum.
    """
    share = policy.pico_time_share if pico_share is None else pico_share
    rng = substream(seed, "clearing-prefix")
    batch = generate_arrivals(scenario, policy.rho_star, prefix_horizon, rng)

    intervals: list[tuple[np.ndarray, np.ndarray]] = []
    for q in range(1, scenario.num_picos + 1):
        mask = batch.queue == q
        if not mask.any():
            continue
        dep = ps_departures(batch.times[mask], batch.work[mask], share)
        intervals.append(_busy_intervals(batch.times[mask], dep))
    pico_union = 0.0
    if intervals:
        starts = np.concatenate([s for s, _ in intervals])
        ends = np.concatenate([e for _, e in intervals])
        order = np.argsort(starts)
        starts, ends = starts[order], ends[order]
        cur_s, cur_e = starts[0], ends[0]
        for s, e in zip(starts[1:], ends[1:]):
            if s > cur_e:
                pico_union += cur_e - cur_s
                cur_s, cur_e = s, e
            else:
                cur_e = max(cur_e, e)
        pico_union += cur_e - cur_s
    macro_time = float(batch.work[batch.queue == 0].sum())
    realized = share * pico_union + macro_time

    users = tuple(
        User(
            pico_index=int(batch.region[i]),
            pico_rate=float(batch.pico_rate[i]) if batch.region[i] > 0 else 1.0,
            macro_rate=float(batch.macro_rate[i]),
            demand=float(batch.size[i]),
        )
        for i in range(len(batch.times))
    )
    return realized, DiscreteInstance(users=users)
