"""Mode-based time sharing: picos switch on and off in subsets.

Instead of one shared pico phase, the schedule now allocates time to "modes"
(subsets of at least two picos transmitting together); a pico's rate within a
mode reflects interference from the other members only.  Time alone with a
single pico is folded into the macro rate, which becomes
max(macro, solo pico).  The resulting program is solved through its
Lagrangian dual: each pico prices its modes with multipliers, atoms go to the
mode maximizing rate-ratio over price (when that beats the macro), and the
mode time vector follows a projected subgradient ascent on the prices.

A multiplier bundle certifies optimality when, for every mode with positive
time, the member multipliers sum to one and every member's time constraint is
tight; both residuals are reported rather than assumed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from hetcap.contlp import ThresholdPolicy, solve as _single_solve
from hetcap.errors import CertificateError
from hetcap.quadrature import RegionCloud, SampleCloud
from hetcap.scenario import pico_rates


@dataclass(frozen=True)
class ModeSet:
    """The on-states considered: subsets of picos with at least two members."""

    modes: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen = set()
        for m in self.modes:
            if len(m) < 2:
                raise ValueError(f"mode {m} has fewer than two picos")
            if tuple(sorted(m)) != m:
                raise ValueError(f"mode {m} must be sorted")
            if m in seen:
                raise ValueError(f"duplicate mode {m}")
            seen.add(m)
        if not self.modes:
            raise ValueError("need at least one mode")

    @staticmethod
    def all_modes(num_picos: int) -> "ModeSet":
        modes = []
        for size in range(2, num_picos + 1):
            modes.extend(itertools.combinations(range(1, num_picos + 1), size))
        return ModeSet(modes=tuple(modes))

    def containing(self, pico: int) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.modes) if pico in m)


@dataclass(frozen=True)
class PicoModeTables:
    """Per-atom service-time tables of one pico region.

    macro_seconds uses the absorbed macro rate; mode_seconds[:, j] is the
    pico time per atom under the j-th mode containing this pico.  ratio is
    mode rate over absorbed macro rate, the assignment currency.
    """

    pico: int
    mode_ids: tuple[int, ...]
    macro_seconds: np.ndarray  # (M,)
    mode_seconds: np.ndarray  # (M, n_modes)
    ratio: np.ndarray  # (M, n_modes)

    @property
    def count(self) -> int:
        return len(self.macro_seconds)

    @property
    def atom_resolution(self) -> float:
        """Largest single-atom pico time: the natural certificate unit."""
        return float(self.mode_seconds.max())


@dataclass(frozen=True)
class ModeCloud:
    """A sample cloud augmented with per-mode rates on the same atoms."""

    base: SampleCloud
    mode_set: ModeSet
    tables: tuple[PicoModeTables, ...]
    absorbed: bool

    @property
    def arrival_rate(self) -> float:
        return self.base.arrival_rate

    @property
    def macro_only_load(self) -> float:
        return self.base.macro_only_load

    @property
    def num_picos(self) -> int:
        return self.base.num_picos


def build_mode_cloud(
    cloud: SampleCloud, mode_set: ModeSet | None = None, absorb_singletons: bool = True
) -> ModeCloud:
    """Evaluate per-mode rates on an existing cloud's atoms.

    Reuses the cloud positions (common random numbers), so mode results are
    directly comparable with the single-phase solve on the same cloud.  With
    absorb_singletons, each atom's macro rate becomes the better of the plain
    macro link and the pico transmitting alone.
    """
    scenario = cloud.scenario
    if scenario is None:
        raise ValueError("mode rates need the cloud's scenario")
    if mode_set is None:
        mode_set = ModeSet.all_modes(cloud.num_picos)
    d = scenario.traffic.mean_file_size_bits
    tables = []
    for pico in range(1, cloud.num_picos + 1):
        reg: RegionCloud = cloud.pico_region(pico)
        mode_ids = mode_set.containing(pico)
        s = reg.macro_rate.copy()
        if absorb_singletons:
            solo = pico_rates(scenario, pico, reg.xy, interferers=())
            s = np.maximum(s, solo)
        cols = []
        for mid in mode_ids:
            interferers = tuple(k for k in mode_set.modes[mid] if k != pico)
            cols.append(pico_rates(scenario, pico, reg.xy, interferers=interferers))
        rates = np.stack(cols, axis=1) if cols else np.empty((reg.count, 0))
        w = reg.weight
        tables.append(
            PicoModeTables(
                pico=pico,
                mode_ids=mode_ids,
                macro_seconds=w * d / s,
                mode_seconds=w * d / rates if rates.size else rates,
                ratio=rates / s[:, None] if rates.size else rates,
            )
        )
    return ModeCloud(
        base=cloud, mode_set=mode_set, tables=tuple(tables), absorbed=absorb_singletons
    )


# --- inner problem: one pico prices its modes -----------------------------------

@dataclass(frozen=True)
class PicoDualResult:
    """Multipliers and primal recovery of one pico's mode-assignment problem."""

    pico: int
    mode_ids: tuple[int, ...]
    mu: np.ndarray
    macro_time: float  # primal value (feasible by construction)
    dual_value: float
    duality_gap: float
    usage: np.ndarray  # pico time consumed per mode, after recovery
    assignment: np.ndarray  # per atom: local mode column, -1 = macro
    fraction: np.ndarray  # served fraction on the assigned mode (1 except splits)
    grad_residual: float  # in atom-resolution units
    iterations: int
    all_zero_mu: bool


def _dual_objective(tab: PicoModeTables, f: np.ndarray, mu: np.ndarray) -> float:
    surplus = tab.macro_seconds[:, None] - mu[None, :] * tab.mode_seconds
    return float(mu @ f + np.maximum(surplus.max(axis=1), 0.0).sum())


def _dual_subgradient(
    tab: PicoModeTables, f: np.ndarray, mu: np.ndarray
) -> np.ndarray:
    surplus = tab.macro_seconds[:, None] - mu[None, :] * tab.mode_seconds
    best = np.argmax(surplus, axis=1)
    positive = surplus[np.arange(tab.count), best] > 0.0
    picked = np.take_along_axis(tab.mode_seconds, best[:, None], axis=1)[:, 0]
    g = f - np.bincount(
        best[positive], weights=picked[positive], minlength=len(mu)
    )
    return g


def _coordinate_min(
    tab: PicoModeTables, f: np.ndarray, mu: np.ndarray, j: int, hi: float
) -> float:
    """Exact 1-D minimizer in coordinate j.

    With the other prices fixed, atom i belongs to mode j exactly while
    mu_j < (macro surplus over the best alternative) / mode_seconds, so the
    coordinate subgradient f_j - (mass of atoms still preferring j) is a
    nondecreasing step function of mu_j; its zero crossing is found by one
    sorted cumulative sum.
    """
    others = np.delete(np.arange(len(mu)), j)
    if len(others):
        alt = (
            tab.macro_seconds[:, None]
            - mu[None, others] * tab.mode_seconds[:, others]
        ).max(axis=1)
        alt = np.maximum(alt, 0.0)
    else:
        alt = np.zeros(tab.count)
    cutoff = (tab.macro_seconds - alt) / tab.mode_seconds[:, j]
    live = cutoff > 0.0
    if not live.any():
        return 0.0
    c = cutoff[live]
    w = tab.mode_seconds[live, j]
    order = np.argsort(-c, kind="stable")
    cum = np.cumsum(w[order])
    crossed = cum > f[j]
    if not crossed.any():
        return 0.0  # the whole budget never fills: price falls to zero
    k = int(np.argmax(crossed))
    return float(min(max(c[order][k], 0.0), hi))


def _recover_primal(
    tab: PicoModeTables, f: np.ndarray, mu: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Feasible assignment from prices, with complementary-slackness repair.

    Atoms take their best positive surplus mode (ties to the largest rate
    ratio); overfull budgets shed the least-committed atoms, and priced but
    underfull budgets pull in near-indifferent macro atoms, splitting one atom
    fractionally per mode so that priced constraints finish tight.
    """
    m, n = tab.count, len(mu)
    surplus = tab.macro_seconds[:, None] - mu[None, :] * tab.mode_seconds
    # tie-break equal surpluses (e.g. several zero prices) toward the largest
    # rate ratio; the epsilon is far below any meaningful surplus difference
    best = np.argmax(surplus + 1e-18 * tab.ratio, axis=1) if n else np.zeros(m, int)
    best_val = surplus[np.arange(m), best] if n else np.full(m, -1.0)
    assignment = np.where(best_val > 0.0, best, -1)
    fraction = np.where(assignment >= 0, 1.0, 0.0)

    scale = max(float(np.max(tab.macro_seconds, initial=0.0)), 1e-300)
    indifferent = 1e-9 * scale
    for j in range(n):
        sel = np.flatnonzero(assignment == j)
        usage = float((tab.mode_seconds[sel, j] * fraction[sel]).sum())
        if usage > f[j]:
            # shed least-committed atoms until feasible, splitting the last one
            shed_order = sel[np.argsort(surplus[sel, j], kind="stable")]
            excess = usage - f[j]
            for i in shed_order:
                step = tab.mode_seconds[i, j] * fraction[i]
                if step >= excess - 1e-18 * scale:
                    frac_off = excess / tab.mode_seconds[i, j]
                    fraction[i] -= frac_off
                    if fraction[i] <= 1e-15:
                        assignment[i] = -1
                        fraction[i] = 0.0
                    excess = 0.0
                    break
                assignment[i] = -1
                fraction[i] = 0.0
                excess -= step
        else:
            # pull macro atoms into the remaining room: strictly improving
            # while their surplus is positive, and cost-neutral down to the
            # indifference band when the budget is priced (tightness)
            floor = -indifferent if mu[j] > 0.0 else indifferent
            pool = np.flatnonzero((assignment == -1) & (surplus[:, j] >= floor))
            pool = pool[np.argsort(-surplus[pool, j], kind="stable")]
            room = f[j] - usage
            for i in pool:
                if room <= 1e-18 * scale:
                    break
                step = tab.mode_seconds[i, j]
                take = min(1.0, room / step)
                assignment[i] = j
                fraction[i] = take
                room -= take * step
    macro_time = float(
        (tab.macro_seconds * np.where(assignment >= 0, 1.0 - fraction, 1.0)).sum()
    )
    usage = np.array(
        [
            float(
                (tab.mode_seconds[assignment == j, j] * fraction[assignment == j]).sum()
            )
            for j in range(n)
        ]
    )
    return macro_time, usage, assignment, fraction


def _vertex_crossover(
    tab: PicoModeTables, f: np.ndarray, mu: np.ndarray, mu_max: np.ndarray
) -> np.ndarray:
    """Exact polish for small instances: enumerate dual vertices.

    The dual is piecewise linear with kinks where an atom is indifferent
    between macro and a mode (fixes one coordinate) or between two modes
    (a ray through the origin); its minimum sits on an intersection of n such
    hyperplanes.  Enumerating all combinations is exact and affordable for
    test-sized instances.
    """
    m, n = tab.count, len(mu)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for j in range(n):
        row = np.zeros(n)
        row[j] = 1.0
        rows.append(row)
        rhs.append(0.0)  # mu_j = 0
        for i in range(m):
            rows.append(row)
            rhs.append(tab.macro_seconds[i] / tab.mode_seconds[i, j])
    for j, jp in itertools.combinations(range(n), 2):
        for i in range(m):
            row = np.zeros(n)
            row[j] = tab.mode_seconds[i, j]
            row[jp] = -tab.mode_seconds[i, jp]
            rows.append(row)
            rhs.append(0.0)
    plane_a = np.stack(rows)
    plane_b = np.array(rhs)
    combos = np.array(list(itertools.combinations(range(len(rows)), n)))
    a = plane_a[combos]
    b = plane_b[combos]
    solvable = np.abs(np.linalg.det(a)) > 1e-12
    candidates = np.linalg.solve(a[solvable], b[solvable])
    keep = np.all(candidates > -1e-9, axis=1) & np.all(
        candidates < mu_max[None, :] + 1e-9, axis=1
    )
    candidates = np.clip(candidates[keep], 0.0, mu_max)
    candidates = np.concatenate([candidates, mu[None, :]])
    # evaluate the dual at every candidate in one einsum pass
    surplus = (
        tab.macro_seconds[None, :, None]
        - candidates[:, None, :] * tab.mode_seconds[None, :, :]
    )
    values = candidates @ f + np.maximum(surplus.max(axis=2), 0.0).sum(axis=1)
    return candidates[int(np.argmin(values))]


_CROSSOVER_MAX_ATOMS = 16


def _projected_residual(
    g: np.ndarray, x: np.ndarray, x_max: np.ndarray, f: np.ndarray
) -> float:
    """Stationarity residual over the budgeted coordinates.

    Zero-budget coordinates are excluded: their dual is flat above the
    marginal cutoff, so any price there is optimal (the reported value is the
    marginal one the outer problem needs).
    """
    r = 0.0
    for j in range(len(x)):
        if f[j] <= 0.0:
            continue
        gj = g[j]
        if x[j] <= 0.0:
            gj = min(gj, 0.0)
        elif x[j] >= x_max[j]:
            gj = max(gj, 0.0)
        r = max(r, abs(gj))
    return r


def _price(
    tab: PicoModeTables,
    f: np.ndarray,
    mu0: np.ndarray | None,
    mu_max: np.ndarray,
    tol: float,
    max_rounds: int,
) -> tuple[np.ndarray, int]:
    """Minimize the dual in the prices: exact coordinate steps plus a guard.

    Zero-budget modes are deleted from the minimization (pinned at a
    prohibitive price, as the flat dual allows) so they can never prop up one
    another as phantom alternatives; the budgeted coordinates are solved by
    cyclic exact coordinate minimization with a normalized subgradient nudge
    guarding the rare stall on coupled kinks.  Each empty mode then gets the
    marginal value of its first unit of time against the solved assignment,
    which is what the outer problem differentiates.
    """
    n = len(f)
    active = [j for j in range(n) if f[j] > 0.0]
    it = 0

    def descend(start: np.ndarray) -> tuple[np.ndarray, float, int]:
        nonlocal it
        mu = np.where(f <= 0.0, mu_max, np.clip(start, 0.0, mu_max))
        best_mu = mu.copy()
        best_val = _dual_objective(tab, f, mu)
        step0 = 0.25 * float(mu_max.max())
        rounds = 0
        for rnd in range(max_rounds):
            rounds += 1
            it += 1
            for j in active:
                mu[j] = _coordinate_min(tab, f, mu, j, mu_max[j])
            val = _dual_objective(tab, f, mu)
            if val < best_val - 1e-18:
                best_val = val
                best_mu = mu.copy()
            g = _dual_subgradient(tab, f, mu)
            if _projected_residual(g, mu, mu_max, f) <= tol:
                best_mu = mu.copy()
                best_val = _dual_objective(tab, f, mu)
                break
            norm = float(np.linalg.norm(g[active]))
            if norm > 0:
                step = step0 / math.sqrt(rnd + 1)
                for j in active:
                    mu[j] = min(max(mu[j] - step * g[j] / norm, 0.0), mu_max[j])
        return best_mu, best_val, rounds

    mu = np.where(f <= 0.0, mu_max, 0.5 * mu_max)
    if active:
        # descending from prohibitive prices cannot be trapped by the
        # all-cheap fixed point where every mode props up every other as a
        # free alternative; a warm start is kept only when it does better
        mu, val = descend(mu_max.copy())[:2]
        if mu0 is not None:
            mu_warm, val_warm, _ = descend(mu0)
            if val_warm < val:
                mu = mu_warm
    # marginal price of each empty mode against the active solution only
    # (other empty modes stay prohibitive while each one is evaluated)
    marginal = mu.copy()
    for j in range(n):
        if f[j] <= 0.0:
            marginal[j] = _coordinate_min(tab, f, mu, j, mu_max[j])
    return marginal, it


def solve_pico_dual(
    mode_cloud: ModeCloud,
    pico: int,
    f_sigma: np.ndarray,
    mu0: np.ndarray | None = None,
    max_rounds: int = 40,
    tol_atoms: float = 1.0,
    raise_on_failure: bool = True,
    exact: bool = False,
) -> PicoDualResult:
    """Price one pico's modes given the full mode time vector f_sigma.

    Minimizes the convex dual in the multipliers, then recovers a feasible
    assignment whose priced budgets are exactly tight.  With `exact`, small
    instances get a vertex enumeration polish so the duality gap vanishes
    there.
    """
    tab = mode_cloud.tables[pico - 1]
    n = len(tab.mode_ids)
    f_sigma = np.asarray(f_sigma, dtype=float)
    f = f_sigma[list(tab.mode_ids)] if n else np.empty(0)
    if np.any(f < 0):
        raise ValueError("mode times must be >= 0")
    if n == 0:
        return PicoDualResult(
            pico=pico,
            mode_ids=(),
            mu=np.empty(0),
            macro_time=float(tab.macro_seconds.sum()),
            dual_value=float(tab.macro_seconds.sum()),
            duality_gap=0.0,
            usage=np.empty(0),
            assignment=np.full(tab.count, -1),
            fraction=np.zeros(tab.count),
            grad_residual=0.0,
            iterations=0,
            all_zero_mu=True,
        )
    mu_max = np.array([float(tab.ratio[:, j].max()) for j in range(n)])
    resolution = tab.atom_resolution
    mu, it = _price(tab, f, mu0, mu_max, tol_atoms * resolution, max_rounds)
    if exact and tab.count <= _CROSSOVER_MAX_ATOMS:
        mu = _vertex_crossover(tab, f, mu, mu_max)
    g = _dual_subgradient(tab, f, mu)
    res = (
        _projected_residual(g, mu, mu_max, f) / resolution if resolution > 0 else 0.0
    )
    if raise_on_failure and res > max(tol_atoms, 1.0) * 50:
        raise CertificateError(
            f"pico {pico} price iteration stalled: residual {res:.3g} atoms"
        )
    dual_val = float(tab.macro_seconds.sum()) - _dual_objective(tab, f, mu)
    macro_time, usage, assignment, fraction = _recover_primal(tab, f, mu)
    return PicoDualResult(
        pico=pico,
        mode_ids=tab.mode_ids,
        mu=mu,
        macro_time=macro_time,
        dual_value=dual_val,
        duality_gap=macro_time - dual_val,
        usage=usage,
        assignment=assignment,
        fraction=fraction,
        grad_residual=res,
        iterations=it,
        all_zero_mu=bool(np.all(mu == 0.0)),
    )


# --- outer problem: the mode time vector ------------------------------------------

@dataclass(frozen=True)
class ModeCertificates:
    """Residuals of the optimality structure, in interpretable units."""

    multiplier_gap: dict[tuple[int, ...], float]  # active modes: |sum(mu) - 1|
    tightness_atoms: dict[tuple[tuple[int, ...], int], float]  # (mode, pico)
    duality_gap_rel: dict[int, float]  # per pico
    converged: bool
    flags: tuple[str, ...]


@dataclass(frozen=True)
class ModePolicy:
    """Mode time shares, prices, and the certified structure."""

    mode_set: ModeSet
    f_sigma: np.ndarray
    tau_bar: float
    mu: dict[tuple[tuple[int, ...], int], float]  # (mode, pico) -> multiplier
    pico_results: tuple[PicoDualResult, ...]
    certificates: ModeCertificates

    @property
    def total_pico_time(self) -> float:
        return float(self.f_sigma.sum())


def solve_onoff(
    mode_cloud: ModeCloud,
    max_sweeps: int = 20,
    active_tol: float = 1e-9,
    multiplier_tol: float = 1e-3,
    seed_policy: ThresholdPolicy | None = None,
) -> ModePolicy:
    """Minimize total transmission time over the mode time vector.

    The directional derivative in each mode time is one minus that mode's
    member price sum and is nondecreasing (the program is convex), so each
    coordinate is minimized exactly by bisection on its sign; cyclic sweeps
    repeat until no coordinate moves.  Normalized subgradient nudges between
    sweeps guard against coordinate stalls on coupled kinks.  Certificate
    violations at the final point are flagged in the result, never silently
    dropped.
    """
    modes = mode_cloud.mode_set.modes
    n_modes = len(modes)
    tabs = mode_cloud.tables

    # start from the single-phase solution concentrated on the widest mode
    widest = max(range(n_modes), key=lambda i: len(modes[i]))
    f = np.zeros(n_modes)
    if seed_policy is None:
        seed_policy = _single_solve(_widest_mode_cloud(mode_cloud, widest))
    f[widest] = seed_policy.f_star

    mu_warm: list[np.ndarray | None] = [None] * mode_cloud.num_picos
    mu_max = [
        np.array([float(t.ratio[:, j].max()) for j in range(len(t.mode_ids))])
        for t in tabs
    ]
    scale = max(float(f.sum()), mode_cloud.macro_only_load, 1e-9)
    f_cap = 4.0 * scale + 1.0

    def prices_for(pico: int, fvec: np.ndarray) -> np.ndarray:
        tab = tabs[pico - 1]
        fl = fvec[list(tab.mode_ids)]
        tol = 0.5 * tab.atom_resolution
        mu, _ = _price(tab, fl, mu_warm[pico - 1], mu_max[pico - 1], tol, 40)
        mu_warm[pico - 1] = mu.copy()
        return mu

    def mode_derivative(mode_index: int, fvec: np.ndarray) -> float:
        total = 0.0
        for pico in modes[mode_index]:
            mu = prices_for(pico, fvec)
            total += float(mu[tabs[pico - 1].mode_ids.index(mode_index)])
        return 1.0 - total

    def inner_all(fvec: np.ndarray, exact: bool = False) -> list[PicoDualResult]:
        out = []
        for pico in range(1, mode_cloud.num_picos + 1):
            r = solve_pico_dual(
                mode_cloud,
                pico,
                fvec,
                mu0=mu_warm[pico - 1],
                tol_atoms=0.5,
                raise_on_failure=False,
                exact=exact,
            )
            mu_warm[pico - 1] = r.mu.copy()
            out.append(r)
        return out

    def objective(fvec: np.ndarray, results: list[PicoDualResult]) -> float:
        return float(fvec.sum()) + sum(r.macro_time for r in results)

    def mode_mu_sums(results: list[PicoDualResult]) -> np.ndarray:
        sums = np.zeros(n_modes)
        for r in results:
            for j, mid in enumerate(r.mode_ids):
                sums[mid] += r.mu[j]
        return sums

    tol_f = 1e-7 * scale
    for sweep in range(max_sweeps):
        moved = 0.0
        for i in range(n_modes):
            old = f[i]
            trial = f.copy()
            trial[i] = 0.0
            if mode_derivative(i, trial) >= 0.0:
                f = trial  # even the first unit of time does not pay
            else:
                lo = 0.0
                hi = max(2.0 * old, 0.25 * scale)
                trial[i] = hi
                while mode_derivative(i, trial) < 0.0 and hi < f_cap:
                    hi *= 2.0
                    trial[i] = hi
                while hi - lo > tol_f:
                    mid = 0.5 * (lo + hi)
                    trial[i] = mid
                    if mode_derivative(i, trial) < 0.0:
                        lo = mid
                    else:
                        hi = mid
                f[i] = hi
            moved = max(moved, abs(f[i] - old))
        if moved <= tol_f * 10:
            break

    results = inner_all(f, exact=True)
    obj = objective(f, results)
    sums = mode_mu_sums(results)
    converged = all(
        abs(1.0 - sums[i]) <= multiplier_tol
        for i in range(n_modes)
        if f[i] > active_tol * scale
    )

    mu_table: dict[tuple[tuple[int, ...], int], float] = {}
    for r in results:
        for j, mid in enumerate(r.mode_ids):
            mu_table[(modes[mid], r.pico)] = float(r.mu[j])

    sums = mode_mu_sums(results)
    flags: list[str] = []
    multiplier_gap: dict[tuple[int, ...], float] = {}
    tightness: dict[tuple[tuple[int, ...], int], float] = {}
    duality_rel: dict[int, float] = {}
    for i, mode in enumerate(modes):
        if f[i] <= active_tol * scale:
            continue
        gap = abs(1.0 - float(sums[i]))
        multiplier_gap[mode] = gap
        if gap > multiplier_tol:
            flags.append(f"mode {mode}: multiplier sum off by {gap:.2e}")
        for r in results:
            if r.pico in mode:
                j = r.mode_ids.index(i)
                atoms = tabs[r.pico - 1].atom_resolution
                miss = abs(float(r.usage[j]) - f[i]) / atoms if atoms > 0 else 0.0
                tightness[(mode, r.pico)] = miss
                if miss > 1.0 + 1e-6:
                    flags.append(
                        f"mode {mode} pico {r.pico}: budget slack {miss:.2f} atoms"
                    )
    for r in results:
        rel = r.duality_gap / max(r.macro_time, 1e-300)
        duality_rel[r.pico] = rel
        if r.all_zero_mu and any(f[m] > active_tol * scale for m in r.mode_ids):
            flags.append(f"pico {r.pico}: all multipliers zero (no macro time needed)")
        if any(r.mu > 1.0 + 1e-9):
            flags.append(f"pico {r.pico}: multiplier above 1 (reuse-gain bound)")
    certificates = ModeCertificates(
        multiplier_gap=multiplier_gap,
        tightness_atoms=tightness,
        duality_gap_rel=duality_rel,
        converged=converged,
        flags=tuple(flags),
    )
    return ModePolicy(
        mode_set=mode_cloud.mode_set,
        f_sigma=f,
        tau_bar=mode_cloud.macro_only_load + obj,
        mu=mu_table,
        pico_results=tuple(results),
        certificates=certificates,
    )


def _widest_mode_cloud(mode_cloud: ModeCloud, mode_index: int) -> SampleCloud:
    """A single-phase cloud whose rates are one mode's rates (for seeding)."""
    from dataclasses import replace as _replace

    from hetcap.quadrature import region_from_arrays

    base = mode_cloud.base
    d = base.scenario.traffic.mean_file_size_bits
    regions = [base.regions[0]]
    for pico in range(1, base.num_picos + 1):
        tab = mode_cloud.tables[pico - 1]
        reg = base.pico_region(pico)
        j = tab.mode_ids.index(mode_index)
        w = reg.weight
        regions.append(
            region_from_arrays(
                pico,
                reg.xy,
                w * d / tab.macro_seconds,  # absorbed macro rate
                w * d / tab.mode_seconds[:, j],  # this mode's pico rate
                w,
                d,
            )
        )
    return _replace(base, regions=tuple(regions))
