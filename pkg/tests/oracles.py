"""Independent oracles and generators shared across the test suite.

The LP oracles solve the atomized programs with HiGHS, a completely separate
code path from the threshold-structure solvers under test; expected values in
the tests are either computed here or frozen from hand calculations.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from hetcap.disclp import DiscreteInstance, User
from hetcap.quadrature import RegionCloud, SampleCloud, region_from_arrays


def synthetic_cloud(
    rng: np.random.Generator,
    num_picos: int = 2,
    atoms: int = 10,
    arrival_rate: float = 1.0,
    macro_atoms: int = 4,
) -> SampleCloud:
    """Random small cloud with independent uniform rates in 1..20 Mbit/s."""
    mean_size = 4e6
    probs = rng.dirichlet(np.ones(num_picos + 1))
    regions: list[RegionCloud] = []
    for region in range(num_picos + 1):
        m = macro_atoms if region == 0 else atoms
        xy = rng.normal(size=(m, 2))
        s = rng.uniform(1e6, 20e6, m)
        r = rng.uniform(1e6, 20e6, m) if region >= 1 else np.zeros(m)
        weight = arrival_rate * probs[region] / m
        regions.append(region_from_arrays(region, xy, s, r, weight, mean_size))
    return SampleCloud(
        scenario=None,
        arrival_rate=arrival_rate,
        seed=-1,
        samples_per_region=atoms,
        regions=tuple(regions),
    )


def lp_total_time(cloud: SampleCloud, f_fixed: float | None = None) -> float:
    """HiGHS optimum of the atomized program (optionally at a pinned budget).

    Variables are the offloaded fraction of each pico atom plus (optionally)
    the budget; the objective counts macro seconds of everything not
    offloaded.
    """
    pico_regions = [cloud.pico_region(k) for k in range(1, cloud.num_picos + 1)]
    sizes = [reg.count for reg in pico_regions]
    total_atoms = sum(sizes)
    base = cloud.macro_only_load + sum(reg.macro_seconds.sum() for reg in pico_regions)

    free_f = f_fixed is None
    nvar = total_atoms + (1 if free_f else 0)
    c = np.zeros(nvar)
    offset = 0
    a_rows = []
    b_rows = []
    for reg in pico_regions:
        m = reg.count
        c[offset : offset + m] = -reg.macro_seconds
        row = np.zeros(nvar)
        row[offset : offset + m] = reg.pico_seconds
        if free_f:
            row[-1] = -1.0
            b_rows.append(0.0)
        else:
            b_rows.append(f_fixed)
        a_rows.append(row)
        offset += m
    if free_f:
        c[-1] = 1.0
    bounds = [(0.0, 1.0)] * total_atoms + ([(0.0, None)] if free_f else [])
    res = linprog(
        c,
        A_ub=np.array(a_rows) if a_rows else None,
        b_ub=np.array(b_rows) if a_rows else None,
        bounds=bounds,
        method="highs",
    )
    assert res.success, res.message
    return float(res.fun + base + (f_fixed if not free_f else 0.0))


def random_instance(
    rng: np.random.Generator, max_users: int = 12, max_picos: int = 2
) -> DiscreteInstance:
    """Random clearing-time instance in the acceptance regime."""
    n = int(rng.integers(1, max_users + 1))
    num_picos = int(rng.integers(0, max_picos + 1))
    users = []
    for _ in range(n):
        pico = int(rng.integers(0, num_picos + 1))
        users.append(
            User(
                pico_index=pico,
                pico_rate=float(rng.uniform(1e6, 20e6)),
                macro_rate=float(rng.uniform(1e6, 20e6)),
                demand=float(rng.uniform(1e6, 8e6)),
            )
        )
    return DiscreteInstance(users=tuple(users))


def lp_pico_modes(
    macro_seconds: np.ndarray, mode_seconds: np.ndarray, budgets: np.ndarray
) -> float:
    """HiGHS optimum of one pico's mode-assignment problem (min macro time)."""
    m, n = mode_seconds.shape
    # variables x[i, j] = fraction of atom i served in mode j
    c = np.tile(-macro_seconds[:, None], (1, n)).ravel()
    a_rows = []
    b_rows = []
    for j in range(n):
        row = np.zeros((m, n))
        row[:, j] = mode_seconds[:, j]
        a_rows.append(row.ravel())
        b_rows.append(budgets[j])
    for i in range(m):
        row = np.zeros((m, n))
        row[i, :] = 1.0
        a_rows.append(row.ravel())
        b_rows.append(1.0)
    res = linprog(
        c,
        A_ub=np.array(a_rows),
        b_ub=np.array(b_rows),
        bounds=[(0.0, 1.0)] * (m * n),
        method="highs",
    )
    assert res.success, res.message
    return float(res.fun + macro_seconds.sum())


def lp_onoff_total(tables, macro_only_load: float) -> float:
    """HiGHS optimum of the full mode program (budgets free, cost 1 each).

    `tables` is a list of PicoModeTables; mode ids index a shared budget
    vector.
    """
    n_modes = 1 + max(max(t.mode_ids) for t in tables if t.mode_ids)
    x_sizes = [t.count * len(t.mode_ids) for t in tables]
    nvar = sum(x_sizes) + n_modes
    c = np.zeros(nvar)
    c[-n_modes:] = 1.0
    base = macro_only_load + sum(t.macro_seconds.sum() for t in tables)
    a_rows = []
    b_rows = []
    offset = 0
    for t in tables:
        m, n = t.count, len(t.mode_ids)
        block = slice(offset, offset + m * n)
        c[block] = np.tile(-t.macro_seconds[:, None], (1, n)).ravel()
        for j, mid in enumerate(t.mode_ids):
            row = np.zeros(nvar)
            picks = np.zeros((m, n))
            picks[:, j] = t.mode_seconds[:, j]
            row[block] = picks.ravel()
            row[nvar - n_modes + mid] = -1.0
            a_rows.append(row)
            b_rows.append(0.0)
        for i in range(m):
            row = np.zeros(nvar)
            picks = np.zeros((m, n))
            picks[i, :] = 1.0
            row[block] = picks.ravel()
            a_rows.append(row)
            b_rows.append(1.0)
        offset += m * n
    bounds = [(0.0, 1.0)] * (nvar - n_modes) + [(0.0, None)] * n_modes
    res = linprog(
        c, A_ub=np.array(a_rows), b_ub=np.array(b_rows), bounds=bounds,
        method="highs",
    )
    assert res.success, res.message
    return float(res.fun + base)
