"""Minimum clearing time for a finite set of users.

Given users frozen in place with known demands, the shortest schedule splits
time between one shared pico phase (all picos transmit in parallel for f
seconds) and macro service for everything else.  For fixed f each pico fills
its budget with its highest rate-ratio users first (fractional knapsack); the
resulting clearing time is convex piecewise-linear in f, minimized exactly
over the merged per-pico breakpoints.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

_ORACLE_MAX_USERS = 12
_ORACLE_MAX_PICOS = 3


@dataclass(frozen=True)
class User:
    """One user: serving pico (0 = macro-only), link rates, and demand."""

    pico_index: int
    pico_rate: float  # bits/s; ignored for pico_index 0
    macro_rate: float  # bits/s
    demand: float  # bits

    def __post_init__(self) -> None:
        if self.macro_rate <= 0:
            raise ValueError("macro rate must be positive")
        if self.pico_index < 0:
            raise ValueError("pico index must be >= 0")
        if self.pico_index > 0 and self.pico_rate <= 0:
            raise ValueError("pico rate must be positive for pico users")
        if self.demand <= 0:
            raise ValueError("demand must be positive")


@dataclass(frozen=True)
class DiscreteInstance:
    users: tuple[User, ...]

    @property
    def num_picos(self) -> int:
        return max((u.pico_index for u in self.users), default=0)


@dataclass(frozen=True)
class DiscreteSolution:
    """Optimal split: x/y bits per user via pico/macro, pico phase f seconds.

    The rate-ratio structure holds: within each pico, users strictly above
    `thresholds[l]` ride entirely on the pico, strictly below entirely on the
    macro, and at most one user per pico is split fractionally.
    """

    objective: float
    f: float
    x: tuple[float, ...]
    y: tuple[float, ...]
    thresholds: tuple[float, ...]
    # (sum of thresholds just below f, just above f); optimal iff it brackets 1
    edge_gap: tuple[float, float] = field(default=(np.inf, 0.0))


def _per_pico_tables(instance: DiscreteInstance):
    """Sort each pico's users by descending rate ratio; build prefix tables."""
    users = instance.users
    tables = []
    for pico in range(1, instance.num_picos + 1):
        idx = [i for i, u in enumerate(users) if u.pico_index == pico]
        idx.sort(key=lambda i: (-users[i].pico_rate / users[i].macro_rate, i))
        pico_sec = np.array([users[i].demand / users[i].pico_rate for i in idx])
        macro_sec = np.array([users[i].demand / users[i].macro_rate for i in idx])
        rho = np.array([users[i].pico_rate / users[i].macro_rate for i in idx])
        g = np.concatenate([[0.0], np.cumsum(pico_sec)])
        b = np.concatenate([np.cumsum(macro_sec[::-1])[::-1], [0.0]])
        tables.append((idx, rho, g, b, pico_sec))
    return tables


def clear_time(instance: DiscreteInstance) -> DiscreteSolution:
    """Exact minimum clearing time with the full user-level split."""
    users = instance.users
    n = len(users)
    base = sum(u.demand / u.macro_rate for u in users if u.pico_index == 0)
    if instance.num_picos == 0 or not any(u.pico_index > 0 for u in users):
        x = tuple(0.0 for _ in users)
        y = tuple(u.demand for u in users)
        return DiscreteSolution(
            objective=base, f=0.0, x=x, y=y,
            thresholds=tuple(np.inf for _ in range(instance.num_picos)),
        )

    tables = _per_pico_tables(instance)

    def pico_macro_time(table, f: float) -> float:
        _, rho, g, b, _ = table
        if f >= g[-1]:
            return 0.0
        k = int(np.searchsorted(g, f, side="right")) - 1
        return float(b[k] - (f - g[k]) * rho[k])

    bps = np.unique(np.concatenate([t[2] for t in tables]))
    objs = np.array(
        [f + base + sum(pico_macro_time(t, f) for t in tables) for f in bps]
    )
    best = int(np.argmin(objs))
    f_star = float(bps[best])
    obj = float(objs[best])

    x = [0.0] * n
    y = [u.demand for u in users]
    thresholds = []
    below, above = 0.0 if f_star > 0 else np.inf, 0.0
    for idx, rho, g, b, pico_sec in tables:
        f_eff = min(f_star, float(g[-1]))
        k = int(np.searchsorted(g, f_eff, side="right")) - 1
        for j in range(k):
            i = idx[j]
            x[i] = users[i].demand
            y[i] = 0.0
        if k < len(idx) and f_eff > g[k]:
            # the fractional user at the threshold, split exactly
            theta = (f_eff - g[k]) / pico_sec[k]
            i = idx[k]
            x[i] = theta * users[i].demand
            y[i] = (1.0 - theta) * users[i].demand
        thresholds.append(float(rho[min(k, len(idx) - 1)]) if idx else np.inf)
        if 0.0 < f_star <= g[-1]:
            below += float(rho[np.searchsorted(g, f_star, side="left") - 1])
        if f_star < g[-1]:
            above += float(rho[np.searchsorted(g, f_star, side="right") - 1])
    return DiscreteSolution(
        objective=obj,
        f=f_star,
        x=tuple(x),
        y=tuple(y),
        thresholds=tuple(thresholds),
        edge_gap=(below, above),
    )


def oracle_clear_time(instance: DiscreteInstance) -> float:
    """Independent optimum via a dense LP solve; test use only.

    Variables (f, x_1..x_n): minimize f + sum (D_i - x_i)/S_i subject to the
    per-pico time budgets, solved by HiGHS.  Refuses instances large enough
    that a generic solve would stop being an obviously trustworthy oracle.
    """
    from scipy.optimize import linprog

    users = instance.users
    n = len(users)
    if n > _ORACLE_MAX_USERS or instance.num_picos > _ORACLE_MAX_PICOS:
        raise ValueError(
            f"oracle limited to {_ORACLE_MAX_USERS} users and "
            f"{_ORACLE_MAX_PICOS} picos"
        )
    if n == 0:
        return 0.0
    # objective: f + sum((D_i - x_i)/S_i) = const + f - sum(x_i/S_i)
    c = np.concatenate([[1.0], [-1.0 / u.macro_rate for u in users]])
    const = sum(u.demand / u.macro_rate for u in users)
    a_ub = []
    for pico in range(1, instance.num_picos + 1):
        row = np.zeros(n + 1)
        row[0] = -1.0
        for i, u in enumerate(users):
            if u.pico_index == pico:
                row[1 + i] = 1.0 / u.pico_rate
        a_ub.append(row)
    bounds = [(0.0, None)] + [
        (0.0, u.demand if u.pico_index > 0 else 0.0) for u in users
    ]
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.zeros(len(a_ub)) if a_ub else None,
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    return float(res.fun + const)


# --- CSV instance files ---------------------------------------------------------

_CSV_HEADER = "pico_index,R,S,D"


def dump_instance_csv(instance: DiscreteInstance, path_or_buf) -> None:
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        f.write(_CSV_HEADER + "\n")
        for u in instance.users:
            f.write(
                f"{u.pico_index},{u.pico_rate:.17g},{u.macro_rate:.17g},"
                f"{u.demand:.17g}\n"
            )
    finally:
        if own:
            f.close()


def load_instance_csv(path_or_buf) -> DiscreteInstance:
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "r", newline="") if own else path_or_buf
    try:
        text = f.read()
    finally:
        if own:
            f.close()
    rows = np.atleast_2d(
        np.genfromtxt(io.StringIO(text), delimiter=",", skip_header=1)
    )
    if rows.size == 0:
        return DiscreteInstance(users=())
    return DiscreteInstance(
        users=tuple(
            User(
                pico_index=int(r[0]),
                pico_rate=float(r[1]),
                macro_rate=float(r[2]),
                demand=float(r[3]),
            )
            for r in rows
        )
    )
