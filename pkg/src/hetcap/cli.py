"""Command-line entry points and CSV emission.

Every output file starts with a header comment embedding a hash of the fully
resolved configuration, the subcommand, and the seed, so results are
traceable to exact inputs; given identical inputs every subcommand writes
byte-identical files (timing goes to stderr, never into outputs).

Exit codes: 0 success, 2 configuration error, 3 certificate failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from dataclasses import replace

import numpy as np

import hetcap
from hetcap import contlp, disclp, onoff, simqueue
from hetcap.config import RunSettings, load_settings
from hetcap.errors import CertificateError, ConfigError
from hetcap.quadrature import build_cloud, scaled_cloud
from hetcap.scenario import InterferenceMode


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class _Manifest:
    """Traceability record hashed into every output header (no wall-clock)."""

    def __init__(self, settings: RunSettings, subcommand: str, extras: dict):
        payload = "\n".join(
            [
                f"tool=hetcap-{hetcap.__version__}",
                f"subcommand={subcommand}",
                f"seed={settings.seed}",
                f"samples={settings.samples_per_region}",
                *(f"{k}={v}" for k, v in sorted(extras.items())),
                settings.config_text,
            ]
        )
        self.digest = hashlib.sha256(payload.encode()).hexdigest()[:16]
        self.subcommand = subcommand

    def header(self) -> str:
        return (
            f"# manifest={self.digest} tool=hetcap-{hetcap.__version__} "
            f"subcommand={self.subcommand}\n"
        )


def _write_csv(path: str, manifest: _Manifest, columns: list[str], rows) -> None:
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(manifest.header())
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


class _IOFailure(Exception):
    pass


def _build_settings(args) -> RunSettings:
    overrides: dict[str, dict[str, str]] = {}
    if args.seed is not None:
        overrides.setdefault("solver", {})["seed"] = str(args.seed)
    if args.samples is not None:
        overrides.setdefault("solver", {})["samples_per_region"] = str(args.samples)
    if args.lam is not None:
        overrides.setdefault("traffic", {})["arrival_rate"] = _fmt(args.lam)
    if args.interference is not None:
        overrides.setdefault("radio", {})["interference_mode"] = args.interference
    return load_settings(args.config, overrides=overrides)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="config file (INI sections)")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--samples", type=int, default=None,
                   help="Monte-Carlo samples per region")
    p.add_argument("--out", default=".", help="output directory for CSV files")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="arrival rate override (files/sec)")
    p.add_argument("--interference", choices=[m.value for m in InterferenceMode],
                   default=None, help="pico interference mode override")


def _parse_grid(raw: str) -> list[float]:
    return [float(x) for x in raw.split(",") if x.strip()]


# --- subcommands -------------------------------------------------------------------

def _cmd_capacity(args) -> int:
    settings = _build_settings(args)
    manifest = _Manifest(settings, "capacity", {"se": args.se_replicates})
    result = contlp.capacity(
        settings.scenario,
        samples_per_region=settings.samples_per_region,
        seed=settings.seed,
        se_replicates=args.se_replicates,
    )
    pol = result.policy
    wl = contlp.policy_workloads(
        build_cloud(settings.scenario, settings.samples_per_region, settings.seed),
        policy=pol,
    )
    se = result.standard_error
    parts = [
        f"capacity={_fmt(result.capacity)}",
        f"f_star={_fmt(pol.f_star)}",
        f"tau_star={_fmt(pol.tau_star)}",
        f"tau_star_unit={_fmt(result.tau_star_unit)}",
        f"arrival_rate={_fmt(pol.arrival_rate)}",
        f"recheck_tau={_fmt(result.recheck_tau)}",
        f"capacity_se={_fmt(se) if se is not None else 'na'}",
    ]
    for k in range(settings.scenario.num_picos):
        parts.append(f"rho_star_{k + 1}={_fmt(pol.rho_star[k])}")
        parts.append(f"saturated_{k + 1}={int(pol.saturated[k])}")
        parts.append(f"pico_util_{k + 1}={_fmt(wl.pico_utilization[k])}")
    print(f"# manifest={manifest.digest}")
    print(" ".join(parts))
    if args.out != "-":
        rows = [
            (
                result.capacity,
                pol.f_star,
                pol.tau_star,
                result.tau_star_unit,
                result.recheck_tau,
                se if se is not None else float("nan"),
            )
        ]
        _write_csv(
            os.path.join(args.out, "capacity.csv"),
            manifest,
            ["capacity", "f_star", "tau_star", "tau_star_unit", "recheck_tau", "capacity_se"],
            rows,
        )
    return 0


def _cmd_tau_sweep(args) -> int:
    settings = _build_settings(args)
    manifest = _Manifest(settings, "tau-sweep", {"rows": args.max_rows})
    cloud = build_cloud(settings.scenario, settings.samples_per_region, settings.seed)
    curve = contlp.tau_curve(cloud, max_points=args.max_rows)
    l_count = settings.scenario.num_picos
    cols = ["f", "tau"] + [f"rho_{k + 1}" for k in range(l_count)] + ["sum_rho"]
    rows = (
        (curve.f[i], curve.tau[i], *curve.rho[i], curve.sum_rho_active[i])
        for i in range(len(curve.f))
    )
    _write_csv(os.path.join(args.out, "tau_sweep.csv"), manifest, cols, rows)
    best = int(np.argmin(curve.tau))
    print(f"# manifest={manifest.digest}")
    print(f"f_star={_fmt(curve.f[best])} tau_star={_fmt(curve.tau[best])}")
    return 0


def _cmd_feasible_f(args) -> int:
    settings = _build_settings(args)
    lams = _parse_grid(args.lambdas) if args.lambdas else None
    if lams is None:
        cap = contlp.capacity(
            settings.scenario, settings.samples_per_region, settings.seed
        ).capacity
        lams = list(np.linspace(0.05 * cap, 1.1 * cap, 22))
    manifest = _Manifest(settings, "feasible-f", {"lambdas": ",".join(map(_fmt, lams))})
    cloud = build_cloud(settings.scenario, settings.samples_per_region, settings.seed)
    rows = []
    for lam in lams:
        interval = contlp.feasible_f_range(cloud, arrival_rate=lam)
        if interval is None:
            rows.append((lam, float("nan"), float("nan")))
        else:
            rows.append((lam, interval[0], interval[1]))
    _write_csv(
        os.path.join(args.out, "feasible_f.csv"),
        manifest,
        ["lambda", "f_lo", "f_hi"],
        rows,
    )
    print(f"# manifest={manifest.digest}")
    print(f"rows={len(rows)}")
    return 0


def _cmd_simulate(args) -> int:
    settings = _build_settings(args)
    scenario = settings.scenario
    if args.lambdas:
        lams = _parse_grid(args.lambdas)
    else:
        lams = [scenario.traffic.arrival_rate]
    f_values = _parse_grid(args.f_values) if args.f_values else [None]
    manifest = _Manifest(
        settings,
        "simulate",
        {
            "lambdas": ",".join(map(_fmt, lams)),
            "f": args.f_values or "optimal",
            "horizon": _fmt(settings.horizon),
            "reps": settings.replications,
            "discipline": settings.discipline.value,
        },
    )
    cloud = build_cloud(scenario, settings.samples_per_region, settings.seed)
    summary_rows = []
    traj_rows = []
    for f_fixed in f_values:
        rows = simqueue.stability_sweep(
            scenario,
            tuple(lams),
            cloud=cloud,
            fixed_share=f_fixed,
            discipline=settings.discipline,
            horizon=settings.horizon,
            replications=settings.replications,
            seed=settings.seed,
        )
        for row in rows:
            summary_rows.append(
                (
                    row.arrival_rate,
                    row.pico_share,
                    row.queue,
                    row.utilization,
                    row.mean_occupancy,
                    row.mean_sojourn,
                    row.slope,
                    row.predicted_sojourn_assigned,
                    row.predicted_sojourn_region,
                )
            )
        # trajectory of the last arrival rate for this share (one replication)
        lam = lams[-1]
        c = scaled_cloud(cloud, lam)
        policy = (
            contlp.solve(c)
            if f_fixed is None
            else contlp.fixed_budget_policy(c, f_fixed)
        )
        share = policy.pico_time_share if f_fixed is None else f_fixed
        scen = replace(
            scenario, traffic=replace(scenario.traffic, arrival_rate=lam)
        )
        report = simqueue.run(
            scen,
            simqueue.SimConfig(
                policy=policy,
                discipline=settings.discipline,
                horizon=settings.horizon,
                warmup=settings.warmup,
                slot_length=settings.slot_length,
                seed=settings.seed,
                replications=1,
                pico_share=share,
            ),
        )
        stats = report.reps[0]
        for q, st in stats.items():
            for i in range(len(st.trajectory_t)):
                traj_rows.append(
                    (st.trajectory_t[i], q, st.trajectory_n[i],
                     st.trajectory_residual[i])
                )
    _write_csv(
        os.path.join(args.out, "sim_summary.csv"),
        manifest,
        ["lambda", "f", "queue", "util", "meanN", "meanT", "slope",
         "predT_assigned", "predT_region"],
        summary_rows,
    )
    _write_csv(
        os.path.join(args.out, "sim_trajectory.csv"),
        manifest,
        ["time", "queue", "N", "residual_work"],
        traj_rows,
    )
    print(f"# manifest={manifest.digest}")
    print(f"rows={len(summary_rows)}")
    return 0


def _cmd_onoff(args) -> int:
    settings = _build_settings(args)
    scenario = settings.scenario
    if args.modes:
        modes = tuple(
            tuple(sorted(int(x) for x in part.split(",")))
            for part in args.modes.split(";")
            if part.strip()
        )
        mode_set = onoff.ModeSet(modes=modes)
    else:
        mode_set = onoff.ModeSet.all_modes(scenario.num_picos)
    manifest = _Manifest(
        settings,
        "onoff",
        {"modes": ";".join(",".join(map(str, m)) for m in mode_set.modes)},
    )
    cloud = build_cloud(scenario, settings.samples_per_region, settings.seed)
    mode_cloud = onoff.build_mode_cloud(cloud, mode_set)
    policy = onoff.solve_onoff(mode_cloud)
    rows = []
    for i, mode in enumerate(mode_set.modes):
        bitmask = sum(1 << (k - 1) for k in mode)
        for pico in mode:
            rows.append(
                (bitmask, policy.f_sigma[i], pico, policy.mu[(mode, pico)])
            )
    _write_csv(
        os.path.join(args.out, "onoff.csv"),
        manifest,
        ["mode_bitmask", "f_sigma", "pico", "mu"],
        rows,
    )
    certs = policy.certificates
    print(f"# manifest={manifest.digest}")
    print(
        f"tau_bar={_fmt(policy.tau_bar)} total_pico_time={_fmt(policy.total_pico_time)} "
        f"converged={int(certs.converged)} flags={len(certs.flags)}"
    )
    for mode, gap in sorted(certs.multiplier_gap.items()):
        print(f"multiplier_gap {mode}: {_fmt(gap)}")
    for (mode, pico), atoms in sorted(certs.tightness_atoms.items()):
        print(f"tightness_atoms {mode} pico {pico}: {_fmt(atoms)}")
    for flag in certs.flags:
        print(f"FLAG: {flag}", file=sys.stderr)
    return 3 if certs.flags else 0


def _cmd_disclp(args) -> int:
    settings = _build_settings(args)
    manifest = _Manifest(settings, "disclp", {"instance": os.path.basename(args.instance)})
    try:
        instance = disclp.load_instance_csv(args.instance)
    except OSError as exc:
        raise _IOFailure(f"cannot read instance {args.instance}: {exc}") from exc
    sol = disclp.clear_time(instance)
    print(f"# manifest={manifest.digest}")
    print(
        f"objective={_fmt(sol.objective)} f={_fmt(sol.f)} "
        f"edge_below={_fmt(sol.edge_gap[0])} edge_above={_fmt(sol.edge_gap[1])}"
    )
    if args.out != "-":
        rows = [
            (i, u.pico_index, sol.x[i], sol.y[i])
            for i, u in enumerate(instance.users)
        ]
        _write_csv(
            os.path.join(args.out, "disclp_solution.csv"),
            manifest,
            ["user", "pico_index", "x_bits", "y_bits"],
            rows,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetcap",
        description="Capacity planning and stability simulation for "
        "macro/pico downlinks with blank-subframe time sharing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="maximum supportable arrival rate")
    _add_common(p)
    p.add_argument("--se-replicates", type=int, default=0,
                   help="fresh-seed re-solves for a Monte-Carlo standard error")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("tau-sweep", help="total time and thresholds vs pico budget")
    _add_common(p)
    p.add_argument("--max-rows", type=int, default=500)
    p.set_defaults(func=_cmd_tau_sweep)

    p = sub.add_parser("feasible-f", help="stable pico budgets per arrival rate")
    _add_common(p)
    p.add_argument("--lambdas", default=None, help="comma-separated arrival rates")
    p.set_defaults(func=_cmd_feasible_f)

    p = sub.add_parser("simulate", help="queue simulation summaries and trajectories")
    _add_common(p)
    p.add_argument("--lambdas", default=None, help="comma-separated arrival rates")
    p.add_argument("--f-values", default=None,
                   help="comma-separated fixed pico shares (default: optimal)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("onoff", help="mode-based (on/off) time sharing solve")
    _add_common(p)
    p.add_argument("--modes", default=None,
                   help="semicolon-separated modes, e.g. '1,2;1,3;2,3;1,2,3'")
    p.set_defaults(func=_cmd_onoff)

    p = sub.add_parser("disclp", help="minimum clearing time for an instance file")
    _add_common(p)
    p.add_argument("instance", help="CSV with pico_index,R,S,D rows")
    p.set_defaults(func=_cmd_disclp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return 3
    except _IOFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    print(f"elapsed={time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
