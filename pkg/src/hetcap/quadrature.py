"""Monte-Carlo discretization of the spatial traffic integrals.

A cloud is a fixed weighted point set per region: every spatial integral
downstream becomes a weighted sum over these atoms.  Using one cloud for a
whole solve or sweep (common random numbers) makes the total-time curve an
exactly convex piecewise-linear function of the pico time budget, so the
one-dimensional minimization is exact; Monte-Carlo error is quantified by
re-solving with fresh seeds, never by inner tolerances.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from hetcap.rng import substream
from hetcap.scenario import Scenario, located_rates_batch, sample_region_positions


@dataclass(frozen=True)
class RegionCloud:
    """Atoms of one region, sorted by descending rate ratio (regions >= 1).

    weight is the arrival mass per atom (arrival_rate * region_prob / count).
    `pico_seconds`/`macro_seconds` are the per-atom mean service integrands
    weight * D / rate; `pico_prefix[k]` is the pico time needed to serve the
    k highest-rate-ratio atoms and `macro_suffix[k]` the macro time for the
    rest, so thresholding at prefix k costs pico_prefix[k] + macro_suffix[k].
    """

    region: int
    xy: np.ndarray
    macro_rate: np.ndarray
    pico_rate: np.ndarray
    rate_ratio: np.ndarray
    weight: float
    pico_seconds: np.ndarray
    macro_seconds: np.ndarray
    pico_prefix: np.ndarray
    macro_suffix: np.ndarray

    @property
    def count(self) -> int:
        return len(self.xy)

    @property
    def total_pico_seconds(self) -> float:
        return float(self.pico_prefix[-1])

    @property
    def total_macro_seconds(self) -> float:
        return float(self.macro_suffix[0])


@dataclass(frozen=True)
class SampleCloud:
    """Per-region weighted atom sets plus their prefix tables."""

    scenario: Scenario | None
    arrival_rate: float
    seed: int
    samples_per_region: int
    regions: tuple[RegionCloud, ...]

    @property
    def num_picos(self) -> int:
        return len(self.regions) - 1

    @property
    def macro_only_load(self) -> float:
        """Macro seconds-per-second for the region no pico can serve."""
        return self.regions[0].total_macro_seconds

    def pico_region(self, pico_index: int) -> RegionCloud:
        if not 1 <= pico_index <= self.num_picos:
            raise IndexError(f"pico index {pico_index} out of range")
        return self.regions[pico_index]


def region_from_arrays(
    region: int,
    xy: np.ndarray,
    macro_rate: np.ndarray,
    pico_rate: np.ndarray,
    weight: float,
    mean_file_size_bits: float,
) -> RegionCloud:
    """Assemble a region (sorting by rate ratio and building prefix tables)."""
    s = np.asarray(macro_rate, dtype=float)
    r = np.asarray(pico_rate, dtype=float)
    xy = np.asarray(xy, dtype=float)
    if region >= 1:
        rho = r / s
        # stable argsort keeps ties in draw order, making the sort deterministic
        order = np.argsort(-rho, kind="stable")
        xy, s, r, rho = xy[order], s[order], r[order], rho[order]
        pico_seconds = weight * mean_file_size_bits / r
    else:
        r = np.zeros_like(s)
        rho = np.zeros_like(s)
        pico_seconds = np.zeros_like(s)
    macro_seconds = weight * mean_file_size_bits / s
    pico_prefix = np.concatenate([[0.0], np.cumsum(pico_seconds)])
    macro_suffix = np.concatenate([np.cumsum(macro_seconds[::-1])[::-1], [0.0]])
    return RegionCloud(
        region=region,
        xy=xy,
        macro_rate=s,
        pico_rate=r,
        rate_ratio=rho,
        weight=weight,
        pico_seconds=pico_seconds,
        macro_seconds=macro_seconds,
        pico_prefix=pico_prefix,
        macro_suffix=macro_suffix,
    )


def _build_region(
    scenario: Scenario, region: int, count: int, seed: int, arrival_rate: float
) -> RegionCloud:
    rng = substream(seed, "cloud", region)
    xy = sample_region_positions(scenario, region, count, rng)
    s, r, _ = located_rates_batch(scenario, region, xy)
    weight = arrival_rate * scenario.traffic.region_probs[region] / count
    return region_from_arrays(
        region, xy, s, r, weight, scenario.traffic.mean_file_size_bits
    )


def build_cloud(
    scenario: Scenario, samples_per_region: int = 200_000, seed: int = 0
) -> SampleCloud:
    """Sample every region and precompute the threshold prefix tables.

    Deterministic: the same (scenario, samples_per_region, seed) always gives
    a bit-identical cloud.  Each region draws from its own labeled substream,
    so regions could be built concurrently without changing the result.
    """
    if samples_per_region < 1:
        raise ValueError("samples_per_region must be >= 1")
    lam = scenario.traffic.arrival_rate
    regions = tuple(
        _build_region(scenario, region, samples_per_region, seed, lam)
        for region in range(scenario.num_picos + 1)
    )
    return SampleCloud(
        scenario=scenario,
        arrival_rate=lam,
        seed=seed,
        samples_per_region=samples_per_region,
        regions=regions,
    )


def scaled_cloud(cloud: SampleCloud, arrival_rate: float) -> SampleCloud:
    """The same atoms reweighted to a different total arrival rate.

    Shares the position and rate arrays; only the weights and prefix tables
    scale (linearly and exactly), which is what makes capacity computations
    by homogeneity free of fresh Monte-Carlo noise.
    """
    if arrival_rate < 0:
        raise ValueError("arrival rate must be >= 0")
    if cloud.arrival_rate == 0:
        raise ValueError("cannot rescale a zero-arrival-rate cloud")
    c = arrival_rate / cloud.arrival_rate
    regions = tuple(
        replace(
            reg,
            weight=reg.weight * c,
            pico_seconds=reg.pico_seconds * c,
            macro_seconds=reg.macro_seconds * c,
            pico_prefix=reg.pico_prefix * c,
            macro_suffix=reg.macro_suffix * c,
        )
        for reg in cloud.regions
    )
    return replace(cloud, arrival_rate=arrival_rate, regions=regions)


def fbar(cloud: SampleCloud, pico_index: int) -> float:
    """Pico seconds-per-second to serve all of region `pico_index` by pico."""
    return cloud.pico_region(pico_index).total_pico_seconds


def fbar_max(cloud: SampleCloud) -> float:
    """Largest per-pico full-offload time; 0 if there are no picos."""
    if cloud.num_picos == 0:
        return 0.0
    return max(fbar(cloud, k) for k in range(1, cloud.num_picos + 1))


def threshold_integrals(
    cloud: SampleCloud, pico_index: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rate_ratio, pico_prefix, macro_suffix) tables for one pico region.

    pico_prefix[k] is the pico time for the top-k atoms by rate ratio and
    macro_suffix[k] the macro time for the remainder; rate_ratio[k] is the
    ratio at each breakpoint.
    """
    reg = cloud.pico_region(pico_index)
    return reg.rate_ratio, reg.pico_prefix, reg.macro_suffix


# --- CSV dump/load (debugging reproducibility) --------------------------------

_CSV_HEADER = "region,x,y,S,R,rho,weight"


def dump_cloud_csv(cloud: SampleCloud, path_or_buf) -> None:
    """Write the raw atoms as CSV with full double precision."""
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        f.write(_CSV_HEADER + "\n")
        for reg in cloud.regions:
            for i in range(reg.count):
                f.write(
                    f"{reg.region},{reg.xy[i, 0]:.17g},{reg.xy[i, 1]:.17g},"
                    f"{reg.macro_rate[i]:.17g},{reg.pico_rate[i]:.17g},"
                    f"{reg.rate_ratio[i]:.17g},{reg.weight:.17g}\n"
                )
    finally:
        if own:
            f.close()


def load_cloud_csv(path_or_buf, mean_file_size_bits: float) -> SampleCloud:
    """Rebuild a cloud from a dump.

    The scenario is not recoverable from the dump, so the result carries
    scenario=None; it supports every solver entry point (they only read the
    atom arrays and the mean file size baked into the prefix tables here).
    """
    own = isinstance(path_or_buf, (str, bytes))
    f = open(path_or_buf, "r", newline="") if own else path_or_buf
    try:
        text = f.read()
    finally:
        if own:
            f.close()
    raw = np.genfromtxt(io.StringIO(text), delimiter=",", skip_header=1)
    raw = np.atleast_2d(raw)
    regions = []
    total_rate = 0.0
    for region in sorted(set(raw[:, 0].astype(int))):
        rows = raw[raw[:, 0].astype(int) == region]
        weight = float(rows[0, 6])
        regions.append(
            region_from_arrays(
                region, rows[:, 1:3], rows[:, 3], rows[:, 4], weight,
                mean_file_size_bits,
            )
        )
        total_rate += weight * len(rows)
    return SampleCloud(
        scenario=None,
        arrival_rate=total_rate,
        seed=-1,
        samples_per_region=max(reg.count for reg in regions),
        regions=tuple(regions),
    )
