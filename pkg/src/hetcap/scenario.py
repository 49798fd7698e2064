"""Network geometry, radio link model, and spatial traffic law.

A scenario is a circular macro cell containing disjoint pico discs.  Arrivals
pick a region (macro-only ground area or one of the pico hotspots), then a
uniform position inside it, and the link budget turns positions into Shannon
rates for the macro and serving-pico downlinks.  Everything downstream of this
module works with the resulting (position, rates, rate-ratio) samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from hetcap.errors import ConfigError, GeometryError

# Rejection sampling for the macro-only region aborts after this many draws;
# hitting it means the pico discs cover essentially the whole macro disc.
_MAX_REJECTION_DRAWS = 10**6


class InterferenceMode(enum.Enum):
    """Pico-link interference assumption.

    NO_INTERFERENCE treats each pico link as noise-limited (best case).
    ALL_PICOS_ON adds received power from every other pico BS to the noise
    (worst case: all picos transmit whenever pico time is scheduled).
    Macro links always use plain SNR.
    """

    NO_INTERFERENCE = "none"
    ALL_PICOS_ON = "all-on"


class FileSizeLaw(enum.Enum):
    DETERMINISTIC = "deterministic"
    TRUNCATED_EXPONENTIAL = "exponential"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class PicoCell:
    """A pico coverage disc; arrivals keep `exclusion_radius` away from the BS."""

    center: tuple[float, float]
    radius: float
    exclusion_radius: float = 10.0

    def __post_init__(self) -> None:
        if not self.radius > self.exclusion_radius >= 0.0:
            raise ConfigError(
                f"pico radius {self.radius} must exceed exclusion radius "
                f"{self.exclusion_radius} >= 0"
            )


@dataclass(frozen=True)
class RadioParams:
    """Link-budget constants; path loss is `intercept + slope*log10(d_m)` dB."""

    macro_tx_power_dbm: float = 46.0
    macro_antenna_gain_dbi: float = 14.0
    macro_pl_intercept_db: float = 15.3
    macro_pl_slope_db: float = 37.6
    pico_tx_power_dbm: float = 30.0
    pico_antenna_gain_dbi: float = 5.0
    pico_pl_intercept_db: float = 30.6
    pico_pl_slope_db: float = 36.7
    noise_power_dbm: float = -104.0
    bandwidth_hz: float = 1e6
    interference_mode: InterferenceMode = InterferenceMode.NO_INTERFERENCE

    def __post_init__(self) -> None:
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth must be positive")
        if self.macro_pl_slope_db <= 0 or self.pico_pl_slope_db <= 0:
            raise ConfigError("path-loss slopes must be positive")
        for name in (
            "macro_tx_power_dbm",
            "macro_antenna_gain_dbi",
            "pico_tx_power_dbm",
            "pico_antenna_gain_dbi",
            "noise_power_dbm",
        ):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


@dataclass(frozen=True)
class TrafficModel:
    """Poisson file arrivals: total rate, region mix, and the file-size law.

    `region_probs[0]` is the macro-only region; entries 1..L follow the pico
    order of the scenario.  All size laws have mean `mean_file_size_bits` and
    support within (0, max_file_size_bits].
    """

    arrival_rate: float
    region_probs: tuple[float, ...]
    mean_file_size_bits: float = 4e6
    max_file_size_bits: float | None = None
    file_size_law: FileSizeLaw = FileSizeLaw.DETERMINISTIC

    def __post_init__(self) -> None:
        if self.arrival_rate < 0:
            raise ConfigError("arrival rate must be >= 0")
        probs = np.asarray(self.region_probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise ConfigError("region_probs must be a non-empty vector")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ConfigError("region_probs must be >= 0 and sum to 1")
        if self.mean_file_size_bits <= 0:
            raise ConfigError("mean file size must be positive")
        cap = self.size_cap_bits
        if cap < self.mean_file_size_bits:
            raise ConfigError("max file size must be >= mean file size")
        if (
            self.file_size_law is FileSizeLaw.TRUNCATED_EXPONENTIAL
            and self.mean_file_size_bits >= 0.49 * cap
        ):
            # truncated-exponential mean cannot exceed half the cap
            raise ConfigError(
                "truncated-exponential law needs mean < 0.49 * max file size"
            )

    @property
    def size_cap_bits(self) -> float:
        if self.max_file_size_bits is not None:
            return self.max_file_size_bits
        if self.file_size_law is FileSizeLaw.DETERMINISTIC:
            return self.mean_file_size_bits
        return 4.0 * self.mean_file_size_bits


@dataclass(frozen=True)
class Scenario:
    """Full network description: geometry, radio constants, traffic law."""

    macro_radius: float
    picos: tuple[PicoCell, ...]
    radio: RadioParams
    traffic: TrafficModel
    macro_exclusion_radius: float = 10.0

    def __post_init__(self) -> None:
        if not self.macro_radius > self.macro_exclusion_radius >= 0:
            raise ConfigError("macro radius must exceed the exclusion radius >= 0")
        if len(self.traffic.region_probs) != len(self.picos) + 1:
            raise ConfigError(
                f"region_probs has {len(self.traffic.region_probs)} entries, "
                f"expected {len(self.picos) + 1} (macro region + one per pico)"
            )
        for i, p in enumerate(self.picos):
            d = math.hypot(*p.center)
            if d + p.radius > self.macro_radius:
                raise ConfigError(f"pico {i + 1} disc extends outside the macro disc")
            for j in range(i):
                q = self.picos[j]
                gap = math.hypot(
                    p.center[0] - q.center[0], p.center[1] - q.center[1]
                )
                if gap <= p.radius + q.radius:
                    raise ConfigError(f"pico discs {j + 1} and {i + 1} overlap")

    @property
    def num_picos(self) -> int:
        return len(self.picos)


@dataclass(frozen=True)
class LocatedRates:
    """One arrival location with its link rates.

    `region` 0 is the macro-only region (pico_rate and rate_ratio are 0 there);
    regions 1..L are pico hotspots with `rate_ratio = pico_rate / macro_rate`.
    """

    position: tuple[float, float]
    region: int
    macro_rate: float
    pico_rate: float
    rate_ratio: float


# --- link budget ------------------------------------------------------------

def _db_to_linear(db: np.ndarray | float) -> np.ndarray | float:
    return 10.0 ** (np.asarray(db) / 10.0)


def macro_rates(scenario: Scenario, xy: np.ndarray) -> np.ndarray:
    """Macro downlink Shannon rate (bits/s) at positions xy, shape (..., 2)."""
    xy = np.asarray(xy, dtype=float)
    d = np.hypot(xy[..., 0], xy[..., 1])
    r = scenario.radio
    pl = r.macro_pl_intercept_db + r.macro_pl_slope_db * np.log10(d)
    snr_db = (
        r.macro_tx_power_dbm + r.macro_antenna_gain_dbi - pl - r.noise_power_dbm
    )
    return r.bandwidth_hz * np.log2(1.0 + _db_to_linear(snr_db))


def pico_rates(
    scenario: Scenario,
    pico_index: int,
    xy: np.ndarray,
    interferers: tuple[int, ...] | None = None,
) -> np.ndarray:
    """Pico downlink Shannon rate (bits/s) from pico `pico_index` (1-based).

    `interferers` overrides the scenario's interference mode: it lists the
    *other* pico indices transmitting concurrently.  None means "follow
    scenario.radio.interference_mode".
    """
    xy = np.asarray(xy, dtype=float)
    r = scenario.radio
    if interferers is None:
        if r.interference_mode is InterferenceMode.ALL_PICOS_ON:
            interferers = tuple(
                k for k in range(1, scenario.num_picos + 1) if k != pico_index
            )
        else:
            interferers = ()
    eirp = r.pico_tx_power_dbm + r.pico_antenna_gain_dbi

    def received_mw(k: int) -> np.ndarray:
        c = scenario.picos[k - 1].center
        d = np.hypot(xy[..., 0] - c[0], xy[..., 1] - c[1])
        pl = r.pico_pl_intercept_db + r.pico_pl_slope_db * np.log10(d)
        return _db_to_linear(eirp - pl)

    signal = received_mw(pico_index)
    noise = _db_to_linear(r.noise_power_dbm)
    interference = 0.0
    for k in interferers:
        if k == pico_index:
            continue
        interference = interference + received_mw(k)
    return r.bandwidth_hz * np.log2(1.0 + signal / (noise + interference))


def link_rate_macro(scenario: Scenario, position: tuple[float, float]) -> float:
    """Macro rate at one position; raises GeometryError outside the macro disc."""
    d = math.hypot(*position)
    if d > scenario.macro_radius:
        raise GeometryError(f"position {position} outside the macro disc")
    if d < scenario.macro_exclusion_radius:
        raise GeometryError(
            f"position {position} inside the {scenario.macro_exclusion_radius} m "
            "macro exclusion zone"
        )
    return float(macro_rates(scenario, np.asarray(position)))


def link_rate_pico(
    scenario: Scenario, pico_index: int, position: tuple[float, float]
) -> float:
    """Pico rate at one position; raises GeometryError outside that pico disc."""
    if not 1 <= pico_index <= scenario.num_picos:
        raise GeometryError(f"no pico with index {pico_index}")
    cell = scenario.picos[pico_index - 1]
    d = math.hypot(position[0] - cell.center[0], position[1] - cell.center[1])
    if d > cell.radius:
        raise GeometryError(f"position {position} outside pico {pico_index} disc")
    if d < cell.exclusion_radius:
        raise GeometryError(
            f"position {position} inside pico {pico_index} exclusion zone"
        )
    return float(pico_rates(scenario, pico_index, np.asarray(position)))


# --- spatial sampling -------------------------------------------------------

def _annulus_points(
    rng: np.random.Generator,
    n: int,
    center: tuple[float, float],
    r_inner: float,
    r_outer: float,
) -> np.ndarray:
    """Uniform-in-area points in the annulus r_inner <= r <= r_outer."""
    radius = np.sqrt(rng.random(n) * (r_outer**2 - r_inner**2) + r_inner**2)
    theta = rng.random(n) * (2.0 * np.pi)
    return np.stack(
        [center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)],
        axis=-1,
    )


def sample_region_positions(
    scenario: Scenario, region: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n uniform positions in region `region` (0 = macro-only), shape (n, 2).

    Region 0 uses rejection sampling against the pico discs; the acceptance
    probability is high for sensible geometries, and a draw cap turns a
    degenerate geometry into a ConfigError instead of a hang.
    """
    if region == 0:
        out = np.empty((0, 2))
        drawn = 0
        while len(out) < n:
            batch = max(2 * (n - len(out)), 64)
            drawn += batch
            if drawn > _MAX_REJECTION_DRAWS + 2 * n:
                raise ConfigError(
                    "rejection sampling for the macro-only region exceeded "
                    f"{_MAX_REJECTION_DRAWS} draws; pico discs nearly cover the cell"
                )
            cand = _annulus_points(
                rng, batch, (0.0, 0.0), scenario.macro_exclusion_radius,
                scenario.macro_radius,
            )
            keep = np.ones(batch, dtype=bool)
            for cell in scenario.picos:
                keep &= (
                    np.hypot(cand[:, 0] - cell.center[0], cand[:, 1] - cell.center[1])
                    > cell.radius
                )
            out = np.concatenate([out, cand[keep]])
        return out[:n]
    cell = scenario.picos[region - 1]
    return _annulus_points(rng, n, cell.center, cell.exclusion_radius, cell.radius)


def located_rates_batch(
    scenario: Scenario, region: int, xy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(macro_rate, pico_rate, rate_ratio) arrays for positions in one region."""
    s = macro_rates(scenario, xy)
    if region == 0:
        z = np.zeros_like(s)
        return s, z, z
    r = pico_rates(scenario, region, xy)
    return s, r, r / s


def sample_arrival(scenario: Scenario, rng: np.random.Generator) -> LocatedRates:
    """Draw one arrival: region from the traffic mix, position uniform in it."""
    region = int(rng.choice(len(scenario.traffic.region_probs),
                            p=scenario.traffic.region_probs))
    xy = sample_region_positions(scenario, region, 1, rng)[0]
    s, r, rho = located_rates_batch(scenario, region, xy[None, :])
    return LocatedRates(
        position=(float(xy[0]), float(xy[1])),
        region=region,
        macro_rate=float(s[0]),
        pico_rate=float(r[0]),
        rate_ratio=float(rho[0]),
    )


# --- file sizes ---------------------------------------------------------------

def _truncated_exp_scale(mean: float, cap: float) -> float:
    """Scale of an exponential truncated to (0, cap] whose mean equals `mean`.

    The truncated mean  theta - cap/(exp(cap/theta) - 1)  increases from 0 to
    cap/2 as theta grows, so bisection on log(theta) finds the unique scale.
    """

    def truncated_mean(theta: float) -> float:
        z = cap / theta
        if z > 700.0:
            return theta
        return theta - cap / math.expm1(z)

    lo, hi = 1e-12 * cap, 1e12 * cap
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if truncated_mean(mid) < mean:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def sample_file_sizes(
    scenario: Scenario, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n i.i.d. file sizes (bits) from the scenario's size law."""
    t = scenario.traffic
    mean, cap = t.mean_file_size_bits, t.size_cap_bits
    if t.file_size_law is FileSizeLaw.DETERMINISTIC:
        return np.full(n, mean)
    if t.file_size_law is FileSizeLaw.TRUNCATED_EXPONENTIAL:
        theta = _truncated_exp_scale(mean, cap)
        u = rng.random(n)
        return -theta * np.log1p(-u * (-math.expm1(-cap / theta)))
    # uniform with mean `mean`, support within (0, cap]
    hi = min(2.0 * mean, cap)
    lo = 2.0 * mean - hi
    return lo + (hi - lo) * rng.random(n)


def sample_file_size(scenario: Scenario, rng: np.random.Generator) -> float:
    return float(sample_file_sizes(scenario, 1, rng)[0])


# --- built-in reference scenario ---------------------------------------------

def reference_scenario(
    arrival_rate: float = 1.25,
    interference_mode: InterferenceMode = InterferenceMode.NO_INTERFERENCE,
    file_size_law: FileSizeLaw = FileSizeLaw.DETERMINISTIC,
) -> Scenario:
    """The built-in three-pico benchmark network.

    A 1 km macro cell with 150 m hotspots at (-339, 741), (218, -230) and
    (561, -457) m receiving 40/25/15 % of arrivals (20 % land in the macro-only
    area), 4 Mbit mean files, and the default link budget.  The default
    arrival rate of 1.25 files/s is the operating point used for the reference
    rate-ratio and total-time curves; capacity results do not depend on it.
    """
    picos = (
        PicoCell(center=(-339.0, 741.0), radius=150.0),
        PicoCell(center=(218.0, -230.0), radius=150.0),
        PicoCell(center=(561.0, -457.0), radius=150.0),
    )
    return Scenario(
        macro_radius=1000.0,
        picos=picos,
        radio=RadioParams(interference_mode=interference_mode),
        traffic=TrafficModel(
            arrival_rate=arrival_rate,
            region_probs=(0.2, 0.4, 0.25, 0.15),
            mean_file_size_bits=4e6,
            file_size_law=file_size_law,
        ),
    )
