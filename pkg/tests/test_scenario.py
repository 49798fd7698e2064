"""Link budget, geometry, and sampling-law checks.

The two frozen rate values are independent desk calculations from the default
link budget: path loss intercept + slope*log10(d), EIRP minus path loss minus
noise in dB, then Shannon with the 1 MHz bandwidth.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from hetcap.errors import ConfigError, GeometryError
from hetcap.rng import substream
from hetcap.scenario import (
    FileSizeLaw,
    InterferenceMode,
    PicoCell,
    RadioParams,
    Scenario,
    TrafficModel,
    link_rate_macro,
    link_rate_pico,
    macro_rates,
    pico_rates,
    reference_scenario,
    sample_arrival,
    sample_file_size,
    sample_file_sizes,
    sample_region_positions,
)


@pytest.fixture(scope="module")
def scen() -> Scenario:
    return reference_scenario()


def test_macro_rate_desk_value(scen):
    # 100 m: PL = 15.3 + 37.6*2 = 90.5 dB, SNR = 46+14-90.5+104 = 73.5 dB,
    # rate = 1e6 * log2(1 + 10**7.35) = 24.42 Mbit/s
    rate = link_rate_macro(scen, (100.0, 0.0))
    assert rate == pytest.approx(1e6 * math.log2(1.0 + 10**7.35), rel=1e-12)
    assert rate == pytest.approx(24.42e6, rel=1e-3)


def test_pico_rate_desk_value(scen):
    # 50 m from pico 1: PL = 30.6 + 36.7*log10(50) = 92.95 dB,
    # SNR = 30+5-92.95+104 = 46.05 dB, rate = 15.30 Mbit/s
    center = scen.picos[0].center
    pos = (center[0] + 50.0, center[1])
    rate = link_rate_pico(scen, 1, pos)
    snr_db = 35.0 - (30.6 + 36.7 * math.log10(50.0)) + 104.0
    assert snr_db == pytest.approx(46.0478, abs=1e-3)
    assert rate == pytest.approx(1e6 * math.log2(1.0 + 10 ** (snr_db / 10)), rel=1e-12)
    assert rate == pytest.approx(15.30e6, rel=1e-3)


def test_rate_equals_bandwidth_at_unit_snr():
    # distance where the whole budget cancels: SNR = 0 dB => rate = W exactly
    radio = RadioParams(
        macro_tx_power_dbm=0.0,
        macro_antenna_gain_dbi=0.0,
        macro_pl_intercept_db=0.0,
        macro_pl_slope_db=20.0,
        noise_power_dbm=-40.0,
    )
    scen = Scenario(
        macro_radius=1000.0,
        picos=(),
        radio=radio,
        traffic=TrafficModel(arrival_rate=1.0, region_probs=(1.0,)),
    )
    rate = link_rate_macro(scen, (100.0, 0.0))  # PL = 20*log10(100) = 40 dB
    assert rate == pytest.approx(radio.bandwidth_hz, rel=1e-12)


def test_path_loss_intercept_at_one_metre(scen):
    r = scen.radio
    d = 1.0
    pl = r.macro_pl_intercept_db + r.macro_pl_slope_db * math.log10(d)
    assert pl == r.macro_pl_intercept_db


def test_outside_domain_raises(scen):
    with pytest.raises(GeometryError):
        link_rate_macro(scen, (2000.0, 0.0))
    with pytest.raises(GeometryError):
        link_rate_macro(scen, (1.0, 0.0))  # inside the exclusion zone
    with pytest.raises(GeometryError):
        link_rate_pico(scen, 1, (0.0, 0.0))
    with pytest.raises(GeometryError):
        link_rate_pico(scen, 4, (0.0, 0.0))


def test_rate_monotone_along_ray(scen):
    d = np.linspace(20.0, 990.0, 500)
    xy = np.stack([d, np.zeros_like(d)], axis=1)
    rates = macro_rates(scen, xy)
    assert np.all(np.diff(rates) < 0)


def test_rate_continuity_one_millimetre(scen):
    a = np.array([500.0, 0.0])
    b = np.array([500.001, 0.0])
    ra, rb = macro_rates(scen, a), macro_rates(scen, b)
    assert abs(ra - rb) / ra < 1e-3


def test_rate_ratio_consistency(scen):
    rng = substream(7, "arrivals")
    for _ in range(200):
        s = sample_arrival(scen, rng)
        if s.region == 0:
            assert s.pico_rate == 0.0 and s.rate_ratio == 0.0
        else:
            assert s.rate_ratio == s.pico_rate / s.macro_rate  # bit-exact


def test_interference_only_reduces_rates():
    scen = reference_scenario(interference_mode=InterferenceMode.ALL_PICOS_ON)
    rng = substream(3, "interf")
    for k in range(1, 4):
        xy = sample_region_positions(scen, k, 500, rng)
        with_interf = pico_rates(scen, k, xy)
        without = pico_rates(scen, k, xy, interferers=())
        assert np.all(with_interf <= without)
        assert np.any(with_interf < without)


def test_single_pico_interference_is_noop():
    base = reference_scenario()
    scen = Scenario(
        macro_radius=base.macro_radius,
        picos=base.picos[:1],
        radio=RadioParams(interference_mode=InterferenceMode.ALL_PICOS_ON),
        traffic=TrafficModel(arrival_rate=1.0, region_probs=(0.5, 0.5)),
    )
    rng = substream(4, "solo")
    xy = sample_region_positions(scen, 1, 200, rng)
    assert np.array_equal(pico_rates(scen, 1, xy), pico_rates(scen, 1, xy, interferers=()))


def test_degenerate_mixture_always_macro_region():
    base = reference_scenario()
    scen = Scenario(
        macro_radius=base.macro_radius,
        picos=base.picos,
        radio=base.radio,
        traffic=TrafficModel(arrival_rate=1.0, region_probs=(1.0, 0.0, 0.0, 0.0)),
    )
    rng = substream(5, "degenerate")
    assert all(sample_arrival(scen, rng).region == 0 for _ in range(50))


def test_region_frequencies_match_mixture(scen):
    rng = substream(11, "regions")
    n = 1_000_000
    region = rng.choice(4, size=n, p=scen.traffic.region_probs)
    counts = np.bincount(region, minlength=4) / n
    for p_hat, p in zip(counts, scen.traffic.region_probs):
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(p_hat - p) < 3 * sigma + 1e-12


def test_sampler_respects_exclusion_and_region(scen):
    rng = substream(12, "support")
    pos0 = sample_region_positions(scen, 0, 2000, rng)
    d0 = np.hypot(pos0[:, 0], pos0[:, 1])
    assert np.all(d0 >= scen.macro_exclusion_radius)
    assert np.all(d0 <= scen.macro_radius)
    for cell in scen.picos:
        assert np.all(
            np.hypot(pos0[:, 0] - cell.center[0], pos0[:, 1] - cell.center[1])
            > cell.radius
        )
    for k, cell in enumerate(scen.picos, start=1):
        pos = sample_region_positions(scen, k, 2000, rng)
        d = np.hypot(pos[:, 0] - cell.center[0], pos[:, 1] - cell.center[1])
        assert np.all(d >= cell.exclusion_radius)
        assert np.all(d <= cell.radius)


def test_degenerate_geometry_rejected():
    with pytest.raises(ConfigError):
        PicoCell(center=(0.0, 0.0), radius=5.0, exclusion_radius=10.0)
    base = reference_scenario()
    with pytest.raises(ConfigError):
        Scenario(
            macro_radius=100.0,  # picos now fall outside
            picos=base.picos,
            radio=base.radio,
            traffic=base.traffic,
        )


def test_file_sizes_deterministic(scen):
    rng = substream(13, "sizes")
    assert sample_file_size(scen, rng) == scen.traffic.mean_file_size_bits == 4e6


@pytest.mark.parametrize("law", [FileSizeLaw.TRUNCATED_EXPONENTIAL, FileSizeLaw.UNIFORM])
def test_file_size_law_mean_and_support(law):
    scen = reference_scenario(file_size_law=law)
    rng = substream(14, "law", law.value)
    x = sample_file_sizes(scen, 1_000_000, rng)
    mean = scen.traffic.mean_file_size_bits
    assert np.all(x > 0) and np.all(x <= scen.traffic.size_cap_bits)
    assert abs(x.mean() - mean) / mean < 0.01


def test_truncated_exponential_needs_headroom():
    with pytest.raises(ConfigError):
        TrafficModel(
            arrival_rate=1.0,
            region_probs=(1.0,),
            mean_file_size_bits=4e6,
            max_file_size_bits=6e6,
            file_size_law=FileSizeLaw.TRUNCATED_EXPONENTIAL,
        )
