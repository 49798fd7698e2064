"""Structured key-value configuration files.

INI-style sections (scenario / radio / traffic / solver / sim) with the
built-in reference network as the default for every key, so an empty or
missing file reproduces the benchmark setup.  Validation is fail-fast and
complete before any computation: unknown sections or keys, malformed values,
and inconsistent geometry all raise ConfigError with their location.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from hetcap.errors import ConfigError
from hetcap.scenario import (
    FileSizeLaw,
    InterferenceMode,
    PicoCell,
    RadioParams,
    Scenario,
    TrafficModel,
)
from hetcap.simqueue import Discipline

_REFERENCE_PICO_CENTERS = "-339,741; 218,-230; 561,-457"

_SCHEMA: dict[str, dict[str, str]] = {
    "scenario": {
        "macro_radius": "1000",
        "macro_exclusion_radius": "10",
        "pico_centers": _REFERENCE_PICO_CENTERS,
        "pico_radii": "150",
        "pico_exclusion_radius": "10",
    },
    "radio": {
        "macro_tx_power_dbm": "46",
        "macro_antenna_gain_dbi": "14",
        "macro_pl_intercept_db": "15.3",
        "macro_pl_slope_db": "37.6",
        "pico_tx_power_dbm": "30",
        "pico_antenna_gain_dbi": "5",
        "pico_pl_intercept_db": "30.6",
        "pico_pl_slope_db": "36.7",
        "noise_power_dbm": "-104",
        "bandwidth_hz": "1e6",
        "interference_mode": "none",
    },
    "traffic": {
        "arrival_rate": "1.25",
        "region_probs": "0.2, 0.4, 0.25, 0.15",
        "mean_file_size_bits": "4e6",
        "max_file_size_bits": "",
        "file_size_law": "deterministic",
    },
    "solver": {
        "samples_per_region": "200000",
        "seed": "0",
    },
    "sim": {
        "discipline": "ps",
        "slot_length": "0.001",
        "horizon": "2000",
        "warmup": "",
        "replications": "2",
    },
}


@dataclass(frozen=True)
class RunSettings:
    """Everything a subcommand needs: the scenario plus solver/sim knobs."""

    scenario: Scenario
    samples_per_region: int
    seed: int
    discipline: Discipline
    slot_length: float
    horizon: float
    warmup: float | None
    replications: int
    config_text: str  # canonical resolved text, hashed into output headers


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from None


def _parse_centers(raw: str) -> list[tuple[float, float]]:
    centers = []
    for i, part in enumerate(p for p in raw.split(";") if p.strip()):
        coords = part.split(",")
        if len(coords) != 2:
            raise ConfigError(
                f"[scenario] pico_centers entry {i + 1}: expected 'x,y', got {part!r}"
            )
        centers.append((float(coords[0]), float(coords[1])))
    return centers


def _resolved(parser: configparser.ConfigParser) -> dict[str, dict[str, str]]:
    values = {s: dict(kv) for s, kv in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[section][key] = raw
    return values


def load_settings(
    path: str | None = None,
    *,
    text: str | None = None,
    overrides: dict[str, dict[str, str]] | None = None,
) -> RunSettings:
    """Parse, validate, and resolve a config (missing file = all defaults).

    `overrides` (section -> key -> raw value) applies CLI flags on top of the
    file; the resolved canonical text is kept for output-header hashing.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_string(fh.read(), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        # configparser errors carry line numbers for syntax problems
        raise ConfigError(str(exc)) from exc

    values = _resolved(parser)
    if overrides:
        for section, kv in overrides.items():
            values[section].update(kv)

    s, r, t = values["scenario"], values["radio"], values["traffic"]
    centers = _parse_centers(s["pico_centers"])
    radii_raw = [p for p in s["pico_radii"].split(";") if p.strip()]
    if len(radii_raw) == 1:
        radii = [_parse_float("scenario", "pico_radii", radii_raw[0])] * len(centers)
    elif len(radii_raw) == len(centers):
        radii = [_parse_float("scenario", "pico_radii", x) for x in radii_raw]
    else:
        raise ConfigError(
            "[scenario] pico_radii: give one radius or one per pico center"
        )
    try:
        interference = InterferenceMode(r["interference_mode"].strip())
    except ValueError:
        raise ConfigError(
            f"[radio] interference_mode must be one of "
            f"{[m.value for m in InterferenceMode]}"
        ) from None
    try:
        law = FileSizeLaw(t["file_size_law"].strip())
    except ValueError:
        raise ConfigError(
            f"[traffic] file_size_law must be one of {[m.value for m in FileSizeLaw]}"
        ) from None
    probs = tuple(
        _parse_float("traffic", "region_probs", x)
        for x in t["region_probs"].split(",")
        if x.strip()
    )
    max_size = t["max_file_size_bits"].strip()
    scenario = Scenario(
        macro_radius=_parse_float("scenario", "macro_radius", s["macro_radius"]),
        macro_exclusion_radius=_parse_float(
            "scenario", "macro_exclusion_radius", s["macro_exclusion_radius"]
        ),
        picos=tuple(
            PicoCell(
                center=c,
                radius=radius,
                exclusion_radius=_parse_float(
                    "scenario", "pico_exclusion_radius", s["pico_exclusion_radius"]
                ),
            )
            for c, radius in zip(centers, radii)
        ),
        radio=RadioParams(
            macro_tx_power_dbm=_parse_float("radio", "macro_tx_power_dbm", r["macro_tx_power_dbm"]),
            macro_antenna_gain_dbi=_parse_float("radio", "macro_antenna_gain_dbi", r["macro_antenna_gain_dbi"]),
            macro_pl_intercept_db=_parse_float("radio", "macro_pl_intercept_db", r["macro_pl_intercept_db"]),
            macro_pl_slope_db=_parse_float("radio", "macro_pl_slope_db", r["macro_pl_slope_db"]),
            pico_tx_power_dbm=_parse_float("radio", "pico_tx_power_dbm", r["pico_tx_power_dbm"]),
            pico_antenna_gain_dbi=_parse_float("radio", "pico_antenna_gain_dbi", r["pico_antenna_gain_dbi"]),
            pico_pl_intercept_db=_parse_float("radio", "pico_pl_intercept_db", r["pico_pl_intercept_db"]),
            pico_pl_slope_db=_parse_float("radio", "pico_pl_slope_db", r["pico_pl_slope_db"]),
            noise_power_dbm=_parse_float("radio", "noise_power_dbm", r["noise_power_dbm"]),
            bandwidth_hz=_parse_float("radio", "bandwidth_hz", r["bandwidth_hz"]),
            interference_mode=interference,
        ),
        traffic=TrafficModel(
            arrival_rate=_parse_float("traffic", "arrival_rate", t["arrival_rate"]),
            region_probs=probs,
            mean_file_size_bits=_parse_float(
                "traffic", "mean_file_size_bits", t["mean_file_size_bits"]
            ),
            max_file_size_bits=(
                _parse_float("traffic", "max_file_size_bits", max_size)
                if max_size
                else None
            ),
            file_size_law=law,
        ),
    )

    sol, sim = values["solver"], values["sim"]
    try:
        discipline = Discipline(sim["discipline"].strip())
    except ValueError:
        raise ConfigError(
            f"[sim] discipline must be one of {[m.value for m in Discipline]}"
        ) from None
    warmup_raw = sim["warmup"].strip()
    canonical = "\n".join(
        f"[{sec}]\n"
        + "\n".join(f"{k} = {values[sec][k]}" for k in sorted(values[sec]))
        for sec in sorted(values)
    )
    return RunSettings(
        scenario=scenario,
        samples_per_region=_parse_int(
            "solver", "samples_per_region", sol["samples_per_region"]
        ),
        seed=_parse_int("solver", "seed", sol["seed"]),
        discipline=discipline,
        slot_length=_parse_float("sim", "slot_length", sim["slot_length"]),
        horizon=_parse_float("sim", "horizon", sim["horizon"]),
        warmup=_parse_float("sim", "warmup", warmup_raw) if warmup_raw else None,
        replications=_parse_int("sim", "replications", sim["replications"]),
        config_text=canonical,
    )
