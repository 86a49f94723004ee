"""Sectioned ``key = value`` experiment files.

Example::

    [experiment]
    profile = navigation
    n_runs = 100

    [classical]
    constant_bias = 2e-3

Sections are ``experiment``, ``scenario``, ``quantum``, ``classical`` and
``fusion``; every key maps onto the dataclass field of the same name. An empty
file yields the selected profile's defaults (``navigation`` if none is set).
"""

from __future__ import annotations

import configparser
import dataclasses
import re

from .fusion import FusionConfig
from .harness import ExperimentConfig
from .navsim import Mode, ScenarioConfig
from .sensor_models import ClassicalSensorConfig, NoiseMode, QuantumSensorConfig


class ConfigError(ValueError):
    pass


# bias offset and bias drift each carry a 1e-3 m/s^2 mean, summed into the
# constant bias; their sigmas are read on the same 1e-3 scale
_NAV_CLASSICAL = dict(
    constant_bias=2e-3, sigma_white=1e-3, sigma_bias_offset=1e-3, sigma_bias_drift=1e-3,
)

PROFILES: dict[str, dict[str, dict]] = {
    "navigation": {
        "experiment": dict(n_runs=1000),
        "scenario": dict(duration=1000.0, mode="fused"),
        "classical": _NAV_CLASSICAL,
    },
    "navigation-4h": {
        "experiment": dict(n_runs=1000, time_stride=200),
        "scenario": dict(duration=14400.0, mode="fused-q2"),
        "classical": _NAV_CLASSICAL,
    },
    "navigation-30min": {
        "experiment": dict(n_runs=100, time_stride=200),
        "scenario": dict(duration=1800.0, mode="fused-q2"),
        "classical": _NAV_CLASSICAL,
    },
    # sigmas of 1 taken literally in m/s^2 (m/s^2 s^-1/4 for the drift)
    "navigation-literal": {
        "experiment": dict(n_runs=1000),
        "scenario": dict(duration=1000.0, mode="fused"),
        "classical": dict(_NAV_CLASSICAL, sigma_bias_offset=1.0, sigma_bias_drift=1.0),
    },
    "single-shot": {
        "experiment": dict(n_runs=10000, acceleration_draw=(-10.0, 10.0)),
        "scenario": dict(duration=1.0, mode="fused"),
        "classical": dict(constant_bias=2e-3),
    },
    "single-shot-wide": {
        "experiment": dict(n_runs=10000, acceleration_draw=(-1e3, 1e3)),
        "scenario": dict(duration=1.0, mode="fused"),
        "classical": dict(constant_bias=2e-3),
    },
}

_SECTIONS = {
    "quantum": QuantumSensorConfig,
    "classical": ClassicalSensorConfig,
    "fusion": FusionConfig,
    "scenario": ScenarioConfig,
    "experiment": ExperimentConfig,
}
_NESTED = {"quantum", "classical", "fusion"}
_EXPERIMENT_EXTRA = {"range_min", "range_max"}


def _keys(section: str) -> set[str]:
    names = {f.name for f in dataclasses.fields(_SECTIONS[section])}
    if section == "scenario":
        names -= _NESTED
    if section == "experiment":
        names = (names - {"scenario", "acceleration_draw"}) | _EXPERIMENT_EXTRA
    return names


def _convert(section: str, key: str, raw: str):
    raw = raw.strip()
    if key in ("mode",):
        return Mode.parse(raw)
    if key == "noise_mode":
        return NoiseMode.parse(raw)
    if key in ("profile", "output_directory"):
        return raw
    if key == "ideal_switching":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if key == "convergence_epsilon" and raw.lower() in ("", "auto", "none"):
        return None
    if key in ("n_runs", "master_seed", "histogram_bins", "time_stride", "window_halfwidth", "seed"):
        try:
            return int(raw)
        except ValueError:
            pass
        # allow "1e4" style counts
        value = float(raw)
        if not value.is_integer() or abs(value) > 2**53:
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    return float(raw)


def _line_of(text: str, section: str, key: str | None = None) -> int:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.fullmatch(r"\[\s*([^\]]+?)\s*\]", stripped)
        if m:
            current = m.group(1).lower()
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None:
            if re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
                return lineno
    return 0


def _where(lineno: int) -> str:
    return f"line {lineno}: " if lineno else ""


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(
        interpolation=None, strict=True, default_section="__defaults__",
        inline_comment_prefixes=("#", ";"),
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    values: dict[str, dict] = {}
    for section in parser.sections():
        name = section.lower()
        if name not in _SECTIONS:
            raise ConfigError(f"{_where(_line_of(text, name))}unknown section [{section}]")
        allowed = _keys(name)
        for key, raw in parser.items(section):
            lineno = _line_of(text, name, key)
            if key not in allowed:
                raise ConfigError(f"{_where(lineno)}unknown key {key!r} in [{section}]")
            try:
                values.setdefault(name, {})[key] = _convert(name, key, raw)
            except ValueError as exc:
                raise ConfigError(f"{_where(lineno)}{section}.{key}: {exc}") from None

    profile = values.get("experiment", {}).get("profile", "navigation")
    if profile not in PROFILES:
        raise ConfigError(
            f"{_where(_line_of(text, 'experiment', 'profile'))}unknown profile {profile!r}; "
            f"choose from {', '.join(sorted(PROFILES))}"
        )
    merged = {sec: dict(PROFILES[profile].get(sec, {})) for sec in _SECTIONS}
    for sec, kv in values.items():
        merged[sec].update(kv)

    exp = merged["experiment"]
    if "range_min" in exp or "range_max" in exp:
        lo, hi = exp.get("acceleration_draw") or (None, None)
        lo = exp.pop("range_min", lo)
        hi = exp.pop("range_max", hi)
        if lo is None or hi is None:
            raise ConfigError("range_min and range_max must be given together")
        exp["acceleration_draw"] = (lo, hi)
    exp["profile"] = profile

    scen = merged["scenario"]
    # sensor rates follow the scenario unless set explicitly
    merged["classical"].setdefault("sample_rate", scen.get("classical_rate", ScenarioConfig.classical_rate))
    merged["quantum"].setdefault("sample_period", 1.0 / scen.get("quantum_rate", ScenarioConfig.quantum_rate))

    try:
        quantum = QuantumSensorConfig(**merged["quantum"])
        classical = ClassicalSensorConfig(**merged["classical"])
        fusion = FusionConfig(**merged["fusion"])
        scenario = ScenarioConfig(quantum=quantum, classical=classical, fusion=fusion, **scen)
        return ExperimentConfig(scenario=scenario, **exp)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path) -> ExperimentConfig:
    """Read a config file, or the ``config_text`` of a ``manifest.json``."""
    import json
    from pathlib import Path

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    if path.suffix == ".json":
        try:
            text = json.loads(text)["config_text"]
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path} is not a manifest with config_text: {exc}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _text_value(value) -> str:
    if isinstance(value, (Mode, NoiseMode)):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Fully resolved config that :func:`parse_config` reads back unchanged."""
    lines = ["[experiment]"]
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in ("scenario", "acceleration_draw"):
            continue
        lines.append(f"{f.name} = {_text_value(getattr(cfg, f.name))}")
    if cfg.acceleration_draw is not None:
        lines.append(f"range_min = {_text_value(float(cfg.acceleration_draw[0]))}")
        lines.append(f"range_max = {_text_value(float(cfg.acceleration_draw[1]))}")
    scen = cfg.scenario
    lines += ["", "[scenario]"]
    for f in dataclasses.fields(ScenarioConfig):
        if f.name not in _NESTED:
            lines.append(f"{f.name} = {_text_value(getattr(scen, f.name))}")
    for name in ("quantum", "classical", "fusion"):
        sub = getattr(scen, name)
        lines += ["", f"[{name}]"]
        for f in dataclasses.fields(sub):
            lines.append(f"{f.name} = {_text_value(getattr(sub, f.name))}")
    return "\n".join(lines) + "\n"
