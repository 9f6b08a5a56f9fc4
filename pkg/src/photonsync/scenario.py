"""Session scenario configuration: rates, jitters, clock, timing, presets.

Rates are counts per second, times are seconds, the pair timing jitter
sigma_det is the RMS of the coincidence peak (split evenly between the two
arms by the generator). r_b, r_c and the Bob-side extras scale with the
channel transmission; r_a and r_dark do not.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, fields, replace

from .clock import ClockModel
from .errors import ConfigError


@dataclass(frozen=True)
class ScenarioConfig:
    r_a: float            # counts/s, singles at Alice
    r_b: float            # counts/s, singles at Bob at transmission 1 (darks excluded)
    r_c: float            # counts/s, coincidences at transmission 1
    r_dark: float = 0.0   # counts/s, background counts at Bob, loss-independent
    transmission: float = 1.0
    sigma_det: float = 300e-12  # s RMS of the coincidence peak
    t_acq: float = 0.1    # s, package duration
    t_feed: float = 0.6   # s, feedback loop period
    duration: float = 10.0
    clock: ClockModel = field(default_factory=ClockModel)
    seed: int = 0

    def __post_init__(self):
        if min(self.r_a, self.r_b, self.r_c, self.r_dark) < 0:
            raise ConfigError("rates must be non-negative")
        if self.r_c > min(self.r_a, self.r_b):
            raise ConfigError("coincidence rate exceeds a singles rate")
        if not 0.0 < self.transmission <= 1.0:
            raise ConfigError("transmission must be in (0, 1]")
        if self.sigma_det <= 0:
            raise ConfigError("sigma_det must be positive")
        if self.t_acq <= 0 or self.duration < self.t_acq:
            raise ConfigError("need duration >= t_acq > 0")
        if self.t_feed < self.t_acq:
            raise ConfigError("feedback period shorter than one package")
        self.clock.check_monotonic(self.duration)

    def with_(self, **kwargs) -> "ScenarioConfig":
        clock_kwargs = {
            k.removeprefix("clock_"): kwargs.pop(k)
            for k in list(kwargs)
            if k.startswith("clock_")
        }
        cfg = replace(self, **kwargs) if kwargs else self
        if clock_kwargs:
            cfg = replace(cfg, clock=replace(cfg.clock, **clock_kwargs))
        return cfg


_CLOCK_KEYS = {f.name for f in fields(ClockModel)}
_SCALAR_KEYS = {f.name for f in fields(ScenarioConfig)} - {"clock"}


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse the key-value scenario format (see scenarios/*.cfg)."""
    values: dict[str, float] = {}
    clock_values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = key.strip(), value.strip()
        try:
            num = float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad number {value!r}") from exc
        if key.startswith("clock."):
            name = key[len("clock."):]
            if name not in _CLOCK_KEYS:
                raise ConfigError(f"line {lineno}: unknown clock field {name!r}")
            clock_values[name] = num
        elif key in _SCALAR_KEYS:
            values[key] = num
        else:
            raise ConfigError(f"line {lineno}: unknown field {key!r}")
    if "seed" in values:
        values["seed"] = int(values["seed"])
    missing = {"r_a", "r_b", "r_c"} - set(values)
    if missing:
        raise ConfigError(f"missing required fields: {sorted(missing)}")
    return ScenarioConfig(clock=ClockModel(**clock_values), **values)


def format_scenario(config: ScenarioConfig) -> str:
    lines = [
        "# rates in counts/s, times in s, skew in s/s, drift in s/s^2",
        f"r_a = {config.r_a!r}",
        f"r_b = {config.r_b!r}",
        f"r_c = {config.r_c!r}",
        f"r_dark = {config.r_dark!r}",
        f"transmission = {config.transmission!r}",
        f"sigma_det = {config.sigma_det!r}",
        f"t_acq = {config.t_acq!r}",
        f"t_feed = {config.t_feed!r}",
        f"duration = {config.duration!r}",
        f"seed = {config.seed}",
        f"clock.offset_t0 = {config.clock.offset_t0!r}",
        f"clock.skew_u = {config.clock.skew_u!r}",
        f"clock.drift_a = {config.clock.drift_a!r}",
        f"clock.rw_sigma = {config.clock.rw_sigma!r}",
    ]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_scenario(fh.read())


# Shipped presets. low-loss / high-loss carry the measured crystal-oscillator
# numbers (18.5 us/s skew; skew wander calibrated so the apparent drift
# sampled at 1 s has RMS 320 ps/s^2). rubidium models a disciplined clock
# pair; leo-satellite and drone carry Doppler-dominated skew/drift figures.
PRESETS: dict[str, ScenarioConfig] = {
    "low-loss": ScenarioConfig(
        r_a=271e3, r_b=283e3, r_c=10.3e3,
        sigma_det=300e-12, t_acq=0.1, t_feed=0.6, duration=300.0,
        clock=ClockModel(offset_t0=3.2e-4, skew_u=18.5e-6, rw_sigma=1.012e-10),
        seed=1,
    ),
    "high-loss": ScenarioConfig(
        r_a=189e3, r_b=10e3, r_c=360.0,
        sigma_det=300e-12, t_acq=0.1, t_feed=0.6, duration=300.0,
        clock=ClockModel(offset_t0=3.2e-4, skew_u=18.5e-6, rw_sigma=1.012e-10),
        seed=1,
    ),
    "rubidium": ScenarioConfig(
        r_a=271e3, r_b=283e3, r_c=10.3e3,
        sigma_det=300e-12, t_acq=0.1, t_feed=0.6, duration=300.0,
        clock=ClockModel(offset_t0=3.2e-4, skew_u=150e-12),
        seed=1,
    ),
    "leo-satellite": ScenarioConfig(
        r_a=50e3, r_b=50e3, r_c=1e3,
        sigma_det=300e-12, t_acq=0.1, t_feed=0.1, duration=120.0,
        clock=ClockModel(offset_t0=3.2e-4, skew_u=0.0, drift_a=55e-9),
        seed=1,
    ),
    "drone": ScenarioConfig(
        r_a=100e3, r_b=100e3, r_c=5e3,
        sigma_det=300e-12, t_acq=0.1, t_feed=0.1, duration=120.0,
        clock=ClockModel(offset_t0=3.2e-4, skew_u=100e-9, drift_a=228e-9),
        seed=1,
    ),
}


def load_preset(name: str) -> ScenarioConfig:
    try:
        resource = importlib.resources.files("photonsync.scenarios").joinpath(
            f"{name}.cfg"
        )
        return parse_scenario(resource.read_text())
    except FileNotFoundError:
        pass
    if name in PRESETS:
        return PRESETS[name]
    raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
