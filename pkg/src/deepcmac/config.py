"""Experiment configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Every key has a default, so an empty file (or none at all) describes the
default run.  Unknown keys and a wrong ``schema_version`` are rejected.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Tuple

from .baselines import DEFAULT_STEPS, DEFAULT_TAPS
from .cmac import make_geometry
from .exceptions import ConfigError, GeometryError
from .harness import MethodConfig
from .signals import get_channel, list_channels

SCHEMA_VERSION = 1
ALL_CHANNELS = tuple(c.id for c in list_channels())


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    methods: Tuple[str, ...] = ("cmac",)
    as_layers: int = 4
    elements_per_dim: int = 5
    lower_bound: float = -3.0
    upper_bound: float = 3.0
    rate_m: float = 1e-3
    rate_sigma: float = 1e-3
    rate_w: float = 1e-3
    hidden_init: str = "identity"
    baseline_taps: Tuple[int, ...] = DEFAULT_TAPS
    baseline_steps: Tuple[float, ...] = DEFAULT_STEPS
    epochs: int = 1000
    samples: int = 1200
    seeds: Tuple[int, ...] = (0,)
    channels: Tuple[str, ...] = ("cos3",)
    resample_per_epoch: bool = False
    out: str = "results"
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        try:
            for m in self.methods:
                MethodConfig.from_id(m)
            make_geometry(1, self.as_layers, self.elements_per_dim,
                          self.lower_bound, self.upper_bound)
            for ch in self.channels:
                get_channel(ch)
        except (ValueError, KeyError, GeometryError) as err:
            raise ConfigError(str(err)) from None
        if self.hidden_init not in ("identity", "zeros"):
            raise ConfigError(f"hidden_init must be identity or zeros, not {self.hidden_init!r}")
        for name in ("rate_m", "rate_sigma", "rate_w"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.epochs < 1 or self.samples < 1 or self.jobs < 1:
            raise ConfigError("epochs, samples and jobs must be >= 1")
        if not self.seeds or not self.channels:
            raise ConfigError("seeds and channels must not be empty")
        if not self.baseline_taps or not self.baseline_steps:
            raise ConfigError("baseline grid must not be empty")
        if any(p < 1 for p in self.baseline_taps) or any(mu <= 0 for mu in self.baseline_steps):
            raise ConfigError("baseline taps must be >= 1 and steps positive")
        return self

    def method_configs(self):
        geo = dict(as_layers=self.as_layers, elements_per_dim=self.elements_per_dim,
                   lower_bound=self.lower_bound, upper_bound=self.upper_bound,
                   rate_m=self.rate_m, rate_sigma=self.rate_sigma, rate_w=self.rate_w,
                   hidden_init=self.hidden_init)
        return [MethodConfig.from_id(m, **geo) for m in self.methods]

    def channel_functions(self):
        return [get_channel(c) for c in self.channels]

    @property
    def grid(self):
        return [(p, mu) for p in self.baseline_taps for mu in self.baseline_steps]

    def override(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes).validate()


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(name, text):
    default = _FIELDS[name].default
    if isinstance(default, tuple):
        if name == "channels" and text.strip() == "all":
            return ALL_CHANNELS
        item = type(default[0])
        return tuple(item(tok.strip()) for tok in text.split(",") if tok.strip())
    if isinstance(default, bool):
        return _parse_bool(text)
    return type(default)(text)


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, value)
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from None
    return ExperimentConfig(**values).validate()


def _format_value(value):
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in asdict(config).items())


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(text)
