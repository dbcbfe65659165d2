"""Seeded test signals and the twelve nonlinear noise channels.

Noise source: numpy's PCG64 bit generator.  A run seed is expanded with
``SeedSequence(seed).spawn(2)`` into two independent streams, the first
for the multiplicative noise of the signal of interest, the second for the
reference noise.  With ``epoch`` given, the seed sequence is
``SeedSequence([seed, epoch])`` instead, so every epoch draws a fresh record.

Both noise records are drawn uniformly on [-1, 1), divided by their
empirical absolute maximum, then scaled to half-range 1 (signal noise) or
1.5 (reference noise).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

GAIN = 0.6
DEFAULT_SAMPLES = 1200
SIGNAL_FREQ = 0.06
NOISE_HALF_RANGE = 1.5


class Family(str, Enum):
    POLY = "poly"
    COS = "cos"
    SIN = "sin"


@dataclass(frozen=True)
class ChannelFunction:
    family: Family
    exponent_index: int
    gain: float = GAIN

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.exponent_index not in (1, 2, 3, 4):
            raise ValueError(f"exponent_index must be 1..4, got {self.exponent_index}")

    @property
    def exponent(self) -> int:
        return 2 * self.exponent_index - 1

    @property
    def id(self) -> str:
        return f"{self.family.value}{self.exponent}"

    def __call__(self, n):
        return eval_channel(self, n)


def eval_channel(channel: ChannelFunction, n):
    """``z = F(n)`` for a scalar or an array."""
    p = np.power(n, channel.exponent)
    if channel.family is Family.POLY:
        z = channel.gain * p
    elif channel.family is Family.COS:
        z = channel.gain * np.cos(p)
    else:
        z = channel.gain * np.sin(p)
    return float(z) if np.ndim(z) == 0 else z


def list_channels():
    return [ChannelFunction(fam, i) for fam in Family for i in (1, 2, 3, 4)]


def get_channel(channel_id: str) -> ChannelFunction:
    for ch in list_channels():
        if ch.id == channel_id:
            return ch
    raise KeyError(f"unknown channel {channel_id!r}; choose from "
                   + ", ".join(c.id for c in list_channels()))


@dataclass(frozen=True)
class SignalSet:
    s: np.ndarray
    n: np.ndarray
    z: np.ndarray
    v: np.ndarray
    seed: int
    channel: ChannelFunction

    @property
    def n_samples(self) -> int:
        return self.s.shape[0]


def _normalized_uniform(rng, K, half_range):
    raw = rng.uniform(-1.0, 1.0, K)
    peak = np.max(np.abs(raw))
    return half_range * raw / peak


def generate_signals(seed: int, n_samples: int = DEFAULT_SAMPLES,
                     channel: ChannelFunction | None = None, epoch: int | None = None) -> SignalSet:
    """Draw ``s, n`` and derive ``z = F(n)``, ``v = s + z``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if channel is None:
        channel = ChannelFunction(Family.COS, 2)
    entropy = seed if epoch is None else [seed, epoch]
    s_seq, n_seq = np.random.SeedSequence(entropy).spawn(2)
    u = _normalized_uniform(np.random.Generator(np.random.PCG64(s_seq)), n_samples, 1.0)
    n = _normalized_uniform(np.random.Generator(np.random.PCG64(n_seq)), n_samples,
                            NOISE_HALF_RANGE)
    k = np.arange(n_samples, dtype=np.float64)
    s = np.sin(SIGNAL_FREQ * k) * u
    z = eval_channel(channel, n)
    return SignalSet(s, n, z, s + z, int(seed), channel)


def write_signals_csv(signals: SignalSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "s", "n", "z", "v"])
        for k in range(signals.n_samples):
            w.writerow([k] + [fmt(a[k]) for a in (signals.s, signals.n, signals.z, signals.v)])


def fmt(x: float) -> str:
    """17 significant digits: enough for an exact float64 round trip."""
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return repr(x)
    return f"{x:.17g}"
