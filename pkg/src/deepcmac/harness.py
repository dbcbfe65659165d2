"""Adaptive noise cancellation experiments.

Every method sees the reference noise ``n(k)`` as input and the noisy
signal ``v(k)`` as the desired response; the canceller output is
``v(k) - y(k)``.  An epoch is one pass over the record with online
updates, and its MSE is the mean of the a-priori ``(v(k) - y(k))**2``,
reported in dB.  A perfect canceller (``y == z``) leaves exactly the signal
of interest, so ``10 log10 mean(s**2)`` is the floor.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .baselines import DEFAULT_STEPS, DEFAULT_TAPS
from .estimators import (DIVERGENCE_THRESHOLD, CMACRegressor, DCMACRegressor, LMSRegressor,
                         VolterraRegressor)
from .exceptions import DivergenceError, EmptyGridError
from .signals import ChannelFunction, SignalSet, generate_signals, list_channels
from .stats import paired_t_test

TAIL_FRACTION = 0.1
TABLE1_METHODS = ("lms", "volterra", "cmac", "dcmac-3")


def mse_to_db(mse):
    return 10.0 * np.log10(mse)


def residual_mse_db(signals: SignalSet, output) -> float:
    """dB power of the canceller output ``v - y`` for a filter output ``y``."""
    r = signals.v - np.asarray(output, dtype=np.float64)
    return float(mse_to_db(np.mean(r * r)))


@dataclass(frozen=True)
class MethodConfig:
    """One adaptive filter configuration.

    ``kind`` is ``"cmac"``, ``"dcmac"``, ``"lms"`` or ``"volterra"``.  For
    the two baselines, leaving ``n_taps``/``step_size`` unset means "pick
    the best cell of the grid" when run through :func:`sweep`.
    """

    kind: str
    n_layers: int = 1
    as_layers: int = 4
    elements_per_dim: int = 5
    lower_bound: float = -3.0
    upper_bound: float = 3.0
    rate_m: float = 1e-3
    rate_sigma: float = 1e-3
    rate_w: float = 1e-3
    hidden_init: str = "identity"
    n_taps: Optional[int] = None
    step_size: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("cmac", "dcmac", "lms", "volterra"):
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind == "cmac" and self.n_layers != 1:
            raise ValueError("cmac has exactly one layer")

    @classmethod
    def from_id(cls, method_id: str, **overrides) -> "MethodConfig":
        """Parse ``cmac``, ``dcmac-<L>``, ``lms`` or ``volterra``."""
        if method_id.startswith("dcmac-"):
            try:
                n_layers = int(method_id[len("dcmac-"):])
            except ValueError:
                raise ValueError(f"bad layer count in {method_id!r}") from None
            if n_layers < 1:
                raise ValueError(f"bad layer count in {method_id!r}")
            return cls("dcmac", n_layers=n_layers, **overrides)
        if method_id in ("cmac", "lms", "volterra"):
            return cls(method_id, **overrides)
        raise ValueError(f"unknown method {method_id!r}")

    @property
    def id(self) -> str:
        return f"dcmac-{self.n_layers}" if self.kind == "dcmac" else self.kind

    @property
    def is_baseline(self) -> bool:
        return self.kind in ("lms", "volterra")

    def build_estimator(self, epochs=1):
        if self.kind == "cmac":
            return CMACRegressor(self.as_layers, self.elements_per_dim, self.lower_bound,
                                 self.upper_bound, self.rate_m, self.rate_sigma, self.rate_w,
                                 epochs=epochs)
        if self.kind == "dcmac":
            return DCMACRegressor(self.n_layers, self.as_layers, self.elements_per_dim,
                                  self.lower_bound, self.upper_bound, self.rate_m,
                                  self.rate_sigma, self.rate_w, hidden_init=self.hidden_init,
                                  epochs=epochs)
        if self.n_taps is None or self.step_size is None:
            raise ValueError(f"{self.kind} needs n_taps and step_size (or a grid search)")
        cls = LMSRegressor if self.kind == "lms" else VolterraRegressor
        return cls(self.n_taps, self.step_size, epochs=epochs)


@dataclass
class TrainingTrace:
    method: str
    channel: str
    seed: int
    mse_db: np.ndarray
    diverged: bool = False
    params: Dict[str, float] = field(default_factory=dict)
    final_output: Optional[np.ndarray] = None

    @property
    def epochs(self) -> int:
        return len(self.mse_db)

    @property
    def converged_mse_db(self) -> float:
        """Mean dB-MSE over the last 10% of the recorded epochs."""
        if len(self.mse_db) == 0:
            return math.inf
        tail = max(1, int(math.ceil(TAIL_FRACTION * len(self.mse_db))))
        return float(np.mean(self.mse_db[-tail:]))


def run_anc(method: MethodConfig, signals: SignalSet, epochs: int,
            resample: bool = False, keep_output: bool = False,
            divergence_threshold: float = DIVERGENCE_THRESHOLD) -> TrainingTrace:
    """Train one canceller for ``epochs`` passes and record its dB-MSE curve.

    With ``resample`` every epoch after the first draws a fresh record from
    the same seed (see :func:`deepcmac.signals.generate_signals`).

    Raises
    ------
    DivergenceError
        If an epoch MSE is not finite or exceeds ``divergence_threshold``;
        the partial, flagged trace is attached as ``err.trace``.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    X = signals.n[:, None]
    est = method.build_estimator(epochs)
    est.divergence_threshold = divergence_threshold
    if resample:
        for ep in range(epochs):
            sig = signals if ep == 0 else generate_signals(
                signals.seed, signals.n_samples, signals.channel, epoch=ep)
            est.partial_fit(sig.n[:, None], sig.v)
            if est.diverged_:
                break
    else:
        est.fit(X, signals.v)
    mse = np.asarray(est.epoch_mse_, dtype=np.float64)
    recorded = mse[np.isfinite(mse) & (mse > 0)]
    params = {}
    if method.is_baseline:
        params = {"n_taps": int(method.n_taps), "step_size": float(method.step_size)}
    trace = TrainingTrace(method.id, signals.channel.id, signals.seed, mse_to_db(recorded),
                          bool(est.diverged_), params,
                          np.array(est.last_outputs_) if keep_output else None)
    if trace.diverged:
        raise DivergenceError(
            f"{method.id} diverged on {signals.channel.id} (seed {signals.seed}) "
            f"after {len(mse)} epochs", trace)
    return trace


def _run_flagged(method, signals, epochs, **kw) -> TrainingTrace:
    try:
        return run_anc(method, signals, epochs, **kw)
    except DivergenceError as err:
        return err.trace


def _rank_key(trace: TrainingTrace):
    return (trace.diverged, trace.converged_mse_db)


def baseline_grid(kind: str, taps: Sequence[int] = DEFAULT_TAPS,
                  steps: Sequence[float] = DEFAULT_STEPS) -> List[MethodConfig]:
    return [MethodConfig(kind, n_taps=int(p), step_size=float(mu))
            for p, mu in itertools.product(taps, steps)]


def grid_search_baseline(kind: str, signals: SignalSet, grid=None, epochs: int = 1000,
                         **kw) -> TrainingTrace:
    """Train every grid cell and return the trace with the lowest converged dB-MSE.

    ``grid`` is a sequence of ``(n_taps, step_size)`` pairs (default: the
    product of :data:`DEFAULT_TAPS` and :data:`DEFAULT_STEPS`).  Diverged
    cells lose to every non-diverged one; ties keep grid order.
    """
    if kind not in ("lms", "volterra"):
        raise ValueError(f"grid search applies to lms/volterra, not {kind!r}")
    if grid is None:
        cells = baseline_grid(kind)
    else:
        cells = [MethodConfig(kind, n_taps=int(p), step_size=float(mu)) for p, mu in grid]
    if not cells:
        raise EmptyGridError("empty baseline grid")
    traces = [_run_flagged(cell, signals, epochs, **kw) for cell in cells]
    return min(traces, key=_rank_key)


def run_cell(method: MethodConfig, channel: ChannelFunction, seed: int, epochs: int,
             n_samples: int = 1200, grid=None, resample: bool = False,
             keep_output: bool = False) -> TrainingTrace:
    """One (method, channel, seed) cell; unset baseline params trigger a grid search."""
    signals = generate_signals(seed, n_samples, channel)
    kw = dict(resample=resample, keep_output=keep_output)
    if method.is_baseline and (method.n_taps is None or method.step_size is None):
        return grid_search_baseline(method.kind, signals, grid, epochs, **kw)
    return _run_flagged(method, signals, epochs, **kw)


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class SweepSummary:
    """Cross-channel statistics of seed-averaged converged dB-MSE."""

    methods: List[str]
    channels: List[str]
    seeds: List[int]
    epochs: int
    per_channel: Dict[str, Dict[str, float]]
    per_cell: Dict[str, Dict[str, Dict[int, float]]]
    mean: Dict[str, float]
    variance: Dict[str, float]
    diverged: List[str]
    comparison: Optional[tuple] = None
    t_statistic: Optional[float] = None
    p_value: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "channels": list(self.channels),
            "seeds": list(self.seeds),
            "epochs": self.epochs,
            "mean_db": dict(self.mean),
            "variance_db": dict(self.variance),
            "per_channel_db": self.per_channel,
            "per_cell_db": {m: {c: {str(s): v for s, v in cells.items()}
                                for c, cells in chans.items()}
                            for m, chans in self.per_cell.items()},
            "diverged": list(self.diverged),
            "t_test": None if self.comparison is None else {
                "a": self.comparison[0], "b": self.comparison[1],
                "t": self.t_statistic, "p": self.p_value},
        }


def summarize(traces: Sequence[TrainingTrace], methods: Sequence[str],
              channels: Sequence[str], seeds: Sequence[int], epochs: int) -> SweepSummary:
    """Aggregate cell traces.

    Variances are population variances over channels.  The paired t-test
    compares the first ``dcmac-*`` method against ``cmac`` when both ran on
    at least two channels.
    """
    per_cell = {m: {c: {} for c in channels} for m in methods}
    diverged = []
    for tr in traces:
        per_cell[tr.method][tr.channel][tr.seed] = tr.converged_mse_db
        if tr.diverged:
            diverged.append(f"{tr.method}/{tr.channel}/{tr.seed}")
    per_channel = {m: {c: float(np.mean([per_cell[m][c][s] for s in seeds]))
                       for c in channels} for m in methods}
    mean = {m: float(np.mean(list(per_channel[m].values()))) for m in methods}
    variance = {m: float(np.var(list(per_channel[m].values()))) for m in methods}
    summary = SweepSummary(list(methods), list(channels), list(seeds), epochs, per_channel,
                           per_cell, mean, variance, sorted(diverged))
    deep = [m for m in methods if m.startswith("dcmac-")]
    if deep and "cmac" in methods and len(channels) >= 2:
        a = [per_channel[deep[0]][c] for c in channels]
        b = [per_channel["cmac"][c] for c in channels]
        summary.comparison = (deep[0], "cmac")
        summary.t_statistic, summary.p_value = paired_t_test(a, b)
    return summary


def sweep(methods: Sequence[MethodConfig], channels: Sequence[ChannelFunction] | None = None,
          seeds: Sequence[int] = (0, 1, 2), epochs: int = 1000, n_samples: int = 1200,
          grid=None, jobs: int = 1, resample: bool = False):
    """Run every (method, channel, seed) cell and summarise.

    Cells are independent and fully determined by their seed, so the
    result does not depend on ``jobs``.  Returns ``(summary, traces)`` with
    traces sorted by (method order, channel order, seed).
    """
    if not methods:
        raise ValueError("need at least one method")
    channels = list_channels() if channels is None else list(channels)
    seeds = list(seeds)
    cells = [(m, c, s, epochs, n_samples, grid, resample)
             for m in methods for c in channels for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_run_cell_args, cells))
    else:
        traces = [_run_cell_args(c) for c in cells]
    summary = summarize(traces, [m.id for m in methods], [c.id for c in channels], seeds, epochs)
    return summary, traces


@dataclass(frozen=True)
class ConvergenceReport:
    saturation_epoch: Optional[int]
    converged: bool
    total_improvement_db: float


def convergence_report(trace_or_db, window: int = 100, fraction: float = 0.01) -> ConvergenceReport:
    """Epoch (1-based) from which the curve stops improving.

    The improvement over the window starting at epoch ``t`` is
    ``mse_db[t] - mse_db[t + window - 1]``.  Saturation is the first ``t``
    from which every later window improves by less than ``fraction`` of the
    total improvement ``mse_db[0] - min(mse_db)``.  A curve that never
    improves saturates at epoch 1.
    """
    db = np.asarray(getattr(trace_or_db, "mse_db", trace_or_db), dtype=np.float64)
    if len(db) < window:
        raise ValueError(f"need at least {window} epochs, got {len(db)}")
    total = float(db[0] - np.min(db))
    if total <= 0.0:
        return ConvergenceReport(1, True, total)
    gains = db[: len(db) - window + 1] - db[window - 1:]
    ok = gains < fraction * total
    if not ok[-1]:
        return ConvergenceReport(None, False, total)
    bad = np.flatnonzero(~ok)
    start = 0 if len(bad) == 0 else int(bad[-1]) + 1
    return ConvergenceReport(start + 1, True, total)


def table1_methods(**overrides) -> List[MethodConfig]:
    return [MethodConfig.from_id(m, **overrides) for m in TABLE1_METHODS]


def with_geometry(method: MethodConfig, **geometry) -> MethodConfig:
    return replace(method, **geometry)
