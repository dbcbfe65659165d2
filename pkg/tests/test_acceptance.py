"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``[criterion N] PASS|FAIL ...`` line (visible without
``-s``) before asserting.  Criteria 3 to 6 share one full sweep:
4 methods x 12 channels x 3 seeds x 1000 epochs, which takes a few minutes.
"""
import math
import time

import numpy as np
import pytest

from deepcmac.cli import main
from deepcmac.cmac import CmacLayerParams, activate, excite, update_single_layer
from deepcmac.dcmac import DcmacModel, forward_stack, train_step
from deepcmac.gradcheck import run_suite
from deepcmac.harness import convergence_report, mse_to_db, sweep, table1_methods
from deepcmac.signals import ChannelFunction, Family, generate_signals

REFERENCE_MEANS = {"dcmac-3": -7.59, "cmac": -7.01, "volterra": -5.05, "lms": -4.35}
SEEDS = (0, 1, 2)
EPOCHS = 1000


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {detail}")
    return emit


@pytest.fixture(scope="module")
def table_sweep():
    start = time.perf_counter()
    summary, traces = sweep(table1_methods(), seeds=SEEDS, epochs=EPOCHS)
    summary.elapsed = time.perf_counter() - start
    return summary, {(t.method, t.channel, t.seed): t for t in traces}


def test_criterion_1_gradient_check(report):
    start = time.perf_counter()
    rel, ab = run_suite(n_instances=50, seed=0, layer_counts=(2, 3), step=1e-6,
                        max_dim=2, max_fields=4)
    elapsed = time.perf_counter() - start
    ok = rel < 1e-4 and elapsed < 10.0
    report(1, ok, f"max rel err {rel:.2e} (< 1e-4), abs err on |g|<1e-6 {ab:.1e}, "
                  f"{elapsed:.1f} s (< 10 s)")
    assert rel < 1e-4
    assert elapsed < 10.0


def test_criterion_2_single_layer_stack(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n_in, n_out, R = (int(v) for v in rng.integers(1, 4, size=3))
        lay = CmacLayerParams(rng.uniform(-2, 2, (R, n_in)), rng.uniform(0.3, 2, (R, n_in)),
                              rng.normal(size=(R, n_out)))
        x, d = rng.uniform(-2, 2, n_in), rng.uniform(-1, 1, n_out)
        rates = rng.uniform(1e-4, 1e-1, 3)
        model = DcmacModel((lay,))
        act = activate(x, lay)
        worst = max(worst, float(np.max(np.abs(forward_stack(model, x)[0] - act.output))))
        new, _ = train_step(model, x, d, *rates)
        ref = update_single_layer(lay, act, x, d - act.output, *rates)
        for name in ("means", "sigmas", "weights"):
            diff = np.abs(getattr(new.layers[0], name) - getattr(ref, name))
            worst = max(worst, float(np.max(diff)))
    ok = worst <= 1e-12
    report(2, ok, f"max |DCMAC(L=1) - CMAC| over forward+update = {worst:.1e} (<= 1e-12)")
    assert ok


def test_criterion_3_table_ordering(report, table_sweep):
    summary, _ = table_sweep
    mean, var = summary.mean, summary.variance
    order_ok = mean["dcmac-3"] < mean["cmac"] < mean["volterra"] < mean["lms"]
    var_ok = var["dcmac-3"] < var["cmac"] < min(var["volterra"], var["lms"])
    gaps = {m: abs(mean[m] - REFERENCE_MEANS[m]) for m in REFERENCE_MEANS}
    within = all(g <= 3.0 for g in gaps.values())
    cells = ", ".join(f"{m} {mean[m]:.2f} dB var {var[m]:.3f}"
                      for m in ("dcmac-3", "cmac", "volterra", "lms"))
    report(3, order_ok and var_ok and within,
           f"{cells}; mean order {order_ok}, variance order {var_ok}, "
           f"max |gap| {max(gaps.values()):.2f} dB (<= 3); sweep {summary.elapsed:.0f} s")
    assert order_ok
    assert var_ok
    assert within


def test_criterion_4_significance(report, table_sweep):
    summary, _ = table_sweep
    ok = summary.p_value < 0.05
    report(4, ok, f"paired t ({summary.comparison[0]} vs cmac, 12 channels): "
                  f"t = {summary.t_statistic:.3f}, p = {summary.p_value:.4f} (< 0.05)")
    assert ok


def test_criterion_5_convergence_shape(report, table_sweep):
    _, cells = table_sweep
    seed = 0
    sat = {m: convergence_report(cells[m, "cos3", seed]).saturation_epoch
           for m in ("cmac", "dcmac-3")}
    in_band = all(s is not None and 200 <= s <= 600 for s in sat.values())
    early = {m: float(np.mean(cells[m, "cos3", seed].mse_db[:49]))
             for m in ("lms", "volterra", "cmac", "dcmac-3")}
    crossover = max(early["lms"], early["volterra"]) < min(early["cmac"], early["dcmac-3"])
    report(5, in_band and crossover,
           f"cos3 seed {seed}: saturation cmac {sat['cmac']}, dcmac-3 {sat['dcmac-3']} "
           f"(want 200..600); mean dB over epochs 1-49: "
           + ", ".join(f"{m} {v:.2f}" for m, v in early.items())
           + f" (want lms/volterra below cmac/dcmac-3: {crossover})")
    assert in_band
    assert crossover


def test_criterion_6_noise_floor(report, table_sweep):
    _, cells = table_sweep
    gaps = []
    for seed in SEEDS:
        sig = generate_signals(seed, channel=ChannelFunction(Family.POLY, 1))
        floor = float(mse_to_db(np.mean(sig.s ** 2)))
        gaps.append(abs(cells["lms", "poly1", seed].converged_mse_db - floor))
    ok = max(gaps) <= 1.0
    report(6, ok, "best-grid LMS on poly1 minus floor, per seed: "
                  + ", ".join(f"{g:.3f} dB" for g in gaps) + " (<= 1 dB)")
    assert ok


def test_criterion_7_spot_values(report):
    checks = []
    lay = CmacLayerParams(np.array([[0.3], [-2.4]]), np.array([[0.7], [0.6]]), np.zeros((2, 1)))
    checks.append((excite([0.3], lay)[0, 0], 1.0))
    checks.append((excite([1.0], lay)[0, 0], math.exp(-1)))
    checks.append((excite([0.0], lay)[1, 0], 1.125351747192591145e-07))
    two = CmacLayerParams(np.array([[-1.0], [1.0]]), np.ones((2, 1)), np.array([[1.0], [2.0]]))
    checks.append((activate([0.0], two).output[0], 1.1036383235143269648))
    second = CmacLayerParams(np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    checks.append((forward_stack(DcmacModel((two, second)), [0.0])[0][0], 0.98931657541724886))
    checks.append((ChannelFunction(Family.POLY, 2)(1.0), 0.6))
    checks.append((ChannelFunction(Family.COS, 3)(0.0), 0.6))
    checks.append((ChannelFunction(Family.SIN, 2)(1.5), -0.13877628744121310))
    checks.append((mse_to_db(0.1), -10.0))
    checks.append((mse_to_db(2.0), 3.0102999566398120))
    worst = max(abs(got - want) for got, want in checks)
    ok = worst <= 1e-9
    report(7, ok, f"{len(checks)} spot values, max abs error {worst:.1e} (<= 1e-9)")
    assert ok


COMMANDS = [
    ["train", "--epochs", "3"],
    ["reproduce-table1", "--epochs", "2", "--seed", "1"],
    ["reproduce-fig6", "--epochs", "2", "--seed", "0"],
    ["reproduce-fig7", "--epochs", "3"],
]


def _snapshot(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_8_determinism(report, tmp_path, monkeypatch, capsys):
    runs = []
    for attempt in ("first", "second"):
        work = tmp_path / attempt
        work.mkdir()
        monkeypatch.chdir(work)
        for i, cmd in enumerate(COMMANDS):
            assert main(cmd + ["--out", f"out{i}"]) == 0
        assert main(["emit-plots", "out0", "--out", "plots"]) == 0
        runs.append(_snapshot(work))
    capsys.readouterr()
    first, second = runs
    artifacts = [p for p in first if p.suffix in (".csv", ".json")]
    differing = [str(p) for p in first if first[p] != second.get(p)]
    ok = set(first) == set(second) and not differing and len(artifacts) > 0
    report(8, ok, f"{len(COMMANDS) + 1} commands run twice, {len(artifacts)} CSV/JSON files, "
                  f"{len(differing)} differ")
    assert ok
