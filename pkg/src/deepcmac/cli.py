"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

from . import artifacts
from .config import ALL_CHANNELS, ExperimentConfig, dump_config, load_config
from .exceptions import ConfigError, MissingTraceError
from .gradcheck import run_suite
from .harness import TABLE1_METHODS, MethodConfig, run_cell, summarize
from .signals import generate_signals, get_channel, write_signals_csv

FIG6_SETTINGS = ((2, 5), (4, 5), (4, 9))
FIG6_DEEP = ("cmac", "dcmac-3", "dcmac-5", "dcmac-7")
FIG7_CHANNELS = ("poly3", "cos3", "sin3")
METHOD_ORDER = ("lms", "volterra", "cmac")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _method_sort_key(method):
    if method in METHOD_ORDER:
        return (METHOD_ORDER.index(method), 0)
    if method.startswith("dcmac-"):
        return (len(METHOD_ORDER), int(method.split("-", 1)[1]))
    return (len(METHOD_ORDER) + 1, method)


def _config(args, **defaults) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = ExperimentConfig(**defaults).validate()
    seeds = (args.seed,) if args.seed is not None else None
    return config.override(epochs=args.epochs, out=args.out, jobs=args.jobs, seeds=seeds)


def _run_cells(config: ExperimentConfig, methods, keep_output=False):
    cells = [(m, get_channel(c), s) for m in methods for c in config.channels
             for s in config.seeds]
    args = [(m, ch, s, config.epochs, config.samples, config.grid,
             config.resample_per_epoch, keep_output) for m, ch, s in cells]
    if config.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(_cell, args))
    return [_cell(a) for a in args]


def _cell(args):
    return run_cell(*args)


def _write_cells(out: Path, config: ExperimentConfig, traces, recovered=False):
    (out / "traces").mkdir(parents=True, exist_ok=True)
    if recovered:
        (out / "recovered").mkdir(exist_ok=True)
        (out / "signals").mkdir(exist_ok=True)
    rows = []
    for tr in traces:
        stem = artifacts.cell_stem(tr.method, tr.channel, tr.seed)
        artifacts.write_trace_csv(tr, out / "traces" / f"{stem}.csv")
        if recovered and tr.final_output is not None:
            signals = generate_signals(tr.seed, config.samples, get_channel(tr.channel))
            artifacts.write_recovered_csv(signals, tr.final_output,
                                          out / "recovered" / f"{stem}.csv")
            sig_path = out / "signals" / f"{tr.channel}__seed{tr.seed}.csv"
            if not sig_path.exists():
                write_signals_csv(signals, sig_path)
        if tr.diverged:
            print(f"warning: {stem} diverged after {tr.epochs} epochs", file=sys.stderr)
        rows.append({"method": tr.method, "channel": tr.channel, "seed": tr.seed,
                     "epochs": tr.epochs, "converged_mse_db": tr.converged_mse_db,
                     "diverged": tr.diverged, "params": tr.params})
    (out / "config.txt").write_text(dump_config(config))
    return rows


def _print_table(summary, file=sys.stdout):
    print(f"{'method':<10} {'mean dB':>9} {'var dB^2':>9}", file=file)
    for m in summary.methods:
        print(f"{m:<10} {summary.mean[m]:>9.3f} {summary.variance[m]:>9.3f}", file=file)
    if summary.comparison is not None:
        a, b = summary.comparison
        print(f"paired t ({a} vs {b}): t = {summary.t_statistic:.4f}, "
              f"p = {summary.p_value:.4g}", file=file)


def cmd_train(args):
    config = _config(args)
    out = Path(config.out)
    traces = _run_cells(config, config.method_configs(), keep_output=True)
    rows = _write_cells(out, config, traces, recovered=True)
    artifacts.write_json({"cells": rows}, out / "train_summary.json")
    print(f"{'method':<10} {'channel':<7} {'seed':>4} {'converged dB':>13}")
    for r in rows:
        flag = "  DIVERGED" if r["diverged"] else ""
        print(f"{r['method']:<10} {r['channel']:<7} {r['seed']:>4} "
              f"{r['converged_mse_db']:>13.4f}{flag}")
    return 0


def cmd_reproduce_table1(args):
    config = _config(args, methods=TABLE1_METHODS, channels=ALL_CHANNELS,
                     seeds=(0, 1, 2))
    out = Path(config.out)
    methods = config.method_configs()
    traces = _run_cells(config, methods)
    _write_cells(out, config, traces)
    summary = summarize(traces, [m.id for m in methods], list(config.channels),
                        list(config.seeds), config.epochs)
    artifacts.write_json(summary.to_dict(), out / "table1.json")
    _print_table(summary)
    return 0


def cmd_reproduce_fig6(args):
    config = _config(args, methods=("lms", "volterra") + FIG6_DEEP, channels=("cos3",),
                     seeds=(0, 1, 2))
    out = Path(config.out)
    baselines = [m for m in config.method_configs() if m.is_baseline]
    deep = [m for m in config.method_configs() if not m.is_baseline]
    results = {}
    traces_all = []
    base_traces = _run_cells(config, baselines)
    traces_all += base_traces
    base = summarize(base_traces, [m.id for m in baselines], list(config.channels),
                     list(config.seeds), config.epochs)
    for m in base.methods:
        results[m] = base.mean[m]
    for as_layers, n_e in FIG6_SETTINGS:
        setting = replace(config, as_layers=as_layers, elements_per_dim=n_e)
        methods = [replace(m, as_layers=as_layers, elements_per_dim=n_e) for m in deep]
        traces = _run_cells(setting, methods)
        summ = summarize(traces, [m.id for m in methods], list(config.channels),
                         list(config.seeds), config.epochs)
        for m in summ.methods:
            results[f"{m}[as_layers={as_layers},n_e={n_e}]"] = summ.mean[m]
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json({"channels": list(config.channels), "seeds": list(config.seeds),
                          "epochs": config.epochs, "mean_converged_mse_db": results},
                         out / "fig6.json")
    with open(out / "fig6.csv", "w") as fh:
        fh.write("method,converged_mse_db\n")
        for k in sorted(results):
            fh.write(f"{k},{artifacts.fmt(results[k])}\n")
    for k in sorted(results):
        print(f"{k:<36} {results[k]:9.3f}")
    return 0


def cmd_reproduce_fig7(args):
    config = _config(args, methods=TABLE1_METHODS, channels=FIG7_CHANNELS, seeds=(0,))
    out = Path(config.out)
    traces = _run_cells(config, config.method_configs(), keep_output=True)
    _write_cells(out, config, traces, recovered=True)
    for path in emit_plots(out, out / "plots"):
        print(path)
    return 0


def emit_plots(trace_dir: Path, plot_dir: Path):
    """Write plot-ready CSVs from a run directory; returns the files written."""
    trace_dir = Path(trace_dir)
    src = trace_dir / "traces" if (trace_dir / "traces").is_dir() else trace_dir
    curves = defaultdict(dict)
    for path in sorted(src.glob("*.csv")) if src.is_dir() else []:
        key = artifacts.parse_stem(path.stem)
        if key is not None:
            method, channel, seed = key
            curves[channel, seed][method] = artifacts.read_trace_csv(path)
    if not curves:
        raise MissingTraceError(f"no training traces found under {trace_dir}")
    plot_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (channel, seed), by_method in sorted(curves.items()):
        methods = sorted(by_method, key=_method_sort_key)
        length = max(len(v) for v in by_method.values())
        path = plot_dir / f"fig7__{channel}__seed{seed}.csv"
        with open(path, "w") as fh:
            fh.write(",".join(["epoch"] + methods) + "\n")
            for ep in range(length):
                vals = [artifacts.fmt(by_method[m][ep]) if ep < len(by_method[m]) else ""
                        for m in methods]
                fh.write(",".join([str(ep + 1)] + vals) + "\n")
        written.append(path)
    for path in sorted((trace_dir / "recovered").glob("*.csv")):
        cols = artifacts.read_columns(path)
        target = plot_dir / f"fig8__{path.stem}.csv"
        with open(target, "w") as fh:
            fh.write("k,recovered,s\n")
            for k, rec, s in zip(cols["k"], cols["v_minus_y"], cols["s"]):
                fh.write(f"{k},{rec},{s}\n")
        written.append(target)
    for path in sorted((trace_dir / "signals").glob("*.csv")):
        cols = artifacts.read_columns(path)
        target = plot_dir / f"fig5__{path.stem}.csv"
        with open(target, "w") as fh:
            fh.write("k,s,v\n")
            for k, s, v in zip(cols["k"], cols["s"], cols["v"]):
                fh.write(f"{k},{s},{v}\n")
        written.append(target)
    return written


def cmd_emit_plots(args):
    trace_dir = Path(args.trace_dir)
    plot_dir = Path(args.out) if args.out else trace_dir / "plots"
    for path in emit_plots(trace_dir, plot_dir):
        print(path)
    return 0


def cmd_gradcheck(args):
    rel, ab = run_suite(args.instances, args.seed if args.seed is not None else 0)
    print(f"max relative error: {rel:.3e}")
    print(f"max absolute error (|grad| < 1e-6): {ab:.3e}")
    return 0 if rel < 1e-4 and ab < 1e-8 else 2


def build_parser():
    parser = _Parser(prog="deepcmac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, run=True):
        p.add_argument("--config", help="key = value experiment file")
        p.add_argument("--seed", type=int, help="run a single seed")
        if run:
            p.add_argument("--epochs", type=int)
            p.add_argument("--out", help="output directory")
            p.add_argument("--jobs", type=int, help="parallel worker processes")
        return p

    common(sub.add_parser("train", help="train the configured methods")).set_defaults(
        func=cmd_train)
    common(sub.add_parser("reproduce-table1", help="4 methods x 12 channels sweep")
           ).set_defaults(func=cmd_reproduce_table1)
    common(sub.add_parser("reproduce-fig6", help="converged MSE under three geometries")
           ).set_defaults(func=cmd_reproduce_fig6)
    common(sub.add_parser("reproduce-fig7", help="convergence curves and recovered signals")
           ).set_defaults(func=cmd_reproduce_fig7)
    p = sub.add_parser("emit-plots", help="plot-ready CSVs from a run directory")
    p.add_argument("trace_dir")
    p.add_argument("--out", help="plot directory (default: <trace_dir>/plots)")
    p.set_defaults(func=cmd_emit_plots)
    p = sub.add_parser("gradcheck", help="finite-difference check of backpropagation")
    p.add_argument("--seed", type=int)
    p.add_argument("--instances", type=int, default=50)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (MissingTraceError, OSError, RuntimeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
