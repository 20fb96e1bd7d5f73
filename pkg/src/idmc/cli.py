"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .autonet import checkpoint
from .errors import ConfigError, NumericalError
from .metrics import export_symbol_distribution, read_sweep_csv
from .pipeline import config as cfgmod
from .pipeline import run

log = logging.getLogger("idmc")


def _snr_list(text: str) -> tuple:
    try:
        return tuple(None if t.strip() == cfgmod.NOISELESS else float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None


def _common(p: argparse.ArgumentParser, order=True, snr=True) -> None:
    p.add_argument("--config", type=Path, help="experiment config (key = value); defaults if omitted")
    p.add_argument("--seed", type=int)
    if order:
        p.add_argument("--order", type=int, help="modulation order M")
    if snr:
        p.add_argument("--snr", type=_snr_list, help="comma-separated SNR values in dB")
    p.add_argument("--out", type=Path, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idmc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch losses")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-analog", help="phase 1: train the analog codec")
    _common(p, order=False)

    p = sub.add_parser("fit-constellation", help="phase 2: cluster encoder symbols")
    _common(p, snr=False)
    p.add_argument("--checkpoint", type=Path, required=True, help="analog checkpoint")

    p = sub.add_parser("finetune", help="phase 3: fine-tune through the modem")
    _common(p)
    p.add_argument("--checkpoint", type=Path, required=True, help="analog checkpoint")
    p.add_argument("--constellation", type=Path, help="constellation file (idmc_i)")
    p.add_argument("--mode", choices=("idmc_r", "idmc_i", "analog"))

    p = sub.add_parser("train-ste", help="digital baseline on a fixed grid, from scratch")
    _common(p)

    p = sub.add_parser("evaluate", help="PSNR sweep over SNR, written as CSV")
    _common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--constellation", type=Path)
    p.add_argument("--mode", choices=cfgmod.MODES)
    p.add_argument("--figure", type=Path, help="also render PSNR vs SNR to this image")

    p = sub.add_parser("export-distribution", help="histogram of encoder output symbols")
    _common(p, order=False)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--bins", type=int, default=31)
    p.add_argument("--constellation", type=Path, help="overlay on the figure")
    p.add_argument("--figure", type=Path, help="also render the scatter and marginals")

    p = sub.add_parser("run", help="all phases for the configured mode, then evaluate")
    _common(p)
    p.add_argument("--mode", choices=cfgmod.MODES)
    p.add_argument("--figure", type=Path)
    return parser


IMPLIED_MODE = {"train-analog": "analog", "fit-constellation": "idmc_i", "train-ste": "ste_baseline"}


def _config(args) -> cfgmod.ExperimentConfig:
    overrides = {}
    if args.command in IMPLIED_MODE:
        overrides["mode"] = IMPLIED_MODE[args.command]
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "order", None) is not None:
        overrides["order"] = args.order
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    snr = getattr(args, "snr", None)
    if snr is not None:
        if args.command in ("evaluate", "run"):
            overrides["snr_eval_grid"] = snr
        elif args.command != "export-distribution":
            if None in snr:
                raise ConfigError("training SNRs must be finite")
            overrides["snr_train_range"] = (min(snr), max(snr))
    if args.config is None:
        return cfgmod.parse_config("", **overrides)
    return cfgmod.load_config(args.config, **overrides)


def _evaluate(args, config):
    report = run.evaluate_sweep(args.checkpoint, config, args.constellation, csv_out=args.out)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(read_sweep_csv(args.out), args.figure)
    for p in report.points:
        label = "noiseless" if p.snr_db is None else f"{p.snr_db:g} dB"
        print(f"snr {label}  psnr {p.psnr_db:.3f} dB")


def _export(args, config):
    from .core import Rng, Stream
    from .pipeline.data import load_dataset

    data = load_dataset(config)
    params, _ = checkpoint.load(args.checkpoint)
    run._check_architecture(params, config, data)
    if args.snr:
        if len(args.snr) != 1 or args.snr[0] is None:
            raise ConfigError("export-distribution takes a single finite --snr")
        config = config.replace(snr_train_range=(args.snr[0], args.snr[0]))
    samples = run.sample_symbols(params, data, config, Rng(config.seed, Stream.CLUSTER))
    dist = export_symbol_distribution(samples, args.bins)
    for path in dist.write(args.out):
        print(path)
    if args.figure:
        from .clustering import Constellation
        from .plotting import plot_distribution

        const = Constellation.load(args.constellation) if args.constellation else None
        plot_distribution(samples, dist, args.figure, const)


def _run(args, config):
    result = run.run_experiment(config, args.out)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(read_sweep_csv(result.csv), args.figure)
    print(result.csv)


def dispatch(args) -> None:
    config = _config(args)
    cmd = args.command
    if cmd == "train-analog":
        res = run.run_phase1_analog(config, args.out)
        print(f"final loss {res.epoch_losses[-1] if res.epoch_losses else res.initial_loss}")
    elif cmd == "fit-constellation":
        res = run.run_phase2_cluster(args.checkpoint, config, args.out)
        print(f"{res.constellation.order} points, converged={res.converged}")
    elif cmd == "finetune":
        run.run_phase3_finetune(args.checkpoint, config, args.out, args.constellation)
    elif cmd == "train-ste":
        run.run_ste_baseline(config, args.out)
    elif cmd == "evaluate":
        _evaluate(args, config)
    elif cmd == "export-distribution":
        _export(args, config)
    elif cmd == "run":
        _run(args, config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        dispatch(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
