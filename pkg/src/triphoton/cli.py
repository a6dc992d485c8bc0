"""Command-line front end.

    triphoton predict|simulate|discriminate|verify --config RUN.yaml
              [--out PATH] [--format csv|json] [--force] [--seed N]

Exit codes: 0 success, 1 verify failed, 2 usage or configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .discrimination import DiscriminationConfig, NoDiscriminatingSetting, discriminate
from .models import Copenhagen, TimeSymmetricBell, TimeSymmetricTriphoton, predict_rate
from .montecarlo import SimulationConfig, simulate_counts
from .output import (
    COUNT_COLUMNS,
    RATE_COLUMNS,
    count_row,
    metadata,
    rate_row,
    render_csv,
    render_json,
    render_table_json,
)
from .state import PureState, bell_state, ghz_state

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

VERIFY_TOL = 1e-12

COMMANDS = ("predict", "simulate", "discriminate", "verify")


class UsageError(Exception):
    pass


def source_state(config: RunConfig) -> PureState:
    if config.experiment == "bell":
        return bell_state()
    if config.experiment == "ghz":
        return ghz_state()
    return PureState(np.array(config.amplitudes)).normalized()


def build_models(config: RunConfig):
    """``(copenhagen, timesym, selected)``; ``timesym`` is None for custom states."""
    cop = Copenhagen(source_state(config))
    if config.experiment == "bell":
        ts = TimeSymmetricBell()
    elif config.experiment == "ghz":
        ts = TimeSymmetricTriphoton(config.k)
    else:
        ts = None
    selected = cop if config.model == "copenhagen" else ts
    if selected is None:
        raise UsageError("timesym model is defined only for the bell and ghz experiments")
    return cop, ts, selected


def cmd_predict(config: RunConfig, fmt: str) -> tuple[str, int]:
    _, _, model = build_models(config)
    rows = [rate_row(a, predict_rate(model, a)) for a in config.angle_settings()]
    meta = metadata("predict", config)
    if fmt == "json":
        return render_table_json(rows, RATE_COLUMNS, meta), EXIT_OK
    return render_csv(rows, RATE_COLUMNS, meta), EXIT_OK


def cmd_simulate(config: RunConfig, fmt: str) -> tuple[str, int]:
    _, _, model = build_models(config)
    sim = SimulationConfig(
        model=model,
        settings_list=config.angle_settings(),
        n_emitted=config.n_emitted,
        detector_efficiency=config.efficiency,
        dark_coincidence_rate=config.dark_rate,
        master_seed=config.seed,
    )
    records = simulate_counts(sim)
    for rec in records:
        for w in rec.warnings:
            print(f"warning: {w} at angles {rec.angles}", file=sys.stderr)
    rows = [
        count_row(r.angles, r.model_rate, r.n_emitted, r.n_coincidence, config.seed)
        for r in records
    ]
    meta = metadata("simulate", config)
    if fmt == "json":
        return render_table_json(rows, COUNT_COLUMNS, meta), EXIT_OK
    return render_csv(rows, COUNT_COLUMNS, meta), EXIT_OK


def cmd_discriminate(config: RunConfig, fmt: str) -> tuple[str, int]:
    cop, ts, _ = build_models(config)
    if ts is None:
        raise UsageError("discriminate needs the bell or ghz experiment")
    opts = config.discriminate
    dconf = DiscriminationConfig(
        model_a=cop,
        model_b=ts,
        angle_grid=opts.grid_steps,
        refine_iterations=opts.refine_iterations,
        alpha=opts.alpha,
        beta=opts.beta,
        detector_efficiency=config.efficiency,
        dark_coincidence_rate=config.dark_rate,
        n_resamples=opts.n_resamples,
        profile_k=opts.profile_k,
    )
    generating = "model_a" if config.model == "copenhagen" else "model_b"
    try:
        report = discriminate(dconf, generating=generating, seed=config.seed)
    except NoDiscriminatingSetting as exc:
        raise UsageError(str(exc)) from None
    doc = metadata("discriminate", config)
    doc["report"] = report.to_dict()
    return render_json(doc), EXIT_OK


def bell_agreement(steps: int) -> float:
    """Largest |Copenhagen - time-symmetric| Bell rate over a steps x steps grid on [0, pi]."""
    cop = Copenhagen(bell_state())
    ts = TimeSymmetricBell()
    grid = np.linspace(0.0, math.pi, steps)
    worst = 0.0
    for ta in grid:
        for tb in grid:
            angles = (float(ta), float(tb))
            worst = max(worst, abs(predict_rate(cop, angles) - predict_rate(ts, angles)))
    return worst


def cmd_verify(config: RunConfig, fmt: str) -> tuple[str, int]:
    steps = config.verify_grid_steps
    worst = bell_agreement(steps)
    passed = worst <= VERIFY_TOL
    doc = metadata("verify", config)
    doc.update(
        experiment="bell",
        grid_steps=steps,
        max_abs_diff=worst,
        tolerance=VERIFY_TOL,
        passed=passed,
    )
    return render_json(doc), EXIT_OK if passed else EXIT_VERIFY_FAILED


HANDLERS = {
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "discriminate": cmd_discriminate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triphoton",
        description="Copenhagen vs time-symmetric predictions for entangled-photon polarizer experiments.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="output path (default: config output.path, else stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="table format (default: config output.format)")
    parser.add_argument("--force", action="store_true", help="overwrite an existing output file")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        config = parse_config(text)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be >= 0", "--seed")
            config = replace(config, seed=args.seed)
        if args.out is not None:
            config = replace(config, output_path=args.out)
        if args.format is not None:
            config = replace(config, format=args.format)
        artifact, status = HANDLERS[args.command](config, config.format)
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if status == EXIT_VERIFY_FAILED:
        print("verify failed: models disagree on the Bell grid", file=sys.stderr)
    path = config.output_path
    if path is None:
        sys.stdout.write(artifact)
        return status
    if os.path.exists(path) and not args.force:
        print(f"error: {path} exists; pass --force to overwrite", file=sys.stderr)
        return EXIT_IO
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(artifact)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
