"""Command-line front door: train, eval, plot, multirun.

Exit codes: 0 success, 2 bad configuration, 3 config/checkpoint digest
mismatch, 4 unreadable checkpoint, 5 malformed CSV.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .cli_io import (
    CheckpointError,
    ConfigError,
    CsvFormatError,
    HISTORY_HEADER,
    SUMMARY_HEADER,
    config_digest,
    history_csv_row,
    load_checkpoint,
    load_config,
    read_history_csv,
    save_checkpoint,
)
from .cli_io import RunConfig
from .env_core import decode_morphology, split
from .trainer import Evaluator, TrainState, eval_seeds_for, multi_run, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIGEST = 3
EXIT_CHECKPOINT = 4
EXIT_CSV = 5


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _setup(cfg: RunConfig):
    env = cfg.make_env()
    part = cfg.partition(env)
    morph_spec = cfg.morph_spec()
    aug = cfg.augmentation(env)
    return env, part, morph_spec, aug


def cmd_train(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
        env, part, morph_spec, aug = _setup(cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))

    start_state = None
    if args.resume is not None:
        try:
            _, start_state, digest = load_checkpoint(args.resume)
        except CheckpointError as exc:
            return _fail(EXIT_CHECKPOINT, str(exc))
        if digest != config_digest(cfg):
            return _fail(
                EXIT_DIGEST,
                f"checkpoint {args.resume} was trained under a different config "
                f"(digest {digest[:12]}... != {config_digest(cfg)[:12]}...)",
            )

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.txt"
    history_path = out_dir / "history.csv"

    with history_path.open("w") as history_file:
        history_file.write(HISTORY_HEADER + "\n")
        if start_state is not None:
            for row in start_state.history:
                history_file.write(history_csv_row(row) + "\n")
        history_file.flush()

        def on_generation(row) -> None:
            history_file.write(history_csv_row(row) + "\n")
            history_file.flush()

        def checkpoint_sink(state: TrainState) -> None:
            save_checkpoint(ckpt_path, cfg, state)

        state = train(
            cfg.train, env, part, cfg.opt,
            morph_spec=morph_spec, aug=aug, workers=args.workers,
            start_state=start_state,
            on_generation=on_generation, checkpoint_sink=checkpoint_sink,
        )

    save_checkpoint(ckpt_path, cfg, state)
    best = "unset" if state.best_params is None else f"{state.best_avg_score:.6g}"
    print(
        f"train complete: {state.generation} generations, best_avg_score {best}, "
        f"outputs in {out_dir}"
    )
    return EXIT_OK


def _morphology_report(cfg: RunConfig, env, part, state: TrainState) -> list[str]:
    if part.morph_len == 0:
        return ["morphology: fixed (baseline)"]
    spec = cfg.morph_spec()
    _, morph_raw = split(state.best_params, part)
    learned = decode_morphology(morph_raw, spec)
    width = max(len(n) for n in spec.names)
    lines = [f"{'parameter'.ljust(width)}  {'original':>10}  {'learned':>10}  {'percent':>8}"]
    for name, orig, phys in zip(spec.names, spec.original, learned):
        lines.append(
            f"{name.ljust(width)}  {orig:10.4f}  {phys:10.4f}  {100.0 * phys / orig:7.1f}%"
        )
    return lines


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        cfg, state, _ = load_checkpoint(args.checkpoint)
    except CheckpointError as exc:
        return _fail(EXIT_CHECKPOINT, str(exc))
    if state.best_params is None:
        return _fail(EXIT_CHECKPOINT, "checkpoint holds no best agent (run was too short)")
    try:
        env, part, morph_spec, aug = _setup(cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, f"embedded config: {exc}")

    evaluator = Evaluator(env, part, morph_spec, aug)
    seeds = eval_seeds_for(args.seed, args.rollouts)
    scores = np.array([evaluator.task_score(state.best_params, [s]) for s in seeds])
    # identical scores (seed-independent env) must report exactly zero spread
    std = 0.0 if np.all(scores == scores[0]) else float(scores.std())
    print(f"task score over {args.rollouts} rollouts: "
          f"{scores.mean():.6g} +/- {std:.6g}")
    for line in _morphology_report(cfg, env, part, state):
        print(line)
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    try:
        runs = [(Path(p).stem, read_history_csv(p)) for p in args.history]
    except CsvFormatError as exc:
        return _fail(EXIT_CSV, str(exc))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for stem, rows in runs:
        gens = [r.generation for r in rows]
        ax.plot(gens, [r.best_avg_score for r in rows], label=f"{stem} best")
        ax.plot(gens, [r.mean_fitness for r in rows], "--", alpha=0.6, label=f"{stem} mean")
    ax.set_xlabel("generation")
    ax.set_ylabel("score")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out)
    plt.close(fig)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_multirun(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
        env, part, morph_spec, aug = _setup(cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))

    def on_run(r: int, state: TrainState) -> None:
        print(f"run {r}: final score {state.best_avg_score:.6g}")

    summary = multi_run(
        cfg.train, env, part, cfg.opt, args.runs,
        morph_spec=morph_spec, aug=aug, workers=args.workers, on_run=on_run,
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / "summary.csv"
    with summary_path.open("w") as f:
        f.write(SUMMARY_HEADER + "\n")
        for r, score in zip(summary.run_indices, summary.scores):
            f.write(f"{r},{format(score, '.17g')}\n")
    for r, message in summary.failures:
        print(f"run {r} FAILED: {message}", file=sys.stderr)
    print(f"{len(summary.scores)}/{args.runs} runs: "
          f"{summary.mean:.6g} +/- {summary.std:.6g} (summary in {summary_path})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphopt",
        description="Jointly optimize policy weights and body-design parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training experiment")
    p_train.add_argument("config", help="run configuration file")
    p_train.add_argument("--resume", help="checkpoint to continue from")
    p_train.add_argument("--workers", type=int, default=1, help="parallel evaluators")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a trained agent from a checkpoint")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("--rollouts", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.set_defaults(func=cmd_eval)

    p_plot = sub.add_parser("plot", help="render training curves from history CSVs")
    p_plot.add_argument("history", nargs="+", help="history.csv files to overlay")
    p_plot.add_argument("--out", default="training_curves.svg")
    p_plot.set_defaults(func=cmd_plot)

    p_multi = sub.add_parser("multirun", help="repeat an experiment over several seeds")
    p_multi.add_argument("config")
    p_multi.add_argument("--runs", type=int, default=10)
    p_multi.add_argument("--workers", type=int, default=1)
    p_multi.set_defaults(func=cmd_multirun)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
