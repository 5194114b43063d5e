"""Command-line interface.

Subcommands: extract, init, train, evaluate, dump-params, gradcheck.
Exit codes: 0 on success, 1 for validation errors (bad inputs, config,
file formats), 2 for runtime or numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import featurefile, state_io
from .compression import CompressorKind, DesignMode, forward
from .errors import (
    AudioFormatError,
    ConfigError,
    DivergenceError,
    ParameterDomainError,
    StateFormatError,
    TrialResolutionError,
)
from .frontend import load_wav, stft_magnitude
from .gradcheck import run_gradient_check
from .metrics import evaluate_scores, pool_score_sets, read_trial_list, score_trials
from .runconfig import SEED_ENV_VAR, RunConfig, load_config
from .training import (
    EmbeddingHead,
    embed,
    gen_synthetic_corpus,
    init_head,
    train_joint,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="run configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a configuration value (repeatable; overrides win)",
    )


def _load(args) -> RunConfig:
    return load_config(args.config, args.overrides)


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------


def _extract_one(path, cfg, frame, state, out_dir, echo):
    wav = load_wav(path)
    if wav.sample_rate != cfg.sample_rate:
        raise AudioFormatError(
            f"{path}: sample rate {wav.sample_rate} does not match "
            f"configured {cfg.sample_rate} (no implicit resampling)"
        )
    values = stft_magnitude(wav, frame)
    if state is not None:
        values = forward(values, state)
    out_path = out_dir / (Path(path).stem + ".feat")
    featurefile.write_feature_file(out_path, values, frame, wav.sample_rate, echo)
    return f"{path} -> {out_path} [{values.shape[0]}x{values.shape[1]}]"


def cmd_extract(args) -> int:
    cfg = _load(args)
    frame = cfg.frame_spec()
    echo = cfg.canonical_text()
    state = None
    if args.state:
        state, _ = state_io.load_state(args.state)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Files are independent, so extraction fans out across a thread pool;
    # results are reported in input order either way.
    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, min(args.jobs, len(args.inputs)))) as pool:
        futures = [
            pool.submit(_extract_one, path, cfg, frame, state, out_dir, echo)
            for path in args.inputs
        ]
        for future in futures:
            try:
                print(future.result())
            except (AudioFormatError, ValueError, OSError) as exc:
                failures += 1
                print(f"error: {exc}", file=sys.stderr)
    return EXIT_VALIDATION if failures else EXIT_OK


# ---------------------------------------------------------------------------
# init
# ---------------------------------------------------------------------------


def cmd_init(args) -> int:
    cfg = _load(args)
    state = cfg.build_state()
    state_io.save_state(state, args.output, cfg.canonical_text())
    print(
        f"wrote {args.output}: {state.kind.value} / {state.mode.value}, "
        f"{state.n_regimes} regime(s) x {state.n_channels} channel(s)"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = _load(args)
    echo = cfg.canonical_text()
    train_cfg = cfg.train_config()
    t = cfg.values["train"]

    corpus = gen_synthetic_corpus(
        t["n_speakers"],
        t["utts_per_speaker"],
        t["duration_s"],
        t["corpus_seed"],
        n_channels=cfg.n_channels,
        frame_spec=cfg.frame_spec(),
        sample_rate=cfg.sample_rate,
    )
    if args.init_state:
        state, _ = state_io.load_state(args.init_state)
    else:
        state = cfg.build_state()
    head = init_head(cfg.n_channels, t["n_speakers"], t["embed_dim"], seed=train_cfg.seed)

    report = train_joint(corpus, state, head, train_cfg, cfg.frame_spec())

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state_path = out_dir / "state.bin"
    head_path = out_dir / "head.bin"
    report_path = out_dir / "report.json"
    state_io.save_state(report.final_state, state_path, echo)
    state_io.save_head(report.final_head.projection, report.final_head.class_weights,
                       head_path, echo)
    payload = {
        "config": echo,
        "loss_history": report.loss_history,
        "epochs": train_cfg.epochs,
        "final_state_file": state_path.name,
        "final_head_file": head_path.name,
    }
    report_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(
        f"trained {train_cfg.epochs} epochs: loss {report.loss_history[0]:.4f} -> "
        f"{report.loss_history[-1]:.4f}; wrote {report_path}, {state_path}, {head_path}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _read_embeddings_csv(path) -> dict[str, np.ndarray]:
    embeddings: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.startswith("utt_id,")):
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'utt_id,v0,v1,...'")
            embeddings[parts[0]] = np.array([float(v) for v in parts[1:]])
    if not embeddings:
        raise ValueError(f"{path}: no embeddings found")
    return embeddings


def _write_embeddings_csv(path, embeddings: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        first = next(iter(embeddings.values()))
        fh.write("utt_id," + ",".join(f"e{i}" for i in range(first.size)) + "\n")
        for utt_id, vec in embeddings.items():
            fh.write(utt_id + "," + ",".join(repr(float(v)) for v in vec) + "\n")


def _embeddings_from_features(args, trial_ids) -> dict[str, np.ndarray]:
    features_dir = Path(args.features_dir)
    state = None
    if args.state:
        state, _ = state_io.load_state(args.state)
    projection, class_weights, _ = state_io.load_head(args.head)
    head = EmbeddingHead(projection=projection, class_weights=class_weights)

    embeddings: dict[str, np.ndarray] = {}
    for utt_id in sorted(trial_ids):
        feat_path = features_dir / f"{utt_id}.feat"
        if not feat_path.exists():
            continue  # reported as unresolved by score_trials
        data = featurefile.read_feature_file(feat_path)
        values = data.values.astype(np.float64)
        if state is not None:
            values = forward(values, state)
        embeddings[utt_id] = embed(values, head)
    return embeddings


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    eval_cfg = cfg.eval_config()

    trial_lists = [(Path(p).name, read_trial_list(p)) for p in args.trials]
    trial_ids = {t.enroll_id for _, trials in trial_lists for t in trials}
    trial_ids |= {t.test_id for _, trials in trial_lists for t in trials}

    if args.embeddings:
        embeddings = _read_embeddings_csv(args.embeddings)
    elif args.features_dir:
        if not args.head:
            raise ConfigError("--features-dir requires --head")
        embeddings = _embeddings_from_features(args, trial_ids)
    else:
        raise ConfigError("provide either --embeddings or --features-dir")

    if args.dump_embeddings:
        _write_embeddings_csv(args.dump_embeddings, embeddings)

    results = {}
    score_sets = []
    for name, trials in trial_lists:
        scores = score_trials(trials, embeddings)
        score_sets.append(scores)
        results[name] = evaluate_scores(scores, eval_cfg)
    pooled = evaluate_scores(pool_score_sets(score_sets), eval_cfg)

    width = max(len(name) for name in results) if results else 10
    width = max(width, len("pooled"))
    print(f"{'list':<{width}}  {'EER(%)':>8}  {'minDCF':>8}")
    for name, report in results.items():
        print(f"{name:<{width}}  {100 * report.eer:>8.2f}  {report.min_dcf:>8.4f}")
    print(f"{'pooled':<{width}}  {100 * pooled.eer:>8.2f}  {pooled.min_dcf:>8.4f}")

    if args.out:
        payload = {
            "config": cfg.canonical_text(),
            "lists": {name: report.as_dict() for name, report in results.items()},
            "pooled": pooled.as_dict(),
        }
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dump-params
# ---------------------------------------------------------------------------


def cmd_dump_params(args) -> int:
    state, _ = state_io.load_state(args.state)
    text = state_io.state_to_csv(state)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output} ({state.n_channels} channels)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    report = run_gradient_check(
        CompressorKind(args.kind),
        DesignMode(args.mode),
        seed=seed,
        n_points=args.points,
        tolerance=args.tol,
    )
    status = "pass" if report.passed else "FAIL"
    print(
        f"{status}: {report.kind.value} / {report.mode.value}, {report.n_points} points, "
        f"max rel err {report.max_rel_err:.3e} (tolerance {report.tolerance:.0e})"
    )
    for failure in report.failures:
        print(
            f"  offending point: param={failure.param} x={failure.x:.6g} "
            f"value={failure.param_value:.6g} analytic={failure.analytic:.6g} "
            f"numeric={failure.numeric:.6g} rel_err={failure.rel_err:.3e}",
            file=sys.stderr,
        )
    return EXIT_OK if report.passed else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speccomp",
        description="Learnable nonlinear compression of STFT magnitude spectrograms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract (optionally compressed) features from WAV files")
    _add_config_args(p)
    p.add_argument("--state", metavar="FILE", help="compressor state; omit for raw magnitudes")
    p.add_argument("--out-dir", default=".", help="output directory for .feat files")
    p.add_argument("--jobs", type=int, default=4, help="parallel workers across input files")
    p.add_argument("inputs", nargs="+", metavar="WAV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("init", help="write an initialized compressor state")
    _add_config_args(p)
    p.add_argument("-o", "--output", required=True, metavar="FILE")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("train", help="jointly train compression parameters on a toy corpus")
    _add_config_args(p)
    p.add_argument("--init-state", metavar="FILE", help="start from this state instead of the config preset")
    p.add_argument("--out-dir", default=".", help="directory for report.json, state.bin, head.bin")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score trial lists and report EER / minDCF")
    _add_config_args(p)
    p.add_argument("--trials", action="append", required=True, metavar="FILE",
                   help="trial list file (repeatable; pooled results are also reported)")
    p.add_argument("--embeddings", metavar="CSV", help="utterance embeddings (utt_id,v0,v1,...)")
    p.add_argument("--features-dir", metavar="DIR", help="directory of <utt_id>.feat files")
    p.add_argument("--state", metavar="FILE",
                   help="compress raw features with this state before embedding")
    p.add_argument("--head", metavar="FILE", help="embedding head (required with --features-dir)")
    p.add_argument("--dump-embeddings", metavar="CSV", help="also write computed embeddings")
    p.add_argument("--out", metavar="JSON", help="write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("dump-params", help="dump a state file as per-channel CSV")
    p.add_argument("state", metavar="STATE")
    p.add_argument("-o", "--output", metavar="CSV")
    p.set_defaults(func=cmd_dump_params)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    p.add_argument("--kind", required=True, choices=[k.value for k in CompressorKind])
    p.add_argument("--mode", required=True, choices=[m.value for m in DesignMode])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except (
        ConfigError,
        AudioFormatError,
        StateFormatError,
        ParameterDomainError,
        TrialResolutionError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DivergenceError, FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
