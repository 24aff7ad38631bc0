"""Command-line orchestration: reproducible pipelines over the library modules.

Commands emit plot-ready CSV and line-delimited records only; rendering is
left to external tools. Every command writes a manifest recording the
resolved configuration, its hash, the seed, and the toolkit version, and a
manifest can be passed back via --config to reproduce a run byte-for-byte.

Config files are flat `key = value` text with `#` comments; keys mirror the
long option names without the leading dashes. Command-line flags win over
config values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, baselines, blindtan, density, lexicon, metrics, shuffle, synthetic
from .corpus import Corpus, load_activitynet, load_canonical, load_charades, save_canonical
from .rng import derive_seed

FORMATS = ("canonical", "charades", "activitynet")
STOCHASTIC_COMMANDS = {"run-baseline", "train-blindtan", "shuffle-test"}


@contextmanager
def _atomic(path):
    """Write to a temp file in the target directory, then rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def read_config(path) -> dict[str, str]:
    """Read a flat key=value config file or a previously written manifest."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        manifest = json.loads(text)
        return {k: str(v) for k, v in manifest.get("config", {}).items()}
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _expand_config(argv: list[str]) -> list[str]:
    """Splice config-file values in as flags before the explicit ones."""
    if not argv or argv[0].startswith("-"):
        return argv
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    if config_path is None:
        return argv
    injected = []
    for key, value in read_config(config_path).items():
        if key in ("config", "command"):
            continue
        injected.extend([f"--{key}", value])
    return [argv[0]] + injected + argv[1:]


def _write_manifest(out_dir: Path, command: str, args, outputs: list[str]) -> None:
    skip = {"config", "func"}
    config = {
        key.replace("_", "-"): value
        for key, value in sorted(vars(args).items())
        if key not in skip and value is not None
    }
    payload = {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": config,
        "config_hash": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode("utf-8")
        ).hexdigest(),
        "outputs": sorted(outputs),
    }
    with _atomic(out_dir / "manifest.json") as tmp:
        Path(tmp).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")


def _load_corpus(path, fmt: str, durations, split: str) -> Corpus:
    if fmt == "charades":
        if durations is None:
            raise ValueError("--durations is required for the charades format")
        return load_charades(path, durations, split=split)
    if fmt == "activitynet":
        return load_activitynet(path, split=split)
    return load_canonical(path, split=split)


def _load_lexicon(args) -> lexicon.VerbLexicon:
    return lexicon.VerbLexicon.load(getattr(args, "lexicon", None))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_analyze_bias(args) -> int:
    out = _out_dir(args)
    lex = _load_lexicon(args)
    train = _load_corpus(args.train, args.format, args.durations, "train")
    stats = lexicon.verb_stats(train, lex)
    outputs = []

    verbs_path = out / "verbs.csv"
    with _atomic(verbs_path) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(f"# total {stats.total}\n")
            fh.write("verb,count\n")
            for verb in lexicon.top_k_verbs(stats, max(len(stats.counts), 1)):
                fh.write(f"{verb},{stats.counts[verb]}\n")
    outputs.append(str(verbs_path))

    priors = density.fit_conditional(train, lex, top_k=args.top_k, min_samples=args.min_samples)
    global_path = out / "density_global.csv"
    with _atomic(global_path) as tmp:
        density.export_density_grid(priors.global_model, args.grid_resolution).to_csv(tmp)
    outputs.append(str(global_path))

    ranked = [v for v in lexicon.top_k_verbs(stats, args.grids) if v in priors.per_verb]
    for rank, verb in enumerate(ranked):
        grid_path = out / f"density_verb_{rank:02d}_{verb}.csv"
        with _atomic(grid_path) as tmp:
            density.export_density_grid(priors.per_verb[verb], args.grid_resolution).to_csv(tmp)
        outputs.append(str(grid_path))

    _write_manifest(out, "analyze-bias", args, outputs)
    print(f"analyze-bias: {stats.total} verb tokens, {len(ranked)} conditional grids -> {out}")
    return 0


def cmd_run_baseline(args) -> int:
    out = _out_dir(args)
    lex = _load_lexicon(args)
    eval_corpus = _load_corpus(args.eval, args.format, args.durations, "test")
    priors = None
    if args.baseline in ("prior-only", "action-aware"):
        if args.train is None:
            raise ValueError(f"baseline {args.baseline!r} requires --train")
        train = _load_corpus(args.train, args.format, args.durations, "train")
        priors = density.fit_conditional(train, lex, top_k=args.top_k, min_samples=args.min_samples)

    trials = args.trials if args.trials is not None else (100 if args.baseline == "uniform" else 1)
    params = metrics.MetricParams(args.k, args.m)
    scores = []
    first_preds = None
    first_report = None
    for trial in range(trials):
        seed = derive_seed(args.seed, f"trial-{trial}")
        preds = baselines.run_baseline(
            args.baseline, eval_corpus, priors, lex, args.n_candidates, seed
        )
        report = metrics.recall_at_k(preds, eval_corpus, params)
        scores.append(report.score)
        if trial == 0:
            first_preds, first_report = preds, report

    pred_path = out / "predictions.jsonl"
    with _atomic(pred_path) as tmp:
        baselines.save_predictions(first_preds, tmp)
    report_path = out / "report.txt"
    with _atomic(report_path) as tmp:
        first_report.write(tmp, params)
        with open(tmp, "a", encoding="utf-8") as fh:
            fh.write(f"# trials {trials}\n")
            fh.write(f"# trials_mean {float(np.mean(scores))!r}\n")
            std = float(np.std(scores, ddof=1)) if trials > 1 else 0.0
            fh.write(f"# trials_std {std!r}\n")
    _write_manifest(out, "run-baseline", args, [str(pred_path), str(report_path)])
    print(
        f"run-baseline[{args.baseline}]: R@{args.k}(IoU>{args.m}) = "
        f"{float(np.mean(scores)):.2f} over {trials} trial(s) -> {out}"
    )
    return 0


def cmd_train_blindtan(args) -> int:
    out = _out_dir(args)
    train_corpus = _load_corpus(args.train, args.format, args.durations, "train")
    config = blindtan.BlindTanConfig(
        map_size=args.map_size,
        channels=args.channels,
        vocab_size=args.vocab_size,
        embed_dim=args.embed_dim,
        conv_layers=args.conv_layers,
        kernel_size=args.kernel_size,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        iou_scale_min=args.iou_scale_min,
        iou_scale_max=args.iou_scale_max,
        seed=args.seed,
    )
    log_path = out / "training_log.csv"
    ckpt_path = out / "model.npz"
    with _atomic(log_path) as tmp_log:
        model = blindtan.train(config, train_corpus, log_path=tmp_log)
        with _atomic(ckpt_path) as tmp_ckpt:
            with open(tmp_ckpt, "wb") as fh:
                blindtan.save_model(model, fh)
    _write_manifest(out, "train-blindtan", args, [str(ckpt_path), str(log_path)])
    final = model.training_log[-1][1]
    print(f"train-blindtan: {config.epochs} epochs, final loss {final:.5f} -> {out}")
    return 0


def cmd_eval(args) -> int:
    out = _out_dir(args)
    corpus = _load_corpus(args.data, args.format, args.durations, "test")
    params = metrics.MetricParams(args.k, args.m)
    report_path = out / "report.txt"

    if args.metric in ("standard", "nn", "representative"):
        if args.predictions is None:
            raise ValueError(f"--predictions is required for --metric {args.metric}")
        preds = baselines.load_predictions(args.predictions)
        if args.metric == "standard":
            report = metrics.recall_at_k(preds, corpus, params)
        elif args.metric == "nn":
            report = metrics.recall_nn(preds, corpus.reference_sets, params)
        else:
            report = metrics.recall_representative(preds, corpus.reference_sets, params)
        with _atomic(report_path) as tmp:
            report.write(tmp, params)
        score_line = f"score {report.score:.2f} ({report.hits}/{report.total})"
    elif args.metric == "human-representative":
        report = metrics.human_score_representative(corpus.reference_sets, corpus, params)
        with _atomic(report_path) as tmp:
            report.write(tmp, params)
        score_line = f"score {report.score:.2f} ({report.hits}/{report.total})"
    else:  # human-random
        if args.seed is None:
            raise ValueError("--seed is required for --metric human-random")
        mean, std = metrics.human_score_random(
            corpus.reference_sets, corpus, params, trials=args.trials, rng_seed=args.seed
        )
        with _atomic(report_path) as tmp:
            Path(tmp).write_text(
                f"# metric human-random\n# trials {args.trials}\n"
                f"# mean {mean!r}\n# std {std!r}\n",
                "utf-8",
            )
        score_line = f"mean {mean:.2f} std {std:.2f} over {args.trials} trials"
    _write_manifest(out, "eval", args, [str(report_path)])
    print(f"eval[{args.metric}]: {score_line} -> {out}")
    return 0


def _build_predictor(args, eval_corpus) -> shuffle.Predictor:
    if args.predictor == "planted":
        return synthetic.PlantedSignaturePredictor()
    if args.predictor == "blindtan":
        if args.checkpoint is None:
            raise ValueError("--checkpoint is required for --predictor blindtan")
        return shuffle.BlindTanPredictor(blindtan.load_model(args.checkpoint))
    priors = None
    lex = _load_lexicon(args)
    if args.predictor in ("prior-only", "action-aware"):
        if args.train is None:
            raise ValueError(f"--train is required for --predictor {args.predictor}")
        train = _load_corpus(args.train, args.format, args.durations, "train")
        priors = density.fit_conditional(train, lex, top_k=args.top_k, min_samples=args.min_samples)
    return shuffle.BaselinePredictor(
        args.predictor, priors, lex, args.n_candidates, args.seed
    )


def cmd_shuffle_test(args) -> int:
    out = _out_dir(args)
    eval_corpus = _load_corpus(args.eval, args.format, args.durations, "test")
    params = metrics.MetricParams(args.k, args.m)

    if args.original_predictions is not None or args.shuffled_predictions is not None:
        if not (args.original_predictions and args.shuffled_predictions):
            raise ValueError(
                "external comparison needs both --original-predictions and "
                "--shuffled-predictions"
            )
        report = shuffle.compare_prediction_files(
            baselines.load_predictions(args.original_predictions),
            baselines.load_predictions(args.shuffled_predictions),
            eval_corpus,
            params,
        )
    else:
        features: dict[str, shuffle.FeatureSequence] = {}
        if args.features is not None:
            for path in sorted(Path(args.features).glob("*.csv")):
                seq = shuffle.load_features(path)
                features[seq.video_id] = seq
        elif args.synthetic_features:
            features = synthetic.make_planted_features(eval_corpus, rng_seed=args.seed)
        predictor = _build_predictor(args, eval_corpus)
        report = shuffle.sensitivity_test(
            predictor, eval_corpus, features, params, args.segment_length, args.seed
        )

    summary_path = out / "sensitivity.txt"
    with _atomic(summary_path) as tmp:
        Path(tmp).write_text(
            f"# score_original {report.score_original!r}\n"
            f"# score_shuffled {report.score_shuffled!r}\n"
            f"# score_delta {report.score_delta!r}\n"
            f"# unchanged_fraction {report.unchanged_fraction!r}\n",
            "utf-8",
        )
    diffs_path = out / "diffs.csv"
    with _atomic(diffs_path) as tmp:
        report.write_csv(tmp)
    outputs = [str(summary_path), str(diffs_path)]
    if args.diff_grid is not None:
        grid_path = out / "diff_density.csv"
        with _atomic(grid_path) as tmp:
            shuffle.export_diff_distribution(report, args.diff_grid).to_csv(tmp)
        outputs.append(str(grid_path))
    _write_manifest(out, "shuffle-test", args, outputs)
    print(
        f"shuffle-test: original {report.score_original:.2f}, shuffled "
        f"{report.score_shuffled:.2f}, unchanged {report.unchanged_fraction:.3f} -> {out}"
    )
    return 0


def cmd_export_annotations(args) -> int:
    out = _out_dir(args)
    corpus = _load_corpus(args.input, args.format, args.durations, "export")
    target = out / args.name
    if args.tasks:
        with _atomic(target) as tmp:
            with open(tmp, "w", encoding="utf-8") as fh:
                for sample in corpus:
                    record = {
                        "sample_id": sample.sample_id,
                        "video_id": sample.video_id,
                        "duration": sample.video_duration,
                        "query": sample.query,
                    }
                    if args.video_url_template:
                        record["video_url"] = args.video_url_template.format(
                            video_id=sample.video_id
                        )
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    else:
        with _atomic(target) as tmp:
            save_canonical(corpus, tmp)
    _write_manifest(out, "export-annotations", args, [str(target)])
    print(f"export-annotations: {len(corpus)} records -> {target}")
    return 0


def _add_common(parser):
    parser.add_argument("--config", help="flat key=value config file or a manifest.json")
    parser.add_argument("--seed", type=int, default=None, help="master random seed")
    parser.add_argument("--out", required=True, help="output directory")


def _add_data_options(parser, *names):
    for name in names:
        parser.add_argument(f"--{name}", help=f"{name} annotation file")
    parser.add_argument("--format", choices=FORMATS, default="canonical")
    parser.add_argument("--durations", help="video_id,duration_seconds CSV (charades format)")
    parser.add_argument("--lexicon", help="replacement inflected,lemma verb lexicon CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momentaudit",
        description="Audit location biases, run blind baselines, and evaluate "
        "moment retrieval predictions.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-bias", help="verb frequencies and location density grids")
    _add_common(p)
    _add_data_options(p, "train")
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--min-samples", type=int, default=10)
    p.add_argument("--grid-resolution", type=int, default=100)
    p.add_argument("--grids", type=int, default=30, help="max per-verb grids to export")
    p.set_defaults(func=cmd_analyze_bias)

    p = sub.add_parser("run-baseline", help="fit priors, predict, and score a blind baseline")
    _add_common(p)
    _add_data_options(p, "train", "eval")
    p.add_argument("--baseline", choices=baselines.BASELINES, required=True)
    p.add_argument("--n-candidates", type=int, default=100)
    p.add_argument("--trials", type=int, default=None,
                   help="default 100 for uniform, 1 otherwise")
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--min-samples", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=float, default=0.5)
    p.set_defaults(func=cmd_run_baseline)

    p = sub.add_parser("train-blindtan", help="train the query-only localizer")
    _add_common(p)
    _add_data_options(p, "train")
    p.add_argument("--map-size", type=int, default=64)
    p.add_argument("--channels", type=int, default=32)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--conv-layers", type=int, default=2)
    p.add_argument("--kernel-size", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--iou-scale-min", type=float, default=0.5)
    p.add_argument("--iou-scale-max", type=float, default=1.0)
    p.set_defaults(func=cmd_train_blindtan)

    p = sub.add_parser("eval", help="score a prediction file or the human protocols")
    _add_common(p)
    _add_data_options(p, "data", "predictions")
    p.add_argument(
        "--metric",
        choices=("standard", "nn", "representative", "human-representative", "human-random"),
        default="standard",
    )
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("shuffle-test", help="segment-shuffle sensitivity test")
    _add_common(p)
    _add_data_options(p, "train", "eval", "checkpoint", "features",
                      "original-predictions", "shuffled-predictions")
    p.add_argument(
        "--predictor",
        choices=("uniform", "prior-only", "action-aware", "blindtan", "planted"),
        default="prior-only",
    )
    p.add_argument("--synthetic-features", type=_bool, default=False,
                   help="generate planted-signature features for the eval corpus")
    p.add_argument("--segment-length", type=int, default=2,
                   help="frames per shuffled block (2 = 1 s at the bundled 2 fps)")
    p.add_argument("--n-candidates", type=int, default=100)
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--min-samples", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--diff-grid", type=int, default=None,
                   help="also export a KDE grid over (ds, de) at this resolution")
    p.set_defaults(func=cmd_shuffle_test)

    p = sub.add_parser("export-annotations", help="convert annotations to the canonical format")
    _add_common(p)
    _add_data_options(p, "input")
    p.add_argument("--name", default="annotations.jsonl", help="output file name")
    p.add_argument("--tasks", type=_bool, default=False,
                   help="emit moment-free task records for the annotation frontend")
    p.add_argument("--video-url-template", default=None,
                   help="e.g. 'https://host/videos/{video_id}.mp4'")
    p.set_defaults(func=cmd_export_annotations)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command in STOCHASTIC_COMMANDS and args.seed is None:
        print(f"error: --seed is required for {args.command} (no hidden entropy)",
              file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
