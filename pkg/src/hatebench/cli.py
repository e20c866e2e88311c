"""Command-line entry point: eda, bench, train, evaluate, synth.

Both branches run from the same RunConfig over the identical split (one
root seed fanned out by labeled derivation), which is what makes the
comparison controlled. Exit codes: 0 success, 2 configuration, 3
ingestion, 4 training, 5 I/O.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autobench, classic, corpus, features, neural, synth, textprep
from .config import RunConfig, build_config
from .errors import ConfigError, IngestionError, TrainingError
from .evaluation import classification_report, emit_report, percent
from .seeding import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGESTION = 3
EXIT_TRAINING = 4
EXIT_IO = 5

# Test-time probability assigned to tweets that clean to nothing (all-pad
# sequences are undefined for the network itself); 0.5 never clears the
# default decision threshold, so such rows predict the negative class.
NEUTRAL_PROBABILITY = 0.5


@dataclass
class PreparedData:
    records: list
    docs: list
    resources: textprep.NormalizationResources
    labels: np.ndarray
    split: corpus.DataSplit


def _prepare(config: RunConfig) -> PreparedData:
    """Shared front of both branches: load, preprocess, split."""
    if config.data is None:
        raise ConfigError("no dataset given; pass --data or set 'data' in the config file")
    records = corpus.load_corpus(config.data, config.column_map())
    resources = textprep.load_resources(config.slang, config.stopwords, config.lexicon)
    if not resources.abusive_lexicon:
        raise ConfigError("abusive lexicon is empty")
    docs = [textprep.preprocess(rec.text, resources) for rec in records]
    labels = np.array([getattr(rec, config.task) for rec in records], dtype=np.int64)
    split = corpus.stratified_split(labels, config.test_fraction,
                                    derive_seed(config.seed, "split"))
    # stage-order guard: the partitions must be disjoint and exhaustive
    train_set = set(split.train_indices)
    assert not train_set & set(split.test_indices)
    assert len(train_set) + len(split.test_indices) == len(records)
    return PreparedData(records=records, docs=docs, resources=resources,
                        labels=labels, split=split)


def _meta(config: RunConfig, command: str, **extra) -> dict:
    meta = {"command": command, "task": config.task, "seed": config.seed,
            "config": config.as_dict()}
    meta.update(extra)
    return meta


def cmd_eda(config: RunConfig) -> int:
    if config.data is None:
        raise ConfigError("no dataset given; pass --data or set 'data' in the config file")
    stats = corpus.corpus_stats(corpus.load_corpus(config.data, config.column_map()))
    corpus.write_eda_artifacts(stats, config.out)
    print(f"rows: {stats.total_rows}")
    print(f"hs counts (neg, pos): {stats.hs_counts}")
    print(f"abusive counts (neg, pos): {stats.abusive_counts}")
    print(f"mean length: {stats.mean_length:.2f} words")
    print(f"artifacts written to {config.out}")
    return EXIT_OK


def cmd_bench(config: RunConfig) -> int:
    prep = _prepare(config)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_rows = prep.split.train_indices
    test_rows = prep.split.test_indices
    train_docs = [prep.docs[i] for i in train_rows]
    y_train = prep.labels[train_rows]
    y_test = prep.labels[test_rows]
    lexicon = prep.resources.abusive_lexicon
    ngram_range = (config.ngram_min, config.ngram_max)

    vocab = features.fit_vocabulary(train_docs, config.max_terms, ngram_range)
    X_train = features.transform_corpus(train_docs, vocab, lexicon)
    X_test = features.transform_corpus([prep.docs[i] for i in test_rows], vocab, lexicon)

    folds = autobench.kfold_stratified(y_train, config.folds, derive_seed(config.seed, "folds"))
    specs = config.estimator_specs()

    cv_kwargs = {}
    if config.cv_refit_vocab:
        def refit(cv_train, cv_eval):
            fold_vocab = features.fit_vocabulary(
                [train_docs[i] for i in cv_train], config.max_terms, ngram_range)
            return (features.transform_corpus([train_docs[i] for i in cv_train], fold_vocab, lexicon),
                    features.transform_corpus([train_docs[i] for i in cv_eval], fold_vocab, lexicon))
        cv_kwargs["transform"] = refit

    leaderboard = autobench.compare_models(specs, X_train, y_train, folds, **cv_kwargs)
    champion_family = leaderboard.champion_entry.spec.family

    # refit on the full training partition and evaluate on the held-out split
    to_refit = leaderboard.entries if config.bench_test_all else [leaderboard.champion_entry]
    metrics_by_method: dict = {}
    confusions: dict = {}
    for entry in to_refit:
        model = classic.train(entry.spec, X_train, y_train)
        scores = classic.score(model, X_test)
        preds = classic.predict(model, X_test)
        cm, report = classification_report(y_test, preds, scores)
        metrics_by_method[entry.spec.family] = report
        if entry.spec.family == champion_family:
            confusions[config.task] = cm
            classic.save_model(model, out_dir / f"champion_{champion_family}.npz")

    features.save_vocabulary(vocab, out_dir / "vocab.txt")
    autobench.write_leaderboard(leaderboard, out_dir)
    emit_report(
        _meta(config, "bench", n_train=len(train_rows), n_test=len(test_rows),
              champion=champion_family),
        out_dir,
        metrics_by_method=metrics_by_method,
        confusions=confusions,
        leaderboard_rows=autobench.leaderboard_rows(leaderboard),
    )
    print("leaderboard (mean CV F1):")
    for row in autobench.leaderboard_rows(leaderboard):
        print(f"  {row['rank']}. {row['family']}: f1={row['mean_f1']:.4f} "
              f"acc={row['mean_accuracy']:.4f}")
    champ = metrics_by_method[champion_family]
    print(f"champion {champion_family} on test: "
          f"acc={percent(champ.accuracy)} f1={percent(champ.f1)} (percent)")
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def _encode_training_docs(docs, labels, tokenizer, max_len):
    """Encode and drop docs that clean to nothing; returns (ids, mask, y, dropped)."""
    ids, mask = neural.encode_batch(docs, tokenizer, max_len)
    keep = mask.sum(axis=1) > 0
    dropped = int((~keep).sum())
    return ids[keep], mask[keep], labels[keep], dropped


def _predict_with_empty_docs(model, docs, tokenizer, max_len):
    """Eval-mode probabilities with all-pad rows mapped to the neutral score."""
    ids, mask = neural.encode_batch(docs, tokenizer, max_len)
    nonempty = mask.sum(axis=1) > 0
    scores = np.full(len(docs), NEUTRAL_PROBABILITY)
    if nonempty.any():
        scores[nonempty] = neural.predict_proba(model, ids[nonempty], mask[nonempty])
    return scores, int((~nonempty).sum())


def cmd_train(config: RunConfig) -> int:
    prep = _prepare(config)
    out_dir = Path(config.out)
    model_config = config.model_config()

    train_rows = np.array(prep.split.train_indices)
    test_rows = prep.split.test_indices
    y_train_all = prep.labels[train_rows]
    # validation subset carved from the training portion, stratified
    val_split = corpus.stratified_split(y_train_all, config.val_fraction,
                                        derive_seed(config.seed, "val"))
    fit_rows = train_rows[val_split.train_indices]
    val_rows = train_rows[val_split.test_indices]

    fit_docs = [prep.docs[i] for i in fit_rows]
    tokenizer = neural.fit_tokenizer(fit_docs, config.max_vocab)

    ids_tr, mask_tr, y_tr, dropped_train = _encode_training_docs(
        fit_docs, prep.labels[fit_rows], tokenizer, config.max_len)
    ids_va, mask_va, y_va, dropped_val = _encode_training_docs(
        [prep.docs[i] for i in val_rows], prep.labels[val_rows], tokenizer, config.max_len)
    if dropped_train or dropped_val:
        print(f"note: dropped {dropped_train} training and {dropped_val} validation "
              f"tweet(s) that cleaned to nothing", file=sys.stderr)

    model = neural.build_model(model_config, tokenizer.vocab_size)
    log = neural.train_model(model, (ids_tr, mask_tr, y_tr), (ids_va, mask_va, y_va))

    scores, empty_test = _predict_with_empty_docs(
        model, [prep.docs[i] for i in test_rows], tokenizer, config.max_len)
    preds = (scores > 0.5).astype(np.int64)
    y_test = prep.labels[test_rows]
    cm, report = classification_report(y_test, preds, scores)

    out_dir.mkdir(parents=True, exist_ok=True)
    neural.save_checkpoint(out_dir / "checkpoint.npz", model, tokenizer)
    neural.write_curves_csv(log, out_dir / "curves.csv")
    emit_report(
        _meta(config, "train", n_train=int(ids_tr.shape[0]), n_val=int(ids_va.shape[0]),
              n_test=len(test_rows), best_epoch=log.best_epoch,
              dropped_train=dropped_train, dropped_val=dropped_val,
              empty_test_docs=empty_test),
        out_dir,
        metrics_by_method={"cnn_bilstm": report},
        confusions={config.task: cm},
        curves=neural.curve_rows(log),
    )
    print(f"trained {len(log.epochs)} epoch(s); best epoch {log.best_epoch} "
          f"(val loss {log.epochs[log.best_epoch].val_loss:.4f})")
    print(f"test metrics (percent): acc={percent(report.accuracy)} "
          f"prec={percent(report.precision)} rec={percent(report.recall)} "
          f"f1={percent(report.f1)}")
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def cmd_evaluate(config: RunConfig, checkpoint: str) -> int:
    model, tokenizer = neural.load_checkpoint(checkpoint, config.model_config())
    prep = _prepare(config)
    out_dir = Path(config.out)
    test_rows = prep.split.test_indices
    scores, empty_test = _predict_with_empty_docs(
        model, [prep.docs[i] for i in test_rows], tokenizer, config.max_len)
    preds = (scores > 0.5).astype(np.int64)
    cm, report = classification_report(prep.labels[test_rows], preds, scores)
    emit_report(
        _meta(config, "evaluate", checkpoint=str(checkpoint), n_test=len(test_rows),
              empty_test_docs=empty_test),
        out_dir,
        metrics_by_method={"cnn_bilstm": report},
        confusions={config.task: cm},
    )
    print(f"test metrics (percent): acc={percent(report.accuracy)} "
          f"prec={percent(report.precision)} rec={percent(report.recall)} "
          f"f1={percent(report.f1)}")
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def cmd_synth(n: int, seed: int, out: str, label_noise: float) -> int:
    path = synth.make_synthetic_corpus(n, seed, out, label_noise=label_noise)
    print(f"wrote {n} synthetic rows to {path}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatebench",
        description="Dual-branch hate-speech classification benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--data", help="path to the annotation table")
        p.add_argument("--task", choices=("hs", "abusive"), help="target label column")
        p.add_argument("--seed", type=int, help="root seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (repeatable)")

    add_common(sub.add_parser("eda", help="corpus statistics and figure"))
    add_common(sub.add_parser("bench", help="cross-validated leaderboard of the conventional models"))
    add_common(sub.add_parser("train", help="train the CNN-BiLSTM with early stopping"))
    p_eval = sub.add_parser("evaluate", help="score the test split from a checkpoint")
    p_eval.add_argument("checkpoint", help="checkpoint file written by train")
    add_common(p_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic annotation table")
    p_synth.add_argument("--n", type=int, default=1000)
    p_synth.add_argument("--seed", type=int, default=13)
    p_synth.add_argument("--out", default="synthetic.csv")
    p_synth.add_argument("--noise", type=float, default=0.0,
                         help="label-noise probability (default off)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args.n, args.seed, args.out, args.noise)
        config = build_config(
            config_path=args.config,
            overrides={"data": args.data, "task": args.task,
                       "seed": args.seed, "out": args.out},
            set_pairs=args.set,
        )
        if args.command == "eda":
            return cmd_eda(config)
        if args.command == "bench":
            return cmd_bench(config)
        if args.command == "train":
            return cmd_train(config)
        return cmd_evaluate(config, args.checkpoint)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
