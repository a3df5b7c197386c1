"""Command line entry points.

Exit codes: 0 on success, 1 for usage problems (bad flags, missing
arguments), 2 for data problems (unreadable or malformed files, values
out of range).  All randomness flows from --seed / the config file, so
reruns with the same inputs produce identical artifacts.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import baseline, corpus, embed, evalkit, fixtures, lda, net, textprep, transfer
from .config import RunConfig, load_config
from .errors import DataError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; we want 1
        raise UsageError(message)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return common


def _config(args: argparse.Namespace, **overrides) -> RunConfig:
    overrides["seed"] = getattr(args, "seed", None)
    return load_config(getattr(args, "config", None), overrides=overrides)


def _load_table(path: str | None, cfg: RunConfig) -> embed.EmbeddingTable:
    if path is None:
        return embed.EmbeddingTable(
            dim=cfg.embed_dim, word_vectors={}, buckets=cfg.ngram_buckets,
            n_min=cfg.ngram_min, n_max=cfg.ngram_max, seed=cfg.embed_seed,
        )
    return embed.load_vectors(
        path, buckets=cfg.ngram_buckets, n_min=cfg.ngram_min,
        n_max=cfg.ngram_max, seed=cfg.embed_seed,
    )


def _tokenize_labeled(tweets) -> list[textprep.TokenizedTweet]:
    return [textprep.tokenize(textprep.normalize(t.text), source_id=t.id) for t in tweets]


def _label_names(task: str) -> tuple[str, ...]:
    return corpus.COARSE_LABELS if task == "coarse" else corpus.FINE_LABELS


def _cmd_prepare(args: argparse.Namespace) -> int:
    cfg = _config(args, tail=args.tail)
    tweets = corpus.load_labeled(args.labeled)
    split = corpus.split_tail(list(tweets), cfg.tail)
    os.makedirs(args.out, exist_ok=True)
    corpus.save_labeled(list(split.train), os.path.join(args.out, "train.tsv"))
    corpus.save_labeled(list(split.validation), os.path.join(args.out, "valid.tsv"))
    if args.tokenized:
        docs = [list(t.tokens) for t in _tokenize_labeled(tweets)]
        corpus.save_token_lines(docs, args.tokenized)
    print(f"train {len(split.train)} validation {len(split.validation)}")
    return 0


def _cmd_lda_train(args: argparse.Namespace) -> int:
    cfg = _config(
        args, k_topics=args.k, lda_iterations=args.iters,
        lda_alpha=args.alpha, lda_beta=args.beta,
    )
    docs = corpus.load_token_lines(args.corpus)
    if not docs:
        raise DataError(f"{args.corpus}: no documents")
    model = lda.train_gibbs(
        docs, k=cfg.k_topics, alpha=cfg.lda_alpha or None, beta=cfg.lda_beta,
        iterations=cfg.lda_iterations, seed=cfg.seed,
    )
    lda.save_model(model, args.out)
    log = logging.getLogger("tweetxfer.cli")
    for t in range(model.k):
        log.info("topic %d: %s", t, " ".join(lda.top_words(model, t, 8)))
    print(f"trained {model.k} topics on {len(docs)} documents")
    return 0


def _cmd_cluster_users(args: argparse.Namespace) -> int:
    cfg = _config(
        args, k_users=args.k, lda_iterations=args.iters,
        min_mentions=args.min_mentions, min_user_freq=args.min_user_freq,
    )
    if args.raw:
        tweets = corpus.deduplicate(corpus.load_raw(args.raw))
        lists = corpus.extract_mention_lists(
            tweets, min_mentions=cfg.min_mentions, min_user_freq=cfg.min_user_freq
        )
    else:
        lists = corpus.load_token_lines(args.mentions)
    if not lists:
        raise DataError("no usable mention lists after filtering")
    clusters = lda.cluster_users(
        lists, k=cfg.k_users, alpha=cfg.lda_alpha or None, beta=cfg.lda_beta,
        iterations=cfg.lda_iterations, seed=cfg.seed,
    )
    lda.save_clusters(clusters, args.out)
    print(f"clustered {len(clusters.cluster_of)} users into {clusters.k} groups")
    return 0


def _cmd_pretrain(args: argparse.Namespace) -> int:
    cfg = _config(args, pretrain_epochs=args.epochs, pretrain_batch=args.batch)
    table = _load_table(args.vectors, cfg)
    if args.task == "category":
        task = transfer.build_category_task(transfer.load_comments(args.corpus))
    else:
        tweets = corpus.deduplicate(corpus.load_raw(args.corpus))
        if args.task == "emoji":
            task = transfer.build_emoji_task(tweets)
        else:
            if not args.lda:
                raise UsageError("--lda is required for the topic task")
            model = lda.load_model(args.lda)
            task = transfer.build_topic_task(
                tweets, model, textprep.load_stopwords(),
                infer_iterations=cfg.infer_iterations, seed=cfg.seed,
            )
    fresh = net.init_params(
        n_classes=len(task.label_space), cluster_width=cfg.k_users + 1,
        seed=cfg.seed, embed_dim=table.dim, hidden=cfg.lstm_units,
        filters=cfg.filters, dense=cfg.dense_units, kernels=cfg.kernel_sizes,
        leaky_slope=cfg.leaky_slope,
    )
    params = transfer.pretrain(
        task, table, cluster_width=cfg.k_users + 1, seed=cfg.seed,
        epochs=cfg.pretrain_epochs, batch_size=cfg.pretrain_batch,
        lr=cfg.lr, dropout=cfg.dropout, max_len=cfg.max_len, params=fresh,
    )
    net.save_checkpoint(args.out, params)
    print(
        f"pretrained {args.task} on {len(task.examples)} examples, "
        f"{len(task.label_space)} labels"
    )
    return 0


def _check_compat(params: net.NetworkParams, table: embed.EmbeddingTable, width: int) -> None:
    if params.embed_dim != table.dim:
        raise DataError(
            f"checkpoint expects {params.embed_dim}-dim embeddings, vectors give {table.dim}"
        )
    if params.cluster_width != width:
        raise DataError(
            f"checkpoint has cluster width {params.cluster_width}, run would use {width}"
        )


def _cmd_finetune(args: argparse.Namespace) -> int:
    cfg = _config(args, finetune_epochs=args.epochs, finetune_batch=args.batch)
    table = _load_table(args.vectors, cfg)
    clusters = lda.load_clusters(args.clusters) if args.clusters else None
    width = clusters.k + 1 if clusters else cfg.k_users + 1
    n_classes = len(_label_names(args.task))
    if args.ckpt.lower() == "none":
        params = net.init_params(
            n_classes, width, seed=cfg.seed, embed_dim=table.dim,
            hidden=cfg.lstm_units, filters=cfg.filters, dense=cfg.dense_units,
            kernels=cfg.kernel_sizes, leaky_slope=cfg.leaky_slope,
        )
    else:
        base, _ = net.load_checkpoint(args.ckpt)
        _check_compat(base, table, width)
        params = transfer.replace_head(base, n_classes, seed=cfg.seed)
    train = transfer.encode_labeled(
        corpus.load_labeled(args.train), args.task, table, clusters, width
    )
    valid = transfer.encode_labeled(
        corpus.load_labeled(args.valid), args.task, table, clusters, width
    )
    schedule = transfer.make_schedule(args.strategy, cfg.finetune_epochs)
    metric = "binary_f1" if args.task == "coarse" else "macro_f1"
    result = transfer.finetune(
        params, schedule, train, valid, metric=metric, seed=cfg.seed,
        batch_size=cfg.finetune_batch, lr=cfg.lr, dropout=cfg.dropout,
        max_len=cfg.max_len,
    )
    net.save_checkpoint(args.out, result.params)
    preds = transfer.predict_dataset(result.params, valid, max_len=cfg.max_len)
    final = transfer.metric_fn(metric, result.params.n_classes)(preds, valid.labels)
    print(f"{metric} {final:.4f}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.runs is not None and args.runs != len(args.ckpt):
        raise UsageError(
            f"--runs {args.runs} disagrees with {len(args.ckpt)} checkpoint paths"
        )
    table = _load_table(args.vectors, cfg)
    clusters = lda.load_clusters(args.clusters) if args.clusters else None
    data = corpus.load_labeled(args.data)
    names = _label_names(args.task)
    reports = []
    first_preds: list[str] | None = None
    first_golds: list[str] = []
    for path in args.ckpt:
        params, _ = net.load_checkpoint(path)
        if params.n_classes != len(names):
            raise DataError(
                f"{path}: checkpoint has {params.n_classes} classes, "
                f"task {args.task} needs {len(names)}"
            )
        width = params.cluster_width
        if clusters is not None and clusters.k + 1 != width:
            raise DataError(
                f"{path}: checkpoint cluster width {width} does not fit "
                f"k={clusters.k} clusters"
            )
        encoded = transfer.encode_labeled(data, args.task, table, clusters, width)
        preds = transfer.predict_dataset(params, encoded, max_len=cfg.max_len)
        pred_names = [names[p] for p in preds]
        gold_names = [names[g] for g in encoded.labels]
        if args.task == "coarse":
            reports.append(evalkit.binary_metrics(pred_names, gold_names, positive="offense"))
        else:
            reports.append(evalkit.macro_metrics(pred_names, gold_names, classes=list(names)))
        if first_preds is None:
            first_preds = pred_names
            first_golds = gold_names
    combined = evalkit.aggregate_runs(reports)
    text = evalkit.format_report(combined, runs=len(reports))
    sys.stdout.write(text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.errors:
        # Error listing comes from the first checkpoint's predictions.
        positive = "offense" if args.task == "coarse" else names[0]
        errs = evalkit.error_report(
            first_preds, first_golds,
            [(t.text, g, p) for t, g, p in zip(data, first_golds, first_preds)],
            positive=positive,
        )
        with open(args.errors, "w", encoding="utf-8") as fh:
            fh.write("type\tgold\tpred\ttext\n")
            for text_, gold, pred in errs.false_positives:
                fh.write(f"fp\t{gold}\t{pred}\t{corpus.escape_text(text_)}\n")
            for text_, gold, pred in errs.false_negatives:
                fh.write(f"fn\t{gold}\t{pred}\t{corpus.escape_text(text_)}\n")
        print(f"errors fp {errs.fp_share:.1f}% fn {errs.fn_share:.1f}%")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    cfg = _config(
        args, baseline_l2=args.l2, baseline_epochs=args.epochs, baseline_lr=args.lr
    )
    table = _load_table(args.vectors, cfg)
    train = corpus.load_labeled(args.train)
    valid = corpus.load_labeled(args.valid)
    names = _label_names(args.task)
    pick = (lambda t: t.coarse) if args.task == "coarse" else (lambda t: t.fine)
    tok_train = _tokenize_labeled(train)
    tok_valid = _tokenize_labeled(valid)
    idf = embed.compute_idf(tok_train)
    model = baseline.train_linear(
        baseline.featurize(tok_train, table, idf),
        [pick(t) for t in train],
        l2=cfg.baseline_l2, epochs=cfg.baseline_epochs, lr=cfg.baseline_lr,
        seed=cfg.seed,
    )
    preds = baseline.predict_many(model, baseline.featurize(tok_valid, table, idf))
    golds = [pick(t) for t in valid]
    if args.task == "coarse":
        report = evalkit.binary_metrics(preds, golds, positive="offense")
    else:
        report = evalkit.macro_metrics(preds, golds, classes=list(names))
    sys.stdout.write(evalkit.format_report(report))
    if args.top_terms:
        ranked = baseline.top_terms(tok_train, [pick(t) for t in train], idf, n=args.top_terms)
        for label in sorted(ranked, key=str):
            print(f"top[{label}] " + " ".join(ranked[label]))
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    cfg = _config(args)
    params = net.init_params(
        n_classes=3, cluster_width=5, seed=cfg.seed,
        hidden=cfg.lstm_units, filters=cfg.filters, dense=cfg.dense_units,
        kernels=cfg.kernel_sizes, leaky_slope=cfg.leaky_slope,
        embed_dim=cfg.embed_dim,
    )
    batch = fixtures.toy_batch(
        n_classes=3, cluster_width=5, embed_dim=cfg.embed_dim, seed=cfg.seed
    )
    err = net.gradient_check(
        params, batch, eps=args.eps, samples_per_array=args.samples, seed=cfg.seed
    )
    print(f"max relative error {err:.3e}")
    if err < args.tolerance:
        return 0
    print(f"exceeds tolerance {args.tolerance:.1e}", file=sys.stderr)
    return 2


def _cmd_make_fixtures(args: argparse.Namespace) -> int:
    cfg = _config(args)
    paths = fixtures.write_all(args.out, seed=cfg.seed)
    print(f"wrote {len(paths)} fixture files to {args.out}")
    return 0


def _build_parser() -> _Parser:
    common = _common_flags()
    parser = _Parser(prog="tweetxfer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", parents=[common], help="split labeled data")
    p.add_argument("--labeled", required=True)
    p.add_argument("--out", required=True, help="directory for train.tsv / valid.tsv")
    p.add_argument("--tail", type=int, help="validation size, taken from the end")
    p.add_argument("--tokenized", help="also write a tokenized corpus file")
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("lda-train", parents=[common], help="train the topic model")
    p.add_argument("--corpus", required=True, help="tokenized corpus, one doc per line")
    p.add_argument("--k", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lda_train)

    p = sub.add_parser("cluster-users", parents=[common], help="cluster co-mentioned users")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mentions", help="mention lists, one space-joined list per line")
    src.add_argument("--raw", help="raw tweets JSONL; lists are extracted first")
    p.add_argument("--k", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--min-mentions", type=int, dest="min_mentions")
    p.add_argument("--min-user-freq", type=int, dest="min_user_freq")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cluster_users)

    p = sub.add_parser("pretrain", parents=[common], help="train on an auxiliary task")
    p.add_argument("--task", required=True, choices=("category", "emoji", "topic"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--lda", help="topic model (topic task only)")
    p.add_argument("--vectors")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pretrain)

    p = sub.add_parser("finetune", parents=[common], help="train on labeled tweets")
    p.add_argument("--ckpt", required=True, help="pretrained checkpoint, or 'none'")
    p.add_argument("--strategy", required=True, choices=transfer.STRATEGIES)
    p.add_argument("--task", required=True, choices=("coarse", "fine"))
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--clusters")
    p.add_argument("--vectors")
    p.add_argument("--epochs", type=int, help="per-phase epoch budget")
    p.add_argument("--batch", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("evaluate", parents=[common], help="score checkpoints")
    p.add_argument("--ckpt", required=True, nargs="+")
    p.add_argument("--data", required=True)
    p.add_argument("--task", required=True, choices=("coarse", "fine"))
    p.add_argument("--clusters")
    p.add_argument("--vectors")
    p.add_argument("--runs", type=int, help="must equal the checkpoint count")
    p.add_argument("--report", help="write the table here as well")
    p.add_argument("--errors", help="write misclassified tweets here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("baseline", parents=[common], help="linear reference model")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--task", required=True, choices=("coarse", "fine"))
    p.add_argument("--vectors")
    p.add_argument("--l2", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--top-terms", type=int, dest="top_terms", help="print N top tokens per class")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("gradcheck", parents=[common], help="verify backward pass numerically")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--samples", type=int, default=8, help="indices checked per array")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("make-fixtures", parents=[common], help="write synthetic corpora")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
