"""Pre-training tasks, fine-tuning loops and gradual unfreezing.

A pre-training task is a list of (tokenized tweet, label index) pairs
plus its label space.  Three builders exist: moderated-comment
categories, emoji prediction (the emoji is removed from the text it
labels), and LDA topic ids.  Fine-tuning consumes a freeze schedule: a
sequence of phases, each naming the trainable layer groups, an epoch
budget, and whether the phase keeps its best-validation snapshot.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import corpus, net, textprep
from .corpus import LabeledTweet, RawTweet
from .embed import EmbeddingTable
from .errors import DataError
from .evalkit import binary_metrics, macro_metrics
from .lda import LdaModel, UserClusters, majority_topic
from .textprep import TokenizedTweet

log = logging.getLogger(__name__)

STRATEGIES = ("none", "gu", "bu", "tu")


@dataclass(frozen=True)
class PretrainTask:
    kind: str
    examples: tuple[tuple[TokenizedTweet, int], ...]
    label_space: tuple[str, ...]


@dataclass(frozen=True)
class CommentAnnotation:
    inappropriate: bool
    discriminating: bool


@dataclass(frozen=True)
class CommentRecord:
    id: str
    text: str
    annotations: tuple[CommentAnnotation, ...]


def load_comments(path: str) -> list[CommentRecord]:
    """JSON-lines moderated comments with per-annotator boolean flags."""
    records: list[CommentRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: bad JSON ({exc})") from None
            try:
                annotations = tuple(
                    CommentAnnotation(
                        inappropriate=bool(a["inappropriate"]),
                        discriminating=bool(a["discriminating"]),
                    )
                    for a in rec["annotations"]
                )
                records.append(
                    CommentRecord(id=str(rec["id"]), text=rec["text"], annotations=annotations)
                )
            except (KeyError, TypeError):
                raise DataError(f"{path}:{lineno}: malformed comment record") from None
    return records


def _tokenized(text: str, source_id: str) -> TokenizedTweet:
    return textprep.tokenize(textprep.normalize(text), source_id=source_id)


def build_category_task(comments: list[CommentRecord]) -> PretrainTask:
    """Binary offense task from moderation flags.

    A comment is offensive when a strict majority of its annotators set
    either flag.  Comments without annotators are an error.
    """
    examples = []
    for rec in comments:
        n = len(rec.annotations)
        if n == 0:
            raise DataError(f"comment {rec.id!r} has no annotations")
        inappropriate = sum(a.inappropriate for a in rec.annotations)
        discriminating = sum(a.discriminating for a in rec.annotations)
        offensive = 2 * inappropriate > n or 2 * discriminating > n
        examples.append((_tokenized(rec.text, rec.id), 0 if offensive else 1))
    return PretrainTask(
        kind="category", examples=tuple(examples), label_space=("offense", "other")
    )


def build_emoji_task(tweets: list[RawTweet]) -> PretrainTask:
    """Predict which emoji a tweet contained, from its emoji-free text.

    Tweets without emoji are skipped.  A tweet with d distinct emoji
    symbols becomes d examples sharing one stripped token sequence; the
    label space is the sorted set of all emoji seen.
    """
    label_space = tuple(sorted({e for t in tweets for e in t.emojis}))
    index = {e: i for i, e in enumerate(label_space)}
    examples = []
    for t in tweets:
        if not t.emojis:
            continue
        tokens = _tokenized(textprep.remove_emoji(t.text), t.id)
        for e in t.emojis:
            examples.append((tokens, index[e]))
    return PretrainTask(kind="emoji", examples=tuple(examples), label_space=label_space)


def build_topic_task(
    tweets: list[RawTweet],
    model: LdaModel,
    stopwords: frozenset[str],
    infer_iterations: int = 50,
    min_tokens: int = 2,
    seed: int = 0,
) -> PretrainTask:
    """Label tweets with their majority LDA topic.

    Tweets with fewer than ``min_tokens`` meaningful tokens are skipped:
    a topic inferred from one token is noise.
    """
    examples = []
    for t in tweets:
        tokens = _tokenized(t.text, t.id)
        meaningful = textprep.meaningful_tokens(tokens, stopwords)
        if len(meaningful) < min_tokens:
            continue
        label = majority_topic(model, meaningful, iterations=infer_iterations, seed=seed)
        examples.append((tokens, label))
    return PretrainTask(
        kind="topic",
        examples=tuple(examples),
        label_space=tuple(str(i) for i in range(model.k)),
    )


@dataclass(frozen=True)
class EncodedDataset:
    """Network-ready inputs: one embedding matrix per example."""

    sequences: tuple[np.ndarray, ...]
    cluster_features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.sequences)


def cluster_features_for(
    mentions: tuple[str, ...] | list[str],
    clusters: UserClusters | None,
    width: int,
) -> np.ndarray:
    """Multi-hot over clusters, last slot for users without a cluster."""
    vec = np.zeros(width)
    if clusters is None or width == 0:
        return vec
    for user in mentions:
        c = clusters.cluster_of.get(user)
        vec[c if c is not None else width - 1] = 1.0
    return vec


def encode_task(task: PretrainTask, table: EmbeddingTable, cluster_width: int) -> EncodedDataset:
    """Embed a pre-training task; cluster features stay all-zero."""
    if not task.examples:
        raise DataError(f"{task.kind} task has no examples")
    sequences = tuple(table.embed_tokens(t.tokens) for t, _ in task.examples)
    labels = np.array([y for _, y in task.examples], dtype=np.int64)
    return EncodedDataset(
        sequences=sequences,
        cluster_features=np.zeros((len(sequences), cluster_width)),
        labels=labels,
    )


def encode_labeled(
    tweets: list[LabeledTweet] | tuple[LabeledTweet, ...],
    task: str,
    table: EmbeddingTable,
    clusters: UserClusters | None = None,
    cluster_width: int = 0,
) -> EncodedDataset:
    """Embed labeled tweets for the coarse or fine task."""
    if task == "coarse":
        space = corpus.COARSE_LABELS
        pick = lambda t: t.coarse
    elif task == "fine":
        space = corpus.FINE_LABELS
        pick = lambda t: t.fine
    else:
        raise ValueError(f"task must be 'coarse' or 'fine', got {task!r}")
    if not tweets:
        raise DataError("no labeled tweets to encode")
    index = {label: i for i, label in enumerate(space)}
    sequences = []
    feats = []
    labels = []
    for t in tweets:
        tokens = _tokenized(t.text, t.id)
        sequences.append(table.embed_tokens(tokens.tokens))
        feats.append(
            cluster_features_for(corpus.extract_mentions(t.text), clusters, cluster_width)
        )
        labels.append(index[pick(t)])
    return EncodedDataset(
        sequences=tuple(sequences),
        cluster_features=np.array(feats) if feats else np.zeros((0, cluster_width)),
        labels=np.array(labels, dtype=np.int64),
    )


def _batches(n: int, batch_size: int, order: np.ndarray):
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _batch_from(data: EncodedDataset, idx: np.ndarray, max_len: int) -> net.Batch:
    return net.make_batch(
        [data.sequences[i] for i in idx],
        data.cluster_features[idx],
        data.labels[idx],
        max_len=max_len,
    )


def _run_epoch(
    params: net.NetworkParams,
    state: net.OptimizerState,
    data: EncodedDataset,
    freeze: net.FreezeMask,
    batch_size: int,
    rng: np.random.Generator,
    dropout: float,
    max_len: int,
) -> float:
    order = rng.permutation(len(data))
    total = 0.0
    count = 0
    for idx in _batches(len(data), batch_size, order):
        batch = _batch_from(data, idx, max_len)
        dropout_seed = int(rng.integers(0, 2**63))
        probs, cache = net.forward(
            params, batch, mode="train", dropout_seed=dropout_seed, dropout=dropout
        )
        grads = net.backward(params, batch, cache, freeze)
        net.step(params, grads, state, freeze)
        total += net.loss(probs, batch.labels) * len(idx)
        count += len(idx)
    return total / count


def predict_dataset(
    params: net.NetworkParams, data: EncodedDataset, batch_size: int = 256, max_len: int = 100
) -> np.ndarray:
    preds = np.empty(len(data), dtype=np.int64)
    order = np.arange(len(data))
    for idx in _batches(len(data), batch_size, order):
        preds[idx] = net.predict(params, _batch_from(data, idx, max_len))
    return preds


def pretrain(
    task: PretrainTask,
    table: EmbeddingTable,
    cluster_width: int,
    seed: int = 0,
    epochs: int = 10,
    batch_size: int = 128,
    lr: float = 0.002,
    dropout: float = 0.5,
    max_len: int = 100,
    params: net.NetworkParams | None = None,
) -> net.NetworkParams:
    """Train a fresh network on a pre-training task, all layers live.

    The head width equals the task's label space.  Everything random
    (init, shuffling, dropout) descends from ``seed``.
    """
    data = encode_task(task, table, cluster_width)
    if params is None:
        params = net.init_params(
            n_classes=len(task.label_space), cluster_width=cluster_width, seed=seed
        )
    elif params.n_classes != len(task.label_space):
        raise ValueError(
            f"network head has {params.n_classes} classes, task needs {len(task.label_space)}"
        )
    state = net.OptimizerState.for_params(params, lr=lr)
    rng = np.random.default_rng([seed, 1])
    for epoch in range(epochs):
        mean_loss = _run_epoch(
            params, state, data, net.ALL_LAYERS, batch_size, rng, dropout, max_len
        )
        log.info("pretrain %s epoch %d/%d loss %.4f", task.kind, epoch + 1, epochs, mean_loss)
    return params


def replace_head(params: net.NetworkParams, n_classes: int, seed: int = 0) -> net.NetworkParams:
    """Copy params with a re-initialized prediction layer of a new width.

    Layers 1-3 are copied bit-exactly; only the head is redrawn.
    """
    if n_classes < 2:
        raise ValueError(f"n_classes must be at least 2, got {n_classes}")
    rng = np.random.default_rng(seed)
    out = params.copy()
    out.n_classes = n_classes
    out.arrays["out_W"] = _glorot_like(rng, params.dense, n_classes)
    out.arrays["out_b"] = np.zeros(n_classes)
    return out


def _glorot_like(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


@dataclass(frozen=True)
class Phase:
    trainable: frozenset[int]
    max_epochs: int
    select_best: bool


@dataclass(frozen=True)
class FreezeSchedule:
    strategy: str
    phases: tuple[Phase, ...]


def make_schedule(strategy: str, max_epochs: int = 50) -> FreezeSchedule:
    """Build the phase list for an unfreezing strategy.

    none: all layers at once.  gu: start from the head and unfreeze one
    more group per epoch, then train everything.  bu: one group at a
    time, head first then input-side upward.  tu: one group at a time,
    output-side downward.  Single-group phases and the final all-layer
    phase each keep their best-validation snapshot.
    """
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    if max_epochs < 1:
        raise ValueError(f"max_epochs must be positive, got {max_epochs}")
    fs = frozenset
    if strategy == "none":
        phases = [Phase(fs({1, 2, 3, 4}), max_epochs, True)]
    elif strategy == "gu":
        if max_epochs < 4:
            raise ValueError("gradual unfreezing needs max_epochs >= 4")
        phases = [
            Phase(fs({4}), 1, False),
            Phase(fs({4, 3}), 1, False),
            Phase(fs({4, 3, 2}), 1, False),
            Phase(fs({4, 3, 2, 1}), max_epochs - 3, True),
        ]
    elif strategy == "bu":
        groups = [4, 1, 2, 3]
        phases = [Phase(fs({g}), max_epochs, True) for g in groups]
        phases.append(Phase(fs({1, 2, 3, 4}), max_epochs, True))
    else:  # tu
        groups = [4, 3, 2, 1]
        phases = [Phase(fs({g}), max_epochs, True) for g in groups]
        phases.append(Phase(fs({1, 2, 3, 4}), max_epochs, True))
    return FreezeSchedule(strategy=strategy, phases=tuple(phases))


@dataclass
class FinetuneResult:
    params: net.NetworkParams
    history: list[list[float]]  # validation metric per epoch, per phase
    best_scores: list[float]  # best metric reached in each phase


def metric_fn(metric: str, n_classes: int):
    if metric == "binary_f1":
        return lambda preds, golds: binary_metrics(list(preds), list(golds), positive=0).averaged.f1
    if metric == "macro_f1":
        classes = list(range(n_classes))
        return lambda preds, golds: macro_metrics(list(preds), list(golds), classes).averaged.f1
    raise ValueError(f"unknown metric {metric!r}")


def finetune(
    params: net.NetworkParams,
    schedule: FreezeSchedule,
    train: EncodedDataset,
    validation: EncodedDataset,
    metric: str = "binary_f1",
    seed: int = 0,
    batch_size: int = 32,
    lr: float = 0.002,
    dropout: float = 0.5,
    max_len: int = 100,
) -> FinetuneResult:
    """Run a freeze schedule over labeled data.

    The optimizer restarts at each phase.  A best-keeping phase ends by
    restoring the epoch snapshot with the highest validation metric
    (earliest wins on ties); other phases keep their last state.
    """
    if not len(train) or not len(validation):
        raise DataError("finetuning needs non-empty train and validation sets")
    score = metric_fn(metric, params.n_classes)
    rng = np.random.default_rng([seed, 2])
    history: list[list[float]] = []
    best_scores: list[float] = []
    for phase in schedule.phases:
        state = net.OptimizerState.for_params(params, lr=lr)
        phase_history: list[float] = []
        best_metric = -np.inf
        best_snapshot = None
        for epoch in range(phase.max_epochs):
            mean_loss = _run_epoch(
                params, state, train, net.FreezeMask(phase.trainable),
                batch_size, rng, dropout, max_len,
            )
            preds = predict_dataset(params, validation, max_len=max_len)
            value = score(preds, validation.labels)
            phase_history.append(value)
            log.info(
                "finetune %s layers %s epoch %d/%d loss %.4f %s %.4f",
                schedule.strategy, sorted(phase.trainable), epoch + 1,
                phase.max_epochs, mean_loss, metric, value,
            )
            if phase.select_best and value > best_metric:
                best_metric = value
                best_snapshot = {n: a.copy() for n, a in params.arrays.items()}
        if phase.select_best and best_snapshot is not None:
            for n in params.arrays:
                params.arrays[n] = best_snapshot[n]
        history.append(phase_history)
        best_scores.append(max(phase_history) if phase_history else -np.inf)
    return FinetuneResult(params=params, history=history, best_scores=best_scores)
