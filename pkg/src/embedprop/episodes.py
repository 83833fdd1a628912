"""Episodic evaluation: dataset model, n-way k-shot sampler, per-episode
inference, pseudo-label semi-supervised inference, and the accuracy harness.

Episode node order is always support rows (class-major), then query rows
(class-major), then unlabeled rows. Episode class indices follow the sorted
class identifiers. Every episode draws its own RNG stream from
(master seed, episode index), so results never depend on execution order.
"""

import enum
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classify
from .errors import (
    InsufficientClassCount,
    InsufficientClassSize,
    InvariantViolation,
    NoUnlabeledPool,
)
from .graph import GraphConfig
from .propagation import PropagationMode, propagate_embeddings

SPLIT_TAGS = ("base", "val", "novel")

_DEFAULT_MAX_WORKERS = 8


class Classifier(enum.Enum):
    LABEL_PROP = "lp"
    PROTOTYPICAL = "proto"


class SslMode(enum.Enum):
    OFF = "off"
    PSEUDO_LABEL = "pseudo"


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable store of N embedding rows with class labels and optional split tags."""

    embeddings: np.ndarray
    labels: tuple[str, ...]
    split: tuple[str | None, ...] | None = None

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[0] < 1 or emb.shape[1] < 1:
            raise InvariantViolation(f"embeddings must be (N, m) with N, m >= 1, got {emb.shape}")
        if not np.isfinite(emb).all():
            raise InvariantViolation("embeddings contain NaN or Inf entries")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != emb.shape[0]:
            raise InvariantViolation(f"{len(labels)} labels for {emb.shape[0]} rows")
        split = self.split
        if split is not None:
            split = tuple(None if s in (None, "") else str(s) for s in split)
            if len(split) != emb.shape[0]:
                raise InvariantViolation(f"{len(split)} split tags for {emb.shape[0]} rows")
            bad = {s for s in split if s is not None and s not in SPLIT_TAGS}
            if bad:
                raise InvariantViolation(f"unknown split tags {sorted(bad)}")
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "split", split)

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def classes(self) -> tuple[str, ...]:
        """Distinct class identifiers, sorted."""
        return tuple(sorted(self.class_rows().keys()))

    def class_rows(self) -> dict[str, np.ndarray]:
        """Map class identifier -> ascending row indices (cached)."""
        cached = getattr(self, "_class_rows", None)
        if cached is None:
            cached = {}
            for i, lab in enumerate(self.labels):
                cached.setdefault(lab, []).append(i)
            cached = {lab: np.asarray(rows, dtype=np.intp) for lab, rows in cached.items()}
            object.__setattr__(self, "_class_rows", cached)
        return cached

    def filter_split(self, tag: str) -> "EmbeddingSet":
        """Rows whose split tag equals `tag`, as a new set."""
        if self.split is None:
            raise InvariantViolation("set has no split tags")
        keep = [i for i, s in enumerate(self.split) if s == tag]
        if not keep:
            raise InvariantViolation(f"no rows with split {tag!r}")
        return EmbeddingSet(
            embeddings=self.embeddings[keep],
            labels=tuple(self.labels[i] for i in keep),
            split=tuple(self.split[i] for i in keep),
        )


@dataclass(frozen=True)
class Episode:
    """Index sets for one sampled task, relative to the parent EmbeddingSet."""

    classes: tuple[str, ...]
    support: np.ndarray  # (n_way, k) row indices
    query: np.ndarray  # (n_way, q) row indices
    unlabeled: np.ndarray  # (u,) row indices
    labeled_mask: np.ndarray  # (n_way, k) bool

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp)
        query = np.asarray(self.query, dtype=np.intp)
        unlabeled = np.asarray(self.unlabeled, dtype=np.intp).reshape(-1)
        mask = np.asarray(self.labeled_mask, dtype=bool)
        n_way = len(self.classes)
        if support.ndim != 2 or support.shape[0] != n_way or support.shape[1] < 1:
            raise InvariantViolation(f"support must be ({n_way}, k), got {support.shape}")
        if query.ndim != 2 or query.shape[0] != n_way or query.shape[1] < 1:
            raise InvariantViolation(f"query must be ({n_way}, q), got {query.shape}")
        if mask.shape != support.shape:
            raise InvariantViolation("labeled_mask must match support shape")
        combined = np.concatenate([support.ravel(), query.ravel(), unlabeled])
        if len(np.unique(combined)) != combined.size:
            raise InvariantViolation("support, query, and unlabeled indices overlap")
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "query", query)
        object.__setattr__(self, "unlabeled", unlabeled)
        object.__setattr__(self, "labeled_mask", mask)

    @property
    def n_way(self) -> int:
        return len(self.classes)

    @property
    def k_shot(self) -> int:
        return self.support.shape[1]

    @property
    def q_queries(self) -> int:
        return self.query.shape[1]

    @property
    def n_support(self) -> int:
        return self.support.size

    @property
    def n_query(self) -> int:
        return self.query.size

    @property
    def n_unlabeled(self) -> int:
        return self.unlabeled.size

    def node_indices(self) -> np.ndarray:
        """Row indices in episode node order: supports, queries, unlabeled."""
        return np.concatenate([self.support.ravel(), self.query.ravel(), self.unlabeled])


@dataclass(frozen=True)
class EvalConfig:
    """Episode layout plus pipeline configuration for the harness."""

    n_way: int = 5
    k_shot: int = 1
    q_queries: int = 15
    u_unlabeled: int = 0
    labeled_fraction: float = 1.0
    episodes: int = 1000
    graph: GraphConfig = field(default_factory=GraphConfig)
    mode: PropagationMode = PropagationMode.FULL
    classifier: Classifier = Classifier.LABEL_PROP
    ssl: SslMode = SslMode.OFF
    seed: int = 42

    def __post_init__(self):
        if self.n_way < 2:
            raise ValueError(f"n_way must be >= 2, got {self.n_way}")
        if self.k_shot < 1 or self.q_queries < 1:
            raise ValueError("k_shot and q_queries must be >= 1")
        if self.u_unlabeled < 0:
            raise ValueError(f"u_unlabeled must be >= 0, got {self.u_unlabeled}")
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise ValueError(f"labeled_fraction must lie in (0, 1], got {self.labeled_fraction}")
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class EvalReport:
    """Per-episode accuracies with their mean and 95% CI half-width."""

    accuracies: tuple[float, ...]
    mean: float
    ci95: float
    config: EvalConfig
    seed: int
    wall_ms: int


def labeled_count(labeled_fraction: float, k_shot: int) -> int:
    """Supports labeled per class: ceil(fraction * k), guarded against float dust."""
    return math.ceil(labeled_fraction * k_shot - 1e-9)


def episode_rng(seed: int, episode_index: int) -> np.random.Generator:
    """Independent RNG stream for one episode, keyed by (master seed, index)."""
    return np.random.default_rng([seed, episode_index])


def sample_episode(data: EmbeddingSet, cfg: EvalConfig, episode_index: int) -> Episode:
    """Draw one n-way k-shot episode.

    Classes are sampled uniformly without replacement among classes large
    enough for the layout (k + q + per-class unlabeled quota rows). The
    unlabeled pool is drawn class-balanced from the episode's own classes.
    Deterministic given (cfg.seed, episode_index).
    """
    rng = episode_rng(cfg.seed, episode_index)
    by_class = data.class_rows()
    all_classes = sorted(by_class.keys())
    if len(all_classes) < cfg.n_way:
        raise InsufficientClassCount(
            f"need {cfg.n_way} classes, dataset has {len(all_classes)}"
        )
    max_need = cfg.k_shot + cfg.q_queries + math.ceil(cfg.u_unlabeled / cfg.n_way)
    eligible = [c for c in all_classes if by_class[c].size >= max_need]
    if len(eligible) < cfg.n_way:
        short = min(
            (c for c in all_classes if c not in set(eligible)),
            key=lambda c: by_class[c].size,
        )
        raise InsufficientClassSize(
            f"only {len(eligible)} classes have >= {max_need} rows "
            f"(e.g. class {short!r} has {by_class[short].size}); need {cfg.n_way}"
        )

    picked = rng.choice(len(eligible), size=cfg.n_way, replace=False)
    episode_classes = sorted(eligible[i] for i in picked)

    base, extra = divmod(cfg.u_unlabeled, cfg.n_way)
    support = np.empty((cfg.n_way, cfg.k_shot), dtype=np.intp)
    query = np.empty((cfg.n_way, cfg.q_queries), dtype=np.intp)
    unlabeled: list[np.ndarray] = []
    for ci, cls in enumerate(episode_classes):
        u_c = base + (1 if ci < extra else 0)
        need = cfg.k_shot + cfg.q_queries + u_c
        rows = rng.choice(by_class[cls], size=need, replace=False)
        support[ci] = rows[: cfg.k_shot]
        query[ci] = rows[cfg.k_shot : cfg.k_shot + cfg.q_queries]
        unlabeled.append(rows[cfg.k_shot + cfg.q_queries :])

    n_labeled = labeled_count(cfg.labeled_fraction, cfg.k_shot)
    mask = np.zeros((cfg.n_way, cfg.k_shot), dtype=bool)
    for ci in range(cfg.n_way):
        mask[ci, rng.choice(cfg.k_shot, size=n_labeled, replace=False)] = True

    return Episode(
        classes=tuple(episode_classes),
        support=support,
        query=query,
        unlabeled=np.concatenate(unlabeled) if unlabeled else np.empty(0, dtype=np.intp),
        labeled_mask=mask,
    )


def _labeled_support_refs(ep: Episode) -> tuple[np.ndarray, np.ndarray]:
    """(node positions, class indices) of the labeled support rows."""
    flat_mask = ep.labeled_mask.ravel()
    positions = np.flatnonzero(flat_mask)
    class_of_support = np.repeat(np.arange(ep.n_way), ep.k_shot)
    return positions, class_of_support[positions]


def _classifier_scores(
    ztilde: np.ndarray,
    ref_rows: np.ndarray,
    ref_classes: np.ndarray,
    n_classes: int,
    cfg: EvalConfig,
) -> np.ndarray:
    """Score every row of `ztilde` against the labeled reference rows."""
    if cfg.classifier is Classifier.LABEL_PROP:
        y = classify.build_label_matrix(ztilde.shape[0], n_classes, ref_rows, ref_classes)
        return classify.label_propagation_scores(ztilde, y, cfg.graph)
    return classify.prototypical_scores(
        ztilde[ref_rows], ref_classes, ztilde, n_classes=n_classes
    )


def query_truth(ep: Episode) -> np.ndarray:
    """Episode class index of each query row, in node order."""
    return np.repeat(np.arange(ep.n_way), ep.q_queries)


def run_episode(
    data: EmbeddingSet, ep: Episode, cfg: EvalConfig
) -> tuple[np.ndarray, float, np.ndarray]:
    """Transductive inference on one episode.

    Stacks support, query, and unlabeled rows, propagates the embeddings per
    cfg.mode, scores all nodes with the configured classifier, and predicts
    the query rows.

    Returns (query predictions as episode class indices, query accuracy,
    score matrix over all nodes).
    """
    z = data.embeddings[ep.node_indices()]
    ztilde, _ = propagate_embeddings(z, cfg.graph, cfg.mode)
    ref_rows, ref_classes = _labeled_support_refs(ep)
    scores = _classifier_scores(ztilde, ref_rows, ref_classes, ep.n_way, cfg)
    q_lo = ep.n_support
    q_hi = q_lo + ep.n_query
    preds = classify.predict(scores[q_lo:q_hi])
    accuracy = float(np.mean(preds == query_truth(ep)))
    return preds, accuracy, scores


def ssl_predict(data: EmbeddingSet, ep: Episode, cfg: EvalConfig) -> np.ndarray:
    """Two-pass pseudo-label inference for the query rows.

    Pass 1 runs the standard pipeline and hard-argmax labels the pool (the
    episode's unlabeled rows plus any masked-out supports). Pass 2 treats the
    pseudo-labels as true support labels and reruns inference. Exactly two
    passes, no fixpoint iteration.
    """
    flat_mask = ep.labeled_mask.ravel()
    unlabeled_support = np.flatnonzero(~flat_mask)
    q_lo = ep.n_support
    q_hi = q_lo + ep.n_query
    pool = np.concatenate([unlabeled_support, np.arange(q_hi, q_hi + ep.n_unlabeled)])
    if pool.size == 0:
        raise NoUnlabeledPool("episode has no unlabeled rows and all supports are labeled")

    z = data.embeddings[ep.node_indices()]
    ztilde, _ = propagate_embeddings(z, cfg.graph, cfg.mode)
    ref_rows, ref_classes = _labeled_support_refs(ep)

    first = _classifier_scores(ztilde, ref_rows, ref_classes, ep.n_way, cfg)
    pseudo = classify.predict(first[pool])

    aug_rows = np.concatenate([ref_rows, pool])
    aug_classes = np.concatenate([ref_classes, pseudo])
    second = _classifier_scores(ztilde, aug_rows, aug_classes, ep.n_way, cfg)
    return classify.predict(second[q_lo:q_hi])


def confidence_interval95(accuracies) -> float:
    """Half-width 1.96 * s / sqrt(E) with s the sample standard deviation."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.size < 2:
        return 0.0
    return float(1.96 * acc.std(ddof=1) / math.sqrt(acc.size))


def _episode_accuracy(data: EmbeddingSet, cfg: EvalConfig, index: int) -> float:
    ep = sample_episode(data, cfg, index)
    if cfg.ssl is SslMode.PSEUDO_LABEL:
        preds = ssl_predict(data, ep, cfg)
        return float(np.mean(preds == query_truth(ep)))
    _, accuracy, _ = run_episode(data, ep, cfg)
    return accuracy


def thread_count() -> int:
    """Episode-level worker count; the EP_THREADS env var caps it."""
    raw = os.environ.get("EP_THREADS")
    if raw is None or raw == "":
        return max(1, min(os.cpu_count() or 1, _DEFAULT_MAX_WORKERS))
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"EP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"EP_THREADS must be a positive integer, got {raw!r}")
    return n


def evaluate(data: EmbeddingSet, cfg: EvalConfig) -> EvalReport:
    """Run cfg.episodes episodes and report mean accuracy with a 95% CI.

    Episodes are independent pure functions of (data, cfg, index), so the
    accuracy list is bit-identical regardless of the worker count.
    """
    start = time.perf_counter()
    indices = range(cfg.episodes)
    workers = thread_count()
    if workers == 1 or cfg.episodes == 1:
        accuracies = [_episode_accuracy(data, cfg, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            accuracies = list(pool.map(lambda i: _episode_accuracy(data, cfg, i), indices))
    wall_ms = int(round((time.perf_counter() - start) * 1000.0))
    return EvalReport(
        accuracies=tuple(accuracies),
        mean=float(np.mean(accuracies)),
        ci95=confidence_interval95(accuracies),
        config=cfg,
        seed=cfg.seed,
        wall_ms=wall_ms,
    )
