"""The candidate summarization systems and summary extraction.

Every ranker scores *all* sentences of a cluster and returns a total
order, so downstream aggregation always works with full rank vectors.
All rankers are pure functions of (cluster, config): reruns are
bit-identical and different clusters can be ranked concurrently.

Ties are broken by the smaller sentence index everywhere.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import DocumentCluster
from .features import cosine_similarity, tfidf_vectors

logger = logging.getLogger(__name__)

CANDIDATE_SYSTEMS = (
    "lexrank",
    "textrank",
    "centroid",
    "freqsum",
    "topicsum",
    "greedykl",
)

BUDGET_KINDS = ("words", "bytes")


@dataclass(frozen=True)
class LengthBudget:
    """Summary size cap: word count or UTF-8 byte count."""

    kind: str
    limit: int

    def __post_init__(self):
        if self.kind not in BUDGET_KINDS:
            raise ValueError(f"budget kind must be one of {BUDGET_KINDS}")
        if self.limit <= 0:
            raise ValueError("budget limit must be > 0")

    @classmethod
    def parse(cls, text: str) -> "LengthBudget":
        """Parse ``words:100`` / ``bytes:665``."""
        kind, sep, limit = text.partition(":")
        if not sep or not limit.lstrip("-").isdigit():
            raise ValueError(f"bad budget {text!r}, expected kind:limit")
        return cls(kind=kind, limit=int(limit))


@dataclass(frozen=True)
class SummarizerConfig:
    lexrank_threshold: float = 0.1
    damping: float = 0.85
    power_iter_tol: float = 1e-6
    power_iter_max: int = 200
    topic_llr_threshold: float = 10.83
    kl_smoothing_k: float | None = None  # None: 0.0005 * vocabulary size
    budget: LengthBudget = field(default_factory=lambda: LengthBudget("words", 100))

    def __post_init__(self):
        if self.lexrank_threshold < 0:
            raise ValueError("lexrank_threshold must be >= 0")
        if not 0 < self.damping < 1:
            raise ValueError("damping must be in (0, 1)")
        if self.power_iter_tol <= 0 or self.power_iter_max < 1:
            raise ValueError("bad power iteration settings")
        if self.topic_llr_threshold <= 0:
            raise ValueError("topic_llr_threshold must be > 0")
        if self.kl_smoothing_k is not None and self.kl_smoothing_k < 0:
            raise ValueError("kl_smoothing_k must be >= 0")


@dataclass(frozen=True)
class RankList:
    """Scores plus the derived permutation over a cluster's sentences.

    ``ranks[i]`` is the rank of sentence i (1 = best); higher score means
    smaller rank, ties go to the smaller sentence index.
    """

    system_id: str
    scores: tuple[float, ...]
    ranks: tuple[int, ...]

    def __post_init__(self):
        n = len(self.scores)
        if len(self.ranks) != n:
            raise ValueError("scores and ranks must have equal length")
        if sorted(self.ranks) != list(range(1, n + 1)):
            raise ValueError("ranks must be a permutation of 1..N")
        expected = sorted(range(n), key=lambda i: (-self.scores[i], i))
        if [self.ranks[i] - 1 for i in expected] != list(range(n)):
            raise ValueError("ranks inconsistent with scores")

    @classmethod
    def from_scores(cls, system_id: str, scores: Sequence[float]) -> "RankList":
        scores = tuple(float(s) for s in scores)
        if any(math.isnan(s) for s in scores):
            raise ValueError("scores must not contain NaN")
        order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
        ranks = [0] * len(scores)
        for position, idx in enumerate(order):
            ranks[idx] = position + 1
        return cls(system_id=system_id, scores=scores, ranks=tuple(ranks))

    def order(self) -> list[int]:
        """Sentence indices from best to worst."""
        inverse = [0] * len(self.ranks)
        for idx, rank in enumerate(self.ranks):
            inverse[rank - 1] = idx
        return inverse


@dataclass(frozen=True)
class Summary:
    """Extracted sentence indices in selection order, plus size tallies."""

    sentence_indices: tuple[int, ...]
    token_count: int
    byte_count: int


@dataclass(frozen=True)
class CandidateOutput:
    rank_list: RankList
    summary: Summary


def _uniform_ranklist(system_id: str, n: int) -> RankList:
    return RankList.from_scores(system_id, [1.0 / n] * n)


def _power_iteration(
    adjacency: np.ndarray, config: SummarizerConfig
) -> np.ndarray:
    """Stationary distribution of the damped, row-normalized walk."""
    n = adjacency.shape[0]
    row_sums = adjacency.sum(axis=1)
    transition = np.full((n, n), 1.0 / n)
    nonzero = row_sums > 0
    transition[nonzero] = adjacency[nonzero] / row_sums[nonzero, None]
    teleport = (1.0 - config.damping) / n
    p = np.full(n, 1.0 / n)
    for _ in range(config.power_iter_max):
        p_next = config.damping * (transition.T @ p) + teleport
        if np.abs(p_next - p).sum() <= config.power_iter_tol:
            return p_next
        p = p_next
    logger.warning("power iteration did not reach tol in %d steps", config.power_iter_max)
    return p


def _graph_rank(
    system_id: str, adjacency: np.ndarray, cluster: DocumentCluster,
    config: SummarizerConfig,
) -> RankList:
    n = len(cluster.sentences)
    if n == 1:
        return RankList.from_scores(system_id, [1.0])
    if adjacency.sum() == 0.0:
        logger.warning(
            "%s: no graph edges in cluster %s, falling back to uniform scores",
            system_id, cluster.cluster_id,
        )
        return _uniform_ranklist(system_id, n)
    return RankList.from_scores(system_id, _power_iteration(adjacency, config))


def lexrank_rank(cluster: DocumentCluster, config: SummarizerConfig) -> RankList:
    """Eigenvector centrality over the thresholded cosine-TF-IDF graph."""
    n = len(cluster.sentences)
    vectors = tfidf_vectors(cluster)
    adjacency = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if cosine_similarity(vectors[i], vectors[j]) > config.lexrank_threshold:
                adjacency[i, j] = adjacency[j, i] = 1.0
    return _graph_rank("lexrank", adjacency, cluster, config)


def textrank_edge_weight(a: Sequence[str], b: Sequence[str]) -> float:
    """Shared-type count normalized by the log sentence lengths.

    Zero for sentences of length <= 1 (the normalizer would vanish).
    """
    if len(a) <= 1 or len(b) <= 1:
        return 0.0
    overlap = len(set(a) & set(b))
    if overlap == 0:
        return 0.0
    return overlap / (math.log(len(a)) + math.log(len(b)))


def textrank_rank(cluster: DocumentCluster, config: SummarizerConfig) -> RankList:
    """Centrality over the content-word-overlap graph."""
    n = len(cluster.sentences)
    adjacency = np.zeros((n, n))
    tokens = [s.tokens for s in cluster.sentences]
    for i in range(n):
        for j in range(i + 1, n):
            weight = textrank_edge_weight(tokens[i], tokens[j])
            if weight > 0.0:
                adjacency[i, j] = adjacency[j, i] = weight
    return _graph_rank("textrank", adjacency, cluster, config)


def centroid_rank(cluster: DocumentCluster, config: SummarizerConfig) -> RankList:
    """Sum of cluster-centroid TF-IDF weights over each sentence's types."""
    vectors = tfidf_vectors(cluster)
    n = len(cluster.sentences)
    centroid: dict[str, float] = {}
    for vector in vectors:
        for token, weight in vector.weights.items():
            centroid[token] = centroid.get(token, 0.0) + weight
    centroid = {t: w / n for t, w in centroid.items()}
    scores = []
    for sentence in cluster.sentences:
        seen = dict.fromkeys(sentence.tokens)
        scores.append(sum(centroid.get(t, 0.0) for t in seen))
    return RankList.from_scores("centroid", scores)


def freqsum_rank(cluster: DocumentCluster, config: SummarizerConfig) -> RankList:
    """Average cluster-frequency of a sentence's content words."""
    counts = Counter()
    for sentence in cluster.sentences:
        counts.update(sentence.tokens)
    total = sum(counts.values())
    scores = []
    for sentence in cluster.sentences:
        if total == 0 or not sentence.tokens:
            scores.append(0.0)
            continue
        scores.append(
            sum(counts[t] / total for t in sentence.tokens) / len(sentence.tokens)
        )
    return RankList.from_scores("freqsum", scores)


def _binomial_ll(k: float, n: float, p: float) -> float:
    """log L(p; k, n) with the 0*log(0) := 0 convention."""
    ll = 0.0
    if k > 0:
        ll += k * math.log(p)
    if n - k > 0:
        ll += (n - k) * math.log(1.0 - p)
    return ll


def log_likelihood_ratio(k1: int, n1: int, k2: int, n2: int) -> float:
    """Dunning's signed-use likelihood-ratio statistic for one token.

    Compares the token's rate in the foreground (k1 of n1) against the
    background (k2 of n2); large values mean the rates genuinely differ.
    """
    p1 = k1 / n1
    p2 = k2 / n2
    p = (k1 + k2) / (n1 + n2)
    return 2.0 * (
        _binomial_ll(k1, n1, p1)
        + _binomial_ll(k2, n2, p2)
        - _binomial_ll(k1, n1, p)
        - _binomial_ll(k2, n2, p)
    )


def topic_words(
    cluster: DocumentCluster,
    background: Mapping[str, int],
    threshold: float,
) -> set[str]:
    """Tokens significantly over-represented in the cluster vs background."""
    n2 = sum(background.values())
    if n2 == 0:
        raise ValueError("background required: no background token counts")
    counts = Counter()
    for sentence in cluster.sentences:
        counts.update(sentence.tokens)
    n1 = sum(counts.values())
    if n1 == 0:
        return set()
    result = set()
    for token, k1 in counts.items():
        k2 = background.get(token, 0)
        if k1 / n1 <= k2 / n2:
            continue
        if log_likelihood_ratio(k1, n1, k2, n2) > threshold:
            result.add(token)
    return result


def topicsum_rank(
    cluster: DocumentCluster,
    background: Mapping[str, int],
    config: SummarizerConfig,
) -> RankList:
    """Fraction of a sentence's tokens that are topic-signature words."""
    signature = topic_words(cluster, background, config.topic_llr_threshold)
    scores = []
    for sentence in cluster.sentences:
        if not sentence.tokens:
            scores.append(0.0)
            continue
        hits = sum(1 for t in sentence.tokens if t in signature)
        scores.append(hits / len(sentence.tokens))
    return RankList.from_scores("topicsum", scores)


def _kl_smoothing(cluster_vocab_size: int, config: SummarizerConfig) -> float:
    if config.kl_smoothing_k is not None:
        return config.kl_smoothing_k
    return 0.0005 * cluster_vocab_size


def summary_kl(
    cluster: DocumentCluster,
    sentence_indices: Sequence[int],
    smoothing_k: float | None = None,
) -> float:
    """KL divergence of a summary's smoothed word distribution from the
    cluster's distribution, evaluated over the cluster vocabulary.

    The summary side is add-k smoothed with one unseen-token slot kept in
    the normalizer; ``smoothing_k=None`` uses 0.0005 * vocabulary size.
    """
    cluster_counts = Counter()
    for sentence in cluster.sentences:
        cluster_counts.update(sentence.tokens)
    total = sum(cluster_counts.values())
    if total == 0:
        return 0.0
    k = 0.0005 * len(cluster_counts) if smoothing_k is None else smoothing_k
    counts = Counter()
    for idx in sentence_indices:
        counts.update(cluster.sentences[idx].tokens)
    t = sum(counts.values())
    denom = t + k * (len(cluster_counts) + 1)
    if denom == 0.0:
        return math.inf
    kl = 0.0
    for token, c in cluster_counts.items():
        mass = counts[token] + k
        if mass == 0.0:
            continue
        p_summary = mass / denom
        kl += p_summary * (math.log(p_summary) - math.log(c / total))
    return kl


def greedykl_rank(cluster: DocumentCluster, config: SummarizerConfig) -> RankList:
    """Greedy selection minimizing the summary-to-cluster KL divergence.

    Selection continues past any length budget until every sentence is
    ordered; the stored score of a sentence is minus its selection step.
    """
    sentences = cluster.sentences
    n = len(sentences)
    cluster_counts = Counter()
    for sentence in sentences:
        cluster_counts.update(sentence.tokens)
    total = sum(cluster_counts.values())
    if total == 0:
        return RankList.from_scores("greedykl", [-(i + 1) for i in range(n)])
    k = _kl_smoothing(len(cluster_counts), config)
    log_pc = {t: math.log(c / total) for t, c in cluster_counts.items()}
    vocab_size = len(cluster_counts)

    def gain(count: int, token: str) -> float:
        mass = count + k
        if mass == 0.0:
            return 0.0
        return mass * (math.log(mass) - log_pc[token])

    base = sum(gain(0, t) for t in cluster_counts)  # all-zero summary counts
    current: Counter = Counter()
    current_total = 0
    current_sum = 0.0  # sum over present tokens of gain(c) - gain(0)
    remaining = list(range(n))
    deltas = [sorted(Counter(s.tokens).items()) for s in sentences]
    scores = [0.0] * n
    step = 0
    while remaining:
        step += 1
        best_idx = None
        best_kl = math.inf
        best_sum = 0.0
        for idx in remaining:
            cand_sum = current_sum
            for token, extra in deltas[idx]:
                have = current[token]
                cand_sum += gain(have + extra, token) - gain(have, token)
            cand_total = current_total + sum(c for _, c in deltas[idx])
            denom = cand_total + k * (vocab_size + 1)
            if denom == 0.0:
                kl = math.inf
            else:
                mass = cand_total + k * vocab_size
                kl = (base + cand_sum - mass * math.log(denom)) / denom
            if best_idx is None or kl < best_kl:
                best_idx, best_kl, best_sum = idx, kl, cand_sum
        for token, extra in deltas[best_idx]:
            current[token] += extra
        current_total += sum(c for _, c in deltas[best_idx])
        current_sum = best_sum
        remaining.remove(best_idx)
        scores[best_idx] = -float(step)
    return RankList.from_scores("greedykl", scores)


def extract_summary(
    rank_list: RankList,
    cluster: DocumentCluster,
    budget: LengthBudget,
    redundancy_cap: float | None = None,
) -> Summary:
    """Greedy prefix of the rank order under the length budget.

    Ineligible (too short) sentences are skipped; with ``redundancy_cap``
    set, a sentence whose cosine similarity to any already selected
    sentence exceeds the cap is skipped too.  The walk stops at the first
    sentence that would overflow the budget, so sentences are never
    truncated.  Word cost is the whitespace word count of the raw text;
    byte cost is its UTF-8 length plus one separator byte between
    sentences.
    """
    vectors = tfidf_vectors(cluster) if redundancy_cap is not None else None
    chosen: list[int] = []
    words = 0
    size = 0
    for idx in rank_list.order():
        sentence = cluster.sentences[idx]
        if not sentence.eligible:
            continue
        if vectors is not None and any(
            cosine_similarity(vectors[idx], vectors[j]) > redundancy_cap
            for j in chosen
        ):
            continue
        word_cost = len(sentence.raw_text.split())
        byte_cost = len(sentence.raw_text.encode("utf-8")) + (1 if chosen else 0)
        cost = word_cost if budget.kind == "words" else byte_cost
        used = words if budget.kind == "words" else size
        if used + cost > budget.limit:
            break
        chosen.append(idx)
        words += word_cost
        size += byte_cost
    if not chosen:
        logger.warning(
            "budget %s:%d fits no sentence of cluster %s; summary is empty",
            budget.kind, budget.limit, cluster.cluster_id,
        )
    return Summary(
        sentence_indices=tuple(chosen), token_count=words, byte_count=size
    )
