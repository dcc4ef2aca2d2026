"""Term statistics shared by the rankers and the ROUGE scorer."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import DocumentCluster


@dataclass(frozen=True)
class UnigramDistribution:
    """Token probabilities, optionally add-k smoothed.

    ``smoothing_mass`` is the per-token probability assigned to tokens
    outside the observed vocabulary (0 without smoothing), so ``prob``
    is total: it answers for any token.
    """

    probabilities: dict[str, float]
    smoothing_mass: float = 0.0

    def prob(self, token: str) -> float:
        return self.probabilities.get(token, self.smoothing_mass)


@dataclass
class SentenceVector:
    """Sparse non-negative token weights; zero entries are never stored."""

    weights: dict[str, float]
    _norm: float | None = field(default=None, repr=False, compare=False)

    def norm(self) -> float:
        if self._norm is None:
            self._norm = math.sqrt(math.fsum(w * w for w in self.weights.values()))
        return self._norm

    def __bool__(self) -> bool:
        return bool(self.weights)


def ngrams(tokens: list[str] | tuple[str, ...], n: int) -> Counter:
    """Multiset of n-grams of ``tokens``; never crosses the list boundary."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


def unigram_distribution(
    token_lists: list[list[str]] | list[tuple[str, ...]],
    add_k: float | None = None,
) -> UnigramDistribution:
    """Maximum-likelihood unigram estimate over the pooled token lists.

    With ``add_k`` set, counts are smoothed over the observed vocabulary
    plus one unseen-token slot, whose per-token mass is reported as
    ``smoothing_mass``.
    """
    counts = Counter()
    for tokens in token_lists:
        counts.update(tokens)
    total = sum(counts.values())
    if add_k is None or add_k == 0.0:
        if total == 0:
            raise ValueError("empty distribution: no tokens and no smoothing")
        return UnigramDistribution(
            probabilities={t: c / total for t, c in counts.items()},
            smoothing_mass=0.0,
        )
    if add_k < 0:
        raise ValueError("add_k must be >= 0")
    denom = total + add_k * (len(counts) + 1)
    return UnigramDistribution(
        probabilities={t: (c + add_k) / denom for t, c in counts.items()},
        smoothing_mass=add_k / denom,
    )


def tfidf_vectors(cluster: DocumentCluster) -> list[SentenceVector]:
    """TF-IDF vector per sentence, aligned with sentence indices.

    tf is the within-sentence count; idf = ln(D / df) with document
    frequency taken over the cluster's own documents.  Tokens present in
    every document get weight 0 and are dropped.
    """
    doc_tokens: dict[str, set[str]] = {d.doc_id: set() for d in cluster.documents}
    for sentence in cluster.sentences:
        doc_tokens[sentence.doc_id].update(sentence.tokens)
    df = Counter()
    for tokens in doc_tokens.values():
        df.update(tokens)
    n_docs = len(cluster.documents)
    idf = {t: math.log(n_docs / d) for t, d in df.items() if d < n_docs}
    vectors = []
    for sentence in cluster.sentences:
        tf = Counter(sentence.tokens)
        vectors.append(
            SentenceVector(
                weights={t: c * idf[t] for t, c in tf.items() if t in idf}
            )
        )
    return vectors


def cosine_similarity(a: SentenceVector, b: SentenceVector) -> float:
    """Cosine of two sparse vectors; 0 when either is empty.

    Sums use ``math.fsum`` so the result is independent of key order,
    which keeps the similarity exactly symmetric.
    """
    if not a or not b:
        return 0.0
    if len(b.weights) < len(a.weights):
        a, b = b, a
    dot = math.fsum(
        w * b.weights[t] for t, w in a.weights.items() if t in b.weights
    )
    if dot == 0.0:
        return 0.0
    return min(1.0, dot / (a.norm() * b.norm()))
