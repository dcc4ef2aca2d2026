"""ROUGE-N recall: the evaluation metric and the peer-similarity measure.

Matching is the standard clipped n-gram count: per n-gram type the match
is min(candidate count, reference count), and recall normalizes by the
reference's n-gram total.  Multiple references combine by the arithmetic
mean of per-reference recalls (no jackknifing).

Candidates are passed per sentence so n-grams never span the join between
two extracted sentences; each reference is one flat token stream.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .corpus import TokenizationConfig, tokenize
from .features import ngrams

logger = logging.getLogger(__name__)

#: Scoring pipeline: lowercase and stem, keep stopwords (the usual
#: recall-evaluation setup for newswire summaries).
ROUGE_TOKENIZATION = TokenizationConfig(
    lowercase=True, remove_stopwords=False, stem=True, min_sentence_tokens=1
)

TokenLists = Sequence[Sequence[str]]


@dataclass(frozen=True)
class RougeScore:
    n: int
    recall: float
    match_count: int
    reference_count: int


def prepare_text(text: str, config: TokenizationConfig = ROUGE_TOKENIZATION) -> list[str]:
    """Flat scoring-token stream for a reference text."""
    return tokenize(text, config)


def prepare_sentences(
    texts: Sequence[str], config: TokenizationConfig = ROUGE_TOKENIZATION
) -> list[list[str]]:
    """Per-sentence scoring-token streams for a candidate summary."""
    return [tokenize(t, config) for t in texts]


def _candidate_ngrams(candidate: TokenLists, n: int) -> Counter:
    counts = Counter()
    for sentence_tokens in candidate:
        counts.update(ngrams(list(sentence_tokens), n))
    return counts


def rouge_n_recall(candidate: TokenLists, references: TokenLists, n: int) -> RougeScore:
    """ROUGE-N recall of ``candidate`` (token lists per sentence) against
    one or more references (one flat token list each).

    References with no n-grams of order ``n`` are excluded from the mean;
    if every reference is excluded there is nothing to score and a
    ``ValueError`` is raised.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not references:
        raise ValueError("at least one reference is required")
    cand_counts = _candidate_ngrams(candidate, n)
    recalls = []
    match_total = 0
    reference_total = 0
    for reference in references:
        ref_counts = ngrams(list(reference), n)
        ref_size = sum(ref_counts.values())
        if ref_size == 0:
            continue
        match = sum(
            min(c, cand_counts[g]) for g, c in ref_counts.items() if g in cand_counts
        )
        recalls.append(match / ref_size)
        match_total += match
        reference_total += ref_size
    if not recalls:
        raise ValueError(f"no scorable reference: none has {n}-grams")
    return RougeScore(
        n=n,
        recall=sum(recalls) / len(recalls),
        match_count=match_total,
        reference_count=reference_total,
    )


def pairwise_sim_matrix(summaries: Sequence[TokenLists]) -> list[list[float]]:
    """K x K matrix of unigram recalls between peer summaries.

    ``M[i][j]`` scores summary i with summary j acting as the benchmark,
    so the matrix is generally asymmetric.  The diagonal is 1 by
    convention; an empty summary contributes 0 everywhere else.
    """
    k = len(summaries)
    if k < 2:
        raise ValueError("pairwise similarity needs at least two summaries")
    flat = [[t for sent in s for t in sent] for s in summaries]
    for i, tokens in enumerate(flat):
        if not tokens:
            logger.warning("pairwise_sim_matrix: summary %d is empty", i)
    matrix = [[0.0] * k for _ in range(k)]
    for i in range(k):
        matrix[i][i] = 1.0
        for j in range(k):
            if i == j or not flat[i] or not flat[j]:
                continue
            matrix[i][j] = rouge_n_recall(summaries[i], [flat[j]], 1).recall
    return matrix
