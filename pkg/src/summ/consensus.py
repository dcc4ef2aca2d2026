"""Rank aggregation: Borda, weighted consensus, content-based weighting
and the choose-best oracle baseline.

The weighted consensus optimizer minimizes

    (1 - lambda) * sum_i w_i ||r* - r_i||^2  +  lambda * ||w||^2

over the aggregate rank vector r* and simplex-constrained system weights
w, by alternating two exact coordinate minimizers: r* is the w-weighted
mean of the rank vectors, and w is the Euclidean projection of
-(1 - lambda)/(2 lambda) * d onto the simplex, where d_i = ||r* - r_i||^2.
Rank vectors enter min-max normalized so every coordinate shares the
[0, 1] scale; note the squared distances still grow with the number of
sentences, so larger clusters need a larger lambda for the uniformity
penalty to bite.

The content-based variant replaces distance-derived weights with each
system's mean unigram recall against its peer summaries, treating the
peers as stand-in references.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus import ReferenceSummary
from .rouge import RougeScore, TokenLists, pairwise_sim_matrix, prepare_text, rouge_n_recall
from .summarizers import RankList

AGGREGATORS = ("borda", "wcs", "cwcs", "oracle")


@dataclass(frozen=True)
class WeightVector:
    """Non-negative system weights summing to one."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("empty weight vector")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class WcsConfig:
    lambda_: float = 0.5
    tol: float = 1e-8
    max_iter: int = 500

    def __post_init__(self):
        # lambda = 1 would drop the distance term and leave r* unconstrained
        if not 0.0 <= self.lambda_ < 1.0:
            raise ValueError("lambda must lie in [0, 1)")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("bad convergence settings")


@dataclass(frozen=True)
class AggregateResult:
    method: str
    rank_list: RankList
    weights: WeightVector | None = None
    iterations: int | None = None
    objective: float | None = None
    converged: bool = True
    objective_trace: tuple[float, ...] = ()

    def __post_init__(self):
        if self.method not in AGGREGATORS:
            raise ValueError(f"method must be one of {AGGREGATORS}")
        if (self.weights is not None) != (self.method in ("wcs", "cwcs")):
            raise ValueError("weights are present exactly for wcs and cwcs")
        if (self.objective is not None) != (self.method == "wcs"):
            raise ValueError("objective is present exactly for wcs")


def _common_length(rank_lists: Sequence[RankList]) -> int:
    if not rank_lists:
        raise ValueError("at least one rank list is required")
    n = len(rank_lists[0].ranks)
    if any(len(rl.ranks) != n for rl in rank_lists):
        raise ValueError("rank lists cover different sentence counts")
    return n


def borda_aggregate(rank_lists: Sequence[RankList]) -> AggregateResult:
    """Order sentences by their mean rank across systems (lower wins)."""
    n = _common_length(rank_lists)
    k = len(rank_lists)
    mean_ranks = [
        sum(rl.ranks[i] for rl in rank_lists) / k for i in range(n)
    ]
    rank_list = RankList.from_scores("borda", [-m for m in mean_ranks])
    return AggregateResult(method="borda", rank_list=rank_list)


def project_simplex(y: Sequence[float]) -> WeightVector:
    """Euclidean projection onto {w : w >= 0, sum w = 1}.

    Sorted-threshold method: with the entries sorted descending, find the
    largest prefix whose running mean keeps every kept entry above the
    water level tau, then clip at tau.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    u = np.sort(y)[::-1]
    cumulative = np.cumsum(u)
    j = np.arange(1, y.size + 1)
    supported = np.nonzero(u - (cumulative - 1.0) / j > 0.0)[0]
    rho = supported[-1]
    tau = (cumulative[rho] - 1.0) / (rho + 1.0)
    return WeightVector(tuple(np.maximum(y - tau, 0.0)))


def _alternate_minimize(ranks: np.ndarray, start: np.ndarray, config: WcsConfig):
    """One alternating-minimization run from the given weight start."""
    lam = config.lambda_

    def objective(w: np.ndarray, distances: np.ndarray) -> float:
        return float((1.0 - lam) * (w * distances).sum() + lam * (w * w).sum())

    weights = start
    trace: list[float] = []
    converged = False
    iterations = 0
    previous = None
    for _ in range(config.max_iter):
        iterations += 1
        # exact r* minimizer for fixed w
        r_star = weights @ ranks
        distances = ((ranks - r_star) ** 2).sum(axis=1)
        trace.append(objective(weights, distances))
        # exact w minimizer for fixed r*
        if lam == 0.0:
            at_min = distances == distances.min()
            weights = at_min / at_min.sum()
        else:
            weights = np.asarray(
                project_simplex(-(1.0 - lam) / (2.0 * lam) * distances).weights
            )
        current = objective(weights, distances)
        trace.append(current)
        if previous is not None and previous - current <= config.tol:
            converged = True
            break
        previous = current
    # leave r* optimal for the final weights
    r_star = weights @ ranks
    distances = ((ranks - r_star) ** 2).sum(axis=1)
    final = objective(weights, distances)
    trace.append(final)
    return final, weights, r_star, iterations, converged, trace


def wcs_aggregate(
    rank_lists: Sequence[RankList], config: WcsConfig | None = None
) -> AggregateResult:
    """Alternating minimization of the weighted-consensus objective.

    Eliminating r* leaves an indefinite quadratic over the simplex, so a
    single descent can stall in a spurious basin.  The alternation is
    therefore restarted from a fixed set of weight vectors (uniform
    first, then each vertex and each edge midpoint) and the best final
    iterate wins; ties keep the earliest start, so the uniform run is
    preferred whenever it reaches the optimum.
    """
    config = config or WcsConfig()
    n = _common_length(rank_lists)
    k = len(rank_lists)
    if k < 2:
        raise ValueError("weighted consensus needs at least two rank lists")
    if n > 1:
        rows = [(np.asarray(rl.ranks, dtype=float) - 1.0) / (n - 1) for rl in rank_lists]
    else:
        rows = [np.zeros(1) for _ in rank_lists]
    ranks = np.vstack(rows)

    starts = [np.full(k, 1.0 / k)]
    starts.extend(np.eye(k)[i] for i in range(k))
    starts.extend(
        (np.eye(k)[i] + np.eye(k)[j]) / 2.0 for i in range(k) for j in range(i + 1, k)
    )
    best = None
    for start in starts:
        run = _alternate_minimize(ranks, start, config)
        if best is None or run[0] < best[0]:
            best = run
    final, weights, r_star, iterations, converged, trace = best
    rank_list = RankList.from_scores("wcs", [-v for v in r_star])
    return AggregateResult(
        method="wcs",
        rank_list=rank_list,
        weights=WeightVector(tuple(weights)),
        iterations=iterations,
        objective=final,
        converged=converged,
        objective_trace=tuple(trace),
    )


def cwcs_raw_weights(summaries: Sequence[TokenLists]) -> list[float]:
    """Mean unigram recall of each summary against its peers."""
    k = len(summaries)
    if k < 2:
        raise ValueError("peers required: need at least two summaries")
    matrix = pairwise_sim_matrix(summaries)
    return [
        sum(matrix[i][j] for j in range(k) if j != i) / (k - 1) for i in range(k)
    ]


def cwcs_weights(summaries: Sequence[TokenLists]) -> WeightVector:
    """Peer-agreement weights, normalized to the simplex.

    All-zero agreement (every summary disjoint from every other) falls
    back to uniform weights.
    """
    raw = cwcs_raw_weights(summaries)
    total = sum(raw)
    if total == 0.0:
        return WeightVector(tuple(1.0 / len(raw) for _ in raw))
    return WeightVector(tuple(r / total for r in raw))


def cwcs_aggregate(
    rank_lists: Sequence[RankList], weights: WeightVector
) -> AggregateResult:
    """Weighted sum of normalized rank scores.

    A sentence at rank r in a list of N contributes (N - r)/(N - 1), so
    with uniform weights the ordering coincides with Borda's.  Scores are
    accumulated in exact rational arithmetic so that rank ties survive
    the combination and still break by sentence index.
    """
    n = _common_length(rank_lists)
    k = len(rank_lists)
    if len(weights.weights) != k:
        raise ValueError("one weight per rank list is required")
    exact_weights = [Fraction(w) for w in weights.weights]
    scores = []
    for i in range(n):
        if n == 1:
            score = Fraction(sum(exact_weights))
        else:
            score = sum(
                (w * Fraction(n - rl.ranks[i], n - 1)
                 for w, rl in zip(exact_weights, rank_lists)),
                start=Fraction(0),
            )
        scores.append(float(score))
    rank_list = RankList.from_scores("cwcs", scores)
    return AggregateResult(method="cwcs", rank_list=rank_list, weights=weights)


def oracle_select(
    candidate_summaries: Sequence[TokenLists],
    references: Sequence[ReferenceSummary],
    n: int = 1,
) -> tuple[int, RougeScore]:
    """Index and score of the candidate scoring highest against the
    references (ties go to the smaller index)."""
    if not references:
        raise ValueError("oracle requires reference summaries")
    if not candidate_summaries:
        raise ValueError("at least one candidate summary is required")
    reference_streams = [prepare_text(r.text) for r in references]
    best_index = 0
    best_score = None
    for i, candidate in enumerate(candidate_summaries):
        score = rouge_n_recall(candidate, reference_streams, n)
        if best_score is None or score.recall > best_score.recall:
            best_index, best_score = i, score
    return best_index, best_score
