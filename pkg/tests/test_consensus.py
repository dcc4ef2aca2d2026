import math
import random

import numpy as np
import pytest

from summ.consensus import (
    AggregateResult,
    WcsConfig,
    WeightVector,
    borda_aggregate,
    cwcs_aggregate,
    cwcs_raw_weights,
    cwcs_weights,
    oracle_select,
    project_simplex,
    wcs_aggregate,
)
from summ.corpus import ReferenceSummary
from summ.rouge import prepare_text
from summ.summarizers import RankList


def ranklist_with_ranks(system_id, ranks):
    """Build a rank list whose ranks equal the given permutation."""
    n = len(ranks)
    return RankList.from_scores(system_id, [n - r for r in ranks])


class TestWeightVector:
    def test_validation(self):
        WeightVector((0.5, 0.5))
        with pytest.raises(ValueError):
            WeightVector((0.6, 0.6))
        with pytest.raises(ValueError):
            WeightVector((-0.1, 1.1))
        with pytest.raises(ValueError):
            WeightVector(())


class TestBorda:
    def test_single_list_identity(self):
        rl = ranklist_with_ranks("a", [2, 1, 3])
        result = borda_aggregate([rl])
        assert result.rank_list.ranks == rl.ranks
        assert result.method == "borda"
        assert result.weights is None

    def test_hand_example(self):
        a = ranklist_with_ranks("a", [1, 2, 3])
        b = ranklist_with_ranks("b", [3, 1, 2])
        result = borda_aggregate([a, b])
        # mean ranks (2.0, 1.5, 2.5) -> order s1, s0, s2
        assert result.rank_list.order() == [1, 0, 2]

    def test_identical_lists(self):
        rl = ranklist_with_ranks("a", [4, 1, 3, 2])
        result = borda_aggregate([rl, rl, rl])
        assert result.rank_list.ranks == rl.ranks

    def test_mismatched_length(self):
        with pytest.raises(ValueError):
            borda_aggregate(
                [ranklist_with_ranks("a", [1, 2]), ranklist_with_ranks("b", [1, 2, 3])]
            )

    def test_input_order_invariance(self):
        rng = random.Random(67)
        for _ in range(50):
            n = rng.randint(2, 8)
            lists = []
            for s in range(rng.randint(2, 5)):
                ranks = list(range(1, n + 1))
                rng.shuffle(ranks)
                lists.append(ranklist_with_ranks(f"s{s}", ranks))
            result = borda_aggregate(lists)
            shuffled = lists[:]
            rng.shuffle(shuffled)
            assert borda_aggregate(shuffled).rank_list.ranks == result.rank_list.ranks

    def test_sentence_relabeling_maps_output(self):
        # applying one index bijection to every input maps the output ranks
        # by the same bijection, up to ties resolved by the new indices
        rng = random.Random(68)
        for _ in range(30):
            n = rng.randint(2, 7)
            rank_rows = []
            for _ in range(rng.randint(2, 4)):
                ranks = list(range(1, n + 1))
                rng.shuffle(ranks)
                rank_rows.append(ranks)
            mapping = list(range(n))
            rng.shuffle(mapping)  # old index i -> new index mapping[i]
            lists = [ranklist_with_ranks(f"s{i}", r) for i, r in enumerate(rank_rows)]
            relabeled = []
            for i, ranks in enumerate(rank_rows):
                moved = [0] * n
                for old, rank in enumerate(ranks):
                    moved[mapping[old]] = rank
                relabeled.append(ranklist_with_ranks(f"s{i}", moved))
            base = borda_aggregate(lists).rank_list.scores
            mapped = borda_aggregate(relabeled).rank_list.scores
            assert all(
                mapped[mapping[old]] == base[old] for old in range(n)
            )


def brute_force_projection(y, step=1e-3):
    """Grid search over the simplex for the nearest point (2-D and 3-D)."""
    y = np.asarray(y, dtype=float)
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    if y.size == 2:
        grid = np.column_stack([ticks, 1.0 - ticks])
    elif y.size == 3:
        a, b = np.meshgrid(ticks, ticks)
        mask = a + b <= 1.0 + 1e-12
        grid = np.column_stack([a[mask], b[mask], 1.0 - a[mask] - b[mask]])
    else:
        raise NotImplementedError
    distances = ((grid - y) ** 2).sum(axis=1)
    return grid[distances.argmin()]


class TestProjectSimplex:
    def test_feasible_point_unchanged(self):
        assert project_simplex([0.5, 0.5]).weights == (0.5, 0.5)

    def test_hand_examples(self):
        assert project_simplex([2.0, 0.0]).weights == pytest.approx((1.0, 0.0))
        assert project_simplex([0.4, 0.3]).weights == pytest.approx((0.55, 0.45))

    def test_matches_grid_search(self):
        rng = random.Random(71)
        for _ in range(40):
            dim = rng.choice([2, 3])
            y = [rng.uniform(-2, 2) for _ in range(dim)]
            projected = np.asarray(project_simplex(y).weights)
            brute = brute_force_projection(y)
            assert np.abs(projected - brute).max() <= 2e-3

    def test_idempotent_on_feasible(self):
        rng = random.Random(73)
        for _ in range(50):
            dim = rng.randint(1, 6)
            raw = [rng.random() for _ in range(dim)]
            total = sum(raw)
            feasible = [r / total for r in raw]
            again = project_simplex(feasible).weights
            assert again == pytest.approx(tuple(feasible), abs=1e-12)


def wcs_objective(weights, r_star, rank_rows, lam):
    distances = ((rank_rows - r_star) ** 2).sum(axis=1)
    return (1 - lam) * float(weights @ distances) + lam * float(weights @ weights)


def dense_grid_min_2x2(rank_rows, lam, step=0.01):
    """Exhaustive search over w and r* for K=2, N=2 instances."""
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    r_grid = np.array([[a, b] for a in ticks for b in ticks])
    d_all = ((r_grid[:, None, :] - rank_rows[None, :, :]) ** 2).sum(axis=2)
    best = math.inf
    for t in ticks:
        w = np.array([t, 1.0 - t])
        objective = (1 - lam) * (d_all @ w) + lam * float(w @ w)
        best = min(best, float(objective.min()))
    return best


class TestWcs:
    def test_identical_lists_fixed_point(self):
        rl = ranklist_with_ranks("a", [2, 1, 3])
        result = wcs_aggregate([rl, rl, rl], WcsConfig(lambda_=0.5))
        assert result.method == "wcs"
        assert result.weights.weights == pytest.approx((1 / 3,) * 3)
        assert result.objective == pytest.approx(0.5 / 3)
        assert result.rank_list.ranks == rl.ranks
        assert result.converged

    def test_high_lambda_forces_uniform(self):
        a = ranklist_with_ranks("a", [1, 2, 3, 4])
        b = ranklist_with_ranks("b", [4, 3, 2, 1])
        c = ranklist_with_ranks("c", [1, 3, 2, 4])
        result = wcs_aggregate([a, b, c], WcsConfig(lambda_=0.999))
        assert result.weights.weights == pytest.approx((1 / 3,) * 3, abs=1e-2)

    def test_derived_symmetric_instance(self):
        a = ranklist_with_ranks("a", [1, 2])  # normalized (0, 1)
        b = ranklist_with_ranks("b", [2, 1])  # normalized (1, 0)
        result = wcs_aggregate([a, b], WcsConfig(lambda_=0.5))
        assert result.weights.weights == pytest.approx((0.5, 0.5))
        assert result.objective == pytest.approx(0.5)
        grid = dense_grid_min_2x2(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.5)
        assert result.objective <= grid + 1e-3

    def test_all_2x2_instances_match_dense_grid(self):
        perms = [[1, 2], [2, 1]]
        for pa in perms:
            for pb in perms:
                lists = [ranklist_with_ranks("a", pa), ranklist_with_ranks("b", pb)]
                result = wcs_aggregate(lists, WcsConfig(lambda_=0.5))
                rows = np.array([
                    [(r - 1) for r in pa], [(r - 1) for r in pb]
                ], dtype=float)
                grid = dense_grid_min_2x2(rows, 0.5)
                assert result.objective <= grid + 1e-3

    def test_trace_non_increasing_and_simplex_weights(self):
        rng = random.Random(79)
        for _ in range(30):
            n = rng.randint(2, 6)
            k = rng.randint(2, 4)
            lists = []
            for s in range(k):
                ranks = list(range(1, n + 1))
                rng.shuffle(ranks)
                lists.append(ranklist_with_ranks(f"s{s}", ranks))
            result = wcs_aggregate(lists, WcsConfig(lambda_=0.5))
            trace = result.objective_trace
            assert all(
                trace[i + 1] <= trace[i] + 1e-12 for i in range(len(trace) - 1)
            )
            weights = result.weights.weights
            assert all(w >= 0 for w in weights)
            assert sum(weights) == pytest.approx(1.0, abs=1e-9)

    def test_lambda_validation(self):
        with pytest.raises(ValueError):
            WcsConfig(lambda_=1.0)
        with pytest.raises(ValueError):
            WcsConfig(lambda_=-0.1)

    def test_non_convergence_flag(self):
        a = ranklist_with_ranks("a", [1, 2, 3, 4])
        b = ranklist_with_ranks("b", [4, 3, 2, 1])
        result = wcs_aggregate([a, b], WcsConfig(lambda_=0.5, max_iter=1))
        assert not result.converged
        assert result.iterations == 1

    def test_needs_two_lists(self):
        with pytest.raises(ValueError):
            wcs_aggregate([ranklist_with_ranks("a", [1, 2])], WcsConfig())


class TestCwcsWeights:
    def test_identical_summaries_uniform(self):
        s = [["storm", "hit", "coast"]]
        weights = cwcs_weights([s, s, s, s])
        assert weights.weights == pytest.approx((0.25,) * 4)

    def test_disjoint_third_summary(self):
        s1 = [["storm", "hit"]]
        s3 = [["vote", "held"]]
        weights = cwcs_weights([s1, s1, s3])
        assert weights.weights == pytest.approx((0.5, 0.5, 0.0))

    def test_two_summaries_half_overlap(self):
        weights = cwcs_weights([[["a", "b"]], [["a", "c"]]])
        assert weights.weights == pytest.approx((0.5, 0.5))

    def test_all_disjoint_falls_back_to_uniform(self):
        weights = cwcs_weights([[["a"]], [["b"]], [["c"]]])
        assert weights.weights == pytest.approx((1 / 3,) * 3)

    def test_peers_required(self):
        with pytest.raises(ValueError, match="peers required"):
            cwcs_weights([[["a"]]])

    def test_duplicate_system_raises_raw_weight(self):
        base = [[["a", "b", "c"]], [["x", "y", "z"]]]
        before = cwcs_raw_weights(base)
        after = cwcs_raw_weights(base + [base[0]])
        assert after[0] >= before[0]


class TestCwcsAggregate:
    def test_hand_example(self):
        a = ranklist_with_ranks("a", [1, 2, 3])
        b = ranklist_with_ranks("b", [3, 1, 2])
        result = cwcs_aggregate([a, b], WeightVector((0.75, 0.25)))
        assert result.rank_list.scores == pytest.approx((0.75, 0.625, 0.125))
        assert result.rank_list.order() == [0, 1, 2]

    def test_uniform_weights_equal_borda_order(self):
        rng = random.Random(83)
        for _ in range(200):
            n = rng.randint(2, 8)
            k = rng.randint(2, 5)
            lists = []
            for s in range(k):
                # discrete scores force plenty of rank ties across systems
                scores = [rng.choice([0.0, 0.5, 1.0]) for _ in range(n)]
                lists.append(RankList.from_scores(f"s{s}", scores))
            uniform = WeightVector(tuple(1.0 / k for _ in range(k)))
            assert (
                cwcs_aggregate(lists, uniform).rank_list.order()
                == borda_aggregate(lists).rank_list.order()
            )

    def test_degenerate_weight_reproduces_system(self):
        rng = random.Random(89)
        for _ in range(50):
            n = rng.randint(2, 8)
            k = rng.randint(2, 4)
            lists = []
            for s in range(k):
                scores = [rng.choice([0.0, 0.5, 1.0]) for _ in range(n)]
                lists.append(RankList.from_scores(f"s{s}", scores))
            pick = rng.randrange(k)
            basis = tuple(1.0 if i == pick else 0.0 for i in range(k))
            result = cwcs_aggregate(lists, WeightVector(basis))
            assert result.rank_list.ranks == lists[pick].ranks

    def test_dimension_mismatch(self):
        lists = [ranklist_with_ranks("a", [1, 2]), ranklist_with_ranks("b", [2, 1])]
        with pytest.raises(ValueError):
            cwcs_aggregate(lists, WeightVector((1.0,)))


class TestOracleSelect:
    def test_verbatim_reference_wins(self):
        reference = ReferenceSummary("r1", "The storm hit the coast hard.")
        verbatim = [prepare_text(reference.text)]
        other = [prepare_text("Voters elected a new mayor.")]
        index, score = oracle_select([other, verbatim], [reference], n=1)
        assert index == 1
        assert score.recall == 1.0

    def test_tie_goes_to_first(self):
        reference = ReferenceSummary("r1", "storm coast flood")
        candidate = [["storm", "coast", "flood"]]
        index, _ = oracle_select([candidate, candidate, candidate], [reference])
        assert index == 0

    def test_matches_brute_enumeration(self):
        from summ.rouge import rouge_n_recall

        reference = ReferenceSummary("r1", "storm flood rescue shelter damage")
        candidates = [
            [["storm", "flood"]],
            [["rescue", "shelter", "damage"]],
            [["unrelated", "words"]],
        ]
        streams = [prepare_text(reference.text)]
        recalls = [rouge_n_recall(c, streams, 1).recall for c in candidates]
        expected = recalls.index(max(recalls))
        index, score = oracle_select(candidates, [reference], n=1)
        assert index == expected
        assert score.recall == max(recalls)

    def test_requires_references(self):
        with pytest.raises(ValueError):
            oracle_select([[["a"]]], [])


class TestAggregateResultInvariants:
    def test_weights_only_for_weighted_methods(self):
        rl = ranklist_with_ranks("x", [1, 2])
        with pytest.raises(ValueError):
            AggregateResult(method="borda", rank_list=rl, weights=WeightVector((1.0,)))
        with pytest.raises(ValueError):
            AggregateResult(method="cwcs", rank_list=rl)
        with pytest.raises(ValueError):
            AggregateResult(
                method="cwcs", rank_list=rl, weights=WeightVector((1.0,)),
                objective=0.5,
            )
