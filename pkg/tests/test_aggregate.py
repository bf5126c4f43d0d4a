import itertools
import math

import numpy as np
import pytest

from yocausal.aggregate import (
    AggregateError,
    PreferenceRanking,
    UndefinedStatisticError,
    aggregate_rank,
    borda_scores,
    cross_correlations,
    kendall_tau,
    load_external_rankings,
    preference_aggregate,
    rank_models,
    validate_tie_structure,
)


def tau_oracle(a: dict, b: dict) -> float:
    """Independent tau-b: sign products for C-D, Counter-based tie counts."""
    from collections import Counter

    items = sorted(a)
    n = len(items)
    s = 0
    for i, j in itertools.combinations(range(n), 2):
        da = a[items[i]] - a[items[j]]
        db = b[items[i]] - b[items[j]]
        s += int(np.sign(da)) * int(np.sign(db))
    n0 = n * (n - 1) // 2
    t_a = sum(c * (c - 1) // 2 for c in Counter(a.values()).values())
    t_b = sum(c * (c - 1) // 2 for c in Counter(b.values()).values())
    return (s) / math.sqrt((n0 - t_a) * (n0 - t_b))


def all_tied_rankings(n: int):
    """Every ranking-with-ties of n items as a valid competition rank vector."""
    items = [f"m{i}" for i in range(n)]

    def ordered_partitions(elems):
        if not elems:
            yield []
            return
        first, rest = elems[0], elems[1:]
        for part in ordered_partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1 :]
            for i in range(len(part) + 1):
                yield part[:i] + [[first]] + part[i:]

    for blocks in ordered_partitions(items):
        ranks = {}
        pos = 1
        for block in blocks:
            for item in block:
                ranks[item] = pos
            pos += len(block)
        yield ranks


class TestRankModels:
    def test_sorting(self):
        assert rank_models({"A": 0.9, "B": 0.7, "C": 0.8}) == {"A": 1, "C": 2, "B": 3}

    def test_tie_sharing_skips(self):
        ranks = rank_models({"A": 0.5, "B": 0.5, "C": 0.1})
        assert ranks == {"A": 1, "B": 1, "C": 3}

    def test_single(self):
        assert rank_models({"only": 2.0}) == {"only": 1}

    def test_lower_is_better(self):
        assert rank_models({"A": 3.0, "B": 1.0}, higher_is_better=False) == {"B": 1, "A": 2}

    def test_non_finite_rejected(self):
        with pytest.raises(AggregateError):
            rank_models({"A": float("nan")})


class TestAggregateRank:
    def test_tie_break_favors_better_rsi_rank(self):
        # X: rsi_rank 2, cci_rank 3; Y: rsi_rank 3, cci_rank 2; Z best on both
        rsi = {"Z": 0.9, "X": 0.8, "Y": 0.7}
        cci = {"Z": 0.5, "Y": 0.4, "X": 0.3}
        rows = aggregate_rank(rsi, cci)
        by_model = {r.model_id: r for r in rows}
        assert by_model["X"].rank_sum == by_model["Y"].rank_sum == 5
        assert by_model["X"].final_rank < by_model["Y"].final_rank

    def test_single_model(self):
        rows = aggregate_rank({"m": 0.7}, {"m": 0.1})
        assert rows[0].final_rank == 1

    def test_strictly_ordered_sums(self):
        rsi = {"a": 0.9, "b": 0.8, "c": 0.1}
        cci = {"a": 0.9, "b": 0.2, "c": 0.1}
        rows = aggregate_rank(rsi, cci)
        assert [r.final_rank for r in rows] == [1, 2, 3]

    def test_model_set_mismatch(self):
        with pytest.raises(AggregateError):
            aggregate_rank({"a": 1.0}, {"b": 1.0})

    def test_monotonicity_in_rsi(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            m = int(rng.integers(2, 8))
            models = [f"m{i}" for i in range(m)]
            rsi = {x: float(rng.uniform()) for x in models}
            cci = {x: float(rng.uniform()) for x in models}
            rows = {r.model_id: r.final_rank for r in aggregate_rank(rsi, cci)}
            target = models[int(rng.integers(0, m))]
            improved = dict(rsi)
            improved[target] = max(rsi.values()) + 1.0
            rows2 = {r.model_id: r.final_rank for r in aggregate_rank(improved, cci)}
            assert rows2[target] <= rows[target]

    def test_scale_invariance_of_scores(self):
        rsi = {"a": 0.9, "b": 0.8, "c": 0.4}
        cci = {"a": 0.2, "b": 0.3, "c": 0.1}
        base = [(r.model_id, r.final_rank) for r in aggregate_rank(rsi, cci)]
        scaled = [(r.model_id, r.final_rank) for r in aggregate_rank({k: 7.3 * v for k, v in rsi.items()}, cci)]
        assert base == scaled


class TestKendallTau:
    def test_identical(self):
        a = {f"m{i}": i for i in range(5)}
        assert kendall_tau(a, dict(a)) == 1.0

    def test_reversed(self):
        a = {f"m{i}": i for i in range(5)}
        b = {f"m{i}": 4 - i for i in range(5)}
        assert kendall_tau(a, b) == -1.0

    def test_known_example(self):
        a = {"w": 1, "x": 2, "y": 3, "z": 4}
        b = {"w": 1, "x": 3, "y": 2, "z": 4}
        assert kendall_tau(a, b) == pytest.approx(4 / 6)

    def test_all_tied_flagged(self):
        a = {"x": 1, "y": 1, "z": 1}
        b = {"x": 1, "y": 2, "z": 3}
        with pytest.raises(UndefinedStatisticError):
            kendall_tau(a, b)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            a = {f"m{i}": int(rng.integers(1, 4)) for i in range(n)}
            b = {f"m{i}": int(rng.integers(1, 4)) for i in range(n)}
            try:
                assert kendall_tau(a, b) == kendall_tau(b, a)
            except UndefinedStatisticError:
                pass

    def test_matches_oracle_on_sampled_tied_rankings(self):
        def fully_tied(r):
            return len(set(r.values())) == 1

        rankings = list(all_tied_rankings(4))
        for a in rankings[:30]:
            for b in rankings[:30]:
                if fully_tied(a) or fully_tied(b):
                    with pytest.raises(UndefinedStatisticError):
                        kendall_tau(a, b)
                    continue
                assert kendall_tau(a, b) == tau_oracle(a, b)


class TestTieValidation:
    def test_valid_with_tie(self):
        validate_tie_structure({"m1": 1, "m2": 1, "m3": 3, "m4": 4, "m5": 5, "m6": 6})

    def test_invalid_after_two_way_tie(self):
        with pytest.raises(AggregateError):
            validate_tie_structure({"m1": 1, "m2": 1, "m3": 2})

    def test_must_start_at_one(self):
        with pytest.raises(AggregateError):
            validate_tie_structure({"m1": 2, "m2": 3})

    def test_non_integer_rank(self):
        with pytest.raises(AggregateError):
            validate_tie_structure({"m1": 1.5, "m2": 1})


class TestBorda:
    def test_endpoints(self):
        pts = borda_scores({f"m{i}": i for i in range(1, 7)}, 6)
        assert pts["m1"] == 5.0 and pts["m6"] == 0.0

    def test_two_way_tie_at_first(self):
        pts = borda_scores({"m1": 1, "m2": 1, "m3": 3, "m4": 4, "m5": 5, "m6": 6}, 6)
        assert pts["m1"] == pts["m2"] == 4.5
        assert pts["m3"] == 3.0

    def test_all_tied(self):
        pts = borda_scores({f"m{i}": 1 for i in range(6)}, 6)
        assert all(v == 2.5 for v in pts.values())

    def test_conservation_random(self):
        rng = np.random.default_rng(17)
        count = 0
        for ranks in all_tied_rankings(6):
            if rng.uniform() < 0.05:
                pts = borda_scores(ranks, 6)
                assert sum(pts.values()) == pytest.approx(15.0)
                count += 1
            if count >= 200:
                break
        assert count > 50


class TestPreferenceAggregate:
    def test_single_ranking(self):
        r = PreferenceRanking("a1", "p1", {f"m{i}": i for i in range(1, 7)})
        scores, ranks = preference_aggregate([r])
        assert scores == borda_scores(r, 6)
        assert ranks["m1"] == 1

    def test_reverse_pair_averages_to_uniform(self):
        fwd = PreferenceRanking("a1", "p1", {f"m{i}": i for i in range(1, 7)})
        rev = PreferenceRanking("a2", "p1", {f"m{i}": 7 - i for i in range(1, 7)})
        scores, _ = preference_aggregate([fwd, rev])
        assert all(v == pytest.approx(2.5) for v in scores.values())

    def test_idempotent_on_identical(self):
        r = PreferenceRanking("a1", "p1", {"x": 1, "y": 2, "z": 3})
        scores, ranks = preference_aggregate([r, r, r])
        assert ranks == {"x": 1, "y": 2, "z": 3}

    def test_candidate_mismatch(self):
        r1 = PreferenceRanking("a1", "p1", {"x": 1, "y": 2})
        r2 = PreferenceRanking("a2", "p1", {"x": 1, "z": 2})
        with pytest.raises(AggregateError):
            preference_aggregate([r1, r2])


class TestCrossCorrelations:
    @staticmethod
    def rows():
        return aggregate_rank({"a": 0.9, "b": 0.8, "c": 0.7, "d": 0.6}, {"a": 0.4, "b": 0.3, "c": 0.2, "d": 0.1})

    def test_self_agreement(self):
        rows = self.rows()
        goodness = {r.model_id: float(-r.final_rank) for r in rows}
        cross = cross_correlations(rows, {"self": goodness})
        assert cross["self"].tau == 1.0

    def test_all_tied_flagged(self):
        rows = self.rows()
        with pytest.warns(UserWarning, match="undefined"):
            cross = cross_correlations(rows, {"flat": {r.model_id: 1.0 for r in rows}})
        assert cross["flat"].tau is None

    def test_missing_models_dropped_pairwise(self):
        rows = self.rows()
        with pytest.warns(UserWarning, match="missing"):
            cross = cross_correlations(rows, {"partial": {"a": 3.0, "b": 2.0, "c": 1.0}})
        assert cross["partial"].n == 3

    def test_numeric_series_gets_pearson(self):
        rows = self.rows()
        params = {"a": 14.0, "b": 5.0, "c": 2.0, "d": 1.3}
        cross = cross_correlations(rows, {"params": params}, numeric_series=("params",))
        assert cross["params"].tau == 1.0
        assert cross["params"].pearson_r is not None and cross["params"].pearson_r > 0

    def test_too_few_overlapping(self):
        rows = self.rows()
        with pytest.warns(UserWarning):
            with pytest.raises(AggregateError):
                cross_correlations(rows, {"one": {"a": 1.0}})


def test_load_external_rankings(tmp_path):
    csv = "metric_name,model_id,value\nparams,a,14\nparams,b,1.3\nrelease_date,a,2025-03-01\n"
    path = tmp_path / "ext.csv"
    path.write_text(csv)
    ext = load_external_rankings(path)
    assert ext["params"] == {"a": 14.0, "b": 1.3}
    assert ext["release_date"]["a"] > 700000  # date ordinal
