"""Meta-evaluation tests: correlation statistics, permutation p-values,
rankings, aggregation, resampling stability, human-judgement scores."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from perseval.corpus import RatedSummary, RatedSummaryPool, sample_collections
from perseval.engine import MEASURES, score_model, score_table
from perseval.errors import (
    DataError,
    DegenerateInputError,
    MissingRatingError,
    ParseError,
)
from perseval.metaeval import (
    HIGHER_IS_BETTER,
    HumanRatings,
    Ranking,
    average_ranks,
    bias_variance,
    borda_kendall,
    kendall_tau,
    leaderboard,
    load_ranking,
    load_ratings,
    pearson_r,
    permutation_pvalues,
    perseval_hj,
    rank_models,
    save_ranking,
    spearman_rho,
    stability_report,
    _hj_tensors_rating_diff,
)
from perseval.metrics import TextRef, get_metric
from perseval.corpus import gold_key, gen_key

from .conftest import make_corpus
from .oracles import kendall_oracle, pearson_oracle, spearman_oracle


class TestCorrelations:
    def test_frozen_single_swap(self):
        x, y = [1.0, 2.0, 3.0], [1.0, 3.0, 2.0]
        assert pearson_r(x, y) == pytest.approx(0.5, abs=1e-15)
        assert spearman_rho(x, y) == pytest.approx(0.5, abs=1e-15)
        assert kendall_tau(x, y) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_perfect_and_reversed(self):
        x = [3.0, 1.0, 4.0, 1.5, 5.0]
        assert pearson_r(x, x) == pytest.approx(1.0, abs=1e-15)
        assert spearman_rho(x, x) == 1.0
        assert kendall_tau(x, x) == 1.0
        neg = [-v for v in x]
        assert pearson_r(x, neg) == pytest.approx(-1.0, abs=1e-15)
        assert spearman_rho(x, neg) == -1.0
        assert kendall_tau(x, neg) == -1.0

    def test_rank_statistics_ignore_monotone_transforms(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.permutation(8).astype(float)
            y = rng.permutation(8).astype(float)
            y_stretched = np.exp(y / 3.0)
            assert spearman_rho(x, y) == pytest.approx(
                spearman_rho(x, y_stretched), abs=1e-12)
            assert kendall_tau(x, y) == kendall_tau(x, y_stretched)

    def test_matches_oracles_on_random_vectors(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            x = rng.permutation(10).astype(float) + rng.uniform(
                -0.01, 0.01, 10)
            y = rng.permutation(10).astype(float) + rng.uniform(
                -0.01, 0.01, 10)
            assert pearson_r(x, y) == pytest.approx(
                pearson_oracle(list(x), list(y)), abs=1e-12)
            assert spearman_rho(x, y) == pytest.approx(
                spearman_oracle(list(x), list(y)), abs=1e-12)
            assert kendall_tau(x, y) == kendall_oracle(list(x), list(y))

    def test_average_ranks_share_tied_positions(self):
        np.testing.assert_array_equal(
            average_ranks([10.0, 20.0, 20.0, 30.0]),
            np.array([1.0, 2.5, 2.5, 4.0]))
        np.testing.assert_array_equal(
            average_ranks([5.0, 5.0, 5.0]), np.array([2.0, 2.0, 2.0]))

    def test_spearman_tie_fallback_is_pearson_on_ranks(self):
        x = [1.0, 2.0, 2.0, 4.0]
        y = [4.0, 3.0, 2.0, 1.0]
        assert spearman_rho(x, y) == pytest.approx(
            pearson_r(average_ranks(x), average_ranks(y)), abs=1e-15)

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateInputError):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateInputError):
            spearman_rho([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateInputError):
            kendall_tau([1.0], [2.0])
        with pytest.raises(ValueError):
            pearson_r([1.0, 2.0], [1.0, 2.0, 3.0])


class TestPermutationPValues:
    def test_frozen_three_point_cases(self):
        # single swap: every permutation reaches |rho| = 0.5, |tau| = 1/3
        p = permutation_pvalues([1.0, 2.0, 3.0], [1.0, 3.0, 2.0])
        assert p["spearman_p"] == pytest.approx(1.0, abs=1e-15)
        assert p["kendall_p"] == pytest.approx(1.0, abs=1e-15)
        # identical vectors: only the two extreme permutations reach 1
        p = permutation_pvalues([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert p["spearman_p"] == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert p["kendall_p"] == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_exact_path_matches_hand_enumeration(self):
        rng = np.random.default_rng(9)
        x = rng.permutation(5).astype(float)
        y = rng.permutation(5).astype(float)
        got = permutation_pvalues(x, y)
        rho_obs, tau_obs = abs(spearman_rho(x, y)), abs(kendall_tau(x, y))
        rho_hits = tau_hits = total = 0
        for perm in itertools.permutations(range(5)):
            yp = [float(y[i]) for i in perm]
            if abs(spearman_rho(x, yp)) >= rho_obs - 1e-12:
                rho_hits += 1
            if abs(kendall_tau(x, yp)) >= tau_obs - 1e-12:
                tau_hits += 1
            total += 1
        assert got["spearman_p"] == pytest.approx(rho_hits / total,
                                                  abs=1e-15)
        assert got["kendall_p"] == pytest.approx(tau_hits / total,
                                                 abs=1e-15)

    def test_monte_carlo_path_is_seeded_and_sane(self):
        rng = np.random.default_rng(2)
        x = rng.permutation(12).astype(float)
        y = x + rng.uniform(-0.5, 0.5, 12)  # strongly correlated
        a = permutation_pvalues(x, y, seed=7)
        b = permutation_pvalues(x, y, seed=7)
        assert a == b
        assert 0.0 < a["spearman_p"] < 0.05
        assert 0.0 < a["kendall_p"] < 0.05
        c = permutation_pvalues(x, y, seed=8)
        assert c["spearman_p"] == pytest.approx(a["spearman_p"], abs=0.01)


class TestRankings:
    def test_rank_models_with_tie(self):
        scores = {"gamma": 0.1, "alpha": 0.9, "beta": 0.9}
        ranking = rank_models(scores, higher_is_better=True)
        assert ranking.entries == (("alpha", 1), ("beta", 2), ("gamma", 3))
        assert ranking.ties == (("alpha", "beta"),)
        assert ranking.rank_of("gamma") == 3

    def test_direction_flip(self):
        scores = {"a": 0.2, "b": 0.8}
        assert rank_models(scores, True).entries == (("b", 1), ("a", 2))
        assert rank_models(scores, False).entries == (("a", 1), ("b", 2))

    def test_empty_rejected(self):
        with pytest.raises(DegenerateInputError):
            rank_models({})

    def test_rank_vector_order(self):
        ranking = rank_models({"a": 0.3, "b": 0.2, "c": 0.1})
        np.testing.assert_array_equal(
            ranking.rank_vector(("c", "a", "b")), np.array([3.0, 1.0, 2.0]))

    def test_direction_map_covers_every_measure(self):
        assert set(HIGHER_IS_BETTER) == set(MEASURES)

    def test_leaderboard_directions(self, tiny_corpus):
        table = score_table(tiny_corpus, tiny_corpus.model_ids,
                            [get_metric("rouge_l")])
        by_perseval = leaderboard(table, "rouge_l", "perseval")
        scores = table.system_scores("rouge_l", "perseval")
        ordered = [m for m, _ in by_perseval.entries]
        assert sorted(ordered, key=lambda m: -scores[m]) == ordered
        by_egises = leaderboard(table, "rouge_l", "egises")
        e_scores = table.system_scores("rouge_l", "egises")
        e_ordered = [m for m, _ in by_egises.entries]
        assert sorted(e_ordered, key=lambda m: e_scores[m]) == e_ordered

    def test_ranking_round_trip(self, tmp_path):
        ranking = rank_models({"a": 0.5, "b": 0.5, "c": 0.25},
                              measure="perseval/jsd")
        path = tmp_path / "ranking.json"
        save_ranking(ranking, path)
        loaded = load_ranking(path)
        assert loaded.entries == ranking.entries
        assert loaded.ties == ranking.ties
        assert loaded.measure == ranking.measure
        assert loaded.scores == ranking.scores

    def test_malformed_ranking_file(self, tmp_path):
        path = tmp_path / "ranking.json"
        path.write_text('{"entries": [{"model": "a"}]}\n')
        with pytest.raises(ParseError):
            load_ranking(path)


class TestBordaKendall:
    def _fixture(self):
        r1 = Ranking(entries=(("A", 1), ("B", 2), ("C", 3)))
        r2 = Ranking(entries=(("B", 1), ("A", 2), ("C", 3)))
        return [r1, r2]

    def test_frozen_fixture(self):
        combined = borda_kendall(self._fixture())
        assert combined.scores == {"A": 3.0, "B": 3.0, "C": 6.0}
        assert combined.entries == (("A", 1), ("B", 2), ("C", 3))
        assert combined.ties == (("A", "B"),)

    def test_unanimous_rankings_pass_through(self):
        r = Ranking(entries=(("x", 1), ("y", 2), ("z", 3)))
        combined = borda_kendall([r, r, r])
        assert combined.entries == r.entries
        assert combined.ties == ()

    def test_relabelling_equivariance(self):
        rng = np.random.default_rng(13)
        names = ["A", "B", "C"]
        for _ in range(10):
            perm = [names[i] for i in rng.permutation(3)]
            mapping = dict(zip(names, perm))

            def relabel(r):
                return Ranking(entries=tuple(
                    (mapping[m], rank) for m, rank in r.entries))

            direct = borda_kendall([relabel(r) for r in self._fixture()])
            via = borda_kendall(self._fixture())
            assert direct.scores == {
                mapping[m]: s for m, s in via.scores.items()}
            assert {frozenset(g) for g in direct.ties} == {
                frozenset(mapping[m] for m in g) for g in via.ties}

    def test_mismatched_model_sets(self):
        r1 = Ranking(entries=(("A", 1), ("B", 2)))
        r2 = Ranking(entries=(("A", 1), ("C", 2)))
        with pytest.raises(DataError):
            borda_kendall([r1, r2])

    def test_empty_rejected(self):
        with pytest.raises(DegenerateInputError):
            borda_kendall([])


class TestBiasVariance:
    def test_frozen_reconstruction(self):
        bias, variance = bias_variance(
            0.1496, [0.153, 0.1535, 0.1558, 0.1564])
        assert variance == pytest.approx(5.8064e-6, rel=1e-6)
        assert bias == pytest.approx(0.00240965, abs=1e-7)
        assert bias * bias == pytest.approx(variance, abs=1e-18)

    def test_constant_scores_have_no_spread(self):
        bias, variance = bias_variance(0.5, [0.5, 0.5])
        assert bias == 0.0 and variance == 0.0


class TestStabilityReport:
    def _collections(self, n_docs=6, fractions=(0.5,), sets=3, seed=11):
        docs = {f"d{i}": f"body {i}" for i in range(n_docs)}
        golds = {}
        for d in docs:
            golds[(d, "u1")] = f"gold a {d}"
            golds[(d, "u2")] = f"gold b {d}"
        corpus = make_corpus(docs, golds, {})
        return sample_collections(corpus, list(fractions), sets, seed)

    def test_inverted_sample_drives_epsilons_to_minus_one(self):
        collections = self._collections()
        base = {"m0": 0.9, "m1": 0.5, "m2": 0.1}
        calls = {"n": 0}

        def scorer(sample):
            calls["n"] += 1
            if calls["n"] == 3:  # second resample comes back inverted
                return {m: 1.0 - s for m, s in base.items()}
            return dict(base)

        report = stability_report(collections, scorer)
        assert report.epsilon_spearman == -1.0
        assert report.epsilon_kendall == -1.0
        assert len(report.sample_stats) == 3
        clean = [s for i, s in enumerate(report.sample_stats) if i != 1]
        assert all(s["spearman"] == 1.0 and s["kendall"] == 1.0
                   for s in clean)

    def test_report_aggregates_are_recomputable(self):
        collections = self._collections(fractions=(0.5, 1.0), sets=2)
        rng = np.random.default_rng(3)
        noise = iter(rng.uniform(-0.05, 0.05, 100))

        def scorer(sample):
            return {"m0": 0.7 + next(noise), "m1": 0.3 + next(noise)}

        report = stability_report(collections, scorer)
        for m in report.models:
            b, v = bias_variance(
                report.full_scores[m],
                [report.fraction_means[m][f] for f in report.fractions])
            assert report.bias[m] == pytest.approx(b, abs=1e-15)
            assert report.variance[m] == pytest.approx(v, abs=1e-15)
        assert report.delta_stability == pytest.approx(
            max(max(report.bias[m], report.variance[m])
                for m in report.models), abs=1e-15)
        # per-fraction means recompute from the recorded sample scores
        for m in report.models:
            for f in report.fractions:
                recorded = [s["scores"][m] for s in report.sample_stats
                            if s["fraction"] == f]
                assert report.fraction_means[m][f] == pytest.approx(
                    float(np.mean(recorded)), abs=1e-15)

    def test_deterministic_given_collections_and_scorer(self):
        collections = self._collections()

        def scorer(sample):
            seed_val = sum(len(d) for d in sample.doc_ids)
            return {"m0": 0.1 * (seed_val % 7), "m1": 0.05 * (seed_val % 11)}

        a = stability_report(collections, scorer).to_json_obj()
        b = stability_report(collections, scorer).to_json_obj()
        assert a == b

    def test_scorer_model_set_mismatch(self):
        collections = self._collections()
        calls = {"n": 0}

        def scorer(sample):
            calls["n"] += 1
            if calls["n"] > 1:
                return {"m0": 0.5}
            return {"m0": 0.5, "m1": 0.4}

        with pytest.raises(DataError):
            stability_report(collections, scorer)

    def test_single_model_rejected(self):
        collections = self._collections()
        with pytest.raises(DegenerateInputError):
            stability_report(collections, lambda s: {"only": 0.5})

    def test_csv_rows_shape(self):
        collections = self._collections(fractions=(0.5, 1.0), sets=1)
        report = stability_report(
            collections, lambda s: {"m0": 0.6, "m1": 0.4})
        rows = list(report.csv_rows())
        assert rows[0] == ("model", "full_score", "mean_0.5", "mean_1.0",
                           "bias", "variance")
        assert len(rows) == 3


class TestHumanRatings:
    def test_scale_maps_linearly_to_divergence(self):
        ratings = HumanRatings(scale_max=6)
        ratings.add("d0", "gold:u1", "gold:u2", 6.0)
        assert ratings.divergence("d0", "gold:u1", "gold:u2") == 0.0
        ratings.add("d0", "gold:u1", "gold:u3", 1.0)
        assert ratings.divergence("d0", "gold:u1", "gold:u3") == 1.0

    def test_annotators_average_and_pairs_are_unordered(self):
        ratings = HumanRatings(scale_max=6)
        ratings.add("d0", "gold:u1", "gold:u2", 2.0)
        ratings.add("d0", "gold:u2", "gold:u1", 4.0)
        assert ratings.mean_rating("d0", "gold:u1", "gold:u2") == 3.0
        assert ratings.divergence("d0", "gold:u1", "gold:u2") == \
            pytest.approx(0.6, abs=1e-15)

    def test_missing_pair_and_bad_rating(self):
        ratings = HumanRatings(scale_max=6)
        with pytest.raises(MissingRatingError):
            ratings.mean_rating("d0", "a", "b")
        with pytest.raises(DataError):
            ratings.add("d0", "a", "b", 0.5)
        with pytest.raises(ValueError):
            HumanRatings(scale_max=1)

    def test_load_ratings_file(self, tmp_path):
        path = tmp_path / "ratings.jsonl"
        path.write_text(
            '{"kind": "meta", "scale_max": 5}\n'
            '{"doc_id": "d0", "left_id": "gold:u1", "right_id": "gold:u2",'
            ' "rating": 3}\n'
        )
        ratings = load_ratings(path)
        assert ratings.scale_max == 5.0
        assert ratings.divergence("d0", "gold:u1", "gold:u2") == 0.5

    def test_load_ratings_missing_field(self, tmp_path):
        path = tmp_path / "ratings.jsonl"
        path.write_text('{"doc_id": "d0", "left_id": "a", "rating": 3}\n')
        with pytest.raises(ParseError, match="right_id"):
            load_ratings(path)


class TestPersevalHj:
    def test_rating_encoded_metric_reproduces_standard_scores(
            self, tiny_corpus):
        # encode the metric's own divergences as ratings; the
        # human-judgement path must then equal the standard path
        metric = get_metric("rouge_l")
        scale = 6.0
        ratings = HumanRatings(scale_max=scale)
        doc_id = "d0"
        users = tiny_corpus.users_for(doc_id)
        for j, uj in enumerate(users):
            for uk in users[j + 1:]:
                d = metric.distance(
                    TextRef(gold_key(doc_id, uj),
                            tiny_corpus.golds[(doc_id, uj)].text),
                    TextRef(gold_key(doc_id, uk),
                            tiny_corpus.golds[(doc_id, uk)].text))
                ratings.add(doc_id, f"gold:{uj}", f"gold:{uk}",
                            1.0 + (1.0 - d) * (scale - 1.0))
                for model in tiny_corpus.model_ids:
                    d = metric.distance(
                        TextRef(gen_key(model, doc_id, uj),
                                tiny_corpus.generated[
                                    (model, doc_id, uj)].text),
                        TextRef(gen_key(model, doc_id, uk),
                                tiny_corpus.generated[
                                    (model, doc_id, uk)].text))
                    ratings.add(doc_id, f"gen:{model}:{uj}",
                                f"gen:{model}:{uk}",
                                1.0 + (1.0 - d) * (scale - 1.0))
        hj = perseval_hj(tiny_corpus, ratings, metric)
        for model in tiny_corpus.model_ids:
            standard = score_model(tiny_corpus, model, metric).system_scores
            for measure in ("degress", "egises", "perseval"):
                assert hj[model][measure] == pytest.approx(
                    standard[measure], abs=1e-12)

    def _pool(self):
        return RatedSummaryPool([
            RatedSummary("a1", "d1", "p1", "one fine text", 5),
            RatedSummary("a1", "d1", "p2", "two finer texts", 4),
            RatedSummary("a2", "d1", "p1", "one fine text", 4),
            RatedSummary("a2", "d1", "p2", "another angle entirely", 5),
        ], r_max=5)

    def test_rating_diff_tensors_hand_case(self):
        from perseval.corpus import build_surrogates
        pool = self._pool()
        corpus, _ = build_surrogates(pool, threshold=3)
        metric = get_metric("rouge_l")
        t = _hj_tensors_rating_diff(corpus, pool, "p1", metric, "d1",
                                    threshold=3)
        assert t.users == ("a1", "a2")
        # liked means: a1 -> (5+4)/2 = 4.5, a2 -> (4+5)/2 = 4.5
        assert t.uu[0, 1] == pytest.approx(0.0, abs=1e-15)
        # p1 ratings: a1 gave 5, a2 gave 4 -> |5-4|/4
        assert t.ss[0, 1] == pytest.approx(0.25, abs=1e-15)
        # summary-vs-liked-mean: |5-4.5|/4 and |4-4.5|/4
        assert t.su[0] == pytest.approx(0.125, abs=1e-15)
        assert t.su[1] == pytest.approx(0.125, abs=1e-15)

    def test_rating_diff_scores(self):
        scores = perseval_hj(None, self._pool(), get_metric("rouge_l"),
                             source="rating_diff", threshold=3)
        assert set(scores) == {"p1", "p2"}
        for model in scores:
            row = scores[model]
            assert row["egises"] == pytest.approx(
                1.0 - row["degress"], abs=1e-15)
            assert 0.0 <= row["perseval"] <= row["degress"] + 1e-15

    def test_rating_diff_missing_rating(self):
        pool = RatedSummaryPool([
            RatedSummary("a1", "d1", "p1", "one fine text", 5),
            RatedSummary("a1", "d1", "p2", "two finer texts", 4),
            RatedSummary("a2", "d1", "p1", "one fine text", 4),
        ], r_max=5)
        with pytest.raises(MissingRatingError, match="p2"):
            perseval_hj(None, pool, get_metric("rouge_l"),
                        source="rating_diff", threshold=3)

    def test_source_validation(self, tiny_corpus):
        with pytest.raises(ValueError):
            perseval_hj(tiny_corpus, HumanRatings(), get_metric("rouge_l"),
                        source="telepathy")
        with pytest.raises(DataError):
            perseval_hj(tiny_corpus, self._pool(), get_metric("rouge_l"),
                        source="ratings")
        with pytest.raises(DataError):
            perseval_hj(None, HumanRatings(), get_metric("rouge_l"),
                        source="ratings")
