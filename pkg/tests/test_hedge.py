"""Full-information learner tests: initialization, sampling, weight pushing,
and exact equivalence with Hedge run explicitly over enumerated paths."""

import math

import numpy as np
import pytest

from uniprice.auction import BidProfile, BidVector, PricingRule, Valuation
from uniprice.hedge import HedgeLearner, full_info_schedule, grid_levels
from uniprice.offline import opponents_of, round_weight_matrices
from uniprice.pathgraph import LayeredPathGraph


def make_learner(top=3, units=2, horizon=100, epsilon=1, eta=0.05, seed=0, player=0):
    return HedgeLearner(
        player=player,
        valuation=Valuation.of(*([top] * units)),
        units=units,
        horizon=horizon,
        rng=np.random.default_rng(seed),
        epsilon=epsilon,
        eta=eta,
    )


def explicit_hedge(graph, eta, weight_rounds):
    """Hedge over enumerated paths with cumulative path rewards."""
    paths = list(graph.iter_paths())
    fresh = LayeredPathGraph(graph.levels, graph.units)
    base = np.array([np.exp(fresh.path_log_prob(p)) for p in paths])
    cumulative = np.zeros(len(paths))
    for w_mid, w_snk in weight_rounds:
        for k, path in enumerate(paths):
            total = sum(int(w_mid[j, path[j], path[j + 1]]) for j in range(graph.units - 1))
            cumulative[k] += total + int(w_snk[path[-1]])
    scores = np.log(base) + eta * cumulative
    scores -= scores.max()
    probs = np.exp(scores)
    probs /= probs.sum()
    return dict(zip(paths, probs))


class TestSchedule:
    def test_resolution_and_rate_formulas(self):
        eps, eta = full_info_schedule(top_value=100, units=4, horizon=25)
        assert eps == math.floor(100 * math.sqrt(4 / 25))
        assert eta == pytest.approx(math.sqrt(math.log(25)) / (100 * math.sqrt(4 * 25)))

    def test_resolution_clamped_to_one_step(self):
        eps, _ = full_info_schedule(top_value=2, units=1, horizon=10**6)
        assert eps == 1

    def test_grid_starts_at_epsilon_not_zero(self):
        assert grid_levels(10, 3) == (3, 6, 9, 12)
        assert grid_levels(9, 3) == (3, 6, 9)


class TestInitialization:
    def test_uniform_over_first_layer(self):
        graph = LayeredPathGraph((1, 2, 3), units=2)
        np.testing.assert_allclose(np.exp(graph.log_src), [1 / 3] * 3)

    def test_interior_uniform_over_lower_levels(self):
        graph = LayeredPathGraph((1, 2, 3), units=2)
        probs = np.exp(graph.log_mid[0])
        assert probs[1, 0] == pytest.approx(0.5)
        assert probs[1, 1] == pytest.approx(0.5)
        assert probs[2, 0] == pytest.approx(1 / 3)

    def test_every_path_at_least_uniform_floor(self):
        graph = LayeredPathGraph((1, 2, 3), units=3)
        floor = 1 / 3**3
        for path in graph.iter_paths():
            assert np.exp(graph.path_log_prob(path)) >= floor - 1e-12

    def test_initial_normalization_is_tight(self):
        graph = LayeredPathGraph((1, 2, 3, 4), units=3)
        assert graph.normalization_gap() < 1e-12
        total = sum(graph.path_probabilities().values())
        assert total == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_single_level_grid_is_constant(self):
        learner = make_learner(top=1, units=3, epsilon=1)
        assert learner.levels == (1,)
        for _ in range(5):
            assert learner.sample_bid() == BidVector.of(1, 1, 1)

    def test_empirical_frequencies_match_path_products(self):
        graph = LayeredPathGraph((1, 2, 3), units=2)
        rng = np.random.default_rng(5)
        draws = 100_000
        counts = {}
        for _ in range(draws):
            p = graph.sample_path(rng)
            counts[p] = counts.get(p, 0) + 1
        for path, prob in graph.path_probabilities().items():
            sigma = math.sqrt(prob * (1 - prob) / draws)
            assert abs(counts.get(path, 0) / draws - prob) <= 3 * sigma + 1e-9

    def test_dominant_weight_pins_the_walk(self):
        graph = LayeredPathGraph((1, 2, 3), units=2)
        w_mid = np.zeros((1, 3, 3))
        w_snk = np.zeros(3)
        w_mid[0, 2, 0] = 50.0  # favor (3, 1) overwhelmingly
        graph.update(eta=10.0, w_mid=w_mid, w_snk=w_snk)
        rng = np.random.default_rng(7)
        for _ in range(20):
            assert graph.sample_path(rng) == (2, 0)

    def test_identical_seeds_reproduce_bids(self):
        a = make_learner(seed=11)
        b = make_learner(seed=11)
        for _ in range(10):
            assert a.sample_bid() == b.sample_bid()


class TestUpdate:
    def test_zero_weights_leave_probabilities_and_kernels_alone(self):
        graph = LayeredPathGraph((1, 2, 3), units=2)
        before = graph.path_probabilities()
        kernels = graph.update(eta=0.7, w_mid=np.zeros((1, 3, 3)), w_snk=np.zeros(3))
        for lg in kernels:
            np.testing.assert_allclose(np.exp(lg), 1.0, atol=1e-12)
        after = graph.path_probabilities()
        for path in before:
            assert after[path] == pytest.approx(before[path], abs=1e-12)

    def test_zero_learning_rate_freezes_the_distribution(self):
        graph = LayeredPathGraph((1, 2, 3), units=2)
        before = graph.path_probabilities()
        rng = np.random.default_rng(3)
        graph.update(eta=0.0, w_mid=rng.normal(size=(1, 3, 3)), w_snk=rng.normal(size=3))
        after = graph.path_probabilities()
        for path in before:
            assert after[path] == pytest.approx(before[path], abs=1e-12)

    def test_kernels_match_explicit_path_sums(self):
        """Gamma(u) equals the sum over all u-to-sink suffixes of the product
        of phi(e) * exp(eta * w(e)), recomputed here by brute enumeration."""
        import itertools

        rng = np.random.default_rng(9)
        graph = LayeredPathGraph((1, 2, 4, 5), units=3)
        eta = 0.3
        for _ in range(4):
            w_mid = rng.integers(-4, 7, size=(2, 4, 4)).astype(float)
            w_snk = rng.integers(-4, 7, size=4).astype(float)
            kernels = graph.log_kernels(eta, w_mid, w_snk)
            for layer in range(graph.units):
                tail = graph.units - layer - 1
                for ri in range(graph.n_levels):
                    total = 0.0
                    for suffix in itertools.product(range(ri + 1), repeat=tail):
                        chain = (ri,) + suffix
                        if any(a < b for a, b in zip(chain, chain[1:])):
                            continue
                        log_term = 0.0
                        for j in range(tail):
                            b = layer + j
                            log_term += graph.log_mid[b, chain[j], chain[j + 1]]
                            log_term += eta * w_mid[b, chain[j], chain[j + 1]]
                        log_term += graph.log_snk[chain[-1]] + eta * w_snk[chain[-1]]
                        total += np.exp(log_term)
                    assert np.exp(kernels[layer][ri]) == pytest.approx(total, rel=1e-9)
            graph.update(eta, w_mid, w_snk)
        assert graph.normalization_gap() < 1e-9

    def test_normalization_after_many_updates(self):
        rng = np.random.default_rng(13)
        graph = LayeredPathGraph(tuple(range(1, 8)), units=3)
        for _ in range(50):
            w_mid = rng.integers(-10, 10, size=(2, 7, 7))
            w_snk = rng.integers(-10, 10, size=7)
            graph.update(0.2, w_mid, w_snk)
        assert graph.normalization_gap() < 1e-9


class TestHedgeEquivalence:
    def test_matches_explicit_hedge_after_scripted_rounds(self):
        rng = np.random.default_rng(17)
        graph = LayeredPathGraph((1, 2, 3), units=2)
        eta = 0.11
        rounds = []
        for _ in range(10):
            w_mid = rng.integers(-6, 9, size=(1, 3, 3))
            w_snk = rng.integers(-6, 9, size=3)
            rounds.append((w_mid, w_snk))
            graph.update(eta, w_mid, w_snk)
        expected = explicit_hedge(graph, eta, rounds)
        actual = graph.path_probabilities()
        for path, prob in expected.items():
            assert abs(actual[path] - prob) < 1e-10

    def test_learner_distribution_matches_hedge_through_auctions(self):
        learner = make_learner(top=2, units=2, horizon=50, epsilon=1, eta=0.2, player=0)
        assert learner.levels == (1, 2)
        opponents = [
            BidProfile.of([(0, 0), (2, 1)]),
            BidProfile.of([(0, 0), (1, 1)]),
            BidProfile.of([(0, 0), (2, 2)]),
        ]
        weight_rounds = []
        for profile in opponents:
            learner.sample_bid()
            learner.observe_full(profile, PricingRule.KPLUS1)
            weight_rounds.append(learner.last_weights)
        expected = explicit_hedge(learner.graph, learner.eta, weight_rounds)
        actual = learner.graph.path_probabilities()
        for path, prob in expected.items():
            assert abs(actual[path] - prob) < 1e-10


class TestObserveFull:
    def test_weights_come_from_single_round_edge_scores(self):
        learner = make_learner(top=3, units=2, horizon=10, epsilon=1, eta=0.1, player=0)
        profile = BidProfile.of([(0, 0), (2, 1)])
        learner.observe_full(profile, PricingRule.KPLUS1)
        w_mid, w_snk = learner.last_weights
        expected_mid, expected_snk = round_weight_matrices(
            learner.levels, opponents_of(profile, 0), 0, learner.valuation, PricingRule.KPLUS1, 2
        )
        np.testing.assert_array_equal(w_mid, expected_mid)
        np.testing.assert_array_equal(w_snk, expected_snk)

    def test_off_grid_opponent_bids_snap_down(self):
        learner = make_learner(top=6, units=2, horizon=10, epsilon=2, eta=0.1, player=0)
        snapped = learner.snap_down(BidVector.of(5, 3))
        assert snapped == BidVector.of(4, 2)

    def test_sampled_path_reward_bounded_by_max_value(self):
        learner = make_learner(top=4, units=2, horizon=30, epsilon=1, eta=0.3, player=1)
        rng = np.random.default_rng(23)
        for _ in range(30):
            learner.sample_bid()
            bids = tuple(sorted((int(b) for b in rng.integers(0, 5, size=2)), reverse=True))
            learner.observe_full(BidProfile.of([bids, (0, 0)]), PricingRule.KTH)
        assert learner.round == 30

    def test_degenerate_zero_valuation_always_bids_zero(self):
        learner = HedgeLearner(
            player=0,
            valuation=Valuation.of(0, 0),
            units=2,
            horizon=10,
            rng=np.random.default_rng(1),
        )
        assert learner.degenerate
        assert learner.sample_bid() == BidVector.zeros(2)
        learner.observe_full(BidProfile.of([(0, 0), (3, 1)]), PricingRule.KTH)
        assert learner.sample_bid() == BidVector.zeros(2)
