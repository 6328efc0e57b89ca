"""Full-information no-regret bidder: Hedge over DAG paths via weight pushing.

Each round the bidder samples a weakly decreasing bid vector by walking its
layered bid graph, observes everyone's bids, scores every edge of the graph
against that single round, and pushes the exponential-weights update through
the graph. The induced path distribution coincides with Hedge run over all
(exponentially many) monotone bid vectors on the grid.

The default resolution and learning rate for a horizon of T rounds are

    epsilon = v_1 * sqrt(K / T)          (floored to a whole grid step)
    eta     = sqrt(log T) / (v_1 * sqrt(K * T))

where v_1 is the bidder's top marginal value in grid units. Both can be
overridden for experiments.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from uniprice.auction import AuctionError, BidProfile, BidVector, PricingRule, Valuation
from uniprice.offline import OpponentRound, opponents_of, round_weight_matrices
from uniprice.pathgraph import LayeredPathGraph


def full_info_schedule(top_value: int, units: int, horizon: int) -> tuple[int, float]:
    """Resolution (grid steps) and learning rate for the full-info bidder.

    The real-valued resolution v_1 * sqrt(K/T) is rounded down to a whole
    number of grid steps (at least one) so the bid ladder stays exact.
    """
    if top_value <= 0:
        raise AuctionError("schedule undefined for a zero top marginal value")
    if horizon < 1:
        raise AuctionError(f"horizon must be at least 1, got {horizon}")
    eps_real = top_value * math.sqrt(units / horizon)
    epsilon = max(1, math.floor(eps_real))
    eta = math.sqrt(math.log(horizon)) / (top_value * math.sqrt(units * horizon))
    return epsilon, eta


def grid_levels(top_value: int, epsilon: int) -> tuple[int, ...]:
    """The bid ladder epsilon, 2*epsilon, ..., ceil(v_1/epsilon)*epsilon."""
    count = -(-top_value // epsilon)
    return tuple(epsilon * k for k in range(1, count + 1))


class HedgeLearner:
    """Weight-pushing Hedge bidder for one player under full information.

    Single-owner mutable state; one instance per player. A zero top marginal
    value leaves the schedule undefined, in which case the learner degenerates
    to always bidding the zero vector and ignoring feedback.
    """

    def __init__(
        self,
        player: int,
        valuation: Valuation,
        units: int,
        horizon: int,
        rng: np.random.Generator,
        epsilon: int | None = None,
        eta: float | None = None,
    ):
        self.player = player
        self.valuation = valuation
        self.units = units
        self.horizon = horizon
        self.rng = rng
        self.round = 0
        self.last_weights: tuple[np.ndarray, np.ndarray] | None = None
        self._last_path: tuple[int, ...] | None = None
        self._weight_cache: dict[tuple[OpponentRound, PricingRule], tuple[np.ndarray, np.ndarray]] = {}

        top = valuation.top
        self.degenerate = top == 0
        if self.degenerate:
            self.epsilon = 1
            self.eta = 0.0
            self.graph = None
            return
        sched_eps, sched_eta = full_info_schedule(top, units, horizon)
        self.epsilon = epsilon if epsilon is not None else sched_eps
        self.eta = eta if eta is not None else sched_eta
        if self.epsilon < 1:
            raise AuctionError(f"resolution must be a positive number of grid steps, got {self.epsilon}")
        self.levels = grid_levels(top, self.epsilon)
        self.graph = LayeredPathGraph(self.levels, units)

    def sample_bid(self) -> BidVector:
        """Draw the next bid vector; weakly decreasing by construction."""
        if self.degenerate:
            return BidVector.zeros(self.units)
        path = self.graph.sample_path(self.rng)
        self._last_path = path
        return BidVector(self.graph.path_levels(path))

    def snap_down(self, vector: BidVector) -> BidVector:
        """Project an observed vector onto multiples of the learner's grid step."""
        return BidVector(tuple((b // self.epsilon) * self.epsilon for b in vector.padded(self.units)))

    def _round_weights(self, rnd: OpponentRound, rule: PricingRule) -> tuple[np.ndarray, np.ndarray]:
        key = (rnd, rule)
        cached = self._weight_cache.get(key)
        if cached is None:
            cached = round_weight_matrices(
                self.levels, rnd, self.player, self.valuation, rule, self.units
            )
            self._weight_cache[key] = cached
        return cached

    def observe_full(self, profile: BidProfile, rule: PricingRule) -> None:
        """Score every edge against this round's public bids and update.

        Off-grid opponent bids are snapped down to the learner's grid for
        weight computation only; the harness still clears the real auction
        on the raw bids.
        """
        if self.degenerate:
            self.round += 1
            return
        raw = opponents_of(profile, self.player)
        snapped = OpponentRound(tuple((p, self.snap_down(v)) for p, v in raw.bids))
        w_mid, w_snk = self._round_weights(snapped, rule)
        if self._last_path is not None:
            reward = self._path_reward(self._last_path, w_mid, w_snk)
            cap = self.units * self.valuation.top
            if reward > cap:
                raise AssertionError(f"path reward {reward} exceeds K*v1={cap}")
            self._last_path = None
        self.graph.update(self.eta, w_mid, w_snk)
        self.last_weights = (w_mid, w_snk)
        self.round += 1

    def _path_reward(self, path: tuple[int, ...], w_mid: np.ndarray, w_snk: np.ndarray) -> int:
        total = 0
        for j in range(self.units - 1):
            total += int(w_mid[j, path[j], path[j + 1]])
        return total + int(w_snk[path[-1]])

    def path_distribution(self) -> Mapping[tuple[int, ...], float]:
        """Current probability of every bid vector, keyed by grid levels."""
        if self.degenerate:
            return {(0,) * self.units: 1.0}
        return {
            self.graph.path_levels(p): prob for p, prob in self.graph.path_probabilities().items()
        }
