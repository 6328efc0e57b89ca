"""Bandit no-regret bidder: the weight-pushing update fed by loss-based
importance-weighted weight estimates.

Under bandit feedback the bidder sees only the clearing price and its own
allocation, which is enough to reconstruct the true edge weights along the
path it actually played (the winning/losing indicators follow from the own
unit count, the price term from the public price). Every other edge gets an
optimistic fill-in at its cap, corrected on the traversed edges by inverse
propensity weighting:

    what(e) = wbar(e) - (wbar(e) - w(e)) / p(e)   for traversed e,
    what(e) = wbar(e)                              otherwise,

where p(e) is the exact probability that the walk crosses e, obtained by a
forward message pass over the graph. The estimator is unbiased edge by edge,
and the caps telescope to exactly K * v_1 along every source-to-sink path.

Default parameters for horizon T:

    epsilon = v_1 * min((K^3 log T / T)^(1/4), 1)   (floored to grid steps)
    eta     = min(eps * sqrt(log(v_1/eps) / (T K^3 v_1^4)), 1 / (K v_1))
"""

from __future__ import annotations

import math

import numpy as np

from uniprice.auction import AuctionError, BidVector, Valuation
from uniprice.hedge import grid_levels
from uniprice.pathgraph import LayeredPathGraph


def bandit_epsilon_real(top_value: float, units: int, horizon: int) -> float:
    """Real-valued resolution v_1 * min((K^3 log T / T)^(1/4), 1)."""
    if horizon < 1:
        raise AuctionError(f"horizon must be at least 1, got {horizon}")
    return top_value * min((units**3 * math.log(horizon) / horizon) ** 0.25, 1.0)


def bandit_schedule(top_value: int, units: int, horizon: int) -> tuple[int, float]:
    """Resolution (grid steps) and learning rate for the bandit bidder.

    The learning rate is evaluated at the floored resolution actually used
    for the ladder, and never exceeds 1 / (K * v_1).
    """
    if top_value <= 0:
        raise AuctionError("schedule undefined for a zero top marginal value")
    epsilon = max(1, math.floor(bandit_epsilon_real(top_value, units, horizon)))
    cap = 1.0 / (units * top_value)
    ratio = math.log(top_value / epsilon) if top_value > epsilon else 0.0
    eta = min(
        epsilon * math.sqrt(ratio / (horizon * units**3 * top_value**4)),
        cap,
    )
    return epsilon, eta


def edge_caps(levels: tuple[int, ...], units: int, top_value: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge weight caps wbar; they sum to exactly K * v_1 on every path.

    Interior edge (r, j) -> (s, j+1): v_1 - r + j*(r - s); final edge from
    (r, K) to the sink: v_1 - r + K*r; source edges: 0.
    """
    lev = np.asarray(levels, dtype=np.int64)
    L = len(lev)
    mid = np.zeros((max(units - 1, 0), L, L), dtype=np.int64)
    R = lev[:, None]
    S = lev[None, :]
    for j in range(1, units):
        mid[j - 1] = top_value - R + j * (R - S)
    snk = top_value - lev + units * lev
    return mid, snk


class Exp3Learner:
    """Importance-weighted weight-pushing bidder for one player under bandit feedback.

    Call order per round: ``sample_bid`` (records the path and refreshes the
    exact edge marginals), then ``observe_bandit`` with the public price and
    the private own allocation. Single-owner mutable state.
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
        self._marginals: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

        top = valuation.top
        self.degenerate = top == 0
        if self.degenerate:
            self.epsilon = 1
            self.eta = 0.0
            self.graph = None
            return
        sched_eps, sched_eta = bandit_schedule(top, units, horizon)
        self.epsilon = epsilon if epsilon is not None else sched_eps
        self.eta = eta if eta is not None else sched_eta
        if self.epsilon < 1:
            raise AuctionError(f"resolution must be a positive number of grid steps, got {self.epsilon}")
        self.levels = grid_levels(top, self.epsilon)
        self.graph = LayeredPathGraph(self.levels, units)
        self.caps = edge_caps(self.levels, units, top)

    def sample_bid(self) -> BidVector:
        if self.degenerate:
            return BidVector.zeros(self.units)
        # marginals are recomputed from scratch each round so the estimator
        # divides by the exact propensity of the path that was just drawn
        self._marginals = self.graph.edge_marginals()
        path = self.graph.sample_path(self.rng)
        self._last_path = path
        return BidVector(self.graph.path_levels(path))

    def edge_marginals(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exact p(e) per edge under the current path distribution."""
        if self.degenerate:
            raise AuctionError("degenerate learner has no graph")
        return self.graph.edge_marginals()

    def realized_path_weights(self, price: int, own_allocation: int) -> list[int]:
        """True weights of the traversed edges, from bandit feedback alone.

        Entry j-1 is the weight of the edge leaving layer j on the sampled
        path. Winning indicators come from the own unit count; the price
        term uses the public clearing price.
        """
        if self._last_path is None:
            raise AuctionError("no path sampled this round")
        marginals = self.valuation.padded(self.units)
        levels = self.graph.path_levels(self._last_path)
        weights = []
        for j in range(1, self.units + 1):
            r = levels[j - 1]
            s = levels[j] if j < self.units else 0
            w = 0
            if own_allocation >= j:
                w += marginals[j - 1] - r
            if own_allocation > j:
                w += j * (r - s)
            if own_allocation == j:
                w += j * (r - price)
            weights.append(w)
        return weights

    def estimate_weights(self, price: int, own_allocation: int) -> tuple[np.ndarray, np.ndarray]:
        """Unbiased per-edge weight estimates from this round's feedback."""
        if self._last_path is None:
            raise AuctionError("sample_bid must be called before estimating weights")
        cap_mid, cap_snk = self.caps
        w_mid = cap_mid.astype(float)
        w_snk = cap_snk.astype(float)
        _, p_mid, p_snk = self._marginals
        realized = self.realized_path_weights(price, own_allocation)
        top = self.valuation.top
        path = self._last_path
        for j in range(1, self.units + 1):
            ri = path[j - 1]
            if j < self.units:
                si = path[j]
                cap = int(cap_mid[j - 1, ri, si])
                propensity = float(p_mid[j - 1, ri, si])
            else:
                cap = int(cap_snk[ri])
                propensity = float(p_snk[ri])
            w = realized[j - 1]
            # caps bound the true weight except on ladder rungs above v_1,
            # where a lost unit yields weight 0 against a negative cap
            if w > max(cap, 0) or (self.levels[ri] <= top and w > cap):
                raise AssertionError(f"edge weight {w} above its cap {cap} at layer {j}")
            if propensity <= 0.0:
                raise RuntimeError(
                    f"traversed edge at layer {j} has zero marginal probability"
                )
            estimate = cap - (cap - w) / propensity
            if j < self.units:
                w_mid[j - 1, ri, si] = estimate
            else:
                w_snk[ri] = estimate
        return w_mid, w_snk

    def observe_bandit(self, price: int, own_allocation: int) -> None:
        """Run the weight-pushing update on the estimated weights."""
        if self.degenerate:
            self.round += 1
            return
        w_mid, w_snk = self.estimate_weights(price, own_allocation)
        self.graph.update(self.eta, w_mid, w_snk)
        self.last_weights = (w_mid, w_snk)
        self._last_path = None
        self.round += 1
