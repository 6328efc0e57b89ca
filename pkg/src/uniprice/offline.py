"""Hindsight-optimal fixed bidding against a recorded history of opponents.

Searching all weakly decreasing bid vectors directly is exponential in K.
Instead, a finite ladder of candidate bid levels is enough (every opponent
bid, every opponent bid plus one grid step, and zero), and the optimization
becomes a maximum-weight path problem on a layered DAG:

* vertex (s, j) means "bid level s for the j-th unit"; a source feeds layer
  1 and layer K drains into a sink;
* edges (r, j) -> (s, j+1) exist exactly for r >= s, so source-to-sink paths
  are in bijection with weakly decreasing vectors over the ladder;
* each edge gets an exact integer weight such that the weight of a path
  equals the cumulative auction utility of the corresponding bid vector over
  the whole history.

The per-edge weight needs only local information. With Gamma_t(x) = number
of opponent bids in round t that outrank a bid of x by this player (strictly
higher, or equal but owned by an earlier player), the j-th bid wins iff
Gamma_t(r) <= K - j, and the (j+1)-st wins iff Gamma_t(s) < K - j. When the
player wins exactly j units, the clearing price can be recovered from the
opponents' bids plus {r, s} alone, by dropping the j-1 known-winning higher
bids and reading off the appropriate order statistic.

Graph construction and the DP are deterministic; calls on distinct inputs
are independent and safe to run concurrently.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from uniprice.auction import (
    AuctionError,
    BidProfile,
    BidVector,
    PricingRule,
    Valuation,
    run_auction,
    utility,
)


@dataclass(frozen=True)
class OpponentRound:
    """Bids of all players except the focal one in a single round.

    ``bids`` pairs each opponent's player index with their vector; indices
    are kept because tie-breaking depends on who is lexicographically before
    the focal player.
    """

    bids: tuple[tuple[int, BidVector], ...]

    def __post_init__(self) -> None:
        players = [p for p, _ in self.bids]
        if sorted(players) != players or len(set(players)) != len(players):
            raise AuctionError("opponent bids must be keyed by distinct ascending player indices")


@dataclass(frozen=True)
class History:
    """Opponents' bids over T rounds, as seen by one focal player."""

    n: int
    units: int
    player: int
    rounds: tuple[OpponentRound, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.player < self.n:
            raise AuctionError(f"player {self.player} out of range for n={self.n}")
        for rnd in self.rounds:
            for p, vector in rnd.bids:
                if p == self.player or not 0 <= p < self.n:
                    raise AuctionError(f"bad opponent index {p} in history")
                vector.padded(self.units)

    @property
    def horizon(self) -> int:
        return len(self.rounds)

    @classmethod
    def from_profiles(cls, profiles: Sequence[BidProfile], player: int, units: int) -> "History":
        if not profiles:
            raise AuctionError("need at least one round to build a history from profiles")
        n = len(profiles[0])
        rounds = tuple(opponents_of(profile, player) for profile in profiles)
        return cls(n=n, units=units, player=player, rounds=rounds)

    def profile_with(self, vector: BidVector, round_index: int) -> BidProfile:
        """Full bid profile of one round with the focal player bidding ``vector``."""
        rnd = dict(self.rounds[round_index].bids)
        vectors = []
        for p in range(self.n):
            if p == self.player:
                vectors.append(vector)
            else:
                vectors.append(rnd.get(p, BidVector.zeros(self.units)))
        return BidProfile(tuple(vectors))


def opponents_of(profile: BidProfile, player: int) -> OpponentRound:
    """Strip one player's vector out of a full profile."""
    return OpponentRound(
        tuple((p, v) for p, v in enumerate(profile.vectors) if p != player)
    )


class _RoundView:
    """Cached sorted views of one opponent round for fast rank queries."""

    def __init__(self, rnd: OpponentRound, player: int, units: int):
        values: list[int] = []
        before: list[int] = []
        for p, vector in rnd.bids:
            padded = vector.padded(units)
            values.extend(padded)
            if p < player:
                before.extend(padded)
        self.values = sorted(values)
        self.before = sorted(before)
        self.values_arr = np.asarray(self.values, dtype=np.int64)
        self.before_arr = np.asarray(self.before, dtype=np.int64)

    def gamma(self, x: int) -> int:
        """Opponent bids that outrank a bid of value x by the focal player."""
        higher = len(self.values) - bisect_right(self.values, x)
        tied_before = bisect_right(self.before, x) - bisect_left(self.before, x)
        return higher + tied_before

    def gamma_vec(self, xs: np.ndarray) -> np.ndarray:
        higher = len(self.values) - np.searchsorted(self.values_arr, xs, side="right")
        tied = np.searchsorted(self.before_arr, xs, side="right") - np.searchsorted(
            self.before_arr, xs, side="left"
        )
        return higher + tied


@lru_cache(maxsize=4096)
def _round_view(rnd: OpponentRound, player: int, units: int) -> _RoundView:
    return _RoundView(rnd, player, units)


def priority_count(rnd: OpponentRound, x: int, player: int, units: int) -> int:
    """Number of bids in ``rnd`` with priority over a bid of ``x`` by ``player``.

    Counts opponent bids strictly above x plus bids equal to x owned by
    players with a smaller index. Nonincreasing in x; at most (n-1)*K.
    """
    return _round_view(rnd, player, units).gamma(x)


def candidate_bids(history: History, step: int = 1) -> tuple[int, ...]:
    """Ladder of bid levels that always contains a hindsight optimum.

    Zero, every opponent bid in the history, and every opponent bid plus one
    grid ``step``, deduplicated and sorted ascending. An empty history gives
    just (0,).
    """
    if step <= 0:
        raise AuctionError(f"grid step must be positive, got {step}")
    levels = {0}
    for rnd in history.rounds:
        for _, vector in rnd.bids:
            for bid in vector.padded(history.units):
                levels.add(bid)
                levels.add(bid + step)
    return tuple(sorted(levels))


def _merged_value_at(sorted_vals: Sequence[int], hi: int, lo: int, idx: int) -> int:
    """Value at ascending position ``idx`` of sorted_vals + {hi, lo}, hi >= lo.

    Positions below zero read as 0 (absent bids count as zero bids).
    """
    if idx < 0:
        return 0
    pos_lo = bisect_right(sorted_vals, lo)
    pos_hi = bisect_right(sorted_vals, hi) + 1
    if idx < pos_lo:
        return sorted_vals[idx]
    if idx == pos_lo:
        return lo
    if idx < pos_hi:
        return sorted_vals[idx - 1]
    if idx == pos_hi:
        return hi
    return sorted_vals[idx - 2]


def _round_term(
    view: _RoundView,
    units: int,
    layer: int,
    upper: int,
    lower: int,
    marginal: int,
    rule: PricingRule,
) -> int:
    """Single-round contribution to the weight of edge (upper, layer) -> (lower, layer+1)."""
    if upper < lower:
        raise AuctionError(f"edge requires upper >= lower, got {upper} < {lower}")
    j = layer
    if view.gamma(upper) > units - j:
        return 0  # the j-th bid loses, and so does everything below it
    term = marginal - upper
    if view.gamma(lower) < units - j:
        term += j * (upper - lower)
    else:
        # exactly j units won: recover the clearing price from the opponents'
        # bids plus {upper, lower}, skipping the j-1 higher winning bids
        rank = units + 2 - j if rule is PricingRule.KPLUS1 else units + 1 - j
        price = _merged_value_at(view.values, upper, lower, len(view.values) + 2 - rank)
        term += j * (upper - price)
    return term


def edge_weight(
    history: History,
    valuation: Valuation,
    rule: PricingRule,
    layer: int,
    upper: int,
    lower: int,
) -> int:
    """Exact weight of edge (upper, layer) -> (lower, layer+1) over the history.

    For the final layer (layer == K) the edge runs into the sink and
    ``lower`` must be 0. Edges out of the source have weight zero and are not
    represented here.
    """
    K = history.units
    if not 1 <= layer <= K:
        raise AuctionError(f"layer must be in 1..{K}, got {layer}")
    if layer == K and lower != 0:
        raise AuctionError("edges into the sink use lower = 0")
    marginal = valuation.padded(K)[layer - 1]
    total = 0
    for rnd, count in Counter(history.rounds).items():
        view = _round_view(rnd, history.player, K)
        total += count * _round_term(view, K, layer, upper, lower, marginal, rule)
    return total


def round_weight_matrices(
    levels: Sequence[int],
    rnd: OpponentRound,
    player: int,
    valuation: Valuation,
    rule: PricingRule,
    units: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-round edge weights for every edge of the layered DAG at once.

    Returns ``(mid, sink)`` where ``mid[j-1, ri, si]`` is the weight of
    (levels[ri], layer j) -> (levels[si], layer j+1) for si <= ri, and
    ``sink[ri]`` the weight of the edge from (levels[ri], layer K) into the
    sink. Entries above the diagonal are zero and never used.
    """
    view = _round_view(rnd, player, units)
    lev = np.asarray(levels, dtype=np.int64)
    L = len(lev)
    K = units
    marginals = valuation.padded(K)
    m0 = len(view.values)

    gam = view.gamma_vec(lev)
    # insertion points for the price order statistic
    pos_lo = np.searchsorted(view.values_arr, lev, side="right")
    pos_hi = pos_lo + 1
    pos_lo0 = bisect_right(view.values, 0)

    def merged_values(idx: int, hi_pos: np.ndarray, lo_pos, hi_val: np.ndarray, lo_val):
        """Vectorized value at ascending position idx of values + {hi, lo}."""
        if idx < 0:
            return np.zeros(np.broadcast_shapes(np.shape(hi_pos), np.shape(lo_pos)), dtype=np.int64)
        safe = lambda i: int(view.values[i]) if 0 <= i < m0 else 0
        a0, a1, a2 = safe(idx), safe(idx - 1), safe(idx - 2)
        return np.where(
            idx < lo_pos,
            a0,
            np.where(
                idx == lo_pos,
                lo_val,
                np.where(idx < hi_pos, a1, np.where(idx == hi_pos, hi_val, a2)),
            ),
        ).astype(np.int64)

    mid = np.zeros((max(K - 1, 0), L, L), dtype=np.int64)
    R = lev[:, None]
    S = lev[None, :]
    for j in range(1, K):
        ge = (gam <= K - j)[:, None]
        gt = (gam < K - j)[None, :]
        eq = ge & ~gt
        rank = K + 2 - j if rule is PricingRule.KPLUS1 else K + 1 - j
        q = merged_values(m0 + 2 - rank, pos_hi[:, None], pos_lo[None, :], R, S)
        w = ge * (marginals[j - 1] - R) + j * (gt & ge) * (R - S) + j * eq * (R - q)
        mid[j - 1] = w

    # layer K runs into the sink with the implicit next bid fixed at zero;
    # winning more than K units is impossible, so the "exactly K" indicator
    # coincides with the "at least K" one
    ge_k = gam <= 0
    rank = 2 if rule is PricingRule.KPLUS1 else 1
    q_k = merged_values(m0 + 2 - rank, pos_hi, pos_lo0, lev, 0)
    sink = ge_k * (marginals[K - 1] - lev + K * (lev - q_k))
    return mid, sink.astype(np.int64)


@dataclass
class LayeredDag:
    """Layered DAG whose source-to-sink paths are monotone bid vectors.

    ``levels`` is the ascending ladder of bid levels shared by all K layers;
    ``mid[j-1, ri, si]`` weighs the edge from level index ri in layer j to
    level index si in layer j+1 (valid for si <= ri); ``sink[ri]`` weighs the
    edge from layer K into the sink. Source edges weigh zero.
    """

    levels: tuple[int, ...]
    units: int
    mid: np.ndarray
    sink: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.levels) * self.units + 2

    @property
    def n_edges(self) -> int:
        L = len(self.levels)
        return (self.units - 1) * L * (L + 1) // 2 + 2 * L

    def path_weight(self, vector: Sequence[int]) -> int:
        """Total weight of the path spelled by a monotone vector on the ladder."""
        if len(vector) != self.units:
            raise AuctionError(f"vector length {len(vector)} != K={self.units}")
        index = {level: i for i, level in enumerate(self.levels)}
        idx = [index[b] for b in vector]
        total = 0
        for j in range(self.units - 1):
            total += int(self.mid[j, idx[j], idx[j + 1]])
        total += int(self.sink[idx[-1]])
        return total

    def iter_vectors(self) -> Iterator[tuple[int, ...]]:
        return enumerate_bid_vectors(self.levels, self.units)


def enumerate_bid_vectors(levels: Iterable[int], units: int) -> Iterator[tuple[int, ...]]:
    """All weakly decreasing vectors over ``levels``, in ascending lex order."""
    ordered = sorted(set(levels))
    combos = itertools.combinations_with_replacement(ordered, units)
    return iter(sorted(tuple(reversed(c)) for c in combos))


def build_graph(
    history: History,
    valuation: Valuation,
    rule: PricingRule,
    step: int = 1,
    levels: Sequence[int] | None = None,
) -> LayeredDag:
    """Construct the layered DAG with all edge weights populated.

    ``levels`` defaults to the candidate ladder built from the history; an
    explicit ladder (e.g. a coarser online grid) can be supplied instead.
    """
    if levels is None:
        levels = candidate_bids(history, step)
    levels = tuple(sorted(set(int(x) for x in levels)))
    if not levels:
        raise AuctionError("need at least one bid level")
    K = history.units
    L = len(levels)
    mid = np.zeros((max(K - 1, 0), L, L), dtype=np.int64)
    sink = np.zeros(L, dtype=np.int64)
    for rnd, count in Counter(history.rounds).items():
        w_mid, w_sink = round_weight_matrices(levels, rnd, history.player, valuation, rule, K)
        mid += count * w_mid
        sink += count * w_sink
    return LayeredDag(levels=levels, units=K, mid=mid, sink=sink)


def max_weight_path(dag: LayeredDag) -> tuple[tuple[int, ...], int]:
    """Maximum-weight source-to-sink path by DP in layer order.

    Returns the bid vector spelled by the path and its total weight. Among
    maximizers the lexicographically smallest bid vector is returned.
    """
    L = len(dag.levels)
    K = dag.units
    lev = np.asarray(dag.levels, dtype=np.int64)
    NEG = np.iinfo(np.int64).min // 4

    # best[j][ri]: max weight from vertex (levels[ri], layer j+1) to the sink
    best = [np.empty(L, dtype=np.int64) for _ in range(K)]
    best[K - 1] = dag.sink.copy()
    invalid = ~np.tril(np.ones((L, L), dtype=bool))
    for j in range(K - 2, -1, -1):
        cand = dag.mid[j] + best[j + 1][None, :]
        cand[invalid] = NEG
        best[j] = cand.max(axis=1)

    total = int(best[0].max())
    # walk forward, preferring the smallest level index among maximizers
    ri = int(np.argmax(best[0] == total))
    path = [int(lev[ri])]
    remaining = total
    for j in range(K - 1):
        targets = dag.mid[j, ri, : ri + 1] + best[j + 1][: ri + 1]
        si = int(np.argmax(targets == remaining))
        remaining -= int(dag.mid[j, ri, si])
        path.append(int(lev[si]))
        ri = si
    return tuple(path), total


def solve_offline(
    history: History,
    valuation: Valuation,
    rule: PricingRule,
    step: int = 1,
    levels: Sequence[int] | None = None,
    check: bool = True,
) -> tuple[BidVector, int]:
    """Optimal fixed bid vector in hindsight and its cumulative utility.

    With ``check`` the reported weight is re-derived by replaying the winning
    vector through the auction engine round by round; a mismatch indicates a
    bug and raises.
    """
    if history.horizon == 0:
        zero = BidVector.zeros(history.units)
        return zero, 0
    dag = build_graph(history, valuation, rule, step=step, levels=levels)
    path, total = max_weight_path(dag)
    vector = BidVector(path)
    if check:
        replayed = replay_utility(history, valuation, rule, vector)
        if replayed != total:
            raise AssertionError(
                f"path weight {total} != replayed utility {replayed} for {vector}"
            )
    return vector, total


def replay_utility(
    history: History, valuation: Valuation, rule: PricingRule, vector: BidVector
) -> int:
    """Cumulative utility of bidding ``vector`` in every recorded round."""
    total = 0
    for rnd, count in Counter(history.rounds).items():
        total += count * _single_round_utility(history, valuation, rule, vector, rnd)
    return total


def _single_round_utility(
    history: History,
    valuation: Valuation,
    rule: PricingRule,
    vector: BidVector,
    rnd: OpponentRound,
) -> int:
    mapping = dict(rnd.bids)
    vectors = []
    for p in range(history.n):
        if p == history.player:
            vectors.append(vector)
        else:
            vectors.append(mapping.get(p, BidVector.zeros(history.units)))
    outcome = run_auction(BidProfile(tuple(vectors)), rule, history.units)
    return utility(valuation, outcome, history.player)
