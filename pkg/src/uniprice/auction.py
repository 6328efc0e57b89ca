"""One-shot multi-unit auction with uniform pricing.

A seller offers ``K`` identical units. Each player submits one weakly
decreasing bid per unit. The auctioneer sorts all n*K bids in decreasing
order, breaking ties by player index (then unit index within a player),
gives the j-th unit to the owner of the j-th highest bid, and charges every
allocated unit the same price: the K-th highest bid (maximum market-clearing
price) or the (K+1)-st highest bid (minimum market-clearing price).

All money amounts are non-negative integers counting steps of the instance
grid, so comparisons and tie handling are exact. Conversion to decimal
strings happens only at file boundaries (:mod:`uniprice.io`).

Every function here is a pure function of its arguments; there is no shared
mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence


class AuctionError(ValueError):
    """Structurally invalid auction input (bad vector, K = 0, ...)."""


class PricingRule(Enum):
    """Which order statistic of the sorted bids sets the per-unit price."""

    KTH = "kth"
    KPLUS1 = "kplus1"


def _validate_monotone(values: Sequence[int], what: str) -> None:
    if any(not isinstance(v, int) or isinstance(v, bool) for v in values):
        raise AuctionError(f"{what} entries must be plain integers, got {values!r}")
    if any(a < b for a, b in zip(values, values[1:])):
        raise AuctionError(f"{what} must be weakly decreasing, got {values!r}")
    if values and values[-1] < 0:
        raise AuctionError(f"{what} entries must be non-negative, got {values!r}")


@dataclass(frozen=True)
class Valuation:
    """Marginal values v_1 >= v_2 >= ... for the 1st, 2nd, ... unit won.

    Vectors shorter than the number of auctioned units are padded with
    implicit zeros, so the cumulative value V(l) = sum_{j<=l} v_j is concave
    and nondecreasing.
    """

    marginals: tuple[int, ...]

    def __post_init__(self) -> None:
        _validate_monotone(self.marginals, "valuation")

    @classmethod
    def of(cls, *marginals: int) -> "Valuation":
        return cls(tuple(marginals))

    def padded(self, units: int) -> tuple[int, ...]:
        if len(self.marginals) > units:
            raise AuctionError(
                f"valuation has {len(self.marginals)} marginals but only {units} units"
            )
        return self.marginals + (0,) * (units - len(self.marginals))

    def cumulative(self, count: int) -> int:
        """V(count): total value of winning ``count`` units."""
        if count < 0:
            raise AuctionError(f"negative unit count {count}")
        return sum(self.marginals[: min(count, len(self.marginals))])

    @property
    def top(self) -> int:
        """v_1, the largest marginal value (0 for an empty vector)."""
        return self.marginals[0] if self.marginals else 0

    def is_hungry(self, units: int) -> bool:
        """True when every padded marginal up to ``units`` is strictly positive."""
        padded = self.padded(units)
        return all(v > 0 for v in padded)


@dataclass(frozen=True)
class BidVector:
    """One player's weakly decreasing per-unit bids, zero-padded up to K."""

    bids: tuple[int, ...]

    def __post_init__(self) -> None:
        _validate_monotone(self.bids, "bid vector")

    @classmethod
    def of(cls, *bids: int) -> "BidVector":
        return cls(tuple(bids))

    @classmethod
    def zeros(cls, units: int) -> "BidVector":
        return cls((0,) * units)

    def padded(self, units: int) -> tuple[int, ...]:
        if len(self.bids) > units:
            raise AuctionError(f"bid vector has {len(self.bids)} entries but only {units} units")
        return self.bids + (0,) * (units - len(self.bids))


@dataclass(frozen=True)
class BidProfile:
    """Bid vectors of all n players, indexed 0..n-1."""

    vectors: tuple[BidVector, ...]

    def __post_init__(self) -> None:
        if not self.vectors:
            raise AuctionError("profile needs at least one player")

    @classmethod
    def of(cls, rows: Iterable[Sequence[int]]) -> "BidProfile":
        return cls(tuple(BidVector(tuple(row)) for row in rows))

    def replace(self, player: int, vector: BidVector) -> "BidProfile":
        vectors = list(self.vectors)
        vectors[player] = vector
        return BidProfile(tuple(vectors))

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[BidVector]:
        return iter(self.vectors)


@dataclass(frozen=True)
class AuctionOutcome:
    """Price, per-player unit counts, and the full priority order of bids.

    ``owner_sequence`` lists (player, unit_index) for all n*K bids from the
    highest-priority bid down; the first K entries are the winners.
    """

    price: int
    allocation: tuple[int, ...]
    owner_sequence: tuple[tuple[int, int], ...]

    @property
    def units(self) -> int:
        return sum(self.allocation)


def run_auction(profile: BidProfile, rule: PricingRule, units: int) -> AuctionOutcome:
    """Run the uniform-price auction on ``profile`` for ``units`` units.

    Bids are ordered by (value desc, player asc, unit asc); the top K entries
    win one unit each. The price is the K-th (KTH) or (K+1)-st (KPLUS1)
    highest bid; if fewer bids exist the missing entries count as zero. The
    latter only matters for a single bidder, whose (K+1)-st price is zero.
    """
    if units <= 0:
        raise AuctionError(f"need a positive number of units, got {units}")
    entries = [
        (bid, player, unit)
        for player, vector in enumerate(profile)
        for unit, bid in enumerate(vector.padded(units))
    ]
    entries.sort(key=lambda e: (-e[0], e[1], e[2]))

    allocation = [0] * len(profile)
    for bid, player, _ in entries[:units]:
        allocation[player] += 1

    price_index = units - 1 if rule is PricingRule.KTH else units
    price = entries[price_index][0] if price_index < len(entries) else 0
    owner_sequence = tuple((player, unit) for _, player, unit in entries)
    return AuctionOutcome(price=price, allocation=tuple(allocation), owner_sequence=owner_sequence)


def utility(valuation: Valuation, outcome: AuctionOutcome, player: int) -> int:
    """Quasi-linear payoff V(x_i) - price * x_i; may be negative."""
    won = outcome.allocation[player]
    return valuation.cumulative(won) - outcome.price * won


def welfare_and_revenue(
    valuations: Sequence[Valuation], outcome: AuctionOutcome
) -> tuple[int, int]:
    """Social welfare sum_i V_i(x_i) and auctioneer revenue K * price."""
    welfare = sum(v.cumulative(x) for v, x in zip(valuations, outcome.allocation))
    revenue = outcome.price * outcome.units
    return welfare, revenue
