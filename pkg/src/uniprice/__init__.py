"""Repeated multi-unit uniform-price auctions.

Library plus CLI for simulating K-unit auctions with K-th/(K+1)-st pricing,
computing hindsight-optimal fixed bid vectors, running no-regret bidders
under full-information and bandit feedback, reproducing the two-scenario
regret lower-bound construction, and checking Nash/core stability of bid
profiles at desk scale.
"""

from uniprice.auction import (
    AuctionError,
    AuctionOutcome,
    BidProfile,
    BidVector,
    PricingRule,
    Valuation,
    run_auction,
    utility,
    welfare_and_revenue,
)

__all__ = [
    "AuctionError",
    "AuctionOutcome",
    "BidProfile",
    "BidVector",
    "PricingRule",
    "Valuation",
    "run_auction",
    "utility",
    "welfare_and_revenue",
]

__version__ = "0.1.0"
