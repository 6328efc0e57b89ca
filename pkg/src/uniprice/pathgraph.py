"""Per-edge probability machinery over the layered bid DAG.

Running Hedge with one expert per source-to-sink path is exponential in K,
but the path distribution factorizes: store one probability per edge,
sample bids by a random walk from the source, and after each round push the
multiplicative reward updates through the graph with per-vertex aggregates

    Gamma(sink) = 1
    Gamma(u)    = sum_e=(u,v) phi(e) * exp(eta * w(e)) * Gamma(v)
    phi'(e)     = phi(e) * exp(eta * w(e)) * Gamma(v) / Gamma(u)

which keeps the induced path distribution exactly equal to Hedge over all
paths with path reward = sum of edge weights. Everything is carried in log
domain because eta * w * T overflows naive exponentials.

A graph instance is single-owner mutable state: moving it between threads is
fine, sharing it for concurrent mutation is not.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

from uniprice.auction import AuctionError
from uniprice.offline import enumerate_bid_vectors

PROB_TOL = 1e-12


class LayeredPathGraph:
    """Stochastic edge tables over K layers of bid levels plus source/sink.

    Vertices in every layer carry the same ascending ladder of bid levels;
    edges run from level index ri in layer j to si <= ri in layer j+1, so
    walks spell weakly decreasing bid vectors. ``log_mid[j-1]`` stores the
    log edge probabilities of the boundary between layers j and j+1
    (-inf above the diagonal), ``log_src``/``log_snk`` the source and sink
    boundaries.
    """

    def __init__(self, levels: Sequence[int], units: int):
        levels = tuple(int(x) for x in levels)
        if not levels or list(levels) != sorted(set(levels)):
            raise AuctionError(f"levels must be distinct and ascending, got {levels!r}")
        if units < 1:
            raise AuctionError(f"need at least one unit, got {units}")
        self.levels = np.asarray(levels, dtype=np.int64)
        self.units = units
        L = len(levels)
        self.valid = np.tril(np.ones((L, L), dtype=bool))

        # fresh walk: uniform over layer-1 levels, then uniform over the
        # successors not above the current level, then straight to the sink
        self.log_src = np.full(L, -np.log(L))
        row = -np.log(np.arange(1, L + 1, dtype=float))[:, None]
        mid = np.where(self.valid, np.broadcast_to(row, (L, L)), -np.inf)
        self.log_mid = np.repeat(mid[None, :, :], max(units - 1, 0), axis=0)
        self.log_snk = np.zeros(L)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def sample_path(self, rng: np.random.Generator) -> tuple[int, ...]:
        """Random walk from source to sink; returns level indices per layer."""
        probs = np.exp(self.log_src)
        current = int(rng.choice(self.n_levels, p=probs / probs.sum()))
        indices = [current]
        for boundary in range(self.units - 1):
            weights = np.exp(self.log_mid[boundary, current, : current + 1])
            current = int(rng.choice(current + 1, p=weights / weights.sum()))
            indices.append(current)
        return tuple(indices)

    def path_levels(self, indices: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(self.levels[i]) for i in indices)

    def path_log_prob(self, indices: Sequence[int]) -> float:
        total = float(self.log_src[indices[0]])
        for boundary in range(self.units - 1):
            total += float(self.log_mid[boundary, indices[boundary], indices[boundary + 1]])
        total += float(self.log_snk[indices[-1]])
        return total

    def iter_paths(self) -> Iterator[tuple[int, ...]]:
        """All index paths, i.e. weakly decreasing index tuples (small graphs)."""
        return enumerate_bid_vectors(range(self.n_levels), self.units)

    def path_probabilities(self) -> dict[tuple[int, ...], float]:
        return {p: float(np.exp(self.path_log_prob(p))) for p in self.iter_paths()}

    def log_kernels(self, eta: float, w_mid: np.ndarray, w_snk: np.ndarray) -> list[np.ndarray]:
        """log Gamma(u) for every vertex, layer K first element last.

        Returns a list of K arrays; entry j-1 holds log Gamma over the
        vertices of layer j. Gamma at the sink is 1 by definition and source
        edges carry zero weight, so neither needs storing.
        """
        K = self.units
        kernels: list[np.ndarray] = [np.empty(0)] * K
        kernels[K - 1] = self.log_snk + eta * w_snk
        for j in range(K - 2, -1, -1):
            scores = self.log_mid[j] + eta * w_mid[j] + kernels[j + 1][None, :]
            kernels[j] = logsumexp(scores, axis=1)
        return kernels

    def update(self, eta: float, w_mid: np.ndarray, w_snk: np.ndarray) -> list[np.ndarray]:
        """One multiplicative-update step with per-round edge rewards.

        ``w_mid`` has shape (K-1, L, L) (entries above the diagonal are
        ignored), ``w_snk`` shape (L,); source edges always weigh zero.
        Returns the log path kernels used, mainly for diagnostics and tests.
        """
        w_mid = np.asarray(w_mid, dtype=float)
        w_snk = np.asarray(w_snk, dtype=float)
        kernels = self.log_kernels(eta, w_mid, w_snk)
        log_total = logsumexp(self.log_src + kernels[0])

        self.log_src = self.log_src + kernels[0] - log_total
        for j in range(self.units - 1):
            self.log_mid[j] = (
                self.log_mid[j] + eta * w_mid[j] + kernels[j + 1][None, :] - kernels[j][:, None]
            )
        self.log_snk = self.log_snk + eta * w_snk - kernels[self.units - 1]
        self._renormalize()
        return kernels

    def _renormalize(self) -> None:
        """Remove float drift so every vertex's outgoing mass is exactly one."""
        self.log_src -= logsumexp(self.log_src)
        for j in range(self.units - 1):
            self.log_mid[j] -= logsumexp(self.log_mid[j], axis=1)[:, None]
        self.log_snk[:] = 0.0

    def normalization_gap(self) -> float:
        """Largest deviation of any vertex's outgoing probability mass from 1."""
        gaps = [abs(np.exp(logsumexp(self.log_src)) - 1.0)]
        for j in range(self.units - 1):
            gaps.append(float(np.abs(np.exp(logsumexp(self.log_mid[j], axis=1)) - 1.0).max()))
        gaps.append(float(np.abs(np.exp(self.log_snk) - 1.0).max()))
        return max(gaps)

    def edge_marginals(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exact single-pass edge visit probabilities under the walk.

        A forward sweep accumulates the vertex occupation mass alpha; since
        every edge table is stochastic toward the sink, the backward mass is
        one and p(e=(u,v)) = alpha(u) * phi(e). Output: (p_src, p_mid, p_snk)
        matching the shapes of the log tables; every layer boundary sums to 1.
        """
        p_src = np.exp(self.log_src)
        alpha = p_src.copy()
        p_mid = np.zeros_like(self.log_mid)
        for j in range(self.units - 1):
            p_mid[j] = alpha[:, None] * np.exp(self.log_mid[j])
            alpha = p_mid[j].sum(axis=0)
        p_snk = alpha * np.exp(self.log_snk)
        return p_src, p_mid, p_snk

    def phi_rows(self) -> Iterator[tuple[str, str, str, float]]:
        """Flat (layer, from_level, to_level, probability) view for debugging."""
        for i, level in enumerate(self.levels):
            yield "source", "-", str(int(level)), float(np.exp(self.log_src[i]))
        for j in range(self.units - 1):
            probs = np.exp(self.log_mid[j])
            for ri in range(self.n_levels):
                for si in range(ri + 1):
                    yield (
                        str(j + 1),
                        str(int(self.levels[ri])),
                        str(int(self.levels[si])),
                        float(probs[ri, si]),
                    )
        for i, level in enumerate(self.levels):
            yield str(self.units), str(int(level)), "+", float(np.exp(self.log_snk[i]))
