"""Choosing among candidate clusterings with a same-cluster oracle.

The quality of a candidate C against the target C* is the weighted pair
loss  L(C) = mu * P+[C splits the pair] + (1 - mu) * P-[C joins the pair],
where P+/P- are uniform over the target's positive and negative pairs.  The
selector estimates both terms by sampling pairs, routing each through the
oracle until both sides hold enough, and returns the empirical minimizer
(ties favour fewer clusters).  A planner sizes the per-side budget and a
query cap aborts runs whose oracle cost exceeds its expectation by more
than the allowed factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .clustering import Clustering

__all__ = [
    "OracleBudgetError",
    "SscReport",
    "SameClusterOracle",
    "exhaustive_losses",
    "pair_losses",
    "plan_pair_budget",
    "ssc_select",
]


class OracleBudgetError(RuntimeError):
    """Oracle query cap exhausted before both pair sides filled.

    Carries the pairs routed before the cap so a caller can still rank
    candidates on whatever evidence the oracle did provide.
    """

    def __init__(
        self,
        message: str,
        pos_pairs: Sequence[tuple[int, int]] = (),
        neg_pairs: Sequence[tuple[int, int]] = (),
        queries: int = 0,
        query_cap: int = 0,
        gamma_hat: float = float("nan"),
    ) -> None:
        super().__init__(message)
        self.pos_pairs = tuple(pos_pairs)
        self.neg_pairs = tuple(neg_pairs)
        self.queries = queries
        self.query_cap = query_cap
        self.gamma_hat = gamma_hat


class SameClusterOracle:
    """Answers same-cluster queries from ground-truth labels, counting calls."""

    def __init__(self, labels: Sequence) -> None:
        self._labels = list(labels)
        self.queries = 0

    def __call__(self, i: int, j: int) -> bool:
        self.queries += 1
        return self._labels[i] == self._labels[j]


def plan_pair_budget(
    n_candidates: int, epsilon: float, delta: float, a: float = 1.0
) -> int:
    """Per-side pair count for epsilon-accurate losses over the candidates.

    m = ceil(a (log s + log(2/delta)) / epsilon^2) with s candidates.
    """
    if n_candidates < 1:
        raise ValueError("need at least one candidate")
    if not (0 < epsilon < 1) or not (0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    m = a * (math.log(n_candidates) + math.log(2.0 / delta)) / epsilon**2
    return max(1, math.ceil(m))


def pair_losses(
    candidate: Clustering,
    pos_pairs: Sequence[tuple[int, int]],
    neg_pairs: Sequence[tuple[int, int]],
    mu_weight: float = 0.5,
) -> tuple[float, float, float]:
    """(positive loss, negative loss, weighted loss) of one candidate.

    Positive loss: fraction of target-positive pairs the candidate splits.
    Negative loss: fraction of target-negative pairs the candidate joins.
    """
    lab = candidate.labels
    pl = 0.0
    for i, j in pos_pairs:
        if not (lab[i] == lab[j] and lab[i] >= 0):
            pl += 1
    pl /= max(len(pos_pairs), 1)
    nl = 0.0
    for i, j in neg_pairs:
        if lab[i] == lab[j] and lab[i] >= 0:
            nl += 1
    nl /= max(len(neg_pairs), 1)
    return pl, nl, mu_weight * pl + (1.0 - mu_weight) * nl


def exhaustive_losses(
    candidates: Sequence[Clustering],
    oracle: Callable[[int, int], bool],
    n_points: int,
    mu_weight: float = 0.5,
) -> list[tuple[float, float, float]]:
    """Losses of every candidate over all unordered distinct pairs."""
    pos, neg = [], []
    for i, j in combinations(range(n_points), 2):
        (pos if oracle(i, j) else neg).append((i, j))
    return [pair_losses(c, pos, neg, mu_weight) for c in candidates]


@dataclass(frozen=True)
class SscReport:
    """Outcome of one selection run."""

    winner: int
    losses: tuple[float, ...]
    queries: int
    query_cap: int
    gamma_hat: float
    n_pos: int
    n_neg: int


def ssc_select(
    candidates: Sequence[Clustering],
    n_points: int,
    oracle: Callable[[int, int], bool],
    m_pairs: int,
    seed: int,
    mu_weight: float = 0.5,
    nu: float = 1.0,
    gamma_probe: int = 100,
) -> SscReport:
    """Pick the candidate with the smallest sampled pair loss.

    Pairs (x, y), x != y, are drawn uniformly and routed by the oracle into
    the positive or negative side until both hold ``m_pairs``.  The query
    cap is (1 + nu) (m/gamma + m/(1-gamma)) with gamma, the negative-pair
    rate, estimated from the first ``gamma_probe`` answers.  Ties in the
    empirical loss go to the candidate with fewer clusters.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    if n_points < 2:
        raise ValueError("need at least two points to draw pairs")
    if m_pairs < 1:
        raise ValueError("pair budget must be positive")
    if not (0 <= mu_weight <= 1):
        raise ValueError("mu_weight must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pos: list[tuple[int, int]] = []
    neg: list[tuple[int, int]] = []
    queries = 0
    probe_neg = 0
    cap = None
    while len(pos) < m_pairs or len(neg) < m_pairs:
        if cap is not None and queries >= cap:
            raise OracleBudgetError(
                f"{queries} oracle queries exceed the cap {cap} "
                f"(gamma_hat={gamma_hat:.3f})",
                pos_pairs=pos,
                neg_pairs=neg,
                queries=queries,
                query_cap=cap,
                gamma_hat=gamma_hat,
            )
        i = int(rng.integers(n_points))
        j = int(rng.integers(n_points - 1))
        if j >= i:
            j += 1
        same = bool(oracle(i, j))
        queries += 1
        if same:
            pos.append((i, j))
        else:
            neg.append((i, j))
            if queries <= gamma_probe:
                probe_neg += 1
        if queries == gamma_probe and cap is None:
            gamma_hat = min(max(probe_neg / gamma_probe, 1.0 / gamma_probe),
                            1.0 - 1.0 / gamma_probe)
            cap = math.ceil(
                (1.0 + nu) * (m_pairs / gamma_hat + m_pairs / (1.0 - gamma_hat))
            )
    if cap is None:
        gamma_hat = max(len(neg), 1) / max(queries, 1)
        cap = queries
    losses = [pair_losses(c, pos, neg, mu_weight)[2] for c in candidates]
    order = sorted(range(len(candidates)), key=lambda t: (losses[t], candidates[t].k))
    return SscReport(
        winner=order[0],
        losses=tuple(losses),
        queries=queries,
        query_cap=cap,
        gamma_hat=gamma_hat,
        n_pos=len(pos),
        n_neg=len(neg),
    )
