"""Frequency estimation for balanced datasets.

When every entity holds at least an eta fraction of the records, counting a
uniform with-replacement sample is enough: seen values get their sample
fraction as the estimate, unseen values get the smallest seen fraction.  A
planner sizes the sample so the induced sampling distribution lands within a
requested total variation of uniform, and two helpers (an unbiased
distinct-count estimator over a without-replacement sample plus a dispersion
penalty) produce a defensible lower bound for eta when nobody knows it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import gammaln

from .dataset import Dataset, DatasetError
from .rejection import DegenerateMapWarning, ProbabilityMap

__all__ = [
    "BalancedPlan",
    "FingerprintStats",
    "UnstableSumWarning",
    "estimate_eta",
    "estimate_probs_balanced",
    "eta_lower_bound",
    "fingerprint_sample",
    "goodman_estimate",
    "plan_sample_size",
]


class UnstableSumWarning(UserWarning):
    """Alternating-sum terms grew past the configured magnitude cap."""


@dataclass(frozen=True)
class BalancedPlan:
    """Planned with-replacement sample size for target accuracy.

    ``m_raw`` keeps the un-rounded bound so scaling laws can be asserted
    exactly; ``m`` is the usable integer size.
    """

    epsilon: float
    delta: float
    eta: float
    a: float
    n_entities: int
    m_raw: float
    m: int


def plan_sample_size(
    epsilon: float,
    delta: float,
    eta: float,
    n_entities: int | None = None,
    a: float = 1.0,
) -> BalancedPlan:
    """Sample size meeting (epsilon, delta) on an eta-balanced dataset.

    m = (a / (eps^2 eta^2)) (log E log(log E / (eps eta)) + log(1/delta))
    with natural logs.  When the entity count is unknown the worst case
    E = ceil(1/eta) is used (balance caps the entity count).
    """
    if not (0 < epsilon < 1) or not (0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if not (0 < eta <= 1):
        raise ValueError("eta must lie in (0, 1]")
    if a <= 0:
        raise ValueError("slack constant a must be positive")
    n_ent = n_entities if n_entities is not None else math.ceil(1.0 / eta)
    if n_ent < 1:
        raise ValueError("entity count must be positive")
    log_e = math.log(n_ent)
    entropy_term = log_e * math.log(log_e / (epsilon * eta)) if log_e > 0 else 0.0
    m_raw = (a / (epsilon**2 * eta**2)) * (entropy_term + math.log(1.0 / delta))
    return BalancedPlan(
        epsilon=epsilon,
        delta=delta,
        eta=eta,
        a=a,
        n_entities=n_ent,
        m_raw=m_raw,
        m=max(1, math.ceil(m_raw)),
    )


def estimate_probs_balanced(data: Dataset, m: int, seed: int) -> ProbabilityMap:
    """Estimate per-record probabilities from a uniform sample of size m.

    The sample is drawn with replacement; only per-value counts matter, so
    they are drawn directly as one multinomial over the distinct record
    contents (identical in law, and cost stays proportional to the number
    of distinct values rather than the dataset).  Unseen values default to
    the smallest seen estimate.
    """
    if m <= 0:
        raise ValueError("sample size m must be positive")
    rng = np.random.default_rng(seed)
    freqs = data.dedup_freqs
    counts = rng.multinomial(m, freqs / data.n)
    seen = np.flatnonzero(counts)
    if seen.size == 0:  # pragma: no cover - multinomial always places m > 0
        raise RuntimeError("empty sample")
    phat = {int(code): counts[code] / m for code in seen}
    default = counts[seen].min() / m
    if seen.size == 1:
        warnings.warn(
            "sample saw a single distinct value; estimates are degenerate",
            DegenerateMapWarning,
            stacklevel=2,
        )
    return ProbabilityMap(by_code=phat, default=float(default), source="balanced")


@dataclass(frozen=True)
class FingerprintStats:
    """Fingerprint of a without-replacement sample.

    ``f[i]`` counts the distinct values seen exactly i times; ``r`` is the
    number of distinct values seen.  Consistency (sum f = r, sum i*f = m)
    is enforced.
    """

    m: int
    r: int
    f: Mapping[int, int]

    def __post_init__(self) -> None:
        if self.m <= 0:
            raise DatasetError("fingerprint sample size must be positive")
        if any(i <= 0 or c < 0 for i, c in self.f.items()):
            raise DatasetError("fingerprint keys must be positive, counts non-negative")
        if sum(self.f.values()) != self.r:
            raise DatasetError("fingerprint counts do not sum to r")
        if sum(i * c for i, c in self.f.items()) != self.m:
            raise DatasetError("fingerprint weighted counts do not sum to m")


def fingerprint_sample(
    data: Dataset, m: int, seed: int
) -> tuple[FingerprintStats, np.ndarray]:
    """Without-replacement sample summarized as (fingerprint, fractions).

    Returns the fingerprint plus the per-distinct-value sample fractions
    (count / m for each value that appeared), the inputs for the
    distinct-count estimate and the balance lower bound.
    """
    if not (1 <= m <= data.n):
        raise ValueError(f"m must lie in [1, {data.n}]")
    rng = np.random.default_rng(seed)
    counts = rng.multivariate_hypergeometric(data.dedup_freqs.astype(np.int64), m)
    pos = counts[counts > 0]
    values, reps = np.unique(pos, return_counts=True)
    stats = FingerprintStats(
        m=m, r=int(pos.size), f={int(v): int(c) for v, c in zip(values, reps)}
    )
    return stats, pos / m


def goodman_estimate(
    stats: FingerprintStats, n: int, magnitude_cap: float = 1e12
) -> float:
    """Unbiased estimate of the number of distinct values in the full table.

    E_hat = r + sum_i (-1)^(i+1) [(n-m+i-1)! (m-i)!] / [(n-m-1)! m!] f_i
    for a without-replacement sample of size m from n records.  Factorial
    ratios are evaluated through log-gamma; the alternating terms are summed
    exactly (math.fsum) in descending magnitude, and a term above
    ``magnitude_cap`` flags the result as numerically untrustworthy.
    Unbiasedness holds whenever no value occurs more than m times.
    """
    m = stats.m
    if not (1 <= m <= n - 1):
        raise ValueError("goodman estimate requires 1 <= m <= n - 1")
    terms = []
    for i, f_i in stats.f.items():
        if f_i == 0:
            continue
        log_w = (
            gammaln(n - m + i)
            - gammaln(n - m)
            + gammaln(m - i + 1)
            - gammaln(m + 1)
        )
        sign = 1.0 if (i + 1) % 2 == 0 else -1.0
        terms.append(sign * math.exp(log_w) * f_i)
    if terms and max(abs(t) for t in terms) > magnitude_cap:
        warnings.warn(
            "alternating correction terms exceed the magnitude cap; "
            "the distinct-count estimate is numerically unreliable",
            UnstableSumWarning,
            stacklevel=2,
        )
    terms.sort(key=abs, reverse=True)
    return stats.r + math.fsum(terms)


def eta_lower_bound(
    stats: FingerprintStats, n: int, c_values: np.ndarray
) -> float:
    """Lower bound on the balance level from one observed sample.

    eta >= 1/E_hat - (1 - 1/E_hat) * sigma_c * sqrt(2 r) where sigma_c is
    the dispersion (population std) of the per-distinct-value sample
    fractions.  Clamped below by 1/n, the smallest probability any present
    entity can have.
    """
    c = np.asarray(c_values, dtype=np.float64)
    if stats.r < 2 or c.size != stats.r:
        raise ValueError("bound requires at least two distinct sampled values")
    e_hat = goodman_estimate(stats, n)
    if e_hat <= 1.0:
        raise ValueError(
            f"distinct-count estimate {e_hat:.3g} <= 1; bound undefined"
        )
    sigma_c = float(c.std(ddof=0))
    bound = 1.0 / e_hat - (1.0 - 1.0 / e_hat) * sigma_c * math.sqrt(2.0 * stats.r)
    return max(bound, 1.0 / n)


def estimate_eta(data: Dataset, m: int, seed: int) -> float:
    """One-shot balance lower bound from a fresh without-replacement sample."""
    stats, c_values = fingerprint_sample(data, m, seed)
    return eta_lower_bound(stats, data.n, c_values)
