"""Rejection sampling of records against an estimated probability map.

Stage two of the cleaning pipeline: given per-record probability estimates
``phat`` and their minimum (the floor), draw records uniformly and accept a
draw ``v`` when a fresh uniform variate falls below ``floor / phat(v)``.  The
induced entity distribution is proportional to ``prob(e) * floor / phat(e)``,
so exact estimates yield an exactly uniform distribution over entities.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .dataset import Dataset, DiscreteDistribution

__all__ = [
    "CoverageError",
    "DegenerateMapWarning",
    "InvalidMapError",
    "ProbabilityMap",
    "SampleBudgetError",
    "SampleResult",
    "exact_induced_distribution",
    "expected_trials_per_accept",
    "sample_clean",
]


class InvalidMapError(ValueError):
    """Probability map with non-positive, non-finite, or missing mass."""


class CoverageError(KeyError):
    """A drawn record has no probability estimate."""


class SampleBudgetError(RuntimeError):
    """Trial cap exhausted before the requested sample size was reached."""


class DegenerateMapWarning(UserWarning):
    """All estimates equal; rejection degenerates to uniform record draws."""


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-record probability estimates with their floor.

    Two backings share one interface: a dense array aligned with a dataset's
    record order, or a sparse ``{content code: phat}`` table with a default
    for unseen codes (the balanced estimator emits the sparse form, keeping
    its cost proportional to the sample, not the dataset).  ``resolve``
    materializes the dense per-record view.

    ``group_ids``, when present, carries the cluster id each record was
    assigned by the estimator that produced the map.
    """

    dense: np.ndarray | None = None
    by_code: Mapping[int, float] | None = None
    default: float | None = None
    ids: tuple | None = None
    source: str = "unknown"
    group_ids: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.dense is None) == (self.by_code is None):
            raise InvalidMapError("exactly one backing (dense or by_code) required")
        if self.dense is not None:
            arr = np.asarray(self.dense, dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise InvalidMapError("dense map must be a non-empty 1-d array")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise InvalidMapError("probability estimates must be positive and finite")
            object.__setattr__(self, "dense", arr)
        else:
            vals = list(self.by_code.values())
            if not vals:
                raise InvalidMapError("empty sparse probability map")
            if any(not np.isfinite(v) or v <= 0 for v in vals):
                raise InvalidMapError("probability estimates must be positive and finite")
            if self.default is not None and (
                not np.isfinite(self.default) or self.default <= 0
            ):
                raise InvalidMapError("default estimate must be positive and finite")

    @property
    def floor(self) -> float:
        """Smallest estimate in the map (the acceptance numerator)."""
        if self.dense is not None:
            return float(self.dense.min())
        lo = min(self.by_code.values())
        if self.default is not None:
            lo = min(lo, self.default)
        return float(lo)

    def resolve(self, data: Dataset) -> np.ndarray:
        """Dense per-record estimates aligned with ``data``."""
        if self.dense is not None:
            if self.dense.shape[0] != data.n:
                raise CoverageError(
                    f"map covers {self.dense.shape[0]} records, dataset has {data.n}"
                )
            return self.dense
        codes = data.dedup_codes
        n_codes = int(codes.max()) + 1
        table = np.full(n_codes, np.nan)
        for code, val in self.by_code.items():
            if 0 <= code < n_codes:
                table[code] = val
        out = table[codes]
        missing = np.isnan(out)
        if missing.any():
            if self.default is None:
                raise CoverageError(
                    f"{int(missing.sum())} records have no probability estimate"
                )
            out[missing] = self.default
        return out

    def to_csv(self, path: str, data: Dataset) -> None:
        """Write the two-column (record id, estimate) artifact."""
        dense = self.resolve(data)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["record_id", "phat"])
            for rid, val in zip(data.ids, dense):
                writer.writerow([rid, f"{val:.17g}"])

    @classmethod
    def from_csv(cls, path: str) -> "ProbabilityMap":
        ids: list = []
        vals: list = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[:2] != ["record_id", "phat"]:
                raise InvalidMapError(f"{path} is not a probability map artifact")
            for row in reader:
                ids.append(row[0])
                vals.append(float(row[1]))
        return cls(dense=np.array(vals), ids=tuple(ids), source="file")


@dataclass(frozen=True)
class SampleResult:
    """Accepted records plus the trial accounting of the run."""

    record_indices: np.ndarray
    trials: int
    per_entity_counts: Mapping[object, int]

    @property
    def size(self) -> int:
        return int(self.record_indices.shape[0])

    @property
    def trials_per_accept(self) -> float:
        return self.trials / max(self.size, 1)


def _acceptance_ratios(data: Dataset, pmap: ProbabilityMap) -> np.ndarray:
    phat = pmap.resolve(data)
    ratios = pmap.floor / phat
    if np.allclose(phat, phat[0]):
        warnings.warn(
            "all probability estimates are equal; sampling is uniform over records",
            DegenerateMapWarning,
            stacklevel=3,
        )
    return ratios


def sample_clean(
    data: Dataset,
    pmap: ProbabilityMap,
    p: int,
    seed: int,
    max_trials_factor: int = 10_000,
    chunk: int = 1 << 16,
) -> SampleResult:
    """Draw ``p`` records (with replacement) via rejection.

    Accepts a uniform draw ``v`` when ``u < floor / phat(v)`` for a fresh
    ``u ~ U[0, 1)``; a ratio of one always accepts.  Raises
    SampleBudgetError after ``max_trials_factor * p`` trials so a badly
    scaled map fails loudly instead of hanging.
    """
    if p <= 0:
        raise ValueError("requested sample size must be positive")
    ratios = _acceptance_ratios(data, pmap)
    rng = np.random.default_rng(seed)
    max_trials = max_trials_factor * p
    accepted: list[np.ndarray] = []
    n_acc = 0
    trials = 0
    while n_acc < p:
        if trials >= max_trials:
            raise SampleBudgetError(
                f"{trials} trials produced {n_acc} accepts; requested {p}"
            )
        take = min(chunk, max_trials - trials)
        idx = rng.integers(0, data.n, size=take)
        u = rng.random(take)
        hits = idx[u < ratios[idx]]
        if n_acc + hits.size >= p:
            need = p - n_acc
            # exact trial count up to and including the accepting draw of
            # the p-th record
            hit_pos = np.flatnonzero(u < ratios[idx])
            trials += int(hit_pos[need - 1]) + 1
            hits = hits[:need]
        else:
            trials += take
        accepted.append(hits)
        n_acc += hits.size
    indices = np.concatenate(accepted) if accepted else np.empty(0, dtype=np.int64)
    counts = np.bincount(
        data.entity_codes[indices], minlength=len(data.entity_names)
    )
    names = data.entity_names
    per_entity = {names[i]: int(c) for i, c in enumerate(counts) if c > 0}
    return SampleResult(
        record_indices=indices, trials=trials, per_entity_counts=per_entity
    )


def exact_induced_distribution(
    data: Dataset, pmap: ProbabilityMap
) -> DiscreteDistribution:
    """Closed-form entity distribution the sampler converges to.

    Mass of entity ``e`` is proportional to the sum of ``floor / phat(v)``
    over the records ``v`` of ``e``.  Invariant under rescaling all
    estimates by a constant, since the floor rescales with them.
    """
    phat = pmap.resolve(data)
    weights = pmap.floor / phat
    masses = np.bincount(
        data.entity_codes, weights=weights, minlength=len(data.entity_names)
    )
    masses = masses / masses.sum()
    names = data.entity_names
    return DiscreteDistribution({names[i]: float(m) for i, m in enumerate(masses)})


def expected_trials_per_accept(data: Dataset, pmap: ProbabilityMap) -> float:
    """Mean number of uniform draws consumed per accepted record."""
    ratios = _acceptance_ratios(data, pmap)
    return float(1.0 / ratios.mean())
