"""Frequency estimation under a spherical Gaussian mixture prior.

When record vectors follow a well-separated spherical mixture, the mixture
density itself serves as the probability estimate: fit it by EM, evaluate
the density at every record, and let the rejection sampler flatten it.  A
planner converts accuracy targets into the EM sample size and iteration
count.  All densities are handled in log space.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dataset import Dataset, DatasetError
from .rejection import ProbabilityMap

__all__ = [
    "CollapseError",
    "DensityUnderflowError",
    "EmResult",
    "GmmPlan",
    "MixtureModel",
    "SeparationWarning",
    "em_fit",
    "estimate_probs_gmm",
    "plan_gmm",
]

_LOG_FLOOR = -700.0  # exp underflows to zero a little below this


class CollapseError(RuntimeError):
    """Every EM restart collapsed a component."""


class DensityUnderflowError(ValueError):
    """A record's log density is too small to exponentiate."""


class SeparationWarning(UserWarning):
    """Fitted means are closer than the well-separated regime requires."""


@dataclass(frozen=True)
class MixtureModel:
    """Spherical Gaussian mixture: weights, means, per-component variances."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        var = np.asarray(self.variances, dtype=np.float64)
        if mu.ndim != 2 or w.shape != (mu.shape[0],) or var.shape != (mu.shape[0],):
            raise DatasetError("inconsistent mixture shapes")
        if abs(w.sum() - 1.0) > 1e-9 or (w < 0).any():
            raise DatasetError("mixture weights must be a probability vector")
        if (var <= 0).any():
            raise DatasetError("variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        """Log density at each row of x (shape (n, d) or (d,))."""
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        d = self.dim
        if pts.shape[1] != d:
            raise DatasetError(f"points have dimension {pts.shape[1]}, model {d}")
        sq = ((pts[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        comp = (
            np.log(self.weights)[None, :]
            - 0.5 * sq / self.variances[None, :]
            - 0.5 * d * np.log(2.0 * np.pi * self.variances)[None, :]
        )
        return logsumexp(comp, axis=1)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def check_separation(self, c: float = 1.0) -> bool:
        """Warn unless means are pairwise farther than the mixing scale.

        Threshold between components i, j:
        c * max(sigma_i, sigma_j) * sqrt(log(sigma_max/sigma_min / w_min)).
        """
        sig = np.sqrt(self.variances)
        rho = sig.max() / sig.min()
        w_min = self.weights.min()
        arg = max(math.log(rho / w_min), 0.0) if w_min > 0 else np.inf
        ok = True
        for i in range(self.k):
            for j in range(i + 1, self.k):
                thresh = c * max(sig[i], sig[j]) * math.sqrt(arg)
                if np.linalg.norm(self.means[i] - self.means[j]) < thresh:
                    ok = False
        if not ok:
            warnings.warn(
                "mixture components are not well separated; density-based "
                "estimates may not flatten the sample",
                SeparationWarning,
                stacklevel=2,
            )
        return ok

    def to_json(self, path: str) -> None:
        payload = {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str) -> "MixtureModel":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            weights=np.array(payload["weights"]),
            means=np.array(payload["means"]),
            variances=np.array(payload["variances"]),
        )


@dataclass(frozen=True)
class EmResult:
    """Fitted model with its fitting trace."""

    model: MixtureModel
    loglik: tuple[float, ...]
    iterations: int
    converged: bool
    restarts_used: int


def _init_params(
    x: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Farthest-point style means on a subsample, uniform weights, pooled var."""
    n, d = x.shape
    sub = x[rng.choice(n, size=min(n, 2048), replace=False)]
    means = np.empty((k, d))
    means[0] = sub[rng.integers(len(sub))]
    d2 = ((sub - means[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(len(sub), 1.0 / len(sub))
        means[j] = sub[rng.choice(len(sub), p=probs)]
        d2 = np.minimum(d2, ((sub - means[j]) ** 2).sum(axis=1))
    weights = np.full(k, 1.0 / k)
    pooled = ((x - x.mean(axis=0)) ** 2).sum() / (n * d)
    variances = np.full(k, max(pooled, 1e-12))
    return weights, means, variances


def em_fit(
    data: Dataset | np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 200,
    tol: float = 1e-6,
    max_restarts: int = 8,
    collapse_eps: float = 1e-8,
) -> EmResult:
    """Fit a spherical mixture by EM.

    Stops after ``max_iter`` iterations or when the total parameter change
    falls below ``tol``.  A collapsing component (vanishing variance or
    weight) triggers a restart with fresh initialization, up to
    ``max_restarts``, after which CollapseError is raised.  The returned
    trace of log-likelihoods is non-decreasing.
    """
    x = data.features if isinstance(data, Dataset) else np.asarray(data, np.float64)
    if x is None:
        raise DatasetError("EM requires vector records")
    if x.ndim != 2 or len(x) < k:
        raise DatasetError("need at least k points of equal dimension")
    if k < 1:
        raise ValueError("k must be positive")
    n, d = x.shape
    root = np.random.SeedSequence(seed)
    for attempt, child in enumerate(root.spawn(max_restarts + 1)):
        rng = np.random.default_rng(child)
        weights, means, variances = _init_params(x, k, rng)
        history: list[float] = []
        collapsed = False
        converged = False
        iterations = 0
        for it in range(max_iter):
            sq = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
            log_comp = (
                np.log(weights)[None, :]
                - 0.5 * sq / variances[None, :]
                - 0.5 * d * np.log(2.0 * np.pi * variances)[None, :]
            )
            log_norm = logsumexp(log_comp, axis=1)
            history.append(float(log_norm.sum()))
            resp = np.exp(log_comp - log_norm[:, None])
            mass = resp.sum(axis=0)
            new_weights = mass / n
            if (new_weights < collapse_eps).any():
                collapsed = True
                break
            new_means = (resp.T @ x) / mass[:, None]
            sq_new = ((x[:, None, :] - new_means[None, :, :]) ** 2).sum(axis=2)
            new_variances = (resp * sq_new).sum(axis=0) / (mass * d)
            if (new_variances < collapse_eps).any():
                collapsed = True
                break
            delta = (
                np.abs(new_weights - weights).sum()
                + np.linalg.norm(new_means - means, axis=1).sum()
                + np.abs(new_variances - variances).sum()
            )
            weights, means, variances = new_weights, new_means, new_variances
            iterations = it + 1
            if delta < tol:
                converged = True
                break
        if collapsed:
            continue
        sq = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        log_comp = (
            np.log(weights)[None, :]
            - 0.5 * sq / variances[None, :]
            - 0.5 * d * np.log(2.0 * np.pi * variances)[None, :]
        )
        history.append(float(logsumexp(log_comp, axis=1).sum()))
        model = MixtureModel(weights=weights, means=means, variances=variances)
        return EmResult(
            model=model,
            loglik=tuple(history),
            iterations=iterations,
            converged=converged,
            restarts_used=attempt,
        )
    raise CollapseError(
        f"all {max_restarts + 1} EM attempts collapsed a component (k={k})"
    )


def estimate_probs_gmm(data: Dataset, model: MixtureModel) -> ProbabilityMap:
    """Mixture density at each record as its probability estimate.

    The floor of the resulting map is the smallest density over the data.
    Records whose log density falls below the exponentiation floor are a
    hard error: the dataset reaches far outside the fitted model.
    """
    if data.features is None:
        raise DatasetError("density estimates require vector records")
    logd = model.logpdf(data.features)
    if (logd < _LOG_FLOOR).any():
        worst = float(logd.min())
        raise DensityUnderflowError(
            f"log density {worst:.1f} below {_LOG_FLOOR}; "
            "records lie impossibly far from the fitted mixture"
        )
    return ProbabilityMap(dense=np.exp(logd), source="gmm")


@dataclass(frozen=True)
class GmmPlan:
    """EM iteration and sample-size budget for target accuracy."""

    epsilon: float
    delta: float
    tau: float
    eta_min: float
    dim: int
    k: int
    c_prime: float
    c_iters: float
    iterations: int
    m_raw: float
    m: int


def plan_gmm(
    epsilon: float,
    delta: float,
    tau: float,
    eta_min: float,
    dim: int,
    k: int,
    c_prime: float = 1.0,
    c_iters: float = 1.0,
) -> GmmPlan:
    """Plan the EM budget.

    iterations T = ceil(c_iters log(1/(tau epsilon))), and
    m = ceil(c_prime d^3 (log(k^2 T) + log(1/delta)) / (eta_min tau^2 eps^2)).
    ``tau`` is the smallest mixture density over the data, ``eta_min`` the
    smallest component weight.
    """
    if not (0 < epsilon < 1) or not (0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if tau <= 0 or eta_min <= 0 or eta_min > 1:
        raise ValueError("tau must be positive and eta_min in (0, 1]")
    if dim < 1 or k < 1:
        raise ValueError("dim and k must be positive")
    if c_prime <= 0 or c_iters <= 0:
        raise ValueError("constants must be positive")
    iters = max(1, math.ceil(c_iters * math.log(1.0 / (tau * epsilon))))
    m_raw = (
        c_prime
        * dim**3
        * (math.log(k**2 * iters) + math.log(1.0 / delta))
        / (eta_min * tau**2 * epsilon**2)
    )
    return GmmPlan(
        epsilon=epsilon,
        delta=delta,
        tau=tau,
        eta_min=eta_min,
        dim=dim,
        k=k,
        c_prime=c_prime,
        c_iters=c_iters,
        iterations=iters,
        m_raw=m_raw,
        m=max(1, math.ceil(m_raw)),
    )
