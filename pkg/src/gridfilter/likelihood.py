"""Per-step observation log-likelihood ratios, in two normalizations.

For an observation y at state x with scaled mean m = mean(t, x) and total
covariance C = C_t(x), the full log ratio against a standard normal reference
is

    log_lambda = ||y||^2 / 2 - (y - m)' C^{-1} (y - m) / 2 - log(det C) / 2,

and the reduced form drops the observation-only term:

    log_lambda_hat = log_lambda - ||y||^2 / 2.

The dropped factor depends on the observations alone, so it cancels from
every filtering ratio; the reduced form is what the recursions use because
its running sums stay uniformly bounded above.  All quadratic forms and log
determinants go through Cholesky factors; C^{-1} is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ModelDefinitionError
from .model import SystemSpec

__all__ = [
    "LogLikelihoodTerms",
    "QuadFormWorkspace",
    "log_lambda",
    "log_lambda_hat",
    "log_lambda_hat_at_points",
    "accumulate",
]


@dataclass(frozen=True)
class LogLikelihoodTerms:
    """Append-only record of per-step log terms and their running sums."""

    per_step: np.ndarray
    cumulative: np.ndarray

    @staticmethod
    def empty() -> "LogLikelihoodTerms":
        return LogLikelihoodTerms(per_step=np.empty(0), cumulative=np.empty(0))

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0


def accumulate(terms: LogLikelihoodTerms, value: float) -> LogLikelihoodTerms:
    """Pure append of one per-step term; running sum is extended, not recomputed."""
    value = float(value)
    return LogLikelihoodTerms(
        per_step=np.append(terms.per_step, value),
        cumulative=np.append(terms.cumulative, terms.total + value),
    )


def _chol_terms(spec: SystemSpec, t: int, x: np.ndarray, y: np.ndarray):
    c = spec.obs.total_cov(t, np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(spec.obs.n)
    resid = y - spec.obs.mean(t, np.asarray(x, dtype=float)).reshape(spec.obs.n)
    try:
        factor = cho_factor(c, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ModelDefinitionError(
            f"total covariance not positive definite at t={t}, x={x}") from exc
    quad = float(resid @ cho_solve(factor, resid))
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return quad, logdet, y


def log_lambda_hat(spec: SystemSpec, t: int, x: np.ndarray, y: np.ndarray) -> float:
    """Reduced log likelihood ratio at (t, x, y)."""
    quad, logdet, _ = _chol_terms(spec, t, x, y)
    return -0.5 * (quad + logdet)


def log_lambda(spec: SystemSpec, t: int, x: np.ndarray, y: np.ndarray) -> float:
    """Full log likelihood ratio; equals log_lambda_hat + ||y||^2 / 2."""
    quad, logdet, y = _chol_terms(spec, t, x, y)
    return -0.5 * (quad + logdet) + 0.5 * float(y @ y)


class QuadFormWorkspace:
    """Cholesky factors, log-determinants and means for a fixed point set.

    Stationary observation models are factorized once and reused at every
    step; time-varying ones keep only the factors of the step asked for last,
    so memory stays flat over long runs.
    """

    def __init__(self, spec: SystemSpec, points: np.ndarray):
        self.spec = spec
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self._cache_t: Optional[int] = None
        self._cache = None

    def _compute(self, t: int):
        spec, pts = self.spec, self.points
        k = len(pts)
        n = spec.obs.n
        if spec.obs.vectorized:
            means = np.asarray(spec.obs.mean(t, pts), dtype=float).reshape(k, n)
            covs = np.asarray(spec.obs.total_cov(t, pts), dtype=float).reshape(k, n, n)
        else:
            means = np.empty((k, n))
            covs = np.empty((k, n, n))
            for i, x in enumerate(pts):
                means[i] = spec.obs.mean(t, x)
                covs[i] = spec.obs.total_cov(t, x)
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            for i, x in enumerate(pts):
                try:
                    np.linalg.cholesky(covs[i])
                except np.linalg.LinAlgError as exc:
                    raise ModelDefinitionError(
                        f"total covariance not positive definite at t={t}, "
                        f"x={x}") from exc
            raise
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        return means, chol, logdet

    def factors(self, t: int):
        if self.spec.obs.stationary:
            if self._cache is None:
                self._cache = self._compute(0)
            return self._cache
        if self._cache_t != t:
            self._cache = self._compute(t)
            self._cache_t = t
        return self._cache


def log_lambda_hat_at_points(spec: SystemSpec, t: int, points: np.ndarray,
                             y: np.ndarray,
                             workspace: Optional[QuadFormWorkspace] = None) -> np.ndarray:
    """Reduced log likelihood ratio of one observation at many states at once.

    Matches per-point ``log_lambda_hat`` up to floating point roundoff; the
    workspace, when given, must have been built for the same point set.
    """
    if workspace is None:
        workspace = QuadFormWorkspace(spec, points)
    means, chol, logdet = workspace.factors(t)
    y = np.asarray(y, dtype=float).reshape(spec.obs.n)
    resid = y[None, :] - means
    z = np.linalg.solve(chol, resid[:, :, None])[:, :, 0]
    quad = np.sum(z * z, axis=1)
    return -0.5 * (quad + logdet)
