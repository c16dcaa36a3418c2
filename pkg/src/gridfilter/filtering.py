"""Grid filter recursion, brute-force path-sum oracle, and exact finite-state filter.

The grid filter tracks a weight per cell center.  Each step propagates the
weights through the quantized chain, multiplies in the reduced likelihood
ratio of the new observation, renormalizes, and reads the estimate off as the
weighted mean of the centers.  Everything persistent is kept in log domain;
the per-step normalizer increments accumulate into ``log_norm``, the log of
the un-normalized conditional mass.

``path_sum_oracle`` computes the same ratio by enumerating every chain path
and is the ground truth the recursion is tested against.
``exact_forward_filter`` is the classical scaled forward algorithm for models
whose dynamics really are a finite-state chain; it deliberately runs in
scaled linear domain so the two implementations share no recursion code.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .csvio import write_csv
from .errors import BudgetExceededError, DegenerateUpdateError, ModelDefinitionError
from .likelihood import QuadFormWorkspace, log_lambda_hat_at_points
from .model import SystemSpec
from .quantize import QuantizedChain
from .registry import FiniteStateKernel

__all__ = [
    "FilterState",
    "FilterRunResult",
    "initial_filter_state",
    "grid_filter_step",
    "run_grid_filter",
    "path_sum_oracle",
    "exact_forward_filter",
]

_ORACLE_MAX_T = 6
_ORACLE_MAX_PATHS = 10**6


@dataclass
class FilterState:
    """Posterior over grid centers after absorbing observations up to time t.

    ``t == -1`` is the pre-observation state holding the chain's initial law.
    ``log_weights`` are normalized (their exponentials sum to one);
    ``log_norm`` carries the accumulated log normalizers.
    """

    t: int
    log_weights: np.ndarray
    estimate: np.ndarray
    log_norm: float


@dataclass
class FilterRunResult:
    """Estimates and normalizers of a full filtering pass."""

    estimates: np.ndarray
    log_norms: np.ndarray
    resolution: tuple[int, ...]
    wall_time: float
    final_state: Optional[FilterState] = None

    def to_csv(self, path: str, meta: Optional[dict] = None) -> None:
        m = self.estimates.shape[1] if self.estimates.ndim == 2 else 0
        header = ["t"] + [f"estimate_{d}" for d in range(m)] + ["log_norm"]
        rows = [[t, *self.estimates[t], self.log_norms[t]]
                for t in range(self.estimates.shape[0])]
        full_meta = {"a_per_dim": " ".join(str(a) for a in self.resolution),
                     "horizon": self.estimates.shape[0] - 1}
        full_meta.update(meta or {})
        write_csv(path, full_meta, header, rows)


def initial_filter_state(chain: QuantizedChain) -> FilterState:
    with np.errstate(divide="ignore"):
        logw = np.log(chain.initial)
    logw = logw - logsumexp(logw)
    return FilterState(
        t=-1,
        log_weights=logw,
        estimate=chain.initial @ chain.grid.centers,
        log_norm=0.0,
    )


def grid_filter_step(chain: QuantizedChain, spec: SystemSpec, state: FilterState,
                     y: np.ndarray, workspace: Optional[QuadFormWorkspace] = None,
                     use_full_likelihood: bool = False) -> FilterState:
    """Advance the posterior by one observation.

    ``use_full_likelihood`` multiplies in the un-reduced ratio instead; the
    extra factor is constant across cells, so estimates are unchanged and
    only ``log_norm`` moves.
    """
    if state.t < -1:
        raise ValueError("state.t must be >= -1")
    t = state.t + 1
    weights = np.exp(state.log_weights)
    predicted = weights if state.t == -1 else chain.transition.T @ weights
    with np.errstate(divide="ignore"):
        log_predicted = np.log(predicted)
    ll = log_lambda_hat_at_points(spec, t, chain.grid.centers, y, workspace)
    if use_full_likelihood:
        yv = np.asarray(y, dtype=float).ravel()
        ll = ll + 0.5 * float(yv @ yv)
    logw = log_predicted + ll
    increment = float(logsumexp(logw))
    if np.isneginf(increment) or np.isnan(increment):
        raise DegenerateUpdateError(
            f"all weights vanished at t={t}; max log-likelihood was "
            f"{np.max(ll):.6g} over reachable cells")
    logw = logw - increment
    return FilterState(
        t=t,
        log_weights=logw,
        estimate=np.exp(logw) @ chain.grid.centers,
        log_norm=state.log_norm + increment,
    )


def run_grid_filter(spec: SystemSpec, chain: QuantizedChain, observations: np.ndarray,
                    use_full_likelihood: bool = False) -> FilterRunResult:
    """Fold the step over an observation sequence of shape (T+1, N)."""
    observations = np.atleast_2d(np.asarray(observations, dtype=float))
    start = time.perf_counter()
    m = chain.grid.space.dim
    if observations.size == 0:
        return FilterRunResult(
            estimates=np.empty((0, m)), log_norms=np.empty(0),
            resolution=chain.grid.a_per_dim, wall_time=time.perf_counter() - start)
    steps = observations.shape[0]
    workspace = QuadFormWorkspace(spec, chain.grid.centers)
    state = initial_filter_state(chain)
    estimates = np.empty((steps, m))
    log_norms = np.empty(steps)
    for t in range(steps):
        state = grid_filter_step(chain, spec, state, observations[t], workspace,
                                 use_full_likelihood)
        estimates[t] = state.estimate
        log_norms[t] = state.log_norm
    return FilterRunResult(
        estimates=estimates, log_norms=log_norms,
        resolution=chain.grid.a_per_dim,
        wall_time=time.perf_counter() - start, final_state=state)


def path_sum_oracle(spec: SystemSpec, chain: QuantizedChain,
                    observations: np.ndarray) -> np.ndarray:
    """Estimates by exhaustive enumeration of all chain paths.

    Every path keeps its own weight (initial mass, transition masses, and the
    reduced likelihood of each visited center); nothing is marginalized until
    the final ratio.  Refuses horizons beyond T=6 or more than 10^6 paths,
    naming the budget it would need.
    """
    observations = np.atleast_2d(np.asarray(observations, dtype=float))
    steps = observations.shape[0]
    k = chain.grid.total_points
    if steps - 1 > _ORACLE_MAX_T:
        raise BudgetExceededError(
            f"oracle horizon limit is T={_ORACLE_MAX_T}; T={steps - 1} requested")
    if k**steps > _ORACLE_MAX_PATHS:
        raise BudgetExceededError(
            f"{k}^{steps} = {k**steps} paths exceed the oracle budget of "
            f"{_ORACLE_MAX_PATHS}")
    centers = chain.grid.centers
    workspace = QuadFormWorkspace(spec, centers)
    with np.errstate(divide="ignore"):
        log_init = np.log(chain.initial)
        log_tr = np.log(chain.transition)
    estimates = np.empty((steps, chain.grid.space.dim))
    log_path = None
    last = None
    for t in range(steps):
        ll = log_lambda_hat_at_points(spec, t, centers, observations[t], workspace)
        if t == 0:
            log_path = log_init + ll
            last = np.arange(k)
        else:
            log_path = (log_path[:, None] + log_tr[last, :] + ll[None, :]).ravel()
            last = np.tile(np.arange(k), log_path.shape[0] // k)
        shift = np.max(log_path)
        if np.isneginf(shift):
            raise DegenerateUpdateError(f"all path weights vanished at t={t}")
        w = np.exp(log_path - shift)
        estimates[t] = (w @ centers[last]) / np.sum(w)
    return estimates


def exact_forward_filter(spec: SystemSpec, observations: np.ndarray) -> np.ndarray:
    """Optimal filter for dynamics that are exactly a finite-state chain.

    Classical forward algorithm with per-step scaling, run in linear domain.
    The spec's kernel must expose states, transition matrix and initial law.
    """
    kernel = spec.kernel
    if not isinstance(kernel, FiniteStateKernel):
        raise ModelDefinitionError(
            "exact filtering needs dynamics supported on finitely many known "
            "states with a known transition matrix")
    observations = np.atleast_2d(np.asarray(observations, dtype=float))
    steps = observations.shape[0]
    states = kernel.states
    workspace = QuadFormWorkspace(spec, states)
    alpha = kernel.initial_probs.copy()
    estimates = np.empty((steps, states.shape[1]))
    for t in range(steps):
        if t > 0:
            alpha = kernel.transition_matrix.T @ alpha
        ll = log_lambda_hat_at_points(spec, t, states, observations[t], workspace)
        emission = np.exp(ll - np.max(ll))
        alpha = alpha * emission
        total = alpha.sum()
        if total <= 0.0 or not np.isfinite(total):
            raise DegenerateUpdateError(f"forward weights vanished at t={t}")
        alpha = alpha / total
        estimates[t] = alpha @ states
    return estimates
