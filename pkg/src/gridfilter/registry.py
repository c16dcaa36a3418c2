"""Built-in demonstration systems.

Three families cover the test surface:

* ``finite_chain``: the state really is a finite Markov chain sitting on the
  cell centers of a uniform grid, so the optimal filter is computable exactly.
* ``gauss_walk``: truncated Gaussian random walk on an interval, linear
  observation mean alpha*x in every coordinate, state-dependent covariance
  (beta + x^2) I.  The canonical continuous-state example.
* ``constant``: frozen state and constant observation law; degenerate on
  purpose, for closed-form checks.

Each builder returns a fully declared SystemSpec: the regularity constants
are computed analytically from the parameters, and the observation scale
defaults to the value that lifts the covariance eigenvalue floor to
``lambda_inf_target``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, ModelDefinitionError
from .model import (AssumptionConstants, ObservationModel, StateSpace,
                    SystemSpec, TransitionKernel)

__all__ = [
    "FiniteStateKernel",
    "gauss_walk_demo",
    "finite_chain_demo",
    "constant_demo",
    "build_model",
    "MODEL_BUILDERS",
]


class FiniteStateKernel(TransitionKernel):
    """Kernel supported on finitely many known states with a known matrix."""

    def __init__(self, states: np.ndarray, transition_matrix: np.ndarray,
                 initial_probs: np.ndarray):
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.ndim != 2:
            raise ModelDefinitionError("states must be a (K, M) array")
        k = states.shape[0]
        p = np.asarray(transition_matrix, dtype=float)
        pi = np.asarray(initial_probs, dtype=float)
        if p.shape != (k, k) or pi.shape != (k,):
            raise ModelDefinitionError("transition matrix / initial law shape mismatch")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise ModelDefinitionError("transition matrix must be row-stochastic")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ModelDefinitionError("initial law must be a distribution")
        self.states = states
        self.transition_matrix = p
        self.initial_probs = pi
        self._cdf = np.cumsum(p, axis=1)
        self._init_cdf = np.cumsum(pi)
        super().__init__(sampler=self._sample, initial_sampler=self._sample_initial,
                         density=None, initial_density=None, order=1, vectorized=True)

    def _index_of(self, pts: np.ndarray) -> np.ndarray:
        d = np.sum(np.abs(pts[:, None, :] - self.states[None, :, :]), axis=2)
        return np.argmin(d, axis=1)

    def _sample(self, t: int, x_prev, rng: np.random.Generator):
        xp = np.asarray(x_prev, dtype=float)
        batched = xp.ndim == 2
        pts = xp if batched else xp[None, :]
        rows = self._cdf[self._index_of(pts)]
        u = rng.random(len(pts))
        nxt = np.minimum((u[:, None] > rows).sum(axis=1), len(self.states) - 1)
        out = self.states[nxt]
        return out if batched else out[0]

    def _sample_initial(self, rng: np.random.Generator, size=None):
        n = 1 if size is None else int(size)
        u = rng.random(n)
        idx = np.minimum((u[:, None] > self._init_cdf[None, :]).sum(axis=1),
                         len(self.states) - 1)
        out = self.states[idx]
        return out if size is not None else out[0]


def _interval_space(lower: float, upper: float) -> StateSpace:
    return StateSpace(lower=np.array([float(lower)]), upper=np.array([float(upper)]))


def _abs_extremes(lower: float, upper: float) -> tuple[float, float]:
    """(min |x|, max |x|) over the interval."""
    hi = max(abs(lower), abs(upper))
    lo = 0.0 if lower <= 0.0 <= upper else min(abs(lower), abs(upper))
    return lo, hi


def _scale_for_target(raw_floor: float, obs_scale, lambda_inf_target: float) -> float:
    if obs_scale is not None:
        return float(obs_scale)
    if raw_floor <= 0.0:
        raise ConfigError("cannot derive obs_scale for a singular covariance floor")
    return math.sqrt(float(lambda_inf_target) / raw_floor)


def _linear_obs(n: int, alpha: float, beta_fn, beta_deriv_bound: float,
                sigma_xi_sq: float, scale: float) -> ObservationModel:
    """mean alpha*x in every coordinate, covariance beta_fn(x) * I."""

    def mean_fn(t, x):
        x = np.asarray(x, dtype=float)
        return alpha * np.repeat(x[..., :1], n, axis=-1)

    def cov_fn(t, x):
        x = np.asarray(x, dtype=float)
        s = beta_fn(x[..., 0])
        return s[..., None, None] * np.eye(n) if np.ndim(s) else s * np.eye(n)

    return ObservationModel(n=n, mean_fn=mean_fn, cov_fn=cov_fn,
                            sigma_xi_sq=sigma_xi_sq, obs_scale=scale,
                            stationary=True, vectorized=True)


def gauss_walk_demo(n: int = 2, alpha: float = 1.0, beta: float = 0.25,
                    sigma_xi_sq: float = 0.25, step_sigma: float = 0.15,
                    lower: float = 0.0, upper: float = 1.0,
                    obs_scale=None, lambda_inf_target: float = 1.25) -> SystemSpec:
    """Truncated Gaussian random walk with informative Gaussian observations."""
    if step_sigma <= 0:
        raise ConfigError("step_sigma must be positive")
    space = _interval_space(lower, upper)
    lo2, hi2 = _abs_extremes(lower, upper)
    raw_floor = beta + lo2**2 + sigma_xi_sq
    scale = _scale_for_target(raw_floor, obs_scale, lambda_inf_target)
    a, b = float(lower), float(upper)

    def _trunc_bounds(loc):
        za = (a - loc) / step_sigma
        zb = (b - loc) / step_sigma
        return ndtr(za), ndtr(zb)

    def sampler(t, x_prev, rng):
        xp = np.asarray(x_prev, dtype=float)
        batched = xp.ndim == 2
        loc = (xp if batched else xp[None, :])[:, 0]
        fa, fb = _trunc_bounds(loc)
        u = rng.random(len(loc))
        draw = loc + step_sigma * ndtri(fa + u * (fb - fa))
        draw = np.clip(draw, a, b)
        out = draw[:, None]
        return out if batched else out[0]

    def density(t, x_prev, x_next):
        loc = float(np.asarray(x_prev, dtype=float).ravel()[0])
        xs = np.asarray(x_next, dtype=float)
        xs1 = xs[..., 0] if xs.ndim > 1 else xs
        fa, fb = _trunc_bounds(loc)
        z = (xs1 - loc) / step_sigma
        phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        dens = phi / (step_sigma * (fb - fa))
        return np.where((xs1 >= a) & (xs1 <= b), dens, 0.0)

    def initial_sampler(rng, size=None):
        n_draw = 1 if size is None else int(size)
        out = rng.uniform(a, b, size=(n_draw, 1))
        return out if size is not None else out[0]

    def initial_density(x):
        xs = np.asarray(x, dtype=float)
        xs1 = xs[..., 0] if xs.ndim > 1 else xs
        return np.where((xs1 >= a) & (xs1 <= b), 1.0 / (b - a), 0.0)

    kernel = TransitionKernel(sampler=sampler, initial_sampler=initial_sampler,
                              density=density, initial_density=initial_density,
                              order=1, vectorized=True)
    obs = _linear_obs(n, alpha, lambda x1: beta + x1**2, 2.0 * hi2,
                      sigma_xi_sq, scale)
    constants = AssumptionConstants(
        lambda_inf=scale**2 * raw_floor,
        lambda_sup=scale**2 * (beta + hi2**2 + sigma_xi_sq),
        mu_sup=scale * abs(alpha) * math.sqrt(n) * hi2,
        k_mu=scale * abs(alpha) * math.sqrt(n),
        k_sigma=scale**2 * 2.0 * hi2,
    )
    return SystemSpec(space=space, kernel=kernel, obs=obs, constants=constants,
                      model_id="gauss_walk")


def finite_chain_demo(n_states: int = 8, n: int = 1, alpha: float = 1.0,
                      beta: float = 1.0, sigma_xi_sq: float = 0.5,
                      kind: str = "sticky", stick_prob: float = 0.6,
                      lower: float = 0.0, upper: float = 1.0,
                      obs_scale=None, lambda_inf_target: float = 1.25,
                      seed: int = 0) -> SystemSpec:
    """Finite chain on the centers of an n_states-cell grid over an interval."""
    if n_states < 1:
        raise ConfigError("n_states must be >= 1")
    space = _interval_space(lower, upper)
    width = (upper - lower) / n_states
    states = (lower + (np.arange(n_states) + 0.5) * width)[:, None]
    k = n_states
    if kind == "uniform" or k == 1:
        p = np.full((k, k), 1.0 / k)
    elif kind == "sticky":
        if not (0.0 < stick_prob < 1.0):
            raise ConfigError("stick_prob must lie in (0, 1)")
        off = (1.0 - stick_prob) / (k - 1)
        p = np.full((k, k), off)
        np.fill_diagonal(p, stick_prob)
    elif kind == "random":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 77])))
        p = rng.dirichlet(np.ones(k), size=k)
    else:
        raise ConfigError(f"unknown chain kind {kind!r}")
    pi = np.full(k, 1.0 / k)
    kernel = FiniteStateKernel(states=states, transition_matrix=p, initial_probs=pi)

    lo2, hi2 = _abs_extremes(lower, upper)
    raw_floor = beta + sigma_xi_sq
    scale = _scale_for_target(raw_floor, obs_scale, lambda_inf_target)
    obs = _linear_obs(n, alpha, lambda x1: np.broadcast_to(beta, np.shape(x1)).astype(float)
                      if np.ndim(x1) else float(beta), 0.0, sigma_xi_sq, scale)
    constants = AssumptionConstants(
        lambda_inf=scale**2 * raw_floor,
        lambda_sup=scale**2 * raw_floor,
        mu_sup=scale * abs(alpha) * math.sqrt(n) * hi2,
        k_mu=scale * abs(alpha) * math.sqrt(n),
        k_sigma=0.0,
        k_det=0.0, k_det_minor=0.0, k_inv=0.0,
    )
    return SystemSpec(space=space, kernel=kernel, obs=obs, constants=constants,
                      model_id="finite_chain")


def constant_demo(n: int = 1, value: float = 0.5, mean_const: float = 0.0,
                  cov_const: float = 0.0, sigma_xi_sq: float = 1.0,
                  obs_scale: float = 1.0, lower: float = 0.0,
                  upper: float = 1.0) -> SystemSpec:
    """Frozen state, constant observation law.

    With the defaults the observations are i.i.d. standard normal; note the
    eigenvalue floor is then exactly one, which the audits reject, so this
    family is for simulation sanity checks and closed-form tests only.
    """
    space = _interval_space(lower, upper)
    if not (lower <= value <= upper):
        raise ConfigError("value must lie inside the interval")
    point = np.array([float(value)])

    def sampler(t, x_prev, rng):
        xp = np.asarray(x_prev, dtype=float)
        return np.broadcast_to(point, xp.shape).copy()

    def initial_sampler(rng, size=None):
        if size is None:
            return point.copy()
        return np.broadcast_to(point, (int(size), 1)).copy()

    def mean_fn(t, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1] + (n,)
        return np.broadcast_to(float(mean_const), shape).copy()

    def cov_fn(t, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1] + (n, n)
        return np.broadcast_to(float(cov_const) * np.eye(n), shape).copy()

    kernel = TransitionKernel(sampler=sampler, initial_sampler=initial_sampler,
                              order=1, vectorized=True)
    obs = ObservationModel(n=n, mean_fn=mean_fn, cov_fn=cov_fn,
                           sigma_xi_sq=sigma_xi_sq, obs_scale=obs_scale,
                           stationary=True, vectorized=True)
    lam = obs_scale**2 * (cov_const + sigma_xi_sq)
    constants = AssumptionConstants(
        lambda_inf=lam, lambda_sup=lam,
        mu_sup=obs_scale * abs(mean_const) * math.sqrt(n),
        k_mu=0.0, k_sigma=0.0, k_det=0.0, k_det_minor=0.0, k_inv=0.0,
    )
    return SystemSpec(space=space, kernel=kernel, obs=obs, constants=constants,
                      model_id="constant")


MODEL_BUILDERS = {
    "gauss_walk": gauss_walk_demo,
    "finite_chain": finite_chain_demo,
    "constant": constant_demo,
}


def build_model(model_id: str, **params) -> SystemSpec:
    """Instantiate a registered family; unknown ids or parameters raise ConfigError."""
    try:
        builder = MODEL_BUILDERS[model_id]
    except KeyError:
        raise ConfigError(
            f"unknown model id {model_id!r}; known: {sorted(MODEL_BUILDERS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for model {model_id!r}: {exc}") from None
