"""Observation-norm concentration: the high-probability set the error budget lives on.

A trajectory of horizon T is "tame" when

    sup_{t <= T} ||y_t||^2 < gamma * C * N * (1 + log(T + 1)),

strictly.  Under the reference coupling the observations are i.i.d. standard
normal and gamma = 5 suffices; under the data-generating law the threshold
inflates to gamma = 5 * lambda_sup * (1 + mu_sup)^2.  Either way the tame set
misses at most (T+1)^{1-CN} e^{-CN} of the probability; the experiment here
measures both frequencies and compares them against that floor with a
three-sigma binomial allowance.

The chi-squared building block: for U ~ chi2(N),

    P(U >= N + 2 sqrt(N u) + 2 u) <= exp(-u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .csvio import write_csv
from .errors import ConfigError
from .model import AssumptionConstants, SystemSpec, Trajectory, make_rng, simulate_batch

__all__ = [
    "TailCheck",
    "ConcentrationReport",
    "chi2_tail_check",
    "gamma_data",
    "gamma_reference",
    "tame_threshold",
    "omega_hat_membership",
    "concentration_experiment",
    "write_tail_checks",
    "write_concentration_reports",
]


@dataclass
class TailCheck:
    """Empirical chi-squared tail frequency against its analytic ceiling."""

    n_dim: int
    u: float
    n_samples: int
    empirical: float
    bound: float

    @property
    def std_err(self) -> float:
        return math.sqrt(self.bound * (1.0 - self.bound) / self.n_samples)

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.std_err


def chi2_tail_check(n_dim: int, u: float, n_samples: int, seed: int = 0) -> TailCheck:
    if n_dim < 1 or n_samples < 1 or u < 0:
        raise ConfigError("need n_dim >= 1, n_samples >= 1, u >= 0")
    rng = make_rng(seed, 20)
    draws = rng.chisquare(n_dim, size=n_samples)
    threshold = n_dim + 2.0 * math.sqrt(n_dim * u) + 2.0 * u
    empirical = float(np.mean(draws >= threshold))
    return TailCheck(n_dim=n_dim, u=u, n_samples=n_samples,
                     empirical=empirical, bound=math.exp(-u))


def gamma_data(constants: AssumptionConstants) -> float:
    """Threshold inflation under the data-generating law."""
    return max(5.0 * constants.lambda_sup * (1.0 + constants.mu_sup) ** 2, 5.0)


def gamma_reference() -> float:
    """Threshold inflation under the reference coupling (standard normal obs)."""
    return 5.0


def tame_threshold(gamma: float, c_const: float, n_dim: int, horizon: int) -> float:
    return gamma * c_const * n_dim * (1.0 + math.log(horizon + 1.0))


def omega_hat_membership(traj: Trajectory, c_const: float, gamma: float) -> bool:
    """Strict comparison; a trajectory sitting exactly on the threshold is out."""
    sup_sq = float(np.max(np.sum(traj.observations**2, axis=1)))
    n_dim = traj.observations.shape[1]
    return sup_sq < tame_threshold(gamma, c_const, n_dim, traj.horizon)


@dataclass
class ConcentrationReport:
    """Tame-set frequencies under both measures against the analytic floor."""

    n_dim: int
    c_const: float
    horizon: int
    n_traj: int
    gamma_data: float
    gamma_reference: float
    threshold_data: float
    threshold_reference: float
    empirical_data: float
    empirical_reference: float
    bound: float

    def _std_err(self, p: float) -> float:
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.n_traj)

    @property
    def passed(self) -> bool:
        ok_p = self.empirical_data >= self.bound - 3.0 * self._std_err(self.empirical_data)
        ok_q = self.empirical_reference >= self.bound - 3.0 * self._std_err(self.empirical_reference)
        return ok_p and ok_q


def membership_bound(c_const: float, n_dim: int, horizon: int) -> float:
    """Analytic floor 1 - (T+1)^{1-CN} e^{-CN} for the tame-set probability."""
    cn = c_const * n_dim
    return 1.0 - (horizon + 1.0) ** (1.0 - cn) * math.exp(-cn)


def concentration_experiment(spec: SystemSpec, horizon: int, c_const: float,
                             n_traj: int, seed: int = 0) -> ConcentrationReport:
    """Simulate under both measures and measure the tame-set frequencies.

    Passes when each empirical frequency clears the analytic floor minus
    three binomial standard errors.
    """
    if n_traj < 1:
        raise ConfigError("need n_traj >= 1")
    n_dim = spec.obs.n
    g_p = gamma_data(spec.constants)
    g_q = gamma_reference()
    thr_p = tame_threshold(g_p, c_const, n_dim, horizon)
    thr_q = tame_threshold(g_q, c_const, n_dim, horizon)
    _, obs_p = simulate_batch(spec, horizon, n_traj, seed, tilde=False)
    _, obs_q = simulate_batch(spec, horizon, n_traj, seed + 1, tilde=True)
    sup_p = np.max(np.sum(obs_p**2, axis=2), axis=1)
    sup_q = np.max(np.sum(obs_q**2, axis=2), axis=1)
    return ConcentrationReport(
        n_dim=n_dim, c_const=c_const, horizon=horizon, n_traj=n_traj,
        gamma_data=g_p, gamma_reference=g_q,
        threshold_data=thr_p, threshold_reference=thr_q,
        empirical_data=float(np.mean(sup_p < thr_p)),
        empirical_reference=float(np.mean(sup_q < thr_q)),
        bound=membership_bound(c_const, n_dim, horizon),
    )


def write_tail_checks(path: str, checks, meta=None) -> None:
    header = ["n_dim", "u", "n_samples", "empirical", "bound", "std_err", "passed"]
    rows = [[c.n_dim, c.u, c.n_samples, c.empirical, c.bound, c.std_err, c.passed]
            for c in checks]
    write_csv(path, meta or {}, header, rows)


def write_concentration_reports(path: str, reports, meta=None) -> None:
    header = ["n_dim", "c_const", "horizon", "n_traj",
              "gamma_data", "gamma_reference", "threshold_data",
              "threshold_reference", "empirical_data", "empirical_reference",
              "bound", "passed"]
    rows = [[r.n_dim, r.c_const, r.horizon, r.n_traj, r.gamma_data,
             r.gamma_reference, r.threshold_data, r.threshold_reference,
             r.empirical_data, r.empirical_reference, r.bound, r.passed]
            for r in reports]
    write_csv(path, meta or {}, header, rows)
