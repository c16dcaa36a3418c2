"""Convergence experiments: filter error against resolution, with analytic budgets.

The sweep simulates trajectories, drops the ones outside the tame observation
set, filters each kept trajectory at every requested resolution, and measures
the per-trajectory worst-over-time l1 gap to a reference filter.  The
reference is exact when the dynamics are a finite-state chain; otherwise it
is a surrogate grid filter at a much finer resolution, cross-checked against
a twice-finer run (the self-consistency gap must stay below a tenth of the
smallest measured error, else the curve is flagged unconverged).

The analytic budget assembled alongside has three ingredients: a growth
constant for the likelihood-product error (two printed variants, one growing
like T log T from bounding every term by its worst case, one growing like
log T from summing the geometric decay), the worst-case quantization error
sup_t E|X_t - X_t^A| <= half cell width, and an explicit lower bound for the
conditional normalizer.  The normalizer bound underflows float64 for
realistic horizons, so it is carried in logs; sup-over-trajectory quantities
are maxima over the sampled tame trajectories and labeled estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .concentration import gamma_data, omega_hat_membership, membership_bound, tame_threshold
from .csvio import write_csv
from .errors import ConfigError, GridFilterError
from .filtering import exact_forward_filter, run_grid_filter
from .model import SystemSpec, Trajectory, simulate
from .quantize import Grid, build_chain, quantize_points
from .registry import FiniteStateKernel

__all__ = [
    "KGReport",
    "ConvergenceCurve",
    "kg_evaluate",
    "reference_filter",
    "convergence_sweep",
]


@dataclass
class KGReport:
    """Growth constants and assembled error budget per resolution."""

    horizon: int
    c_const: float
    n_dim: int
    gamma: float
    k_o: float
    kg_t_log_t: float
    kg_log_t: float
    delta: float
    log_denominator: float
    resolutions: tuple[int, ...]
    sup_l1_half_cell: tuple[float, ...]
    sup_l1_measured: Optional[tuple[float, ...]]
    bound_log: tuple[float, ...]

    def bounds(self) -> np.ndarray:
        """Budgets in linear scale; saturates to inf past float64 range."""
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(self.bound_log))

    def to_csv(self, path: str, meta: Optional[dict] = None) -> None:
        full_meta = {
            "horizon": self.horizon, "c_const": self.c_const, "n_dim": self.n_dim,
            "gamma": self.gamma, "k_o": self.k_o,
            "kg_t_log_t": self.kg_t_log_t, "kg_log_t": self.kg_log_t,
            "delta": self.delta, "log10_denominator": self.log_denominator / math.log(10.0),
        }
        full_meta.update(meta or {})
        header = ["a", "sup_l1_half_cell", "sup_l1_measured", "bound_log10"]
        measured = self.sup_l1_measured or [math.nan] * len(self.resolutions)
        rows = [[a, hc, ms, bl / math.log(10.0)]
                for a, hc, ms, bl in zip(self.resolutions, self.sup_l1_half_cell,
                                         measured, self.bound_log)]
        write_csv(path, full_meta, header, rows)


def kg_evaluate(spec: SystemSpec, horizon: int, c_const: float,
                resolutions: Sequence[int] = (),
                state_paths: Optional[np.ndarray] = None) -> KGReport:
    """Evaluate both growth-constant variants and the per-resolution budget.

    Needs audited constants (k_det and k_inv present).  ``state_paths`` of
    shape (n_traj, T+1, M), when given, adds a measured sup_t mean
    quantization error per resolution; the budget column always uses the
    a-priori half-cell bound so doubling the resolution exactly halves it.
    """
    c = spec.constants
    if c.k_det is None or c.k_inv is None:
        raise ConfigError("constants lack k_det / k_inv; run audit_derived_constants")
    if c.lambda_inf <= 1.0:
        raise ConfigError("growth constants need an eigenvalue floor > 1")
    n = spec.obs.n
    t1 = horizon + 1.0
    log_lam = math.log(c.lambda_inf)
    gamma = gamma_data(c)
    amp = math.sqrt(gamma) + c.mu_sup
    k_o = c.k_mu * 2.0 * amp / c.lambda_inf + c.k_inv * amp * amp
    log_growth = 1.0 + math.log(t1)
    kg_t_log_t = (k_o * c_const * n * log_growth * t1 / c.lambda_inf ** (n / 2.0)
                  + c.k_det * c.k_sigma * n**2 * t1 / (2.0 * c.lambda_inf**n))
    decay = c.lambda_inf ** (-2.0 / log_lam)
    kg_log_t = (16.0 * k_o * c_const * log_growth * decay / (n * log_lam**2)
                + 8.0 * c.k_det * c.k_sigma * c.lambda_inf ** (-float(n)) * decay / log_lam**2)
    log_den = (-(math.sqrt(tame_threshold(gamma, c_const, n, horizon)) + c.mu_sup) ** 2
               * t1 / (2.0 * c.lambda_inf)
               - 0.5 * n * t1 * math.log(c.lambda_sup))
    delta = spec.space.delta
    widths_total = float(np.sum(spec.space.upper - spec.space.lower))
    half_cells = tuple(widths_total / (2.0 * a) for a in resolutions)
    bound_log = tuple(math.log(hc * (1.0 + 2.0 * delta * kg_t_log_t)) - log_den
                      for hc in half_cells)
    measured = None
    if state_paths is not None and len(resolutions):
        state_paths = np.asarray(state_paths, dtype=float)
        flat = state_paths.reshape(-1, state_paths.shape[-1])
        vals = []
        for a in resolutions:
            grid = Grid(spec.space, a)
            centers = grid.centers[quantize_points(grid, flat)]
            err = np.abs(flat - centers).sum(axis=1).reshape(state_paths.shape[:2])
            vals.append(float(np.max(np.mean(err, axis=0))))
        measured = tuple(vals)
    return KGReport(
        horizon=horizon, c_const=c_const, n_dim=n, gamma=gamma, k_o=k_o,
        kg_t_log_t=kg_t_log_t, kg_log_t=kg_log_t, delta=delta,
        log_denominator=log_den, resolutions=tuple(int(a) for a in resolutions),
        sup_l1_half_cell=half_cells, sup_l1_measured=measured,
        bound_log=bound_log)


def reference_filter(spec: SystemSpec, observations: np.ndarray,
                     a_ref: Optional[int] = None,
                     max_experiment_a: Optional[int] = None,
                     build_method: str = "quadrature", seed: int = 0,
                     n_samples: int = 200_000,
                     quad_order: int = 8) -> tuple[np.ndarray, str]:
    """Best available reference estimates for one observation sequence.

    Finite-state dynamics get the exact filter.  Anything else gets a
    surrogate grid filter whose resolution must be at least eight times the
    largest experimental resolution (ConfigError otherwise).
    """
    if isinstance(spec.kernel, FiniteStateKernel):
        return exact_forward_filter(spec, observations), "exact"
    if a_ref is None:
        if max_experiment_a is None:
            raise ConfigError("surrogate reference needs a_ref or max_experiment_a")
        a_ref = 8 * int(max_experiment_a)
    if max_experiment_a is not None and a_ref < 8 * int(max_experiment_a):
        raise ConfigError(
            f"surrogate resolution {a_ref} is below 8x the largest "
            f"experimental resolution {max_experiment_a}")
    chain = build_chain(spec, Grid(spec.space, a_ref), build_method, seed=seed,
                        n_samples=n_samples, quad_order=quad_order)
    return run_grid_filter(spec, chain, observations).estimates, f"surrogate(a={a_ref})"


@dataclass
class ConvergenceCurve:
    """Measured filter error per resolution, with rejection accounting."""

    resolutions: tuple[int, ...]
    mean_sup_errors: np.ndarray
    max_sup_errors: np.ndarray
    n_total: int
    n_kept: int
    n_rejected: int
    horizon: int
    c_const: float
    seed: int
    reference_label: str
    a_ref: Optional[int]
    reference_converged: Optional[bool]
    reference_gap: Optional[float]
    kg: KGReport = field(repr=False)
    model_id: str = "custom"

    @property
    def rejection_budget(self) -> float:
        """Allowed rejected fraction: twice the analytic miss probability plus
        three binomial standard errors."""
        miss = 1.0 - membership_bound(self.c_const, self.kg.n_dim, self.horizon)
        return 2.0 * miss + 3.0 * math.sqrt(max(miss * (1.0 - miss), 0.0)
                                            / max(self.n_total, 1))

    def analytic_bounds(self) -> np.ndarray:
        return self.kg.bounds()

    def to_csv(self, path: str, meta: Optional[dict] = None) -> None:
        full_meta = {
            "model_id": self.model_id, "horizon": self.horizon,
            "c_const": self.c_const, "seed": self.seed,
            "reference": self.reference_label, "a_ref": self.a_ref,
            "reference_converged": self.reference_converged,
            "reference_gap": self.reference_gap, "n_total": self.n_total,
        }
        full_meta.update(meta or {})
        header = ["a", "mean_sup_error", "max_sup_error", "analytic_bound",
                  "analytic_bound_log10", "n_traj", "n_rejected"]
        bounds_lin = self.analytic_bounds()
        rows = [[a, self.mean_sup_errors[i], self.max_sup_errors[i],
                 bounds_lin[i], self.kg.bound_log[i] / math.log(10.0),
                 self.n_kept, self.n_rejected]
                for i, a in enumerate(self.resolutions)]
        write_csv(path, full_meta, header, rows)


def _sup_l1_errors(estimates: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(estimates - reference), axis=1)))


def convergence_sweep(spec: SystemSpec, horizon: int, resolutions: Sequence[int],
                      n_traj: int, c_const: float, seed: int = 0,
                      a_ref: Optional[int] = None,
                      build_method: str = "quadrature",
                      n_samples: int = 200_000, quad_order: int = 8,
                      check_traj: int = 4, workers: int = 1) -> ConvergenceCurve:
    """Filter-error curve across resolutions against the reference filter."""
    resolutions = tuple(int(a) for a in resolutions)
    if not resolutions or any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ConfigError("resolutions must be strictly increasing and nonempty")
    if n_traj < 1:
        raise ConfigError("need n_traj >= 1")

    traj_seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(n_traj)]
    trajectories = [simulate(spec, horizon, s) for s in traj_seeds]
    gamma = gamma_data(spec.constants)
    kept = [tr for tr in trajectories if omega_hat_membership(tr, c_const, gamma)]
    n_rejected = n_traj - len(kept)
    if not kept:
        raise GridFilterError("every sampled trajectory fell outside the tame set")

    exact = isinstance(spec.kernel, FiniteStateKernel)
    if exact:
        a_ref_used = None
        references = [exact_forward_filter(spec, tr.observations) for tr in kept]
        label = "exact"
    else:
        a_ref_used = 8 * max(resolutions) if a_ref is None else int(a_ref)
        if a_ref_used < 8 * max(resolutions):
            raise ConfigError(
                f"surrogate resolution {a_ref_used} is below 8x the largest "
                f"experimental resolution {max(resolutions)}")
        chain_ref = build_chain(spec, Grid(spec.space, a_ref_used), build_method,
                                seed=seed, n_samples=n_samples, quad_order=quad_order)
        references = _map_filters(spec, chain_ref, kept, workers)
        label = f"surrogate(a={a_ref_used})"

    mean_errors = np.empty(len(resolutions))
    max_errors = np.empty(len(resolutions))
    for i, a in enumerate(resolutions):
        chain = build_chain(spec, Grid(spec.space, a), build_method, seed=seed,
                            n_samples=n_samples, quad_order=quad_order)
        estimates = _map_filters(spec, chain, kept, workers)
        errs = [_sup_l1_errors(est, ref) for est, ref in zip(estimates, references)]
        mean_errors[i] = float(np.mean(errs))
        max_errors[i] = float(np.max(errs))

    converged: Optional[bool] = None
    gap: Optional[float] = None
    if not exact:
        probe = kept[: max(1, min(check_traj, len(kept)))]
        chain_fine = build_chain(spec, Grid(spec.space, 2 * a_ref_used), build_method,
                                 seed=seed, n_samples=n_samples, quad_order=quad_order)
        fine = _map_filters(spec, chain_fine, probe, workers)
        gap = max(_sup_l1_errors(references[j], fine[j]) for j in range(len(probe)))
        converged = bool(gap < 0.1 * float(np.min(mean_errors)))

    kg = kg_evaluate(spec, horizon, c_const, resolutions,
                     state_paths=np.stack([tr.states for tr in kept]))
    return ConvergenceCurve(
        resolutions=resolutions, mean_sup_errors=mean_errors,
        max_sup_errors=max_errors, n_total=n_traj, n_kept=len(kept),
        n_rejected=n_rejected, horizon=horizon, c_const=c_const, seed=seed,
        reference_label=label, a_ref=a_ref_used, reference_converged=converged,
        reference_gap=gap, kg=kg, model_id=spec.model_id)


def _map_filters(spec: SystemSpec, chain, trajectories, workers: int):
    def one(tr: Trajectory) -> np.ndarray:
        return run_grid_filter(spec, chain, tr.observations).estimates

    if workers <= 1 or len(trajectories) <= 1:
        return [one(tr) for tr in trajectories]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, trajectories))
