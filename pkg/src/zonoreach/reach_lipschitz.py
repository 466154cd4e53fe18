"""Reachable-set over-approximation for unknown Lipschitz nonlinear systems.

The nonlinear map is tracked through an online affine model (regressor
[1 x^T u^T]); the gap between the map and the affine model is bounded from
data: a remainder zonotope Z_L built from the window residuals, plus a
Lipschitz-scaled coverage term Z_eps_bar for points away from the window.
The recursion is

    R_{k+1} = M_fk (1 x R_k x U_k)  +  Z_L  +  Z_eps_bar  +  Z_w,

with R_0 the initial set and M_fk the model set inflated by k drift steps.
Z_L, the Lipschitz estimate, and the covering radius are frozen at horizon
start from the latest window.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .estimator import EstimatorState, model_set
from .reach_ltv import (
    ReachResult,
    _inflated_models,
    covering_radius,
)
from .sets import (
    Zonotope,
    cartesian_product,
    matzono_times_zono,
    minkowski_sum,
    reduce,
)

__all__ = [
    "LipReachConfig",
    "lagrange_bounds",
    "remainder_zonotope",
    "lipschitz_estimate",
    "eps_bar_zonotope",
    "reach_lipschitz",
]


@dataclass(frozen=True)
class LipReachConfig:
    """Inputs of the nonlinear reachability recursion.

    sigma_m bounds the per-step drift of the affine model (entrywise, over
    all n_x * (1 + n_x + n_u) entries); set 0 when model variations are
    negligible over the horizon. delta_hat, when given, overrides the
    covering radius computed from the window.
    """

    horizon: int
    sigma_m: float
    input_sets: tuple
    noise_set: Zonotope
    initial_set: Zonotope
    reduction_order: int = 60
    delta_hat: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_sets", tuple(self.input_sets))
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.sigma_m < 0:
            raise ValueError("sigma_m must be nonnegative")
        if len(self.input_sets) != self.horizon:
            raise ValueError(f"need {self.horizon} input sets, got {len(self.input_sets)}")
        n_u = self.input_sets[0].dim
        if any(U.dim != n_u for U in self.input_sets):
            raise ValueError("input sets must share one dimension")
        if self.noise_set.dim != self.initial_set.dim:
            raise ValueError("noise and initial sets must share the state dimension")
        if self.reduction_order < self.initial_set.dim:
            raise ValueError("reduction_order must be at least the state dimension")
        if self.delta_hat is not None and self.delta_hat < 0:
            raise ValueError("delta_hat override must be nonnegative")

    @property
    def n_x(self) -> int:
        return self.initial_set.dim

    @property
    def n_u(self) -> int:
        return self.input_sets[0].dim


def lagrange_bounds(window, c_m) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise min/max residual of the window against the model center.

    r_j = x_plus_j - C [1; x_j; u_j]; returns (l_lo, l_hi) with
    l_lo <= l_hi. These bound the remainder (model mismatch, nonlinearity,
    and noise) at the window points.
    """
    if window.fill < 1:
        raise ValueError("window is empty")
    c_m = np.asarray(c_m, dtype=float)
    R = window.x_plus - c_m @ window.regressors(affine=True)
    return R.min(axis=1), R.max(axis=1)


def remainder_zonotope(l_lo, l_hi) -> Zonotope:
    """Axis-aligned zonotope with interval hull exactly [l_lo, l_hi]."""
    l_lo = np.asarray(l_lo, dtype=float).reshape(-1)
    l_hi = np.asarray(l_hi, dtype=float).reshape(-1)
    if l_lo.shape != l_hi.shape:
        raise ValueError("bound vectors must have the same length")
    if np.any(l_lo > l_hi):
        raise ValueError("lower residual bound exceeds upper bound")
    return Zonotope(0.5 * (l_hi + l_lo), np.diag(0.5 * (l_hi - l_lo)))


def lipschitz_estimate(window) -> np.ndarray:
    """Per-output-dimension slope bound from pairwise window differences.

    max over i != j of |x_plus_i^(o) - x_plus_j^(o)| / ||z_i - z_j||, using
    the measured successor states as the only available proxy for the map
    (noise included, which biases the estimate upward - the conservative
    direction). Pairs closer than 1e-12 in regressor space are skipped;
    raises if every pair coincides.
    """
    if window.fill < 2:
        raise ValueError("need at least two window points")
    z = window.points()
    f = window.x_plus.T
    diffs = z[:, None, :] - z[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=-1))
    np.fill_diagonal(dist, 0.0)
    usable = dist >= 1e-12
    if not usable.any():
        raise ValueError("all regressor points coincide; no slope information")
    dd = np.where(usable, dist, np.inf)
    num = np.abs(f[:, None, :] - f[None, :, :])
    return np.max(num / dd[:, :, None], axis=(0, 1))


def eps_bar_zonotope(L_hat, delta_hat: float) -> Zonotope:
    """Coverage inflation <0, diag(L_hat^(o) * delta_hat / 2)>."""
    L_hat = np.asarray(L_hat, dtype=float).reshape(-1)
    if np.any(L_hat < 0) or delta_hat < 0:
        raise ValueError("Lipschitz bounds and delta_hat must be nonnegative")
    return Zonotope(np.zeros(L_hat.shape[0]), np.diag(0.5 * L_hat * delta_hat))


def reach_lipschitz(
    estimator: EstimatorState,
    window,
    cfg: LipReachConfig,
) -> ReachResult:
    """Over-approximate reachable sets of the unknown nonlinear system.

    The estimator must use the affine row convention (regressor
    [1 x^T u^T], output x_next^T); its transposed model set stacks
    [f_offset A B] with n_x rows.
    """
    t0 = time.perf_counter()
    n_x, n_u = cfg.n_x, cfg.n_u
    if estimator.m != n_x or estimator.n != 1 + n_x + n_u:
        raise ValueError(
            f"estimator parameter shape {(estimator.n, estimator.m)} does not match "
            f"the [1; x; u] -> x_next convention for n_x={n_x}, n_u={n_u}"
        )
    if window is None or window.fill < 2:
        raise ValueError("need a window with at least two transitions")

    model_T = model_set(estimator, transposed=True)
    l_lo, l_hi = lagrange_bounds(window, model_T.center)
    z_l = remainder_zonotope(l_lo, l_hi)
    L_hat = lipschitz_estimate(window)
    delta = cfg.delta_hat if cfg.delta_hat is not None else covering_radius(window.points())
    z_eps = eps_bar_zonotope(L_hat, delta)

    one = Zonotope(np.ones(1))
    models = _inflated_models(model_T, cfg.sigma_m, cfg.horizon)

    sets = [cfg.initial_set]
    gen_counts = [cfg.initial_set.ngens]
    for k in range(cfg.horizon):
        augmented = cartesian_product(one, cartesian_product(sets[k], cfg.input_sets[k]))
        prod = matzono_times_zono(models[k], augmented)
        nxt = minkowski_sum(minkowski_sum(prod, z_l), minkowski_sum(z_eps, cfg.noise_set))
        nxt = reduce(nxt, cfg.reduction_order)
        sets.append(nxt)
        gen_counts.append(nxt.ngens)

    return ReachResult(
        sets=sets,
        diagnostics={
            "mode": "lipschitz",
            "delta_hat": float(delta),
            "l_lo": l_lo.tolist(),
            "l_hi": l_hi.tolist(),
            "lipschitz_hat": L_hat.tolist(),
            "generator_counts": gen_counts,
            "wall_time_s": time.perf_counter() - t0,
        },
    )
