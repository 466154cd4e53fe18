"""Reachable-set over-approximation for unknown linear time-varying systems.

Propagates a state zonotope through the set of models produced by the
online estimator. Each horizon step inflates the model set by the
accumulated drift bound (k sigma_ab per entry after k steps), adds the
spatial-coverage term built from the data window's covering radius, and
adds the process-noise zonotope:

    R_{k+1} = M_k (R_k x U_k)  +  Z_eps  +  Z_w,       R_0 = X_0.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .estimator import EstimatorState, model_set
from .sets import (
    MatrixZonotope,
    Zonotope,
    cartesian_product,
    interval_frobenius,
    matzono_interval,
    matzono_minkowski,
    matzono_times_zono,
    minkowski_sum,
    reduce,
)

__all__ = [
    "LtvReachConfig",
    "ReachResult",
    "perturbation_matzono",
    "covering_radius",
    "epsilon_zonotope",
    "reach_ltv",
]


@dataclass(frozen=True)
class LtvReachConfig:
    """Inputs of the reachability recursion.

    input_sets must hold one zonotope per horizon step. delta_hat, when
    set, overrides the covering radius computed from the data window (0
    disables the spatial-coverage inflation entirely, which is the exact
    known-model special case).
    """

    horizon: int
    sigma_ab: float
    input_sets: tuple
    noise_set: Zonotope
    initial_set: Zonotope
    reduction_order: int = 60
    delta_hat: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_sets", tuple(self.input_sets))
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.sigma_ab < 0:
            raise ValueError("sigma_ab must be nonnegative")
        if len(self.input_sets) != self.horizon:
            raise ValueError(
                f"need {self.horizon} input sets, got {len(self.input_sets)}"
            )
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


@dataclass
class ReachResult:
    """Horizon + 1 reachable sets (sets[0] is the initial set) plus run
    diagnostics: per-step generator counts, the covering radius, the
    horizon supremum of the model-interval norm, and wall time."""

    sets: list
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sets": [Z.to_dict() for Z in self.sets],
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReachResult":
        return cls(
            sets=[Zonotope.from_dict(z) for z in d["sets"]],
            diagnostics=dict(d.get("diagnostics", {})),
        )


def perturbation_matzono(k: int, mu: float, rows: int, cols: int) -> MatrixZonotope:
    """Zero-centered set absorbing k steps of entrywise drift bounded by mu.

    One generator k*mu*E_s per matrix entry: any sum of k perturbation
    matrices with ||d||_max <= mu lies inside. k = 0 or mu = 0 gives the
    singleton {0}.
    """
    if k < 0 or mu < 0:
        raise ValueError("k and mu must be nonnegative")
    gens = np.zeros((rows * cols, rows, cols))
    val = k * mu
    for j in range(cols):
        for i in range(rows):
            gens[j * rows + i, i, j] = val
    return MatrixZonotope(np.zeros((rows, cols)), gens)


def covering_radius(window_points) -> float:
    """Max over points of the distance to the nearest other point.

    Brute force over all pairs; this is the data-density measure that
    scales the spatial-coverage inflation.
    """
    pts = np.atleast_2d(np.asarray(window_points, dtype=float))
    if pts.shape[0] < 2:
        raise ValueError("covering radius needs at least two points")
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=-1))
    np.fill_diagonal(dist, np.inf)
    return float(np.max(np.min(dist, axis=1)))


def epsilon_zonotope(i_m_max: float, delta_hat: float, n_x: int) -> Zonotope:
    """Spatial-coverage inflation <0, (i_m_max * delta_hat / 2) I>."""
    if i_m_max < 0 or delta_hat < 0:
        raise ValueError("i_m_max and delta_hat must be nonnegative")
    return Zonotope(np.zeros(n_x), 0.5 * i_m_max * delta_hat * np.eye(n_x))


def _inflated_models(model_T: MatrixZonotope, sigma: float, horizon: int):
    """M_k = model set + k-step drift inflation, for k = 0..horizon-1."""
    rows, cols = model_T.shape
    out = []
    for k in range(horizon):
        if sigma > 0 and k > 0:
            out.append(matzono_minkowski(model_T, perturbation_matzono(k, sigma, rows, cols)))
        else:
            out.append(model_T)
    return out


def reach_ltv(
    estimator: EstimatorState,
    window,
    cfg: LtvReachConfig,
    i_m_max_floor: float = 0.0,
) -> ReachResult:
    """Over-approximate reachable sets over cfg.horizon steps.

    The estimator must use the linear row convention (regressor [x^T u^T],
    output x_next^T), so its transposed model set stacks [A B]. The window
    supplies the covering radius unless cfg.delta_hat overrides it.
    i_m_max_floor carries the running supremum of the model-interval norm
    from earlier invocations of a streaming run.
    """
    t0 = time.perf_counter()
    n_x, n_u = cfg.n_x, cfg.n_u
    if estimator.m != n_x or estimator.n != n_x + n_u:
        raise ValueError(
            f"estimator parameter shape {(estimator.n, estimator.m)} does not match "
            f"the [x; u] -> x_next convention for n_x={n_x}, n_u={n_u}"
        )
    model_T = model_set(estimator, transposed=True)

    if cfg.delta_hat is not None:
        delta = cfg.delta_hat
    else:
        if window is None or window.fill < 2:
            raise ValueError("need a window with at least two points for the covering radius")
        delta = covering_radius(window.points())

    models = _inflated_models(model_T, cfg.sigma_ab, cfg.horizon)
    i_m_max = max(
        [i_m_max_floor] + [interval_frobenius(matzono_interval(M)) for M in models]
    )
    z_eps = epsilon_zonotope(i_m_max, delta, n_x)

    sets = [cfg.initial_set]
    gen_counts = [cfg.initial_set.ngens]
    for k in range(cfg.horizon):
        prod = matzono_times_zono(models[k], cartesian_product(sets[k], cfg.input_sets[k]))
        nxt = reduce(minkowski_sum(minkowski_sum(prod, z_eps), cfg.noise_set), cfg.reduction_order)
        sets.append(nxt)
        gen_counts.append(nxt.ngens)

    return ReachResult(
        sets=sets,
        diagnostics={
            "mode": "ltv",
            "delta_hat": float(delta),
            "i_m_max": float(i_m_max),
            "generator_counts": gen_counts,
            "wall_time_s": time.perf_counter() - t0,
        },
    )
