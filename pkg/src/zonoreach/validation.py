"""Monte-Carlo over-approximation checks and conservatism metrics.

Samples ground-truth trajectories of the configured plant (initial state,
inputs, noise, and drift all within their declared bounds) and checks that
every visited state lies inside the corresponding reachable set. Violations
are data, not errors: they land in the report together with the seed that
reproduces them.

Also hosts the batch least-squares comparison pipelines, which fit a model
set to a fixed data block and propagate it without drift inflation, the way
the offline method does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .harness import PlantSpec, SlidingWindow, batch_ls_model_set, simulate
from .reach_ltv import LtvReachConfig, ReachResult, covering_radius
from .reach_lipschitz import (
    LipReachConfig,
    eps_bar_zonotope,
    lagrange_bounds,
    lipschitz_estimate,
    remainder_zonotope,
)
from .sets import (
    Zonotope,
    cartesian_product,
    contains_points,
    matzono_times_zono,
    minkowski_sum,
    reduce,
    sample,
)

__all__ = [
    "ValidationReport",
    "validate_reach",
    "conservatism_metric",
    "ls_reach_ltv",
    "ls_reach_lipschitz",
]


@dataclass
class ValidationReport:
    """Aggregated containment results for one reachability result."""

    trajectories_sampled: int
    containment_checks: int
    violations: list = field(default_factory=list)
    per_step_set_radius: list = field(default_factory=list)
    baseline_radius_delta: list | None = None
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "trajectories_sampled": self.trajectories_sampled,
            "containment_checks": self.containment_checks,
            "violations": self.violations,
            "per_step_set_radius": self.per_step_set_radius,
            "baseline_radius_delta": self.baseline_radius_delta,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationReport":
        return cls(
            trajectories_sampled=int(d["trajectories_sampled"]),
            containment_checks=int(d["containment_checks"]),
            violations=list(d.get("violations", [])),
            per_step_set_radius=list(d.get("per_step_set_radius", [])),
            baseline_radius_delta=d.get("baseline_radius_delta"),
            seed=d.get("seed"),
        )


def conservatism_metric(sets) -> list[float]:
    """Per-set sum of interval-hull half-widths (a set-size proxy).

    Monotone under Minkowski inflation: adding any zonotope can only grow
    each half-width.
    """
    return [float(np.sum(Z.radius())) for Z in sets]


def validate_reach(
    reach: ReachResult,
    plant: PlantSpec,
    x0_set: Zonotope,
    input_sets,
    n_traj: int,
    rng: np.random.Generator,
    tol: float = 1e-7,
    seed: int | None = None,
    baseline: ReachResult | None = None,
) -> ValidationReport:
    """Sample truth trajectories and check containment step by step.

    Initial states come from x0_set, inputs from the per-step input sets,
    noise from the plant's noise zonotope; linear plants additionally drift
    within their declared bound. Every state x_k of every trajectory is
    checked against reach.sets[k]. seed is recorded in the report for
    replay; when a baseline result is given, the per-step difference of the
    conservatism metrics (baseline - reach) is attached.
    """
    horizon = len(reach.sets) - 1
    input_sets = list(input_sets)
    if len(input_sets) != horizon:
        raise ValueError(f"need {horizon} input sets, got {len(input_sets)}")
    if x0_set.dim != plant.n_x:
        raise ValueError("initial set dimension does not match the plant")

    states = np.empty((n_traj, horizon + 1, plant.n_x))
    for t in range(n_traj):
        x0 = sample(x0_set, rng)
        inputs = np.array([sample(U, rng) for U in input_sets])
        traj = simulate(plant, x0, inputs, rng)
        if traj.truncated:
            raise RuntimeError(f"truth trajectory {t} diverged; plant misconfigured")
        states[t] = traj.states

    violations = []
    checks = 0
    for k in range(horizon + 1):
        inside = contains_points(reach.sets[k], states[:, k, :], tol=tol)
        checks += n_traj
        for t in np.nonzero(~inside)[0]:
            violations.append(
                {"trajectory": int(t), "step": int(k), "state": states[t, k].tolist()}
            )

    radii = conservatism_metric(reach.sets)
    delta = None
    if baseline is not None:
        base_radii = conservatism_metric(baseline.sets)
        delta = [b - r for b, r in zip(base_radii, radii)]
    return ValidationReport(
        trajectories_sampled=n_traj,
        containment_checks=checks,
        violations=violations,
        per_step_set_radius=radii,
        baseline_radius_delta=delta,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# batch least-squares comparison pipelines
# ---------------------------------------------------------------------------

def ls_reach_ltv(window: SlidingWindow, cfg: LtvReachConfig) -> ReachResult:
    """Reachability from a batch-fit model set, the offline-method way.

    Fits the model set once to the full window and propagates it with no
    drift inflation and no spatial-coverage term: the offline method assumes
    a time-invariant model, which is exactly what breaks down when the true
    system drifts.
    """
    model = batch_ls_model_set(window, cfg.noise_set, affine=False)
    sets = [cfg.initial_set]
    for k in range(cfg.horizon):
        prod = matzono_times_zono(model, cartesian_product(sets[k], cfg.input_sets[k]))
        sets.append(reduce(minkowski_sum(prod, cfg.noise_set), cfg.reduction_order))
    return ReachResult(sets=sets, diagnostics={"mode": "ltv-batch-ls"})


def ls_reach_lipschitz(data: SlidingWindow, cfg: LipReachConfig) -> ReachResult:
    """Nonlinear reachability from a batch-fit affine model set.

    The remainder bounds, Lipschitz estimate, and covering radius are all
    computed over the whole (typically offline, multi-trajectory) data
    block, so they absorb the nonlinearity globally rather than around the
    current operating point.
    """
    model = batch_ls_model_set(data, cfg.noise_set, affine=True)
    l_lo, l_hi = lagrange_bounds(data, model.center)
    z_l = remainder_zonotope(l_lo, l_hi)
    z_eps = eps_bar_zonotope(lipschitz_estimate(data), covering_radius(data.points()))
    one = Zonotope(np.ones(1))
    sets = [cfg.initial_set]
    for k in range(cfg.horizon):
        augmented = cartesian_product(one, cartesian_product(sets[k], cfg.input_sets[k]))
        prod = matzono_times_zono(model, augmented)
        nxt = minkowski_sum(minkowski_sum(prod, z_l), minkowski_sum(z_eps, cfg.noise_set))
        sets.append(reduce(nxt, cfg.reduction_order))
    return ReachResult(sets=sets, diagnostics={"mode": "lipschitz-batch-ls"})
