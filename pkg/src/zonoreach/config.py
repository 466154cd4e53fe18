"""Scenario configuration: JSON schema, validation, and object construction.

A scenario file describes everything a streaming run needs: the true plant
(only the harness sees it), the initial/input/noise sets, estimator
parameters, reachability parameters, and validation parameters. See
README.md for the documented schema. Environment overrides are limited to
the output directory (ZONOREACH_OUT) and the seed (ZONOREACH_SEED).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .harness import NONLINEAR_MAPS, PlantSpec, cstr_plant, ltv_example_plant
from .sets import Zonotope

__all__ = ["ConfigError", "ScenarioConfig", "load_config"]


class ConfigError(ValueError):
    """Configuration failure with the offending field path."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass
class ScenarioConfig:
    name: str
    mode: str  # ltv | lipschitz
    seed: int
    steps: int
    warmup: int
    stride: int
    plant: PlantSpec
    initial_set: Zonotope
    input_set: Zonotope
    noise_set: Zonotope
    lam: float
    tau: float
    g0_scale: float
    est_reduction_order: int | None
    sigma_v: float
    sigma_theta: float
    horizon: int
    sigma_drift: float  # sigma_ab (ltv) or sigma_m (lipschitz)
    window: int
    reach_reduction_order: int
    n_traj: int
    output_dir: str
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def n_x(self) -> int:
        return self.initial_set.dim

    @property
    def n_u(self) -> int:
        return self.input_set.dim

    @property
    def regressor_dim(self) -> int:
        base = self.n_x + self.n_u
        return base + 1 if self.mode == "lipschitz" else base


def _get(d: dict, path: str, key: str, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    return d[key]


def _zonotope(d, path: str) -> Zonotope:
    if not isinstance(d, dict) or "center" not in d:
        raise ConfigError(path, "expected an object with 'center' and 'generators'")
    try:
        return Zonotope.from_dict({"center": d["center"], "generators": d.get("generators", [])})
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _plant(d: dict, noise_set: Zonotope) -> PlantSpec:
    kind = _get(d, "plant", "kind", required=True)
    if kind == "ltv":
        preset = d.get("preset")
        if preset == "ltv_example":
            return ltv_example_plant(
                noise_set=noise_set,
                drifting=bool(d.get("drifting", False)),
                sigma_ab=float(d.get("sigma_ab", 3e-4)),
                dt=float(d.get("dt", 0.1)),
            )
        if preset is not None:
            raise ConfigError("plant.preset", f"unknown preset {preset!r}")
        try:
            return PlantSpec(
                kind="ltv",
                noise_set=noise_set,
                a0=np.array(_get(d, "plant", "A", required=True), dtype=float),
                b0=np.array(_get(d, "plant", "B", required=True), dtype=float),
                delta_a=np.array(d["delta_A"], dtype=float) if "delta_A" in d else None,
                delta_b=np.array(d["delta_B"], dtype=float) if "delta_B" in d else None,
                drift=d.get("drift", "none"),
                sigma_ab=float(d.get("sigma_ab", 0.0)),
                dt=float(d.get("dt", 0.1)),
            )
        except ValueError as exc:
            raise ConfigError("plant", str(exc)) from exc
    if kind == "nonlinear":
        name = _get(d, "plant", "map", required=True)
        if name not in NONLINEAR_MAPS:
            raise ConfigError("plant.map", f"unknown map {name!r}; known: {sorted(NONLINEAR_MAPS)}")
        if name == "cstr":
            return cstr_plant(noise_set=noise_set, params=d.get("params", {}))
        return PlantSpec(
            kind="nonlinear", noise_set=noise_set, map_name=name, params=d.get("params", {})
        )
    raise ConfigError("plant.kind", f"must be 'ltv' or 'nonlinear', got {kind!r}")


def load_config(path, mode: str | None = None, seed: int | None = None,
                out_dir: str | None = None, stride: int | None = None) -> ScenarioConfig:
    """Parse and validate a scenario JSON file.

    mode/seed/out_dir/stride, when given, override the file; the
    ZONOREACH_SEED and ZONOREACH_OUT environment variables sit between the
    file and the explicit overrides.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top-level value must be an object")

    mode = mode or raw.get("mode")
    if mode not in ("ltv", "lipschitz"):
        raise ConfigError("mode", f"must be 'ltv' or 'lipschitz', got {mode!r}")

    if seed is None:
        env_seed = os.environ.get("ZONOREACH_SEED")
        seed = int(env_seed) if env_seed is not None else raw.get("seed", 0)
    if out_dir is None:
        out_dir = os.environ.get("ZONOREACH_OUT") or raw.get("output_dir", "runs/out")

    sets = _get(raw, "config", "sets", required=True)
    initial = _zonotope(_get(sets, "sets", "initial", required=True), "sets.initial")
    input_set = _zonotope(_get(sets, "sets", "input", required=True), "sets.input")
    noise = _zonotope(_get(sets, "sets", "noise", required=True), "sets.noise")
    if noise.dim != initial.dim:
        raise ConfigError("sets.noise", f"dimension {noise.dim} != initial set dimension {initial.dim}")

    plant = _plant(_get(raw, "config", "plant", required=True), noise)
    if plant.n_x != initial.dim:
        raise ConfigError("plant", f"state dimension {plant.n_x} != initial set dimension {initial.dim}")
    if plant.n_u != input_set.dim:
        raise ConfigError("plant", f"input dimension {plant.n_u} != input set dimension {input_set.dim}")

    est = raw.get("estimator", {})
    lam = float(_get(est, "estimator", "lambda", 0.98))
    if not (0.0 < lam <= 1.0):
        raise ConfigError("estimator.lambda", f"must lie in (0, 1], got {lam}")
    tau = float(_get(est, "estimator", "tau", 1e7))
    if tau <= 0:
        raise ConfigError("estimator.tau", "must be positive")
    g0_scale = float(_get(est, "estimator", "g0_scale", 1.5))
    if g0_scale <= 0:
        raise ConfigError("estimator.g0_scale", "must be positive")

    reach = _get(raw, "config", "reachability", required=True)
    horizon = int(_get(reach, "reachability", "horizon", required=True))
    if horizon < 1:
        raise ConfigError("reachability.horizon", "must be at least 1")
    drift_key = "sigma_ab" if mode == "ltv" else "sigma_m"
    sigma_drift = float(reach.get(drift_key, 0.0))
    if sigma_drift < 0:
        raise ConfigError(f"reachability.{drift_key}", "must be nonnegative")
    window = int(_get(reach, "reachability", "window", required=True))
    if window < 2:
        raise ConfigError("reachability.window", "must be at least 2")
    reach_q = int(reach.get("reduction_order", 60))
    if reach_q < initial.dim:
        raise ConfigError("reachability.reduction_order", "must be at least the state dimension")

    steps = int(_get(raw, "config", "steps", required=True))
    warmup = int(raw.get("warmup", window))
    if stride is None:
        stride = int(raw.get("stride", 1))
    if stride < 1:
        raise ConfigError("stride", "must be at least 1")
    if not (0 < warmup <= steps - 1):
        raise ConfigError("warmup", f"must lie in [1, steps-1] = [1, {steps - 1}]")
    if warmup < window:
        raise ConfigError("warmup", f"must be at least the window length {window}")

    val = raw.get("validation", {})
    n_traj = int(val.get("trajectories", 100))
    if n_traj < 1:
        raise ConfigError("validation.trajectories", "must be positive")

    # entrywise noise bound for the regression: widest coordinate of the
    # noise zonotope's interval hull (offset included)
    sigma_v = est.get("sigma_v")
    if sigma_v is None:
        sigma_v = float(np.max(np.abs(noise.center) + noise.radius()))
    sigma_v = float(sigma_v)
    if sigma_v < 0:
        raise ConfigError("estimator.sigma_v", "must be nonnegative")
    sigma_theta = float(est.get("sigma_theta", sigma_drift))

    est_q = est.get("reduction_order")
    if est_q is not None:
        est_q = int(est_q)

    return ScenarioConfig(
        name=str(raw.get("name", "scenario")),
        mode=mode,
        seed=int(seed),
        steps=steps,
        warmup=warmup,
        stride=int(stride),
        plant=plant,
        initial_set=initial,
        input_set=input_set,
        noise_set=noise,
        lam=lam,
        tau=tau,
        g0_scale=g0_scale,
        est_reduction_order=est_q,
        sigma_v=sigma_v,
        sigma_theta=sigma_theta,
        horizon=horizon,
        sigma_drift=sigma_drift,
        window=window,
        reach_reduction_order=reach_q,
        n_traj=n_traj,
        output_dir=str(out_dir),
        raw=raw,
    )
