"""Simulated plants, sliding data windows, trajectory ingestion, and the
batch least-squares baseline used for comparison.

The harness is the only part of the code base that knows ground truth: it
generates trajectories of configurable true systems (with bounded noise and
bounded model drift) so the estimator and reachability routines can be
checked against what actually happened.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .sets import MatrixZonotope, Zonotope, sample, vertex_sample

__all__ = [
    "SlidingWindow",
    "PlantSpec",
    "Trajectory",
    "simulate",
    "batch_ls_model_set",
    "ingest_csv",
    "write_trajectory_csv",
    "collect_window",
    "offline_window",
    "ltv_example_plant",
    "cstr_plant",
    "cstr_map",
    "NONLINEAR_MAPS",
]


class SlidingWindow:
    """Ring buffer of the last N_D transitions (x_prev, u, x_next).

    Column j of x_plus is the measured successor of column j of x_minus
    under column j of u_minus; push() maintains that correspondence and
    evicts the oldest column once the capacity is reached. Windows are
    values: push returns a new window.
    """

    __slots__ = ("capacity", "x_plus", "x_minus", "u_minus")

    def __init__(self, capacity: int, x_plus, x_minus, u_minus):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        xp = np.atleast_2d(np.asarray(x_plus, dtype=float))
        xm = np.atleast_2d(np.asarray(x_minus, dtype=float))
        um = np.atleast_2d(np.asarray(u_minus, dtype=float))
        if not (xp.shape == xm.shape and xp.shape[1] == um.shape[1]):
            raise ValueError("window blocks must have matching column counts")
        if xp.shape[1] > capacity:
            raise ValueError("window holds more columns than its capacity")
        self.capacity = int(capacity)
        self.x_plus = xp
        self.x_minus = xm
        self.u_minus = um

    @classmethod
    def empty(cls, capacity: int, n_x: int, n_u: int) -> "SlidingWindow":
        return cls(
            capacity,
            np.zeros((n_x, 0)),
            np.zeros((n_x, 0)),
            np.zeros((n_u, 0)),
        )

    @property
    def fill(self) -> int:
        return self.x_plus.shape[1]

    @property
    def is_full(self) -> bool:
        return self.fill == self.capacity

    def push(self, x_prev, u, x_next) -> "SlidingWindow":
        x_prev = np.asarray(x_prev, dtype=float).reshape(-1, 1)
        u = np.asarray(u, dtype=float).reshape(-1, 1)
        x_next = np.asarray(x_next, dtype=float).reshape(-1, 1)
        if self.fill and (
            x_prev.shape[0] != self.x_minus.shape[0] or u.shape[0] != self.u_minus.shape[0]
        ):
            raise ValueError("pushed transition has inconsistent dimensions")
        start = 1 if self.is_full else 0
        return SlidingWindow(
            self.capacity,
            np.hstack([self.x_plus[:, start:], x_next]),
            np.hstack([self.x_minus[:, start:], x_prev]),
            np.hstack([self.u_minus[:, start:], u]),
        )

    def regressors(self, affine: bool = False) -> np.ndarray:
        """Data matrix D = [X-; U-], with an all-ones row prepended if affine."""
        blocks = [self.x_minus, self.u_minus]
        if affine:
            blocks.insert(0, np.ones((1, self.fill)))
        return np.vstack(blocks)

    def points(self) -> np.ndarray:
        """(fill, n_x + n_u) array of regressor-space points z_j = [x_j; u_j]."""
        return np.vstack([self.x_minus, self.u_minus]).T


@dataclass
class Trajectory:
    """Simulated or ingested input-state record.

    states has one more row than inputs; noises and models are populated by
    the simulator (models only for linear plants) and are None for ingested
    data. truncated marks a run cut short by numerical divergence.
    """

    states: np.ndarray
    inputs: np.ndarray
    noises: np.ndarray | None = None
    models: list | None = None
    truncated: bool = False

    def __len__(self) -> int:
        return self.states.shape[0]

    def transitions(self):
        """Iterate (x_k, u_k, x_{k+1}) over the recorded trajectory.

        Ingested files may carry one trailing input placeholder; only
        transitions with a recorded successor are yielded.
        """
        for k in range(min(self.inputs.shape[0], self.states.shape[0] - 1)):
            yield self.states[k], self.inputs[k], self.states[k + 1]


@dataclass
class PlantSpec:
    """True system description for simulation.

    kind "ltv": x+ = A_k x + B_k u + w with A_k, B_k drifting per step,
    either deterministically by (delta_a, delta_b) increments or randomly
    with entries bounded by sigma_ab. kind "nonlinear": x+ = f(x, u) + w for
    a named map from NONLINEAR_MAPS.
    """

    kind: str
    noise_set: Zonotope
    a0: np.ndarray | None = None
    b0: np.ndarray | None = None
    delta_a: np.ndarray | None = None
    delta_b: np.ndarray | None = None
    drift: str = "none"  # none | deterministic | random
    sigma_ab: float = 0.0
    map_name: str = ""
    params: dict = field(default_factory=dict)
    dt: float = 0.1

    def __post_init__(self):
        if self.kind not in ("ltv", "nonlinear"):
            raise ValueError(f"unknown plant kind {self.kind!r}")
        if self.kind == "ltv":
            self.a0 = np.asarray(self.a0, dtype=float)
            self.b0 = np.asarray(self.b0, dtype=float)
            if self.b0.ndim == 1:
                self.b0 = self.b0.reshape(-1, 1)
            if self.drift == "deterministic":
                self.delta_a = np.asarray(self.delta_a, dtype=float)
                self.delta_b = np.asarray(self.delta_b, dtype=float)
                if self.delta_b.ndim == 1:
                    self.delta_b = self.delta_b.reshape(-1, 1)
                bound = max(
                    np.max(np.abs(self.delta_a), initial=0.0),
                    np.max(np.abs(self.delta_b), initial=0.0),
                )
                if bound > self.sigma_ab + 1e-15:
                    raise ValueError(
                        f"drift increments exceed the declared bound sigma_ab={self.sigma_ab}"
                    )
        else:
            if self.map_name not in NONLINEAR_MAPS:
                raise ValueError(f"unknown nonlinear map {self.map_name!r}")

    @property
    def n_x(self) -> int:
        if self.kind == "ltv":
            return self.a0.shape[0]
        return NONLINEAR_MAPS[self.map_name](self.params)[1]

    @property
    def n_u(self) -> int:
        if self.kind == "ltv":
            return self.b0.shape[1]
        return NONLINEAR_MAPS[self.map_name](self.params)[2]

    def model_at(self, k: int):
        """True (A, B) after k deterministic drift steps."""
        if self.kind != "ltv":
            raise ValueError("model_at is only defined for linear plants")
        if self.drift == "random":
            raise ValueError("random drift has no deterministic model sequence")
        if self.drift == "none" or k == 0:
            return self.a0.copy(), self.b0.copy()
        return self.a0 + k * self.delta_a, self.b0 + k * self.delta_b

    def advanced(self, k: int) -> "PlantSpec":
        """The same plant with its nominal model moved k drift steps forward."""
        if self.kind != "ltv" or self.drift in ("none",):
            return self
        a, b = self.model_at(k) if self.drift == "deterministic" else (self.a0, self.b0)
        return PlantSpec(
            kind="ltv",
            noise_set=self.noise_set,
            a0=a,
            b0=b,
            delta_a=self.delta_a,
            delta_b=self.delta_b,
            drift=self.drift,
            sigma_ab=self.sigma_ab,
            dt=self.dt,
        )

    def nonlinear_map(self):
        return NONLINEAR_MAPS[self.map_name](self.params)[0]


_DIVERGENCE_LIMIT = 1e12


def simulate(
    plant: PlantSpec,
    x0,
    inputs,
    rng: np.random.Generator,
    vertex_noise: bool = False,
) -> Trajectory:
    """Roll the true system forward under the given inputs.

    Noise is drawn from the plant's noise zonotope each step (uniform
    factors, or cube vertices when vertex_noise is set for stress tests).
    For linear plants the realized (A_k, B_k) sequence is recorded. A
    non-finite or exploding state truncates the trajectory and sets the
    truncated flag instead of raising.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[0] < inputs.shape[1] and inputs.shape[0] == plant.n_u != inputs.shape[1]:
        inputs = inputs.T
    states = [x.copy()]
    noises = []
    models = [] if plant.kind == "ltv" else None
    truncated = False

    if plant.kind == "ltv":
        A = plant.a0.copy()
        B = plant.b0.copy()
    else:
        f = plant.nonlinear_map()

    for k in range(inputs.shape[0]):
        u = inputs[k]
        w = vertex_sample(plant.noise_set, rng) if vertex_noise else sample(plant.noise_set, rng)
        if plant.kind == "ltv":
            models.append((A.copy(), B.copy()))
            x = A @ x + B @ u + w
            if plant.drift == "deterministic":
                A = A + plant.delta_a
                B = B + plant.delta_b
            elif plant.drift == "random":
                A = A + rng.uniform(-plant.sigma_ab, plant.sigma_ab, size=A.shape)
                B = B + rng.uniform(-plant.sigma_ab, plant.sigma_ab, size=B.shape)
        else:
            x = f(x, u) + w
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > _DIVERGENCE_LIMIT:
            truncated = True
            break
        states.append(x.copy())
        noises.append(w)

    T = len(states) - 1
    return Trajectory(
        states=np.array(states),
        inputs=inputs[:T],
        noises=np.array(noises) if noises else np.zeros((0, plant.n_x)),
        models=models[:T] if models is not None else None,
        truncated=truncated,
    )


def collect_window(trajectory: Trajectory, capacity: int) -> SlidingWindow:
    """Push every transition of a trajectory through a fresh window."""
    n_x = trajectory.states.shape[1]
    n_u = trajectory.inputs.shape[1]
    w = SlidingWindow.empty(capacity, n_x, n_u)
    for x, u, xn in trajectory.transitions():
        w = w.push(x, u, xn)
    return w


def offline_window(
    plant: PlantSpec,
    x0_set: Zonotope,
    input_set: Zonotope,
    n_traj: int,
    length: int,
    rng: np.random.Generator,
) -> SlidingWindow:
    """Concatenated multi-trajectory dataset for the batch baseline.

    Each trajectory starts from a fresh sample of x0_set with inputs drawn
    from input_set; all transitions land in one window whose capacity is
    the total transition count.
    """
    w = SlidingWindow.empty(n_traj * length, x0_set.dim, input_set.dim)
    for _ in range(n_traj):
        x0 = sample(x0_set, rng)
        inputs = np.array([sample(input_set, rng) for _ in range(length)])
        traj = simulate(plant, x0, inputs, rng)
        for x, u, xn in traj.transitions():
            w = w.push(x, u, xn)
    return w


def batch_ls_model_set(
    window: SlidingWindow,
    noise_set: Zonotope,
    affine: bool = False,
    check_rank: bool = True,
) -> MatrixZonotope:
    """Set of models consistent with the whole window under bounded noise.

    Writes X+ = M D + W columnwise with W columns in the noise zonotope and
    solves by pseudoinverse: center (X+ - c_w 1^T) D^+, one generator
    -g_w^(i) e_t^T D^+ per noise generator and window column. With
    check_rank the data matrix must have full row rank (the excitation
    requirement of the batch method); pass False to accept a rank-deficient
    window and fall back to the minimum-norm fit.
    """
    if not window.is_full:
        raise ValueError("window must be full before fitting the batch model")
    D = window.regressors(affine=affine)
    if check_rank and np.linalg.matrix_rank(D) < D.shape[0]:
        raise ValueError(
            "data matrix is rank deficient; the window is not persistently exciting"
        )
    Dp = np.linalg.pinv(D)
    nd = window.fill
    c_w = noise_set.center
    Gw = noise_set.generators
    center = (window.x_plus - np.outer(c_w, np.ones(nd))) @ Dp
    gens = []
    for i in range(Gw.shape[1]):
        g = Gw[:, i]
        for t in range(nd):
            gens.append(-np.outer(g, Dp[t]))
    if gens:
        return MatrixZonotope(center, np.array(gens))
    return MatrixZonotope(center)


# ---------------------------------------------------------------------------
# trajectory files
# ---------------------------------------------------------------------------

def ingest_csv(path) -> Trajectory:
    """Read a trajectory from CSV with header k,x1..xn,u1..um.

    Dimensions are inferred from the header; malformed rows raise with the
    offending line number. A header-only file yields an empty trajectory
    with a warning.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        n_x = sum(1 for h in header if h.strip().startswith("x"))
        n_u = sum(1 for h in header if h.strip().startswith("u"))
        if n_x == 0 or header[0].strip() != "k":
            raise ValueError(f"{path}: header must be k,x1..xn,u1..um, got {header}")
        width = 1 + n_x + n_u
        states, inputs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ValueError(
                    f"{path}:{lineno}: expected {width} fields, got {len(row)}"
                )
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            states.append(vals[:n_x])
            inputs.append(vals[n_x:])
    if not states:
        warnings.warn(f"{path}: no data rows, returning an empty trajectory")
        return Trajectory(states=np.zeros((0, n_x)), inputs=np.zeros((0, n_u)))
    return Trajectory(states=np.array(states), inputs=np.array(inputs))


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Inverse of ingest_csv: one row per step k with state and input at k."""
    T = trajectory.states.shape[0]
    n_x = trajectory.states.shape[1]
    n_u = trajectory.inputs.shape[1] if trajectory.inputs.size else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["k"] + [f"x{i+1}" for i in range(n_x)] + [f"u{i+1}" for i in range(n_u)]
        )
        for k in range(T):
            u = (
                trajectory.inputs[k]
                if k < trajectory.inputs.shape[0]
                else np.zeros(n_u)
            )
            writer.writerow([k] + list(trajectory.states[k]) + list(u))


# ---------------------------------------------------------------------------
# bundled plants
# ---------------------------------------------------------------------------

def ltv_example_plant(
    noise_set: Zonotope | None = None,
    drifting: bool = False,
    sigma_ab: float = 3e-4,
    dt: float = 0.1,
) -> PlantSpec:
    """Stable five-state, single-input example plant sampled at 0.1 s.

    Two lightly damped oscillatory blocks plus one coupled first-order
    state, discretized exactly (zero-order hold). The drifting variant
    applies the deterministic per-step increments dA = -1e-4, dB = +3e-4 to
    every entry, which stay within sigma_ab.
    """
    A_c = np.array(
        [
            [-0.6, 2.0, 0.0, 0.0, 0.0],
            [-2.0, -0.6, 0.0, 0.0, 0.0],
            [0.0, 0.0, -1.2, 3.0, 0.0],
            [0.0, 0.0, -3.0, -1.2, 0.0],
            [0.3, 0.0, 0.2, 0.0, -0.8],
        ]
    )
    B_c = np.array([[-0.5], [-1.0], [-0.3], [-0.8], [-0.6]])
    A_d = expm(A_c * dt)
    B_d = np.linalg.solve(A_c, (A_d - np.eye(5)) @ B_c)
    if noise_set is None:
        noise_set = Zonotope(np.zeros(5), 0.005 * np.eye(5))
    if not drifting:
        return PlantSpec(kind="ltv", noise_set=noise_set, a0=A_d, b0=B_d, dt=dt)
    return PlantSpec(
        kind="ltv",
        noise_set=noise_set,
        a0=A_d,
        b0=B_d,
        delta_a=-1e-4 * np.ones((5, 5)),
        delta_b=3e-4 * np.ones((5, 1)),
        drift="deterministic",
        sigma_ab=sigma_ab,
        dt=dt,
    )


def cstr_map(params: dict):
    """Two-state exothermic reactor (concentration, temperature), Euler step.

    x1' = q_feed (u1 - x1) - k0 x1 exp(act x2)
    x2' = -q_cool (x2 - t_env) + heat_gain k0 x1 exp(act x2) + cool_gain u2

    Nonlinear through the Arrhenius-style rate term (an affine fit over a
    wide temperature range pays a visible residual); all parameters are
    overridable through the params dict.
    """
    p = {
        "dt": 0.05,
        "k0": 5e-5,
        "act": 0.8,
        "q_feed": 1.0,
        "q_cool": 0.5,
        "t_env": 10.0,
        "heat_gain": 3.0,
        "cool_gain": 1.0,
    }
    p.update(params or {})
    dt = p["dt"]

    def f(x, u):
        rate = p["k0"] * x[0] * np.exp(p["act"] * x[1])
        dx1 = p["q_feed"] * (u[0] - x[0]) - rate
        dx2 = -p["q_cool"] * (x[1] - p["t_env"]) + p["heat_gain"] * rate + p["cool_gain"] * u[1]
        return np.array([x[0] + dt * dx1, x[1] + dt * dx2])

    return f, 2, 2


NONLINEAR_MAPS = {"cstr": cstr_map}


def cstr_plant(noise_set: Zonotope | None = None, params: dict | None = None) -> PlantSpec:
    """The bundled reactor plant with its default noise zonotope."""
    if noise_set is None:
        noise_set = Zonotope(np.zeros(2), 0.003 * np.eye(2))
    return PlantSpec(
        kind="nonlinear",
        noise_set=noise_set,
        map_name="cstr",
        params=params or {},
        dt=(params or {}).get("dt", 0.05),
    )
