"""Exponentially forgetting set-valued recursive least squares.

Estimates the time-varying parameter matrix of the regression

    y_k = phi_k theta_k + v_k,        theta_k = theta_{k-1} + dtheta_{k-1},

where the measurement noise is entrywise bounded, ||v_k||_max <= sigma_v,
and the parameter drift is entrywise bounded, ||dtheta||_max <= sigma_theta.
The estimator state carries a matrix zonotope <C_k, G_k> that (for a
suitable forgetting factor) contains the true parameter at every step,
together with the covariance-like matrix P_k that drives the optimal
correction gain.

Update recursion, with K the gain and lam in (0, 1] the forgetting factor:

    C+      = (I - K phi) C + K y
    G_i+    = lam^(-1/2) (I - K phi) G_i          (retained generators)
    appended noise generators: -K Q_l, one per single-entry bound matrix
    P+      = lam^(-1) (I - K phi) P              (symmetrized)

The lam^(-1/2) inflation is what lets the set absorb bounded parameter
drift; lam = 1 recovers the drift-free estimator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .sets import MatrixZonotope, matzono_reduce

__all__ = [
    "EstimationError",
    "NoiseStructure",
    "DriftStructure",
    "EstimatorState",
    "init_estimator",
    "default_init",
    "warm_start_center",
    "optimal_gain",
    "update",
    "model_set",
    "pe_check",
    "gain_objective",
    "minimize_gain_objective",
    "ltv_regressor",
    "affine_regressor",
    "output_row",
]


class EstimationError(RuntimeError):
    """Raised when the recursion cannot continue (singular gain, lost PD)."""


def _single_entry_stack(rows: int, cols: int, value: float) -> np.ndarray:
    """(rows*cols, rows, cols) stack with one entry = value per matrix.

    Index l runs column-major over the entry positions, matching the
    column-stacking order used by the vec bijection.
    """
    out = np.zeros((rows * cols, rows, cols))
    for j in range(cols):
        for i in range(rows):
            out[j * rows + i, i, j] = value
    return out


class NoiseStructure:
    """Entrywise measurement-noise bound with its generator basis.

    Each of the p*m basis matrices has a single nonzero entry sigma_v, so
    together they describe v in <0, [Q_1, ..., Q_pm]> for any noise with
    ||v||_max <= sigma_v.
    """

    __slots__ = ("p", "m", "sigma_v", "basis")

    def __init__(self, p: int, m: int, sigma_v: float):
        if p < 1 or m < 1:
            raise ValueError("output shape must be at least 1x1")
        if sigma_v < 0:
            raise ValueError("sigma_v must be nonnegative")
        self.p = int(p)
        self.m = int(m)
        self.sigma_v = float(sigma_v)
        basis = _single_entry_stack(p, m, self.sigma_v)
        basis.setflags(write=False)
        self.basis = basis

    def q_matrix(self) -> np.ndarray:
        """Q = sum_l Q_l Q_l^T, which evaluates to m sigma_v^2 I_p."""
        return self.m * self.sigma_v**2 * np.eye(self.p)


class DriftStructure:
    """Entrywise parameter-drift bound, mirroring NoiseStructure for dtheta."""

    __slots__ = ("n", "m", "sigma_theta", "basis")

    def __init__(self, n: int, m: int, sigma_theta: float):
        if n < 1 or m < 1:
            raise ValueError("parameter shape must be at least 1x1")
        if sigma_theta < 0:
            raise ValueError("sigma_theta must be nonnegative")
        self.n = int(n)
        self.m = int(m)
        self.sigma_theta = float(sigma_theta)
        basis = _single_entry_stack(n, m, self.sigma_theta)
        basis.setflags(write=False)
        self.basis = basis


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Immutable estimator state; update() returns a new one.

    center: (n, m) parameter estimate C_k, generators: (r, n, m) stack of
    generator matrices, covariance: (n, n) symmetric positive definite P_k.
    """

    center: np.ndarray
    generators: np.ndarray
    covariance: np.ndarray
    lam: float
    noise: NoiseStructure
    drift: DriftStructure
    reduction_order: int
    step: int = 0

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def m(self) -> int:
        return self.center.shape[1]

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "generators": [g.tolist() for g in self.generators],
            "covariance": self.covariance.tolist(),
            "lambda": self.lam,
            "step": self.step,
            "noise": {"p": self.noise.p, "m": self.noise.m, "sigma_v": self.noise.sigma_v},
            "drift": {
                "n": self.drift.n,
                "m": self.drift.m,
                "sigma_theta": self.drift.sigma_theta,
            },
            "reduction_order": self.reduction_order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorState":
        gens = np.array(d["generators"], dtype=float)
        if gens.size == 0:
            gens = np.zeros((0,) + np.array(d["center"]).shape)
        return cls(
            center=np.array(d["center"], dtype=float),
            generators=gens,
            covariance=np.array(d["covariance"], dtype=float),
            lam=float(d["lambda"]),
            noise=NoiseStructure(**d["noise"]),
            drift=DriftStructure(**d["drift"]),
            reduction_order=int(d["reduction_order"]),
            step=int(d["step"]),
        )


def init_estimator(
    C0,
    G0,
    P0,
    lam: float,
    noise: NoiseStructure,
    drift: DriftStructure,
    reduction_order: int | None = None,
) -> EstimatorState:
    """Validated initial state at step 0.

    Requires P0 symmetric positive definite, lam in (0, 1], and the
    vectorized initial generators to have rank n*m so the set has full
    extent around C0 in every parameter direction.
    """
    C0 = np.array(C0, dtype=float)
    if C0.ndim != 2:
        raise ValueError("C0 must be a matrix")
    n, m = C0.shape
    G0 = np.array(G0, dtype=float)
    if G0.ndim != 3 or G0.shape[1:] != (n, m):
        raise ValueError(f"G0 must be a stack of {n}x{m} matrices")
    P0 = np.array(P0, dtype=float)
    if P0.shape != (n, n) or not np.allclose(P0, P0.T):
        raise ValueError("P0 must be a symmetric n x n matrix")
    if np.linalg.eigvalsh(P0).min() <= 0:
        raise ValueError("P0 must be positive definite")
    if not (0.0 < lam <= 1.0):
        raise ValueError("lambda must lie in (0, 1]")
    if noise.m != m:
        raise ValueError("noise structure column count must match C0")
    if (drift.n, drift.m) != (n, m):
        raise ValueError("drift structure shape must match C0")
    vec = G0.transpose(0, 2, 1).reshape(G0.shape[0], n * m)
    if np.linalg.matrix_rank(vec) < n * m:
        raise ValueError("initial generators must have rank n*m")
    if reduction_order is None:
        reduction_order = 5 * n * m
    if reduction_order < n * m:
        raise ValueError(f"reduction_order must be at least n*m={n * m}")
    return EstimatorState(
        center=C0,
        generators=G0,
        covariance=P0,
        lam=float(lam),
        noise=noise,
        drift=drift,
        reduction_order=int(reduction_order),
        step=0,
    )


def default_init(
    n: int,
    m: int,
    sigma_v: float,
    sigma_theta: float = 0.0,
    lam: float = 0.98,
    tau: float = 1e7,
    g0_scale: float = 1.5,
    reduction_order: int | None = None,
    p: int = 1,
) -> EstimatorState:
    """Zero center, P0 = tau I, and one single-entry generator per parameter.

    g0_scale bounds the entries of the unknown initial parameter; it must be
    large enough that the true matrix lies inside the initial box. p = 1 is
    the row convention used for system identification.
    """
    C0 = np.zeros((n, m))
    G0 = _single_entry_stack(n, m, g0_scale)
    return init_estimator(
        C0,
        G0,
        tau * np.eye(n),
        lam,
        NoiseStructure(p, m, sigma_v),
        DriftStructure(n, m, sigma_theta),
        reduction_order,
    )


def warm_start_center(regressors, outputs) -> np.ndarray:
    """Batch least-squares center pinv(Phi) Y from stacked snapshots."""
    Phi = np.vstack([np.asarray(p, dtype=float) for p in regressors])
    Y = np.vstack([np.asarray(y, dtype=float) for y in outputs])
    if Phi.shape[0] != Y.shape[0]:
        raise ValueError("regressors and outputs must stack to the same row count")
    return np.linalg.pinv(Phi) @ Y


def optimal_gain(P, phi, lam: float, Q):
    """Gain K = P phi^T Lambda^{-1} with Lambda = phi P phi^T + lam Q.

    Minimizes Tr(W P+) for every positive definite weighting W; the
    minimizer does not depend on W. Returns (K, Lambda).
    """
    P = np.asarray(P, dtype=float)
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    Q = np.asarray(Q, dtype=float)
    Lam = phi @ P @ phi.T + lam * Q
    try:
        K = np.linalg.solve(Lam, phi @ P).T
    except np.linalg.LinAlgError as exc:
        raise EstimationError(
            f"gain matrix Lambda is singular ({exc}); needs sigma_v > 0 or an exciting regressor"
        ) from exc
    if not np.all(np.isfinite(K)):
        raise EstimationError("gain computation produced non-finite values")
    return K, Lam


def update(state: EstimatorState, phi, y) -> EstimatorState:
    """One measurement update; returns the successor state.

    Raises EstimationError on non-finite inputs or when the covariance loses
    positive definiteness beyond tolerance. A near-singular (I - K phi)
    triggers a warning only: full rank is guaranteed analytically, so a tiny
    smallest singular value indicates conditioning trouble, not a wrong set.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n, m = state.n, state.m
    p = state.noise.p
    if phi.shape != (p, n):
        raise ValueError(f"regressor shape {phi.shape}, expected {(p, n)}")
    if y.shape != (p, m):
        raise ValueError(f"output shape {y.shape}, expected {(p, m)}")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
        raise EstimationError(f"non-finite measurement at step {state.step}")

    Q = state.noise.q_matrix()
    K, _ = optimal_gain(state.covariance, phi, state.lam, Q)
    closed = np.eye(n) - K @ phi

    sv = np.linalg.svd(closed, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        warnings.warn(
            f"(I - K phi) nearly singular at step {state.step}: "
            f"smallest relative singular value {sv[-1] / sv[0]:.2e}",
            RuntimeWarning,
        )

    center = closed @ state.center + K @ y
    retained = state.lam ** -0.5 * (closed @ state.generators)
    noise_gens = -np.matmul(K, state.noise.basis)
    gens = np.concatenate([retained, noise_gens]) if retained.size or noise_gens.size else retained

    # Joseph-form covariance update: identical to lam^-1 (I - K phi) P at
    # the optimal gain, but the quadratic form cannot lose definiteness to
    # cancellation when P is huge and regressors are nearly collinear.
    P = (closed @ state.covariance @ closed.T) / state.lam + K @ Q @ K.T
    P = 0.5 * (P + P.T)
    eigs, V = np.linalg.eigh(P)
    # fp-error scale is set by the incoming covariance, which can be many
    # orders larger than the updated one
    scale = max(1.0, float(np.linalg.norm(state.covariance)), abs(eigs[-1]))
    if eigs[0] <= -1e-10 * scale:
        raise EstimationError(
            f"covariance lost positive definiteness at step {state.step}: "
            f"min eigenvalue {eigs[0]:.3e}, lambda {state.lam}"
        )
    floor = 1e-14 * scale
    if eigs[0] < floor:
        # Joseph form is PSD in exact arithmetic; floor the fp noise so the
        # Cholesky factor below stays well defined
        P = (V * np.maximum(eigs, floor)) @ V.T
        P = 0.5 * (P + P.T)

    # Reduce in P-whitened coordinates: the closed-loop generator map is
    # nonexpansive in the metric of the covariance recursion, so boxing
    # there cannot feed an expanding direction (plain-coordinate boxing
    # diverges under the shear of I - K phi).
    model = matzono_reduce(
        MatrixZonotope(center, gens),
        state.reduction_order,
        whiten=np.linalg.cholesky(P),
    )

    return replace(
        state,
        center=model.center,
        generators=model.generators,
        covariance=P,
        step=state.step + 1,
    )


def model_set(state: EstimatorState, transposed: bool = False) -> MatrixZonotope:
    """The current parameter set <C_k, G_k>.

    With transposed=True the set of theta^T is returned, which is the
    row-form [A B] convention used by the reachability routines.
    """
    M = MatrixZonotope(state.center, state.generators)
    return M.transpose() if transposed else M


def pe_check(regressors, S: int):
    """Extreme eigenvalues of the windowed regressor Gramians.

    Over every window of S consecutive regressors, forms
    sum_i phi_i^T phi_i and returns (alpha, beta): the smallest minimum
    eigenvalue and the largest maximum eigenvalue across windows. The
    sequence is persistently exciting on this data iff alpha > 0.
    """
    regs = [np.atleast_2d(np.asarray(r, dtype=float)) for r in regressors]
    if not regs:
        raise ValueError("empty regressor sequence")
    if S < 1 or len(regs) < S:
        raise ValueError(f"need at least S={S} regressors, got {len(regs)}")
    grams = [r.T @ r for r in regs]
    alpha = np.inf
    beta = -np.inf
    acc = sum(grams[:S])
    for j in range(len(regs) - S + 1):
        if j > 0:
            acc = acc - grams[j - 1] + grams[j + S - 1]
        eigs = np.linalg.eigvalsh(0.5 * (acc + acc.T))
        alpha = min(alpha, eigs[0])
        beta = max(beta, eigs[-1])
    return float(alpha), float(beta)


# ---------------------------------------------------------------------------
# gain-optimality oracle (test support): the objective the gain minimizes
# ---------------------------------------------------------------------------

def gain_objective(K, P, phi, lam, Q, W) -> float:
    """J_W(K) = Tr(W [lam^-1 (I-K phi) P (I-K phi)^T + K Q K^T])."""
    n = P.shape[0]
    closed = np.eye(n) - K @ phi
    Pnext = (closed @ P @ closed.T) / lam + K @ Q @ K.T
    return float(np.trace(W @ Pnext))


def minimize_gain_objective(P, phi, lam, Q, W, tol: float = 1e-12) -> np.ndarray:
    """Numerically minimize J_W over the gain; independent of the closed form.

    The objective is a convex quadratic in the gain entries, so a trust-
    region Newton iteration with the analytic gradient and Hessian-vector
    product localizes the minimizer to machine precision.
    """
    n = P.shape[0]
    p = phi.shape[0]
    phiP = phi @ P
    phiPphiT = phiP @ phi.T

    def fun(k_flat):
        return gain_objective(k_flat.reshape(n, p), P, phi, lam, Q, W)

    def jac(k_flat):
        K = k_flat.reshape(n, p)
        closed = np.eye(n) - K @ phi
        grad = -2.0 / lam * (W @ closed @ P @ phi.T) + 2.0 * W @ K @ Q
        return grad.reshape(-1)

    def hessp(k_flat, v_flat):
        D = v_flat.reshape(n, p)
        return (2.0 / lam * (W @ D @ phiPphiT) + 2.0 * W @ D @ Q).reshape(-1)

    res = minimize(
        fun,
        np.zeros(n * p),
        jac=jac,
        hessp=hessp,
        method="trust-ncg",
        options={"gtol": tol, "maxiter": 2000},
    )
    return res.x.reshape(n, p)


# ---------------------------------------------------------------------------
# regression conventions for system identification
# ---------------------------------------------------------------------------

def ltv_regressor(x, u) -> np.ndarray:
    """Row [x^T u^T] for the linear convention y = x_next^T, theta = [A B]^T."""
    return np.concatenate([np.ravel(x), np.ravel(u)])[None, :]


def affine_regressor(x, u) -> np.ndarray:
    """Row [1 x^T u^T] for the affine convention used on nonlinear systems."""
    return np.concatenate([[1.0], np.ravel(x), np.ravel(u)])[None, :]


def output_row(x_next) -> np.ndarray:
    """Successor state as the 1 x n_x measured output row."""
    return np.ravel(x_next)[None, :]
