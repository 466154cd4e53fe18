"""Zonotope and matrix-zonotope arithmetic.

A zonotope is the affine image of a unit cube,

    Z = { c + G b : ||b||_inf <= 1 },   c in R^n,  G in R^(n x gamma),

and a matrix zonotope is the same construction over matrices, with a center
matrix and a list of generator matrices. All values here are immutable after
construction and every operation returns a new value, so they are safe to
share between threads.

Generator columns that are exactly zero are dropped on construction; they
contribute nothing to the set and would otherwise make generator counts
meaningless.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "Zonotope",
    "MatrixZonotope",
    "IntervalMatrix",
    "linear_map",
    "minkowski_sum",
    "cartesian_product",
    "interval_hull",
    "reduce",
    "contains_point",
    "contains_points",
    "sample",
    "sample_points",
    "vertex_sample",
    "vertices_2d",
    "matzono_vec",
    "matzono_unvec",
    "matzono_minkowski",
    "matzono_reduce",
    "matzono_interval",
    "matzono_sample",
    "interval_frobenius",
    "matzono_times_zono",
]


def _drop_zero_columns(G: np.ndarray) -> np.ndarray:
    if G.shape[1] == 0:
        return G
    keep = np.any(G != 0.0, axis=0)
    return G if keep.all() else G[:, keep]


class Zonotope:
    """Set {center + generators @ b : ||b||_inf <= 1} in R^n.

    center is a length-n vector and generators an (n, gamma) matrix whose
    columns are the generator vectors. gamma = 0 represents the singleton
    {center}.
    """

    __slots__ = ("center", "generators")

    # let ndarray @ Zonotope fall through to __rmatmul__
    __array_ufunc__ = None

    def __init__(self, center, generators=None):
        c = np.array(center, dtype=float).reshape(-1)
        if generators is None:
            G = np.zeros((c.shape[0], 0))
        else:
            G = np.array(generators, dtype=float)
            if G.ndim == 1:
                G = G.reshape(-1, 1)
        if G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise ValueError(
                f"generator matrix shape {G.shape} does not match center dimension {c.shape[0]}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(G))):
            raise ValueError("zonotope data must be finite")
        G = _drop_zero_columns(G)
        c.setflags(write=False)
        G.setflags(write=False)
        self.center = c
        self.generators = G

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def ngens(self) -> int:
        return self.generators.shape[1]

    def bounds(self):
        """Per-dimension lower and upper bounds of the interval hull."""
        r = np.sum(np.abs(self.generators), axis=1)
        return self.center - r, self.center + r

    def radius(self) -> np.ndarray:
        """Per-dimension half-widths of the interval hull."""
        return np.sum(np.abs(self.generators), axis=1)

    def __add__(self, other: "Zonotope") -> "Zonotope":
        return minkowski_sum(self, other)

    def __rmatmul__(self, L) -> "Zonotope":
        return linear_map(L, self)

    def __repr__(self):
        return f"Zonotope(dim={self.dim}, ngens={self.ngens})"

    def to_dict(self) -> dict:
        # generators serialized column-wise: one inner list per generator
        return {
            "center": self.center.tolist(),
            "generators": self.generators.T.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Zonotope":
        gens = np.array(d["generators"], dtype=float)
        if gens.size == 0:
            return cls(d["center"])
        return cls(d["center"], gens.T)


class MatrixZonotope:
    """Set {center + sum_i b_i generators[i] : ||b||_inf <= 1} of (n, m) matrices."""

    __slots__ = ("center", "generators")

    def __init__(self, center, generators=None):
        C = np.array(center, dtype=float)
        if C.ndim != 2:
            raise ValueError("center must be a matrix")
        if generators is None:
            A = np.zeros((0,) + C.shape)
        else:
            A = np.array(generators, dtype=float)
            if A.ndim == 2:
                A = A[None, :, :]
        if A.ndim != 3 or (A.shape[0] > 0 and A.shape[1:] != C.shape):
            raise ValueError(
                f"generator stack shape {A.shape} does not match center shape {C.shape}"
            )
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(A))):
            raise ValueError("matrix zonotope data must be finite")
        if A.shape[0]:
            keep = np.any(A != 0.0, axis=(1, 2))
            if not keep.all():
                A = A[keep]
        C.setflags(write=False)
        A.setflags(write=False)
        self.center = C
        self.generators = A

    @property
    def shape(self):
        return self.center.shape

    @property
    def ngens(self) -> int:
        return self.generators.shape[0]

    def transpose(self) -> "MatrixZonotope":
        return MatrixZonotope(self.center.T, self.generators.transpose(0, 2, 1))

    def __repr__(self):
        return f"MatrixZonotope(shape={self.shape}, ngens={self.ngens})"

    def to_dict(self) -> dict:
        z = matzono_vec(self)
        d = z.to_dict()
        d["shape"] = list(self.shape)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixZonotope":
        z = Zonotope.from_dict(d)
        return matzono_unvec(z, tuple(d["shape"]))


class IntervalMatrix:
    """Elementwise interval [lower, upper] of real matrices."""

    __slots__ = ("lower", "upper")

    def __init__(self, lower, upper):
        lo = np.array(lower, dtype=float)
        up = np.array(upper, dtype=float)
        if lo.shape != up.shape:
            raise ValueError("lower and upper must have the same shape")
        if np.any(lo > up):
            raise ValueError("lower bound exceeds upper bound")
        lo.setflags(write=False)
        up.setflags(write=False)
        self.lower = lo
        self.upper = up

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.upper + self.lower)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def __repr__(self):
        return f"IntervalMatrix(shape={self.lower.shape})"


# ---------------------------------------------------------------------------
# vector zonotope operations
# ---------------------------------------------------------------------------

def linear_map(L, Z: Zonotope) -> Zonotope:
    """Image L Z = <L c, L G> of a zonotope under a linear map."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[1] != Z.dim:
        raise ValueError(f"map shape {L.shape} incompatible with zonotope dimension {Z.dim}")
    return Zonotope(L @ Z.center, L @ Z.generators)


def minkowski_sum(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    """Z1 + Z2 = <c1 + c2, [G1, G2]>."""
    if Z1.dim != Z2.dim:
        raise ValueError(f"dimension mismatch: {Z1.dim} vs {Z2.dim}")
    return Zonotope(Z1.center + Z2.center, np.hstack([Z1.generators, Z2.generators]))


def cartesian_product(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    """Stacked set {(z1, z2)} with block-diagonal generator matrix."""
    c = np.concatenate([Z1.center, Z2.center])
    G = np.block(
        [
            [Z1.generators, np.zeros((Z1.dim, Z2.ngens))],
            [np.zeros((Z2.dim, Z1.ngens)), Z2.generators],
        ]
    )
    return Zonotope(c, G)


def interval_hull(Z: Zonotope) -> IntervalMatrix:
    """Smallest axis-aligned box containing Z, as an (n, 1) interval matrix."""
    lo, hi = Z.bounds()
    return IntervalMatrix(lo[:, None], hi[:, None])


def reduce(Z: Zonotope, q: int) -> Zonotope:
    """Order reduction to at most q generators, preserving containment.

    Keeps the q - n largest generators by Euclidean norm and replaces the
    remainder with their interval hull (one axis-aligned generator per
    dimension). If Z already has at most q generators it is returned
    unchanged.
    """
    n, g = Z.dim, Z.ngens
    if q < n:
        raise ValueError(f"reduction order q={q} must be at least the dimension {n}")
    if g <= q:
        return Z
    norms = np.linalg.norm(Z.generators, axis=0)
    order = np.argsort(norms, kind="stable")
    ndrop = g - (q - n)
    drop, keep = order[:ndrop], order[ndrop:]
    box = np.diag(np.sum(np.abs(Z.generators[:, drop]), axis=1))
    return Zonotope(Z.center, np.hstack([Z.generators[:, keep], box]))


def _contains_lp(G: np.ndarray, r: np.ndarray, tol: float) -> bool:
    # minimize t subject to G b = r, -t <= b_i <= t
    n, g = G.shape
    c_obj = np.zeros(g + 1)
    c_obj[-1] = 1.0
    A_ub = np.block(
        [
            [np.eye(g), -np.ones((g, 1))],
            [-np.eye(g), -np.ones((g, 1))],
        ]
    )
    b_ub = np.zeros(2 * g)
    A_eq = np.hstack([G, np.zeros((n, 1))])
    res = linprog(
        c_obj,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=r,
        bounds=[(None, None)] * g + [(0.0, None)],
        method="highs",
    )
    if res.status == 2:  # infeasible: point off the affine span of G
        return False
    if not res.success:
        raise RuntimeError(f"containment LP failed: {res.message}")
    return float(res.fun) <= 1.0 + tol


def contains_point(Z: Zonotope, x, tol: float = 1e-7) -> bool:
    """Decide x in Z by minimizing ||b||_inf subject to c + G b = x.

    Accepts with slack tol on the unit-cube bound. A point off the affine
    span of the generators (possible when gamma < n) is reported as not
    contained rather than raising. A cheap least-squares witness is tried
    before falling back to the linear program.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != Z.dim:
        raise ValueError(f"point dimension {x.shape[0]} != zonotope dimension {Z.dim}")
    r = x - Z.center
    G = Z.generators
    if G.shape[1] == 0:
        scale = 1.0 + float(np.max(np.abs(Z.center), initial=0.0))
        return float(np.max(np.abs(r), initial=0.0)) <= tol * scale
    beta = np.linalg.lstsq(G, r, rcond=None)[0]
    scale = 1.0 + float(np.max(np.abs(r))) + float(np.max(np.abs(G)))
    if np.max(np.abs(G @ beta - r)) <= 1e-9 * scale and np.max(np.abs(beta)) <= 1.0 + tol:
        return True
    return _contains_lp(G, r, tol)


def contains_points(Z: Zonotope, X, tol: float = 1e-7) -> np.ndarray:
    """Vectorized contains_point over the rows of X; returns a boolean array.

    Solves one least-squares system for all points and only runs the linear
    program for rows whose cheap witness is inconclusive.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != Z.dim:
        raise ValueError(f"points have dimension {X.shape[1]}, expected {Z.dim}")
    G = Z.generators
    R = (X - Z.center).T  # (n, npts)
    out = np.zeros(X.shape[0], dtype=bool)
    if G.shape[1] == 0:
        scale = 1.0 + float(np.max(np.abs(Z.center), initial=0.0))
        return np.max(np.abs(R), axis=0, initial=0.0) <= tol * scale
    B = np.linalg.lstsq(G, R, rcond=None)[0]
    scale = 1.0 + np.max(np.abs(R), axis=0, initial=0.0) + float(np.max(np.abs(G)))
    witness = (np.max(np.abs(G @ B - R), axis=0) <= 1e-9 * scale) & (
        np.max(np.abs(B), axis=0) <= 1.0 + tol
    )
    out[witness] = True
    for i in np.nonzero(~witness)[0]:
        out[i] = _contains_lp(G, R[:, i], tol)
    return out


def sample(Z: Zonotope, rng: np.random.Generator) -> np.ndarray:
    """Draw c + G b with factors b uniform on [-1, 1]^gamma."""
    b = rng.uniform(-1.0, 1.0, size=Z.ngens)
    return Z.center + Z.generators @ b


def sample_points(Z: Zonotope, rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, n) array of independent uniform-factor samples."""
    B = rng.uniform(-1.0, 1.0, size=(Z.ngens, count))
    return (Z.center[:, None] + Z.generators @ B).T


def vertex_sample(Z: Zonotope, rng: np.random.Generator) -> np.ndarray:
    """Worst-case draw with factors on the cube vertices b in {-1, +1}^gamma."""
    b = rng.integers(0, 2, size=Z.ngens) * 2.0 - 1.0
    return Z.center + Z.generators @ b


def vertices_2d(Z: Zonotope, dims=(0, 1)) -> np.ndarray:
    """Exact vertex polygon of the 2-D projection onto the given dimensions.

    Projected generators are flipped into the upper half-plane, sorted by
    angle, and the boundary is walked from the lowest vertex: up one side by
    +2g_i in angular order, back down the other by symmetry. Returns a
    (V, 2) array in counterclockwise order with V <= 2 * (nonzero projected
    generators).
    """
    i, j = dims
    if not (0 <= i < Z.dim and 0 <= j < Z.dim) or i == j:
        raise ValueError(f"invalid projection dims {dims} for dimension {Z.dim}")
    c = Z.center[[i, j]]
    G = _drop_zero_columns(Z.generators[[i, j], :])
    g = G.shape[1]
    if g == 0:
        return c.reshape(1, 2)
    Gn = G.copy()
    flip = (Gn[1] < 0) | ((Gn[1] == 0) & (Gn[0] < 0))
    Gn[:, flip] *= -1.0
    order = np.argsort(np.arctan2(Gn[1], Gn[0]), kind="stable")
    S = Gn[:, order]
    verts = np.empty((2 * g, 2))
    v = c - S.sum(axis=1)
    verts[0] = v
    for k in range(g):
        v = v + 2.0 * S[:, k]
        verts[k + 1] = v
    for k in range(g - 1):
        v = v - 2.0 * S[:, k]
        verts[g + 1 + k] = v
    return verts


# ---------------------------------------------------------------------------
# matrix zonotope operations
# ---------------------------------------------------------------------------

def matzono_vec(M: MatrixZonotope) -> Zonotope:
    """Column-stacking bijection onto a vector zonotope in R^(n m)."""
    n, m = M.shape
    c = M.center.reshape(-1, order="F")
    G = M.generators.transpose(0, 2, 1).reshape(M.ngens, n * m).T
    return Zonotope(c, G)


def matzono_unvec(Z: Zonotope, shape) -> MatrixZonotope:
    """Inverse of matzono_vec for the given (n, m) shape."""
    n, m = shape
    if Z.dim != n * m:
        raise ValueError(f"zonotope dimension {Z.dim} does not match shape {shape}")
    C = Z.center.reshape((n, m), order="F")
    A = Z.generators.T.reshape(Z.ngens, m, n).transpose(0, 2, 1)
    return MatrixZonotope(C, A)


def matzono_minkowski(M1: MatrixZonotope, M2: MatrixZonotope) -> MatrixZonotope:
    """M1 + M2 with summed centers and concatenated generator lists."""
    if M1.shape != M2.shape:
        raise ValueError(f"shape mismatch: {M1.shape} vs {M2.shape}")
    return MatrixZonotope(
        M1.center + M2.center, np.concatenate([M1.generators, M2.generators])
    )


def matzono_reduce(M: MatrixZonotope, q: int, whiten=None) -> MatrixZonotope:
    """Order reduction through the vectorized form: unvec(reduce(vec(M), q)).

    whiten, if given, is an invertible (n, n) matrix T defining the
    coordinates G -> T^-1 G in which the norm sorting and boxing happen;
    the result is mapped back by T, so containment is preserved either way.
    Boxing in plain coordinates can blow up under repeated application of
    maps that are contractive only in a weighted metric; whitening with
    (a square root of) that weight keeps the reduced family inside the
    contracting envelope.
    """
    n, m = M.shape
    if q < n * m:
        raise ValueError(f"reduction order q={q} must be at least n*m={n * m}")
    if M.ngens <= q:
        return M
    if whiten is None:
        return matzono_unvec(reduce(matzono_vec(M), q), M.shape)
    T = np.asarray(whiten, dtype=float)
    Tinv = np.linalg.inv(T)
    tilted = MatrixZonotope(Tinv @ M.center, np.matmul(Tinv, M.generators))
    red = matzono_unvec(reduce(matzono_vec(tilted), q), M.shape)
    return MatrixZonotope(T @ red.center, np.matmul(T, red.generators))


def matzono_interval(M: MatrixZonotope) -> IntervalMatrix:
    """Elementwise interval enclosure center -/+ sum_i |generators[i]|."""
    spread = (
        np.sum(np.abs(M.generators), axis=0)
        if M.ngens
        else np.zeros(M.shape)
    )
    return IntervalMatrix(M.center - spread, M.center + spread)


def interval_frobenius(I: IntervalMatrix) -> float:
    """|| |midpoint| + radius ||_F, an upper bound on ||A||_F over members A."""
    return float(np.linalg.norm(np.abs(I.midpoint) + I.radius))


def matzono_sample(M: MatrixZonotope, rng: np.random.Generator) -> np.ndarray:
    """Draw a member matrix with uniform factors."""
    if M.ngens == 0:
        return M.center.copy()
    b = rng.uniform(-1.0, 1.0, size=M.ngens)
    return M.center + np.tensordot(b, M.generators, axes=1)


def matzono_times_zono(M: MatrixZonotope, Z: Zonotope) -> Zonotope:
    """Over-approximation of {A z : A in M, z in Z}.

    Returns <C c, [C G, A_1 c, A_1 G, ..., A_g c, A_g G]>: every cross term
    between a generator matrix and a generator vector gets its own
    independent factor, which makes the result a superset of the exact
    product set. All cross terms are enumerated; apply reduce afterwards if
    the order grows too large.
    """
    if M.shape[1] != Z.dim:
        raise ValueError(
            f"matrix zonotope shape {M.shape} incompatible with zonotope dimension {Z.dim}"
        )
    C, A = M.center, M.generators
    c2 = C @ Z.center
    blocks = [C @ Z.generators]
    if M.ngens:
        Ac = A @ Z.center  # (g, n)
        AG = A @ Z.generators  # (g, n, gamma_Z)
        per = np.concatenate([Ac[:, :, None], AG], axis=2)
        blocks.append(np.concatenate(list(per), axis=1))
    return Zonotope(c2, np.hstack(blocks))
