import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _quiet_conditioning_warnings():
    # aggressive initial covariances intentionally produce near-singular
    # closed-loop maps during the first few updates
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def point_in_convex_polygon(vertices, p, tol=1e-9):
    """Membership test for a convex polygon given as an ordered vertex ring."""
    V = np.asarray(vertices, dtype=float)
    p = np.asarray(p, dtype=float)
    if V.shape[0] == 1:
        return bool(np.max(np.abs(V[0] - p)) <= tol)
    if V.shape[0] == 2:
        d = V[1] - V[0]
        t = np.dot(p - V[0], d) / np.dot(d, d)
        proj = V[0] + np.clip(t, 0.0, 1.0) * d
        return bool(np.linalg.norm(p - proj) <= tol)
    scale = 1.0 + np.max(np.abs(V))
    sign = 0.0
    for i in range(V.shape[0]):
        a, b = V[i], V[(i + 1) % V.shape[0]]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cross) <= tol * scale:
            continue
        if sign == 0.0:
            sign = np.sign(cross)
        elif np.sign(cross) != sign:
            return False
    return True
