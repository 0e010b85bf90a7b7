"""Hyperboloid (Lorentz) model geometry with curvature fixed at -1.

Points live on the upper sheet {x : <x,x>_L = -1, x0 > 0} of the unit
hyperboloid in R^{n+1}; tangent vectors at the origin o = (1, 0, ..., 0)
have first coordinate 0. All functions take plain float64 arrays and
operate along the last axis, so a single (n+1,) vector and a batch of
rows (N, n+1) both work.

Exponential and logarithmic maps are implemented only at the origin in
their simplified closed forms; the optimizer uses the general-base
exponential separately (see hrcf.optim).
"""

import numpy as np

from .errors import ConstraintError

# Lorentz-constraint tolerance, relative to 1, for double precision.
SHEET_TOL = 1e-6

# Below this tangent norm the exponential map returns the origin exactly,
# avoiding 0/0 in the direction term.
_ZERO_NORM = 1e-12

# Clamp for -<x,y>_L inside derivative factors only: the distance gradient
# is unbounded as d -> 0 and this caps it (the value path clamps at 1.0,
# where arcosh is exactly 0).
_GRAD_CLAMP = 1.0 + 1e-12


def origin(spatial_dim: int) -> np.ndarray:
    """The origin o = (1, 0, ..., 0) in R^{spatial_dim + 1}."""
    o = np.zeros(spatial_dim + 1)
    o[0] = 1.0
    return o


def lorentz_inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lorentz inner product -x0*y0 + sum_i xi*yi along the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}"
        )
    if x.shape[-1] < 2:
        raise ValueError("Lorentz vectors need at least 2 coordinates")
    prod = x * y
    return prod[..., 1:].sum(axis=-1) - prod[..., 0]


def sheet_deviation(x: np.ndarray) -> np.ndarray:
    """|<x,x>_L + 1|, the distance from the Lorentz constraint."""
    return np.abs(lorentz_inner(x, x) + 1.0)


def is_on_sheet(x: np.ndarray, tol: float = SHEET_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (sheet_deviation(x) <= tol) & (x[..., 0] > 0)


def assert_on_sheet(x: np.ndarray, tol: float = SHEET_TOL) -> None:
    """Raise ConstraintError if any row is off the upper sheet."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ConstraintError("point has non-finite coordinates")
    dev = sheet_deviation(x)
    worst = float(np.max(dev)) if dev.size else 0.0
    if worst > tol:
        raise ConstraintError(
            f"point off the hyperboloid sheet: |<x,x>_L + 1| = {worst:.3e} > {tol:.0e}"
        )
    if np.any(x[..., 0] <= 0):
        raise ConstraintError("point on the lower sheet (x0 <= 0)")


def tangent_from_spatial(spatial: np.ndarray) -> np.ndarray:
    """Lift an (..., n) spatial vector to the (..., n+1) tangent (0, spatial)."""
    spatial = np.asarray(spatial, dtype=float)
    out = np.zeros(spatial.shape[:-1] + (spatial.shape[-1] + 1,))
    out[..., 1:] = spatial
    return out


def _sinhc(r: np.ndarray) -> np.ndarray:
    """sinh(r)/r, equal to 1 at r = 0."""
    safe = np.where(r < _ZERO_NORM, 1.0, r)
    return np.where(r < _ZERO_NORM, 1.0, np.sinh(safe) / safe)


def _sinhc_prime_over_r(r: np.ndarray) -> np.ndarray:
    """(r*cosh(r) - sinh(r)) / r^3, equal to 1/3 at r = 0.

    This is d/dr[sinh(r)/r] divided by r; the cubic cancellation makes the
    direct formula unusable below r ~ 1e-4, where the series takes over.
    """
    small = r < 1e-4
    safe = np.where(small, 1.0, r)
    direct = (safe * np.cosh(safe) - np.sinh(safe)) / safe**3
    series = 1.0 / 3.0 + r**2 / 30.0
    return np.where(small, series, direct)


def exp_origin_spatial(spatial: np.ndarray) -> np.ndarray:
    """Exponential map at the origin from spatial coordinates.

    Maps an (..., n) array of tangent spatial parts to (..., n+1) points
    (cosh r, sinh(r) * spatial / r) with r the Euclidean norm; the zero
    vector maps to the origin exactly.
    """
    spatial = np.asarray(spatial, dtype=float)
    if not np.all(np.isfinite(spatial)):
        raise ValueError("non-finite tangent vector")
    r = np.linalg.norm(spatial, axis=-1, keepdims=True)
    out = np.empty(spatial.shape[:-1] + (spatial.shape[-1] + 1,))
    out[..., :1] = np.cosh(r)
    out[..., 1:] = _sinhc(r) * spatial
    tiny = (r < _ZERO_NORM)[..., 0]
    if np.any(tiny):
        out[tiny, :] = 0.0
        out[tiny, 0] = 1.0
    return out


def exp_origin(v: np.ndarray) -> np.ndarray:
    """Exponential map at the origin for full (..., n+1) tangent vectors.

    Requires the first coordinate to be exactly 0 (tangency at o).
    """
    v = np.asarray(v, dtype=float)
    if np.any(v[..., 0] != 0.0):
        raise ConstraintError("tangent vector at origin must have first coordinate 0")
    return exp_origin_spatial(v[..., 1:])


def log_origin(x: np.ndarray, tol: float = SHEET_TOL) -> np.ndarray:
    """Logarithmic map at the origin; inverse of exp_origin.

    Validates the input against the sheet constraint and returns tangent
    vectors whose first coordinate is exactly 0 and whose norm equals the
    geodesic distance to the origin. Uses arcsinh of the spatial norm, which
    stays accurate where arcosh(x0) would cancel near the origin.
    """
    x = np.asarray(x, dtype=float)
    assert_on_sheet(x, tol=tol)
    spatial = x[..., 1:]
    r = np.linalg.norm(spatial, axis=-1, keepdims=True)
    d = np.arcsinh(r)
    scale = np.where(r < _ZERO_NORM, 0.0, d / np.where(r < _ZERO_NORM, 1.0, r))
    out = np.zeros_like(x)
    out[..., 1:] = scale * spatial
    return out


def geodesic_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Geodesic distance arcosh(-<x,y>_L), with the argument clamped to >= 1.

    The clamp absorbs floating-point undershoot for near-coincident points,
    where the true distance is 0.
    """
    arg = np.maximum(-lorentz_inner(x, y), 1.0)
    return np.arccosh(arg)


def exp_origin_spatial_vjp(spatial: np.ndarray, ambient_grad: np.ndarray) -> np.ndarray:
    """Pull an ambient Euclidean gradient back through exp_origin_spatial.

    For e(s) = (cosh r, phi(r) s) with phi = sinh(r)/r, the adjoint of the
    Jacobian applied to g = (g0, gs) is

        phi(r) * (g0 * s + gs) + psi(r) * (s . gs) * s,

    with psi(r) = (r cosh r - sinh r)/r^3. `spatial` is (..., n) and
    `ambient_grad` is (..., n+1); returns (..., n).
    """
    spatial = np.asarray(spatial, dtype=float)
    g0 = ambient_grad[..., :1]
    gs = ambient_grad[..., 1:]
    r = np.linalg.norm(spatial, axis=-1, keepdims=True)
    phi = _sinhc(r)
    psi = _sinhc_prime_over_r(r)
    dot = (spatial * gs).sum(axis=-1, keepdims=True)
    return phi * (g0 * spatial + gs) + psi * dot * spatial


def distance_sq_with_grads(x: np.ndarray, y: np.ndarray):
    """Squared geodesic distance and its ambient Euclidean gradients.

    Returns (d2, gx, gy) where gx = d(d^2)/dx = -(2 d / sqrt(t^2 - 1)) J y
    with t = -<x,y>_L and J = diag(-1, 1, ..., 1). The derivative factor
    2d/sqrt(t^2-1) tends to 2 as the points coincide; t is clamped slightly
    above 1 so it never divides by zero.
    """
    t = -lorentz_inner(x, y)
    d = np.arccosh(np.maximum(t, 1.0))
    tc = np.maximum(t, _GRAD_CLAMP)
    coef = 2.0 * d / np.sqrt(tc * tc - 1.0)
    # limit of the coefficient as t -> 1+ is exactly 2
    coef = np.where(t <= _GRAD_CLAMP, 2.0, coef)
    jx = x.copy()
    jx[..., 0] *= -1.0
    jy = y.copy()
    jy[..., 0] *= -1.0
    c = coef[..., None]
    return d * d, -c * jy, -c * jx


def distance_ratio_diagnostic(a: float, separation_angle: float) -> float:
    """Spread ratio for two points at geodesic radius `a` from the origin.

    Places x, y at tangent norm `a` with the given angle between their
    tangent directions and returns d(x,y) / (d(x,o) + d(y,o)). The ratio
    is at most 1, grows with `a` at a fixed angle, and approaches 1 as the
    pair moves away from the origin.
    """
    if not a > 0:
        raise ValueError("radius must be positive")
    v1 = a * np.array([1.0, 0.0])
    v2 = a * np.array([np.cos(separation_angle), np.sin(separation_angle)])
    x = exp_origin_spatial(v1)
    y = exp_origin_spatial(v2)
    o = origin(2)
    denom = geodesic_distance(x, o) + geodesic_distance(y, o)
    return float(geodesic_distance(x, y) / denom)
