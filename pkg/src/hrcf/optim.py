"""Riemannian SGD on hyperboloid-parameterized embeddings.

The trainable state is the layer-0 tangent rows (n free coordinates per
node). Two equivalent-at-origin update rules are provided:

* tangent_step (default): plain descent on the free coordinates. Because
  every parameter row lives in the tangent space at the origin, the full
  Riemannian update at base o collapses to exactly this.
* pullback_step: lifts each row to its hyperboloid image, converts the
  tangent-parameter gradient to an ambient Euclidean gradient through the
  chain rule of the logarithmic map, applies the metric correction and
  tangent projection, takes the exponential-map step at the lifted point,
  and logs the result back. Kept behind a flag for A/B validation.

Weight decay is a plain L2 pull of the tangent parameters toward zero,
i.e. toward the origin.
"""

from dataclasses import dataclass, field

import numpy as np

from . import manifold
from .manifold import _sinhc, _sinhc_prime_over_r


@dataclass
class OptimizerState:
    learning_rate: float
    weight_decay: float = 0.0
    step_count: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


def riemannian_grad(x: np.ndarray, euclid_grad: np.ndarray) -> np.ndarray:
    """Metric-corrected gradient projected onto the tangent space at x.

    h = J g with J = diag(-1, 1, ..., 1), then h <- h + <x,h>_L x.
    The result is Lorentz-orthogonal to x.
    """
    manifold.assert_on_sheet(x)
    h = np.array(euclid_grad, dtype=float, copy=True)
    h[..., 0] *= -1.0
    h += manifold.lorentz_inner(x, h)[..., None] * x
    return h


def rsgd_step(x: np.ndarray, rgrad: np.ndarray, lr: float) -> np.ndarray:
    """One exponential-map step exp_x(-lr * rgrad), re-projected to the sheet.

    Uses the general-base closed form cosh(|v|_L) x + sinh(|v|_L) v / |v|_L
    for the tangent step v = -lr * rgrad, then rescales the time coordinate
    to cancel floating-point drift.
    """
    if not np.all(np.isfinite(rgrad)):
        raise ValueError("non-finite Riemannian gradient")
    v = -lr * np.asarray(rgrad, dtype=float)
    sq = manifold.lorentz_inner(v, v)
    nrm = np.sqrt(np.maximum(sq, 0.0))[..., None]
    tiny = nrm < 1e-15
    safe = np.where(tiny, 1.0, nrm)
    out = np.cosh(nrm) * x + np.sinh(nrm) * (v / safe)
    out = np.where(tiny, x, out)
    return project_to_sheet(out)


def project_to_sheet(x: np.ndarray) -> np.ndarray:
    """Recompute the time coordinate from the spatial part."""
    out = np.array(x, dtype=float, copy=True)
    out[..., 0] = np.sqrt(1.0 + np.sum(out[..., 1:] ** 2, axis=-1))
    return out


def apply_weight_decay(x: np.ndarray, wd: float) -> np.ndarray:
    """Tangent-space gradient contribution of weight decay at the point x.

    Decay acts on the tangent parameterization, so the contribution is
    wd * log_o(x): zero exactly at the origin, and a straight pull of the
    underlying tangent row toward zero.
    """
    if wd < 0:
        raise ValueError("weight decay must be >= 0")
    if wd == 0.0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return wd * manifold.log_origin(x)


def tangent_step(params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    """Descent on the free tangent coordinates (the at-origin RSGD update)."""
    return params - lr * grad


def pullback_step(params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    """Full manifold update of the tangent rows via their hyperboloid images.

    With x = exp_o((0, params)) and g the gradient w.r.t. params, the
    ambient Euclidean gradient of the induced loss-of-point is

        G_spatial = g / phi(r),    G_time = -(g . params) * psi(r) / phi(r)^2,

    where r = |params|, phi = sinh(r)/r, psi = (r cosh r - sinh r)/r^3.
    The point takes a projected exponential-map step and is logged back.
    Agrees with tangent_step exactly for rows at the origin.
    """
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    x = manifold.exp_origin_spatial(params)
    r = np.linalg.norm(params, axis=-1, keepdims=True)
    phi = _sinhc(r)
    psi = _sinhc_prime_over_r(r)
    ambient = np.empty_like(x)
    ambient[..., 1:] = grad / phi
    ambient[..., :1] = -(grad * params).sum(axis=-1, keepdims=True) * psi / (phi * phi)
    h = riemannian_grad(x, ambient)
    moved = rsgd_step(x, h, lr)
    return manifold.log_origin(moved)[..., 1:]


@dataclass
class RiemannianSGD:
    """Single-writer optimizer over an embedding table.

    exact_manifold_step selects pullback_step instead of the tangent
    shortcut; weight decay is added to the gradient before either rule.
    """

    state: OptimizerState
    exact_manifold_step: bool = False
    _rule: object = field(init=False, repr=False)

    def __post_init__(self):
        self._rule = pullback_step if self.exact_manifold_step else tangent_step

    def update(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        g = grad
        if self.state.weight_decay:
            g = g + self.state.weight_decay * params
        return self._rule(params, g, self.state.learning_rate)

    def step(self, table, user_grad: np.ndarray, item_grad: np.ndarray) -> None:
        table.user_params = self.update(table.user_params, user_grad)
        table.item_params = self.update(table.item_params, item_grad)
        self.state.step_count += 1
