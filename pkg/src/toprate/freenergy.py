"""Tilted free energy derivatives for wall-constrained sums, products and
rectangular sums.

For each factor, the annealed derivative follows the factor's own
transform until the tilt saturates against the factor's wall, then turns
into the explicit wall branch.  The quenched derivative does the same for
the convolved model against the observation point x.  The difference of
the two (quenched minus the sum over factors) is the integrand whose zero
is the optimal tilt; it vanishes identically below all saturation
thresholds.
"""

import copy
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import spectra, transforms


@dataclass
class TiltFactor:
    wall: float
    threshold: float
    fmap: Callable = field(repr=False)
    ensemble: object = field(default=None, repr=False)


@dataclass
class TiltModel:
    """A convolution plus the data needed to tilt it: ordered factors
    (ascending saturation threshold), the hard upper bound on the top
    eigenvalue, and optionally the observation point x with the transform
    value there."""
    conv: object
    factors: List[TiltFactor]
    hard_bound: float
    x: Optional[float] = None
    g_x: Optional[float] = None


def _factor_wall(e, op):
    return e.wall


def tilt_model(conv, x=None):
    """Assemble the tilting data for a convolution model."""
    pairs = []
    for e, fmap, thr in zip((conv.left, conv.right), conv.maps,
                            conv.thresholds):
        pairs.append(TiltFactor(wall=_factor_wall(e, conv.op), threshold=thr,
                                fmap=fmap, ensemble=e))
    pairs.sort(key=lambda f: f.threshold)
    w1, w2 = pairs[0].wall, pairs[1].wall
    if conv.op == "mul":
        hard = w1 * w2
    else:
        hard = w1 + w2
    m = TiltModel(conv=conv, factors=pairs, hard_bound=hard)
    if x is not None:
        return with_x(m, x)
    return m


def with_x(model, x):
    """Copy of the model tilted toward the observation point x."""
    m = copy.copy(model)
    m.x = float(x)
    m.g_x = float(model.conv.principal(x)[0])
    return m


def _require_x(model):
    if model.x is None or model.g_x is None:
        raise ValueError("model has no observation point; use with_x")


def quenched_dtheta(model, theta):
    """Derivative in theta of the quenched tilted free energy of the
    convolved model constrained to top eigenvalue x."""
    _require_x(model)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x, gx = model.x, model.g_x
    conv = model.conv
    out = np.empty_like(theta)
    low = theta <= gx
    hi = ~low
    if conv.op == "add":
        if np.any(low):
            tl = theta[low]
            out[low] = 0.5 * (conv.inv_map(tl) - 1.0 / tl)
        if np.any(hi):
            out[hi] = 0.5 * (x - 1.0 / theta[hi])
    elif conv.op == "mul":
        if np.any(low):
            tl = theta[low]
            out[low] = 0.5 * np.log(conv.inv_map(tl) * tl / (1.0 + tl))
        if np.any(hi):
            th = theta[hi]
            out[hi] = 0.5 * np.log(x * th / (1.0 + th))
    else:
        q = conv.shape_q
        ca, cb = conv.maps
        if np.any(low):
            tl = theta[low]
            out[low] = ca(tl) + cb(tl)
        if np.any(hi):
            th = theta[hi]
            out[hi] = transforms.u_func(q, th * x) / th
    return out


def annealed_factor_dtheta(factor, theta, op, shape_q=None):
    """Derivative in theta of one factor's annealed tilted free energy."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.empty_like(theta)
    low = theta <= factor.threshold
    hi = ~low
    w = factor.wall
    if op == "add":
        if np.any(low):
            out[low] = 0.5 * factor.fmap(theta[low])
        if np.any(hi):
            out[hi] = 0.5 * (w - 1.0 / theta[hi]) if np.isfinite(w) else np.inf
    elif op == "mul":
        if np.any(low):
            out[low] = 0.5 * np.log(factor.fmap(theta[low]))
        if np.any(hi):
            th = theta[hi]
            out[hi] = 0.5 * np.log(w * th / (1.0 + th)) if np.isfinite(w) \
                else np.inf
    else:
        if np.any(low):
            out[low] = factor.fmap(theta[low])
        if np.any(hi):
            th = theta[hi]
            out[hi] = transforms.u_func(shape_q, th * w) / th if \
                np.isfinite(w) else np.inf
    return out


def annealed_dtheta(model, theta):
    """Sum of the factors' annealed derivatives."""
    q = model.conv.shape_q
    return sum(annealed_factor_dtheta(f, theta, model.conv.op, q)
               for f in model.factors)


def tilt_diff(model, theta):
    """Quenched minus annealed derivative at tilt theta; the rate function
    integrates this in theta up to its zero crossing.

    Exactly zero below both the transform value at x and the first
    saturation threshold, where the algebraic parts cancel identically.
    """
    _require_x(model)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros_like(theta)
    cut = min(model.g_x, model.factors[0].threshold)
    active = theta > cut
    if np.any(active):
        ta = theta[active]
        out[active] = quenched_dtheta(model, ta) - annealed_dtheta(model, ta)
    return out
