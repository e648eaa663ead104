"""Free convolution of two invariant factors: additive, multiplicative,
and rectangular.

The convolution is represented through the inverse of its principal
transform: for the sum, x = R_A(y) + R_B(y) + 1/y; for the product (on the
moment transform scale), x = S_A(y) S_B(y) (y+1)/y; for the rectangular
case, x = U^{-1}(y (C_A(y) + C_B(y))) / y.  The stationary point of the
inverse locates the edge of the convolved spectrum, and values of the
transform on either side of it come from monotone root solves of the same
map.  Bulk densities on the support come from damped subordination
iterations at z = lambda - i eps.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (DegenerateDensity, DomainExceeded, InvalidShapeRatio,
                     NonConvergence)
from . import numerics, spectra, transforms


def _wrap_ensemble(obj):
    if isinstance(obj, spectra.SpectralDensity):
        return spectra.fixed_ensemble(obj)
    return obj


def _closed_r(e):
    """Closed additive R-map and its domain sup, or (None, None)."""
    d = e.density
    if d.kind == "semicircle":
        s2 = d.params["sigma"] ** 2
        return (lambda y: s2 * y), np.inf
    if d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        return (lambda y: s / (1.0 - q * s * y)), 1.0 / (q * s)
    if d.kind == "dirac":
        a = d.params["a"]
        return (lambda y: np.full_like(np.asarray(y, dtype=float), a)), np.inf
    return None, None


def _closed_s(e):
    d = e.density
    if d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        return (lambda y: s * (1.0 + q * y)), np.inf
    if d.kind == "dirac":
        a = d.params["a"]
        return (lambda y: np.full_like(np.asarray(y, dtype=float), a)), np.inf
    return None, None


def _closed_c(re):
    d = re.lsvd
    if d.kind == "gauss_rect_lsvd":
        s2 = d.params["sigma"] ** 2
        return (lambda y: s2 * y), np.inf
    return None, None


def _factor_map(e, op):
    """(map, algebraic domain sup, saturation threshold) for one factor.

    The threshold is the wall-side transform value gbar(wall) (or its t/d
    analogue) when the wall is finite; with no wall the factor never
    saturates and the threshold coincides with the domain sup.
    """
    if op == "add":
        fun, dom = _closed_r(e)
        if fun is None:
            fun = lambda y: transforms.r_transform(e, y)
            dom = _continuation_sup_add(e)
        thr = _threshold_add(e, dom)
        return fun, dom, thr
    if op == "mul":
        fun, dom = _closed_s(e)
        if fun is None:
            fun = lambda y: transforms.s_transform(e, y)
            dom = _continuation_sup_mul(e)
        thr = _threshold_mul(e, dom)
        return fun, dom, thr
    if op == "rect":
        fun, dom = _closed_c(e)
        if fun is None:
            fun = lambda y: transforms.c_transform(e, e.shape_q, y)
            dom = _continuation_sup_rect(e)
        thr = _threshold_rect(e, dom)
        return fun, dom, thr
    raise ValueError("unknown op %r" % op)


def _continuation_sup_add(e):
    if e.v_prime is not None:
        cap = e.wall if np.isfinite(e.wall) else \
            e.density.support.upper + max(abs(e.density.support.upper), 1.0) * 1e6
        return float(transforms.stieltjes_second(e, cap))
    return transforms.g_at_edge(e.density)


def _continuation_sup_mul(e):
    if e.v_prime is not None:
        cap = e.wall if np.isfinite(e.wall) else \
            e.density.support.upper + max(abs(e.density.support.upper), 1.0) * 1e6
        return float(transforms.t_second(e, cap))
    hi = e.density.support.upper
    return hi * transforms.g_at_edge(e.density) - 1.0


def _continuation_sup_rect(re):
    if re.v_prime_tilde is not None:
        cap = re.wall if np.isfinite(re.wall) else \
            re.lsvd.support.upper + max(abs(re.lsvd.support.upper), 1.0) * 1e6
        return float(transforms.d_second(re, np.array([cap]))[0])
    hi = re.lsvd.support.upper
    return float(transforms.d_transform(re.lsvd, re.shape_q, np.array([hi]))[0])


def _threshold_add(e, dom):
    if not np.isfinite(e.wall):
        return dom
    if e.density.kind == "dirac":
        return 1.0 / (e.wall - e.density.params["a"]) if \
            e.wall > e.density.params["a"] else np.inf
    return float(transforms.stieltjes_second(e, e.wall))


def _threshold_mul(e, dom):
    if not np.isfinite(e.wall):
        return dom
    if e.density.kind == "dirac":
        a = e.density.params["a"]
        return a / (e.wall - a) if e.wall > a else np.inf
    return float(transforms.t_second(e, e.wall))


def _threshold_rect(re, dom):
    if not np.isfinite(re.wall):
        return dom
    return float(transforms.d_second(re, np.array([re.wall]))[0])


def _factor_edge_value(e, op):
    """Principal transform value at the factor's own spectral edge (may be
    +inf for an atom or a hard edge)."""
    d = e.density if not isinstance(e, spectra.RectEnsemble) else e.lsvd
    if d.kind == "dirac":
        return np.inf
    hi = d.support.upper
    if op == "add":
        return transforms.g_at_edge(d)
    if op == "mul":
        return hi * transforms.g_at_edge(d) - 1.0
    return float(transforms.d_transform(d, e.shape_q, np.array([hi]))[0])


@dataclass
class ConvolutionModel:
    """A free convolution of two factors, held through the inverse of its
    principal transform.

    c_plus is the upper edge of the convolved spectrum and g_at_edge the
    transform value there (g, t or d scale depending on op); values of
    g_at_edge at the domain cap signal a hard edge with no stationary
    point.  inv_map is the continued inverse; principal/second solve it
    monotonically on either side of the stationary point.
    """
    op: str
    left: object
    right: object
    c_plus: float
    g_at_edge: float
    domain_sup: float
    inv_map: Callable
    shape_q: Optional[float] = None
    maps: tuple = field(default=None, repr=False)
    thresholds: tuple = field(default=None, repr=False)
    soft_edge: bool = True

    def principal(self, x):
        """Transform value on the decreasing branch, for x >= c_plus."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y_lo = min(1e-10, self.g_at_edge * 1e-10)
        for _ in range(8):
            if np.all(self.inv_map(np.array([y_lo])) > np.max(x)):
                break
            y_lo *= 1e-3
        f = lambda y: self.inv_map(y) - x
        return numerics.bisect_vec(f, np.full_like(x, y_lo),
                                   np.full_like(x, self.g_at_edge))

    def second(self, x):
        """Transform value on the increasing branch, for x >= c_plus."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ystar = self.g_at_edge
        cap = ystar * 2.0 if ystar > 0 else 1.0
        top = self.domain_sup * (1.0 - 1e-12) if np.isfinite(self.domain_sup) \
            else np.inf
        for _ in range(400):
            cap = min(cap, top)
            if float(self.inv_map(np.array([cap]))[0]) >= np.max(x) or cap >= top:
                break
            cap *= 2.0
        if float(self.inv_map(np.array([cap]))[0]) < np.max(x) - 1e-9:
            raise DomainExceeded("x beyond the continued second branch")
        f = lambda y: self.inv_map(y) - x
        return numerics.bisect_vec(f, np.full_like(x, ystar),
                                   np.full_like(x, cap))

    def stieltjes_c(self, x):
        """Stieltjes transform of the convolved law at real x >= c_plus."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.op == "add":
            return self.principal(x)
        if self.op == "mul":
            return (self.principal(x) + 1.0) / x
        return transforms.g2_from_d(self.shape_q, x, self.principal(x))


def _build(op, a, b, shape_q=None):
    ma, da, ta = _factor_map(a, op)
    mb, db, tb = _factor_map(b, op)
    dom = min(da, db)
    if op == "add":
        inv = lambda y: ma(y) + mb(y) + 1.0 / y
    elif op == "mul":
        inv = lambda y: ma(y) * mb(y) * (1.0 + y) / y
    else:
        q = shape_q
        inv = lambda y: transforms.u_inv(q, y * (ma(y) + mb(y))) / y
    c_plus, ystar = transforms.edge_from_inverse(inv, dom)
    scan_top = min(dom, 1e6)
    if np.isfinite(dom):
        scan_top *= 1.0 - 1e-9
    soft = ystar < 0.999 * scan_top
    model = ConvolutionModel(op=op, left=a, right=b, c_plus=c_plus,
                             g_at_edge=ystar, domain_sup=dom, inv_map=inv,
                             shape_q=shape_q, maps=(ma, mb),
                             thresholds=(ta, tb), soft_edge=soft)
    for e in (a, b):
        ev = _factor_edge_value(e, op)
        if ystar > ev + 1e-6 * max(1.0, abs(ev)):
            raise NonConvergence("edge transform value exceeds a factor bound")
    return model


def add_conv(a, b):
    """Additive free convolution of two ensembles (or bare densities,
    treated as fixed factors)."""
    a, b = _wrap_ensemble(a), _wrap_ensemble(b)
    if a.density.is_atomic() and b.density.is_atomic():
        raise DegenerateDensity("sum of two point masses has no spectral bulk")
    return _build("add", a, b)


def _add_conv_atomic_ok(a, b):
    # internal: rank-one factors enter as point masses on purpose
    return _build("add", _wrap_ensemble(a), _wrap_ensemble(b))


def mul_conv(a, b):
    """Multiplicative free convolution (free product) of two ensembles
    with nonnegative spectra."""
    a, b = _wrap_ensemble(a), _wrap_ensemble(b)
    for e in (a, b):
        if e.density.support.lower < -1e-12:
            raise ValueError("free product needs nonnegative spectra")
    if a.density.is_atomic() and b.density.is_atomic():
        raise DegenerateDensity("product of two point masses has no spectral bulk")
    return _build("mul", a, b)


def _mul_conv_atomic_ok(a, b):
    return _build("mul", _wrap_ensemble(a), _wrap_ensemble(b))


def rect_conv(a, b):
    """Rectangular free convolution of two RectEnsembles with the same
    shape ratio."""
    if not isinstance(a, spectra.RectEnsemble) or \
            not isinstance(b, spectra.RectEnsemble):
        raise InvalidShapeRatio("rectangular convolution needs RectEnsembles")
    if abs(a.shape_q - b.shape_q) > 1e-12:
        raise InvalidShapeRatio("factors must share the shape ratio")
    if a.lsvd.is_atomic() and b.lsvd.is_atomic():
        raise DegenerateDensity("two atomic singular value laws")
    return _build("rect", a, b, shape_q=a.shape_q)


def _subordination_fixpoint(update, z, init, damping=0.5, tol=1e-13,
                            maxiter=4000):
    cur = init.astype(complex)
    for _ in range(maxiter):
        nxt = update(cur)
        nxt = (1.0 - damping) * cur + damping * nxt
        if np.max(np.abs(nxt - cur)) < tol:
            return nxt
        cur = nxt
    raise NonConvergence("subordination iteration did not converge")


def complex_stieltjes(model, grid, eps=1e-6):
    """Stieltjes transform of the convolved law at z = x - i eps, from the
    subordination fixed point.  add/mul only; needs one closed factor."""
    grid = np.asarray(grid, dtype=float)
    z = grid - 1j * eps
    a, b = model.left, model.right
    if model.op == "add":
        rb, _ = _closed_r(b)
        if rb is None:
            a, b = b, a
            rb, _ = _closed_r(b)
        if rb is None:
            raise NotImplementedError(
                "complex continuation needs one closed-form additive factor")
        ga = lambda u: transforms.stieltjes(a.density, u)
        return _subordination_fixpoint(lambda g: ga(z - rb(g)), z, 1.0 / z)
    if model.op == "mul":
        sb, _ = _closed_s(b)
        if sb is None:
            a, b = b, a
            sb, _ = _closed_s(b)
        if sb is None:
            raise NotImplementedError(
                "complex continuation needs one closed-form multiplicative factor")

        def update(t):
            u = z / sb(t)
            return u * transforms.stieltjes(a.density, u) - 1.0

        t = _subordination_fixpoint(update, z, z * 0.0 + 0.05j)
        return (t + 1.0) / z
    raise NotImplementedError("complex continuation is add/mul only")


def density_on_support(model, grid, eps=1e-6, renormalize=True):
    """Spectral density of the convolved law on the given grid, from the
    subordination fixed point at z = x - i eps.

    Needs a closed transform for at least one factor (semicircle,
    Marchenko-Pastur or point mass for add/mul; Gaussian factor for rect);
    purely tabulated pairs are not supported here.
    """
    grid = np.asarray(grid, dtype=float)
    z = grid - 1j * eps
    a, b = model.left, model.right
    if model.op in ("add", "mul"):
        g = complex_stieltjes(model, grid, eps)
        rho = np.imag(g) / np.pi
    else:
        q = model.shape_q
        cb, _ = _closed_c(b)
        if cb is None:
            a, b = b, a
            cb, _ = _closed_c(b)
        if cb is None:
            raise NotImplementedError(
                "bulk density needs one closed-form rectangular factor")

        def update(d):
            omega = transforms.u_inv(q, transforms.u_func(q, z * d)
                                     - d * cb(d)) / d
            return transforms.d_transform(a.lsvd, q, omega)

        d0 = transforms.d_transform(a.lsvd, q, z)
        d = _subordination_fixpoint(update, z, d0)
        g2 = transforms.g2_from_d(q, z, d)
        rho = 2.0 * grid * np.imag(g2) / np.pi
    rho = np.maximum(rho, 0.0)
    if renormalize:
        total = np.trapz(rho, grid)
        if total > 0:
            rho = rho / total
    return rho
