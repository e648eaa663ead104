"""Right large deviation rate functions for the top eigenvalue or singular
value of free sums, products, and rectangular sums with walls.

The rate at speed N is the integral of (theta*(t) - transform_C(t)) in the
appropriate metric from the point where the rate vanishes, where theta*(t)
is the optimal exponential tilt.  theta* is piecewise: on the wall-side
branch of the convolved transform until the first factor saturates, then
the solve of the second factor's transform against the remaining budget,
then a closed form once both factors saturate.  The knot values K1, K2
accumulate the rate at the regime boundaries.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import freeconv, numerics, spectra, transforms


def _wall_of(e):
    return e.wall


@dataclass
class RateCurve:
    """Piecewise rate function for the top of a convolved spectrum.

    c_plus is where the rate vanishes (the typical top: the spectral edge,
    or the outlier position for a saturated rank-one factor).  x_c1 and
    x_c2 are the regime boundaries, hard_bound the wall-imposed supremum.
    K1 and K2 are the accumulated rate values at the boundaries.  eval and
    theta_star accept scalars or arrays; outside [domain_lo, hard_bound)
    the rate is +inf, never NaN.
    """
    op: str
    conv: object
    c_plus: float
    x_c1: float
    x_c2: float
    hard_bound: float
    domain_lo: float
    walls: tuple
    thresholds: tuple
    K1: float = np.inf
    K2: float = np.inf
    outlier: bool = False
    note: str = ""
    _theta2: Optional[Callable] = field(default=None, repr=False)

    # regime layout: 1 on [c_plus, x_c1] (wall-side branch of the convolved
    # transform), 2 on (x_c1, x_c2], 3 on (x_c2, hard_bound)

    def regimes(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape, dtype=int)
        inside = (x >= self.domain_lo - 1e-12) & (x < self.hard_bound)
        r1 = inside & (x <= self.x_c1) & (not self.outlier)
        r2 = inside & (x <= self.x_c2) & ~r1
        r3 = inside & ~r1 & ~r2
        out[r1], out[r2], out[r3] = 1, 2, 3
        return out

    def theta_star(self, x):
        """Optimal tilt at x, +inf outside the finite-rate domain."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, np.inf)
        reg = self.regimes(x)
        m1 = reg == 1
        if np.any(m1):
            out[m1] = self.conv.second(x[m1])
        m2 = reg == 2
        if np.any(m2):
            if self._theta2 is None:
                # both factors atomic: regime 2 collapses to a point
                out[m2] = self._theta3(x[m2])
            else:
                out[m2] = self._theta2(x[m2])
        m3 = reg == 3
        if np.any(m3):
            out[m3] = self._theta3(x[m3])
        return out

    def _theta3(self, x):
        w1, w2 = self.walls
        if self.op == "add":
            return 1.0 / (w1 + w2 - x)
        if self.op == "mul":
            return x / (w1 * w2 - x)
        q = self.conv.shape_q
        if q == 1.0:
            return 1.0 / (w1 + w2 - x)

        def xmap(th):
            s = transforms.f_q(q, w1 * th) + transforms.f_q(q, w2 * th)
            return np.sqrt((s - 1.0) * (s - q)) / (np.sqrt(q) * th)

        lo = np.full_like(x, self.thresholds[1])
        hi = np.full_like(x, self.thresholds[1] * 2.0)
        for _ in range(600):
            need = xmap(hi) < x
            if not np.any(need):
                break
            hi = np.where(need, hi * 2.0, hi)
        return numerics.bisect_vec(lambda th: xmap(th) - x, lo, hi)

    def _integrand(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        th = self.theta_star(t)
        if self.op == "add":
            return 0.5 * (th - self.conv.principal(t))
        if self.op == "mul":
            return (th - self.conv.principal(t)) / (2.0 * t)
        q = self.conv.shape_q
        dc = self.conv.principal(t)
        return (transforms.f_q(q, th * t) - transforms.f_q(q, dc * t)) \
            / (q * t)

    def _cumulative(self, pts, left=False):
        """Rate values at sorted pts on one side of c_plus."""
        if len(pts) == 0:
            return np.array([])
        scale = max(abs(self.c_plus), 1.0)
        if left:
            knots = np.unique(np.concatenate([pts, [self.c_plus]]))
            segs = np.zeros(len(knots))
            for i in range(len(knots) - 1):
                a, b = knots[i], knots[i + 1]
                if b - a <= 1e-15 * scale:
                    continue
                segs[i + 1] = numerics._adaptive_panel(
                    self._integrand, a, b, 24, 2)
            cum = np.cumsum(segs)
            vals = cum - cum[-1]
            return np.interp(pts, knots, vals)
        inner = [b for b in (self.x_c1, self.x_c2)
                 if np.isfinite(b) and self.c_plus < b < pts[-1]]
        knots = np.unique(np.concatenate([[self.c_plus], inner, pts]))
        segs = np.zeros(len(knots))
        sqrt_start = not self.outlier and self.conv.soft_edge
        for i in range(len(knots) - 1):
            a, b = knots[i], knots[i + 1]
            if b - a <= 1e-15 * scale:
                continue
            if i == 0 and sqrt_start:
                ts, ws = numerics.sqrt_edge_nodes(a, b, 64)
                segs[i + 1] = float(np.dot(ws, self._integrand(ts)))
            else:
                segs[i + 1] = numerics._adaptive_panel(
                    self._integrand, a, b, 24, 2)
        cum = np.cumsum(segs)
        return np.interp(pts, knots, cum)

    def eval(self, x):
        """Rate at x (scalar or array): 0 at c_plus, nondecreasing, +inf
        outside [domain_lo, hard_bound)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xs = np.atleast_1d(x)
        out = np.full(xs.shape, np.inf)
        ok = (xs >= self.domain_lo - 1e-12) & (xs < self.hard_bound)
        if np.any(ok):
            pts = np.unique(np.clip(xs[ok], self.domain_lo, None))
            right = pts[pts >= self.c_plus]
            leftp = pts[pts < self.c_plus]
            vals = {}
            if len(right):
                for p, v in zip(right, self._cumulative(right)):
                    vals[p] = v
            if len(leftp):
                for p, v in zip(leftp, self._cumulative(leftp, left=True)):
                    vals[p] = v
            out[ok] = [vals[p] for p in np.clip(xs[ok], self.domain_lo, None)]
        return float(out[0]) if scalar else out

    def __call__(self, x):
        return self.eval(x)


def _closed_theta2(op, e2, w1):
    """Closed regime-2 tilt for a factor-2 with an algebraic transform."""
    d2 = e2.density if not isinstance(e2, spectra.RectEnsemble) else e2.lsvd
    if op == "add":
        if d2.kind == "semicircle":
            s2 = d2.params["sigma"] ** 2
            return lambda x: (x - w1) / s2
        if d2.kind == "marchenko_pastur":
            q, s = d2.params["q"], d2.params["scale"]
            return lambda x: (1.0 - s / (x - w1)) / (q * s)
    if op == "mul":
        if d2.kind == "marchenko_pastur":
            q, s = d2.params["q"], d2.params["scale"]
            return lambda x: (x / (w1 * s) - 1.0) / q
    return None


def _make_theta2(conv, f1, f2):
    """Regime-2 tilt theta*(x): the second factor's transform balanced
    against the budget left once the first factor saturates at its wall."""
    op = conv.op
    w1 = _wall_of(f1.e)
    if op == "rect":
        q = conv.shape_q
        if q == 1.0 and f2.e.lsvd.kind == "gauss_rect_lsvd":
            s2 = f2.e.lsvd.params["sigma"] ** 2
            return lambda x: (x - w1) / s2
        if f2.e.lsvd.is_atomic():
            return None

        def theta2_rect(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))

            def h(th):
                return transforms.f_q(q, x * th) - transforms.f_q(q, w1 * th) \
                    - q * th * f2.fmap(th)

            lo = np.full_like(x, f1.thr * (1.0 + 1e-14))
            hi = np.full_like(x, _regime2_cap(f2, conv))
            return numerics.bisect_vec(h, lo, hi)

        return theta2_rect
    if f2.e.density.is_atomic():
        return None
    closed = _closed_theta2(op, f2.e, w1)
    if closed is not None:
        return lambda x: closed(np.atleast_1d(np.asarray(x, dtype=float)))

    def theta2_generic(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        budget = x - w1 if op == "add" else x / w1

        def h(th):
            return f2.fmap(th) - budget

        lo = np.full_like(x, min(f1.thr, 1e-10))
        hi = np.full_like(x, _regime2_cap(f2, conv))
        return numerics.bisect_vec(h, lo, hi)

    return theta2_generic


def _regime2_cap(f2, conv):
    if np.isfinite(f2.thr):
        return f2.thr
    return conv.domain_sup * (1.0 - 1e-12) if np.isfinite(conv.domain_sup) \
        else 1e12


class _Factor:
    def __init__(self, e, fmap, thr):
        self.e, self.fmap, self.thr = e, fmap, thr


def _build_curve(conv, note=""):
    pairs = [_Factor(e, m, t) for e, m, t in
             zip((conv.left, conv.right), conv.maps, conv.thresholds)]
    pairs.sort(key=lambda f: f.thr)
    f1, f2 = pairs
    w1, w2 = _wall_of(f1.e), _wall_of(f2.e)
    hard = w1 * w2 if conv.op == "mul" else w1 + w2

    standard = conv.soft_edge and f1.thr >= conv.g_at_edge * (1.0 - 1e-12)
    if standard:
        c_plus = conv.c_plus
        domain_lo = c_plus
        outlier = False
        if f1.thr >= conv.domain_sup * (1.0 - 1e-12):
            x_c1 = np.inf
        else:
            x_c1 = float(conv.inv_map(np.array([f1.thr]))[0])
    else:
        # the first factor saturates below the edge transform value: the
        # typical top is an outlier (or the bulk is atomic), located by the
        # same inverse map on the decreasing side
        c_plus = float(conv.inv_map(np.array([f1.thr]))[0])
        x_c1 = c_plus
        outlier = True
        domain_lo = conv.c_plus if conv.soft_edge else c_plus

    if not np.isfinite(f2.thr) or f2.thr >= conv.domain_sup * (1.0 - 1e-12) \
            or not np.isfinite(w2):
        x_c2 = np.inf
    elif conv.op == "add":
        x_c2 = w1 + w2 - 1.0 / f2.thr
    elif conv.op == "mul":
        x_c2 = w1 * w2 * f2.thr / (1.0 + f2.thr)
    else:
        q = conv.shape_q
        s = float(transforms.f_q(q, w1 * f2.thr)
                  + transforms.f_q(q, w2 * f2.thr))
        x_c2 = np.sqrt((s - 1.0) * (s - q)) / (np.sqrt(q) * f2.thr)
    x_c2 = max(x_c2, x_c1)

    curve = RateCurve(op=conv.op, conv=conv, c_plus=c_plus, x_c1=x_c1,
                      x_c2=x_c2, hard_bound=hard, domain_lo=domain_lo,
                      walls=(w1, w2), thresholds=(f1.thr, f2.thr),
                      outlier=outlier, note=note)
    curve._theta2 = _make_theta2(conv, f1, f2)
    if np.isfinite(x_c1) and x_c1 < hard:
        curve.K1 = float(curve.eval(x_c1))
    if np.isfinite(x_c2) and x_c2 < hard:
        curve.K2 = float(curve.eval(x_c2))
    return curve


def rate_sum(a, b):
    """Rate curve for the top eigenvalue of a free sum of two walled
    ensembles."""
    return _build_curve(freeconv.add_conv(a, b))


def rate_prod(a, b):
    """Rate curve for the top eigenvalue of a free product."""
    return _build_curve(freeconv.mul_conv(a, b))


def rate_rect(a, b):
    """Rate curve for the top singular value of a rectangular free sum."""
    return _build_curve(freeconv.rect_conv(a, b))


def theta_star_sum(curve, x):
    if curve.op != "add":
        raise ValueError("curve is not additive")
    return curve.theta_star(x)


def theta_star_prod(curve, x):
    if curve.op != "mul":
        raise ValueError("curve is not multiplicative")
    return curve.theta_star(x)


def theta_star_rect(curve, x):
    if curve.op != "rect":
        raise ValueError("curve is not rectangular")
    return curve.theta_star(x)


def psi_one_matrix(e, x):
    """Rate function of a single walled ensemble: half the integral of the
    branch gap gbar - g from the edge.  +inf below the edge or above the
    wall."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    d = e.density
    a_plus = d.support.upper
    out = np.full(xs.shape, np.inf)
    ok = (xs >= a_plus - 1e-12) & (xs <= e.wall)
    if np.any(ok):
        pts = np.unique(np.clip(xs[ok], a_plus, None))

        def f(t):
            return 0.5 * (transforms.stieltjes_second(e, t)
                          - transforms.stieltjes(d, t))

        knots = np.unique(np.concatenate([[a_plus], pts]))
        segs = np.zeros(len(knots))
        for i in range(len(knots) - 1):
            a, b = knots[i], knots[i + 1]
            if b - a <= 1e-15 * max(abs(a_plus), 1.0):
                continue
            if i == 0:
                ts, ws = numerics.sqrt_edge_nodes(a, b, 64)
                segs[i + 1] = float(np.dot(ws, f(ts)))
            else:
                segs[i + 1] = numerics._adaptive_panel(f, a, b, 24, 2)
        cum = np.cumsum(segs)
        vals = dict(zip(knots, cum))
        out[ok] = [vals[p] for p in np.clip(xs[ok], a_plus, None)]
    return float(out[0]) if scalar else out


def phi_one_rect(re, x):
    """Rate function of a single rectangular factor's top singular value:
    the squared-spectrum rate evaluated at x^2."""
    sq = transforms._square_ensemble(re)
    x = np.asarray(x, dtype=float)
    return psi_one_matrix(sq, x * x)


def rate_rect_q0_reference(lsvd_a, wall_a, lsvd_b, wall_b):
    """Vanishing-aspect-ratio reference: the top singular value of the
    rectangular sum deviates like the top eigenvalue of the sum of the
    squared factors, evaluated at x^2.  Returns a callable of x."""
    ea = spectra.Ensemble(density=spectra.lsvd_to_square(lsvd_a),
                          wall=wall_a ** 2)
    eb = spectra.Ensemble(density=spectra.lsvd_to_square(lsvd_b),
                          wall=wall_b ** 2)
    curve = rate_sum(ea, eb)

    def psi(x):
        x = np.asarray(x, dtype=float)
        return curve.eval(x * x)

    return psi


def effective_potential(curve, x, eps=1e-6):
    """Effective confining potential pinned to 0 at the edge:
    V(x) = 2 (rate(x) + int_{c_plus}^x g_C) above the edge, continued by
    the real part of the boundary Stieltjes value below it."""
    if curve.op not in ("add", "mul"):
        raise NotImplementedError("effective potential on the eigenvalue "
                                  "scale is add/mul only")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    c = curve.c_plus
    out = np.zeros(xs.shape)
    above = xs >= c
    if np.any(above):
        pts = np.unique(xs[above])
        if curve.op == "add":
            gfun = lambda t: curve.conv.principal(t)
        else:
            gfun = lambda t: (curve.conv.principal(t) + 1.0) / t
        knots = np.unique(np.concatenate([[c], pts]))
        cum = numerics.cumulative_integral(gfun, knots)
        lookup = dict(zip(knots, cum))
        out[above] = 2.0 * (curve.eval(xs[above])
                            + np.array([lookup[p] for p in xs[above]]))
    below = ~above
    if np.any(below):
        pts = np.unique(xs[below])
        knots = np.unique(np.concatenate([pts, [c]]))

        def re_g(t):
            return np.real(freeconv.complex_stieltjes(curve.conv, t, eps))

        cum = numerics.cumulative_integral(re_g, knots, n=24)
        lookup = dict(zip(knots, cum - cum[-1]))
        out[below] = 2.0 * np.array([lookup[p] for p in xs[below]])
    return float(out[0]) if scalar else out


def tw_scaling_check(curve, gamma0=None, eps_lo=1e-6, eps_hi=1e-3, n=24):
    """Fit the near-edge rate to A eps^p on eps in [eps_lo, eps_hi].

    Returns a dict with the fitted power (3/2 at a soft edge) and
    amplitude; when gamma0 is given the expected amplitude
    (2/3) gamma0^{3/2} is included.
    """
    eps = np.geomspace(eps_lo, eps_hi, n)
    c = curve.c_plus
    vals = np.empty(n)
    for i, e in enumerate(eps):
        ts, ws = numerics.sqrt_edge_nodes(c, c + e, 96)
        vals[i] = float(np.dot(ws, curve._integrand(ts)))
    slope, logA = np.polyfit(np.log(eps), np.log(vals), 1)
    res = {"power": float(slope), "amplitude": float(np.exp(logA))}
    if gamma0 is not None:
        res["expected_amplitude"] = (2.0 / 3.0) * gamma0 ** 1.5
    return res
