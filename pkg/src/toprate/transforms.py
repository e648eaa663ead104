"""Stieltjes transforms, their inverses, and the additive, multiplicative
and rectangular free-convolution transforms, with continuation onto the
second (wall-side) branch.

Conventions: the Stieltjes transform is g(z) = int rho(l)/(z - l) dl, which
is positive and decreasing to the right of the support.  The second branch
gbar(x) = V'(x) - g(x) is the increasing solution of the same quadratic
relation and feeds tilted (wall-constrained) quantities.  The moment
generating transform is t(z) = z g(z) - 1; singular value factors use
d(z) = sqrt(q z^2 g2(z^2)^2 + (1-q) g2(z^2)) built on the squared spectrum.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainExceeded, NonConvergence, OutOfSupport
from . import numerics, spectra


class Branch(enum.Enum):
    principal = "principal"
    second = "second"


@dataclass
class TransformDomain:
    r_sup: float
    s_sup: float
    c_sup: float


def _csqrt_pair(z, a, b):
    # branch-correct sqrt((z-a)(z-b)) that stays positive for real z > b
    # and picks the physical sheet off the axis
    return np.sqrt(z - a) * np.sqrt(z - b)


def _as_zarray(z):
    z = np.asarray(z)
    if z.dtype.kind not in "fc":
        z = z.astype(float)
    return z


def _edge_stieltjes_quadrature(d, n=96):
    # value of g exactly at the upper edge; substitute l = hi - u^2 so the
    # soft-edge integrand 2 rho(hi - u^2)/u is smooth
    key = ("g_edge", n)
    if key not in d._cache:
        hi, lo = d.support.upper, d.support.lower
        u, w = numerics.panel_nodes(0.0, np.sqrt(hi - lo), n)
        vals = 2.0 * spectra.eval_density(d, hi - u * u) / u
        d._cache[key] = float(np.sum(w * vals))
    return d._cache[key]


def stieltjes(d, z):
    """Stieltjes transform of the density at z.

    Real z must satisfy z >= upper support edge (OutOfSupport otherwise);
    complex z is evaluated on the physical sheet with Im g > 0 for
    Im z < 0.
    """
    z = _as_zarray(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    hi = d.support.upper
    real_input = not np.iscomplexobj(z)
    if real_input and np.any(z < hi - 1e-12):
        raise OutOfSupport("stieltjes transform needs z at or above the edge")
    if d.kind == "semicircle":
        s2 = d.params["sigma"] ** 2
        g = (z - _csqrt_pair(z, -hi, hi)) / (2.0 * s2)
    elif d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        zeta = z / s
        a_lo, a_hi = d.support.lower / s, d.support.upper / s
        g = (zeta - (1.0 - q) - _csqrt_pair(zeta, a_lo, a_hi)) \
            / (2.0 * q * zeta) / s
    elif d.kind == "dirac":
        g = 1.0 / (z - d.params["a"])
    else:
        lam, w = spectra.weighted_nodes(d)
        g = np.sum(w / (z[..., None] - lam), axis=-1)
        if real_input:
            at_edge = np.abs(z - hi) <= 1e-12
            if np.any(at_edge):
                g = np.where(at_edge, _edge_stieltjes_quadrature(d), g)
    if real_input:
        g = g.real
    return g[0] if scalar else g


def g_at_edge(d):
    """Value of the Stieltjes transform exactly at the upper edge (may be
    +inf for a hard edge)."""
    return float(stieltjes(d, d.support.upper))


def stieltjes_second(e, x):
    """Second-branch Stieltjes value gbar(x) for x at or above the edge.

    Uses V' - g when a potential derivative is available; the transform of
    a point mass is its own continuation; a fixed factor (wall at edge)
    freezes at the edge value.
    """
    d = e.density if isinstance(e, spectra.Ensemble) else e
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < d.support.upper - 1e-12):
        raise OutOfSupport("second branch lives at or above the edge")
    if d.kind == "dirac":
        out = 1.0 / (x - d.params["a"])
    elif isinstance(e, spectra.Ensemble) and e.v_prime is not None:
        out = np.asarray(e.v_prime(x), dtype=float) - stieltjes(d, x)
    elif isinstance(e, spectra.Ensemble) and e.wall_at_edge():
        out = np.full_like(x, g_at_edge(d))
    else:
        raise ValueError("second branch needs a potential or a wall at the edge")
    return float(out[0]) if scalar else out


def t_transform(d, z):
    """Moment generating transform t(z) = z g(z) - 1."""
    return np.asarray(z) * stieltjes(d, z) - 1.0


def t_second(e, x):
    """Second branch of the moment generating transform."""
    return np.asarray(x) * stieltjes_second(e, x) - 1.0


def f_q(q, z):
    """sqrt((1-q)^2 + 4 q z^2) / 2, the half-discriminant entering all
    rectangular formulas."""
    z = np.asarray(z)
    return np.sqrt((1.0 - q) ** 2 + 4.0 * q * z * z) / 2.0


def u_func(q, y):
    """Rational square root map U(y) = 2 (y^2 - 1) / (1 + q + 2 f_q(y)).

    Algebraically equal to (-(1+q) + 2 f_q(y)) / (2 q) but stable for all
    q in [0, 1], including q -> 0 where it tends to y^2 - 1.
    """
    y = np.asarray(y)
    return 2.0 * (y * y - 1.0) / (1.0 + q + 2.0 * f_q(q, y))


def u_inv(q, z):
    """Inverse of u_func: sqrt((1 + z)(1 + q z))."""
    z = np.asarray(z)
    return np.sqrt((1.0 + z) * (1.0 + q * z))


def _square_density(rho):
    if "square" not in rho._cache:
        rho._cache["square"] = spectra.lsvd_to_square(rho)
    return rho._cache["square"]


def d_transform(rho, q, z):
    """Rectangular analogue of the Stieltjes transform for a singular
    value density with shape ratio q, evaluated through the squared
    spectrum: d(z) = sqrt(q z^2 g2(z^2)^2 + (1-q) g2(z^2))."""
    z = _as_zarray(z)
    g2 = stieltjes(_square_density(rho), z * z)
    return np.sqrt(q * z * z * g2 * g2 + (1.0 - q) * g2)


def _square_ensemble(re):
    if not hasattr(re, "_square_e"):
        sq = re.square_density()
        wall = re.wall ** 2 if np.isfinite(re.wall) else np.inf
        re._square_e = spectra.Ensemble(
            density=sq, v_prime=re.v_prime_tilde, wall=wall, floor=0.0)
    return re._square_e


def d_second(re, x):
    """Second branch of the rectangular transform for a RectEnsemble."""
    x = np.asarray(x, dtype=float)
    g2bar = stieltjes_second(_square_ensemble(re), x * x)
    q = re.shape_q
    return np.sqrt(q * x * x * g2bar * g2bar + (1.0 - q) * g2bar)


def g2_from_d(q, x, dval):
    """Recover the squared-spectrum Stieltjes value from d at x:
    g2 = (2 f_q(x d) - (1 - q)) / (2 q x^2)."""
    x = np.asarray(x)
    return (2.0 * f_q(q, x * dval) - (1.0 - q)) / (2.0 * q * x * x)


def _density_of(obj):
    if isinstance(obj, spectra.Ensemble):
        return obj.density
    if isinstance(obj, spectra.RectEnsemble):
        return obj.lsvd
    return obj


def _ensemble_of(obj):
    return obj if isinstance(obj, spectra.Ensemble) else None


def _invert_decreasing(fun, targets, lo, hi_start=None):
    """Solve fun(x) = y for each y in targets, fun positive decreasing on
    (lo, inf).  Returns x array."""
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    span = max(abs(lo), 1.0)
    hi = lo + (hi_start or span)
    for _ in range(200):
        if np.all(fun(np.array([hi])) < np.min(targets)):
            break
        hi = lo + 2.0 * (hi - lo)
    else:
        raise NonConvergence("could not bracket decreasing inversion")

    def shifted(x):
        return fun(x) - targets

    return numerics.bisect_vec(shifted, np.full_like(targets, lo), np.full_like(targets, hi))


def r_transform(obj, y):
    """R-transform R(y) = g^{-1}(y) - 1/y on the continued inverse.

    Closed for semicircle (sigma^2 y), Marchenko-Pastur (scale/(1 - q scale y),
    domain y < 1/(q scale)) and point masses (the atom).  Other kinds invert
    the principal branch by quadrature; an Ensemble with a potential or a
    wall at the edge extends onto the second branch up to gbar(wall).
    Raises DomainExceeded past the continuation boundary.
    """
    d = _density_of(obj)
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    if np.any(y <= 0):
        raise DomainExceeded("R-transform argument must be positive")
    if d.kind == "semicircle":
        out = d.params["sigma"] ** 2 * y
    elif d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        if np.any(y >= 1.0 / (q * s)):
            raise DomainExceeded("R-transform pole reached")
        out = s / (1.0 - q * s * y)
    elif d.kind == "dirac":
        out = np.full_like(y, d.params["a"])
    else:
        out = _generic_inverse_g(obj, y) - 1.0 / y
    return float(out[0]) if scalar else out


def _generic_inverse_g(obj, y):
    d = _density_of(obj)
    e = _ensemble_of(obj)
    hi = d.support.upper
    ge = g_at_edge(d)
    out = np.empty_like(y)
    principal = y <= ge
    if np.any(principal):
        yp = y[principal]
        out[principal] = _invert_decreasing(
            lambda x: stieltjes(d, x), yp, hi)
    rest = ~principal
    if np.any(rest):
        if e is None or e.v_prime is None:
            raise DomainExceeded("argument beyond the principal branch")
        cap = e.wall if np.isfinite(e.wall) else hi + max(abs(hi), 1.0) * 1e6
        top = float(stieltjes_second(e, cap))
        yr = y[rest]
        if np.any(yr > top + 1e-12):
            raise DomainExceeded("argument beyond the wall-side branch")
        out[rest] = numerics.bisect_vec(
            lambda x: yr - stieltjes_second(e, x),
            np.full_like(yr, hi), np.full_like(yr, cap))
    return out


def s_transform(obj, y):
    """S-transform S(y) = t^{-1}(y) y / (y + 1) on the continued inverse
    of the moment generating transform."""
    d = _density_of(obj)
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    if np.any(y <= 0):
        raise DomainExceeded("S-transform argument must be positive")
    if d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        out = s * (1.0 + q * y)
    elif d.kind == "dirac":
        out = np.full_like(y, d.params["a"])
    else:
        tinv = _generic_inverse_t(obj, y)
        out = tinv * y / (1.0 + y)
    return float(out[0]) if scalar else out


def _generic_inverse_t(obj, y):
    d = _density_of(obj)
    e = _ensemble_of(obj)
    hi = d.support.upper
    te = hi * g_at_edge(d) - 1.0
    out = np.empty_like(y)
    principal = y <= te
    if np.any(principal):
        out[principal] = _invert_decreasing(
            lambda x: t_transform(d, x), y[principal], hi)
    rest = ~principal
    if np.any(rest):
        if e is None or e.v_prime is None:
            raise DomainExceeded("argument beyond the principal branch")
        cap = e.wall if np.isfinite(e.wall) else hi + max(abs(hi), 1.0) * 1e6
        top = float(t_second(e, cap))
        yr = y[rest]
        if np.any(yr > top + 1e-12):
            raise DomainExceeded("argument beyond the wall-side branch")
        out[rest] = numerics.bisect_vec(
            lambda x: yr - t_second(e, x), np.full_like(yr, hi),
            np.full_like(yr, cap))
    return out


def c_transform(obj, q, y):
    """Rectangular C-transform C(y) = U(y d^{-1}(y)) / y on the continued
    inverse of the rectangular transform."""
    d = _density_of(obj)
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    if np.any(y <= 0):
        raise DomainExceeded("C-transform argument must be positive")
    if d.kind == "gauss_rect_lsvd":
        out = d.params["sigma"] ** 2 * y
    else:
        dinv = _generic_inverse_d(obj, q, y)
        out = u_func(q, y * dinv) / y
    return float(out[0]) if scalar else out


def _generic_inverse_d(obj, q, y):
    d = _density_of(obj)
    re = obj if isinstance(obj, spectra.RectEnsemble) else None
    hi = d.support.upper
    de = float(d_transform(d, q, np.array([hi]))[0])
    out = np.empty_like(y)
    principal = y <= de
    if np.any(principal):
        out[principal] = _invert_decreasing(
            lambda x: d_transform(d, q, x), y[principal], hi)
    rest = ~principal
    if np.any(rest):
        if re is None or re.v_prime_tilde is None:
            raise DomainExceeded("argument beyond the principal branch")
        cap = re.wall if np.isfinite(re.wall) else hi + max(abs(hi), 1.0) * 1e6
        top = float(d_second(re, np.array([cap]))[0])
        yr = y[rest]
        if np.any(yr > top + 1e-12):
            raise DomainExceeded("argument beyond the wall-side branch")
        out[rest] = numerics.bisect_vec(
            lambda x: yr - d_second(re, x), np.full_like(yr, hi),
            np.full_like(yr, cap))
    return out


def edge_from_inverse(g_inv, domain_sup, cap=1e6):
    """Locate the spectral edge from a continued inverse map.

    Scans the inverse on a log grid over (0, min(domain_sup, cap)); an
    interior stationary point y* gives the edge a_plus = g_inv(y*) and the
    transform edge value y*.  A map decreasing all the way to the domain
    boundary (no stationary point) returns the boundary values, which
    callers treat as an infinite edge slope.
    """
    hi = min(domain_sup, cap)
    if np.isfinite(domain_sup):
        hi = hi * (1.0 - 1e-9)
    ys = np.geomspace(1e-8, hi, 400)
    with np.errstate(all="ignore"):
        vals = np.asarray(g_inv(ys), dtype=float)
    ok = np.isfinite(vals)
    if not np.any(ok):
        raise NonConvergence("inverse map not finite anywhere on the scan")
    vals = np.where(ok, vals, np.inf)
    k = int(np.argmin(vals))
    if k == 0:
        raise NonConvergence("inverse map increasing from the origin")
    if k == len(ys) - 1:
        return float(vals[-1]), float(ys[-1])
    def f(y):
        return float(g_inv(np.array([y]))[0])

    res = optimize.minimize_scalar(
        f, bounds=(ys[k - 1], ys[k + 1]), method="bounded",
        options={"xatol": 1e-13 * max(ys[k], 1.0)})
    ystar = float(res.x)
    # value-based minimization leaves a sqrt(eps) error in the stationary
    # point; a few central-difference Newton steps tighten it
    h = 1e-5 * max(ystar, 1e-8)
    for _ in range(3):
        d1 = (f(ystar + h) - f(ystar - h)) / (2.0 * h)
        d2 = (f(ystar + h) - 2.0 * f(ystar) + f(ystar - h)) / (h * h)
        if not np.isfinite(d1) or not np.isfinite(d2) or d2 <= 0:
            break
        step = d1 / d2
        cand = ystar - step
        if not (ys[k - 1] < cand < ys[k + 1]):
            break
        ystar = cand
        if abs(step) < 1e-12 * max(ystar, 1e-8):
            break
    return f(ystar), ystar


def bipz_p(e, x, n=512):
    """Polynomial part P(x) = int (V'(x) - V'(l)) / (x - l) rho(l) dl of
    the quadratic branch relation, by quadrature over the density."""
    lam, w = spectra.weighted_nodes(e.density, n)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    vx = np.asarray(e.v_prime(x), dtype=float)
    vl = np.asarray(e.v_prime(lam), dtype=float)
    out = np.sum(w * (vx[..., None] - vl) / (x[..., None] - lam), axis=-1)
    return float(out[0]) if scalar else out


def second_branch_from_quadratic(e, x):
    """Second branch via the quadratic relation g^2 - V' g + P = 0,
    taking the larger root."""
    x = np.asarray(x, dtype=float)
    vp = np.asarray(e.v_prime(x), dtype=float)
    p = bipz_p(e, x)
    disc = vp * vp - 4.0 * p
    return 0.5 * (vp + np.sqrt(np.maximum(disc, 0.0)))


def quadratic_residual(e, x, g):
    """Residual g^2 - V' g + P of the branch relation at (x, g)."""
    x = np.asarray(x, dtype=float)
    vp = np.asarray(e.v_prime(x), dtype=float)
    return g * g - vp * g + bipz_p(e, x)


def plemelj_density(d, x, eps=1e-6):
    """Boundary-value density reconstruction (1/pi) Im g(x - i eps)."""
    z = np.asarray(x, dtype=float) - 1j * eps
    return np.imag(stieltjes(d, z)) / np.pi


def transform_domain(obj):
    """Best-effort supremum of the R, S and C transform domains for the
    density or (walled) ensemble."""
    d = _density_of(obj)
    e = _ensemble_of(obj)
    if d.kind == "semicircle":
        return TransformDomain(np.inf, np.inf, np.inf)
    if d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        return TransformDomain(1.0 / (q * s), np.inf, np.inf)
    if d.kind == "dirac":
        return TransformDomain(np.inf, np.inf, np.inf)
    if d.kind == "gauss_rect_lsvd":
        return TransformDomain(g_at_edge(d), np.inf, np.inf)
    hi = d.support.upper
    if e is not None and e.v_prime is not None and np.isfinite(e.wall):
        r_sup = float(stieltjes_second(e, e.wall))
        s_sup = float(t_second(e, e.wall))
    else:
        r_sup = g_at_edge(d)
        s_sup = hi * r_sup - 1.0
    c_sup = np.inf
    if isinstance(obj, spectra.RectEnsemble):
        if np.isfinite(obj.wall) and (obj.v_prime_tilde is not None):
            c_sup = float(d_second(obj, obj.wall))
        else:
            c_sup = float(d_transform(d, obj.shape_q, np.array([hi]))[0])
    return TransformDomain(r_sup, s_sup, c_sup)
