"""Quadrature and root-finding kernels used throughout the package.

Everything here is generic numerics: Gauss-Legendre rules (cached), an
edge-aware cumulative integrator, and vectorized bracketed root solves.
"""

import numpy as np
from scipy.optimize import brentq

BRENT_RTOL = 1e-12
BRENT_MAXITER = 200

_gl_cache = {}


def gauss_legendre(n):
    """Nodes and weights for n-point Gauss-Legendre on [-1, 1], cached."""
    if n not in _gl_cache:
        _gl_cache[n] = np.polynomial.legendre.leggauss(n)
    return _gl_cache[n]


def panel_nodes(a, b, n):
    """Scaled GL nodes and weights on [a, b]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def integrate_panel(f, a, b, n=24):
    x, w = panel_nodes(a, b, n)
    return float(np.dot(w, f(x)))


def cheb_grid(lo, hi, n):
    """Chebyshev-Lobatto grid on [lo, hi], ascending, endpoints included."""
    phi = np.linspace(np.pi, 0.0, n)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(phi)


def sqrt_edge_nodes(a, b, n=48):
    """Quadrature nodes/weights on [a, b] for integrands vanishing like
    sqrt(t - a): substitute t = a + u^2 so the transformed integrand is
    smooth.  Returns (t_k, w_k) with sum w_k f(t_k) ~ int_a^b f.
    """
    u, w = panel_nodes(0.0, np.sqrt(b - a), n)
    return a + u * u, 2.0 * u * w


def solve_bracketed(f, a, b):
    """Scalar root of f on [a, b] via brentq with the package tolerances."""
    return brentq(f, a, b, rtol=BRENT_RTOL, maxiter=BRENT_MAXITER)


def bisect_vec(f, lo, hi, iters=90):
    """Vectorized bisection: f maps arrays to arrays, roots bracketed
    componentwise with f(lo) and f(hi) of opposite sign.  90 halvings of a
    bracket take it below 1e-27 of its width, past float resolution.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = np.sign(f(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = np.sign(f(mid))
        take_lo = fm == flo
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    return 0.5 * (lo + hi)


def cumulative_integral(f, knots, n=24, refine=2):
    """Cumulative integral of f at the given knots, starting from knots[0].

    Each inter-knot panel gets an n-point GL rule; panels are split
    `refine` times where a half-order rule disagrees.  f must accept
    arrays.  Returns an array c with c[0] = 0 and c[i] = int knots[0]..knots[i].
    """
    knots = np.asarray(knots, dtype=float)
    vals = np.zeros(len(knots))
    for i in range(len(knots) - 1):
        a, b = knots[i], knots[i + 1]
        if b <= a:
            vals[i + 1] = vals[i]
            continue
        vals[i + 1] = vals[i] + _adaptive_panel(f, a, b, n, refine)
    return vals


def _adaptive_panel(f, a, b, n, depth):
    xs, ws = panel_nodes(a, b, n)
    full = float(np.dot(ws, f(xs)))
    xs2, ws2 = panel_nodes(a, b, max(n // 2, 4))
    half = float(np.dot(ws2, f(xs2)))
    if depth <= 0 or abs(full - half) <= 1e-12 + 1e-10 * abs(full):
        return full
    m = 0.5 * (a + b)
    return (_adaptive_panel(f, a, m, n, depth - 1)
            + _adaptive_panel(f, m, b, n, depth - 1))


def logspace_between(lo, hi, n):
    """Log-spaced points strictly inside (lo, hi), for bracket scans."""
    return np.exp(np.linspace(np.log(lo), np.log(hi), n))
