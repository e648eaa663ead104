"""Rank-one deformations of invariant ensembles, and the exactly solvable
sum of two rank-one projections.

A rank-one shift of strength gamma enters the generic machinery as a point
mass with a wall: an atom at 0 with wall gamma for additive shifts, an
atom at 1 with wall 1 + gamma for multiplicative ones.  Its saturation
threshold 1/gamma then reproduces the usual outlier transition, and the
same regime integration yields the rate both below and above it.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from . import freeconv, ratefn, spectra, transforms


@dataclass
class SpikeModel:
    base: spectra.Ensemble
    gamma: float
    op: str
    threshold: float
    typical_top: float
    lam_star: Optional[float] = None


def bbp_top(base, gamma, op="add"):
    """Outlier transition for a rank-one deformation of strength gamma.

    Below the critical strength the top eigenvalue sticks to the bulk
    edge; above it an outlier detaches at the continued inverse transform
    of 1/gamma."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    base = freeconv._wrap_ensemble(base)
    d = base.density
    b_plus = d.support.upper
    if op == "add":
        edge_val = transforms.g_at_edge(d)
        gamma_c = 1.0 / edge_val if np.isfinite(edge_val) and edge_val > 0 \
            else 0.0
        lam_star = None
        if gamma > gamma_c:
            lam_star = float(transforms.r_transform(base, 1.0 / gamma)
                             + gamma)
    elif op == "mul":
        edge_val = b_plus * transforms.g_at_edge(d) - 1.0
        gamma_c = 1.0 / edge_val if np.isfinite(edge_val) and edge_val > 0 \
            else 0.0
        lam_star = None
        if gamma > gamma_c:
            lam_star = float(transforms.s_transform(base, 1.0 / gamma)
                             * (1.0 + gamma))
    else:
        raise ValueError("op must be 'add' or 'mul'")
    typical = lam_star if lam_star is not None else b_plus
    return SpikeModel(base=base, gamma=gamma, op=op, threshold=gamma_c,
                      typical_top=typical, lam_star=lam_star)


def spike_rate(base, gamma, op="add"):
    """Rate curve for the top eigenvalue of a rank-one deformation.

    Below the outlier threshold the curve vanishes at the bulk edge; above
    it, at the outlier, with finite positive values back down to the bulk
    edge (the signed integral of the same integrand)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    base = freeconv._wrap_ensemble(base)
    if op == "add":
        pseudo = spectra.Ensemble(density=spectra.dirac(0.0), wall=gamma)
        conv = freeconv._add_conv_atomic_ok(base, pseudo)
    elif op == "mul":
        pseudo = spectra.Ensemble(density=spectra.dirac(1.0),
                                  wall=1.0 + gamma)
        conv = freeconv._mul_conv_atomic_ok(base, pseudo)
    else:
        raise ValueError("op must be 'add' or 'mul'")
    return ratefn._build_curve(conv, note="rank-one deformation")


def bbp_rect_threshold(re, gamma):
    """Outlier transition for a rank-one additive deformation of a
    rectangular factor: critical strength 1/d(s_plus), and above it the
    outlier solves d(s) = 1/gamma.  No rate curve is attached here."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    lsvd = re.lsvd if isinstance(re, spectra.RectEnsemble) else re
    q = re.shape_q if isinstance(re, spectra.RectEnsemble) else 1.0
    s_plus = lsvd.support.upper
    d_edge = float(transforms.d_transform(lsvd, q, np.array([s_plus]))[0])
    gamma_c = 1.0 / d_edge if d_edge > 0 else 0.0
    if gamma <= gamma_c:
        return gamma_c, s_plus
    target = 1.0 / gamma
    s_star = float(transforms._invert_decreasing(
        lambda s: transforms.d_transform(lsvd, q, s),
        np.array([target]), s_plus)[0])
    return gamma_c, s_star


@dataclass
class Rk1PlusRk1:
    """Sum of two rank-one projections with weights w_a >= w_b > 0,
    conjugated by an independent rotation."""
    w_a: float
    w_b: float

    def __post_init__(self):
        if not (self.w_a >= self.w_b > 0):
            raise ValueError("weights must satisfy w_a >= w_b > 0")


def _phase(model, lam):
    lam = np.asarray(lam, dtype=float)
    return (lam - model.w_a) * (lam - model.w_b) / (model.w_a * model.w_b)


def rk1rk1_density(model, n, grid):
    """Exact density of the top eigenvalue at matrix size n.

    The top eigenvalue is carried by a Beta(1/2, n/2) overlap variable;
    the closed-form density follows by a change of variables and vanishes
    outside (w_a, w_a + w_b)."""
    wa, wb = model.w_a, model.w_b
    grid = np.asarray(grid, dtype=float)
    out = np.zeros_like(grid)
    inside = (grid > wa) & (grid < wa + wb)
    lam = grid[inside]
    phi = _phase(model, lam)
    one_minus = lam * (wa + wb - lam) / (wa * wb)
    log_b = special.betaln(0.5, 0.5 * n)
    log_pdf = np.log(2.0 * lam - wa - wb) - log_b - np.log(wa * wb) \
        - 0.5 * np.log(phi) + (0.5 * n - 1.0) * np.log(one_minus)
    out[inside] = np.exp(log_pdf)
    return out


def rk1rk1_rate(model, x):
    """Leading exponential decay of the right tail on the scale of the
    Beta overlap: -log((w_a + w_b - x)/w_b) - log(x/w_a) on
    (w_a, w_a + w_b), zero at w_a, +inf outside.  The speed-n exponent of
    P(top >= x) is half this value."""
    wa, wb = model.w_a, model.w_b
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    out = np.full(xs.shape, np.inf)
    ok = (xs >= wa) & (xs < wa + wb)
    xi = xs[ok]
    out[ok] = -np.log((wa + wb - xi) / wb) - np.log(xi / wa)
    return float(out[0]) if scalar else out


def rk1rk1_exact_tail(model, n, x):
    """Exact P(top >= x) at matrix size n, from the regularized
    incomplete Beta function."""
    phi = float(_phase(model, x))
    if phi <= 0:
        return 1.0
    if phi >= 1:
        return 0.0
    return float(1.0 - special.betainc(0.5, 0.5 * n, phi))


def rk1rk1_sample(model, n, samples, seed):
    """Draw top eigenvalues of the two-projection sum at size n.

    Vectorized over samples from a single counter-based stream, so a given
    (n, samples, seed) always reproduces the same array."""
    rng = np.random.Generator(np.random.Philox(seed))
    g1 = rng.gamma(0.5, size=samples)
    g2 = rng.gamma(0.5 * n, size=samples)
    phi = g1 / (g1 + g2)
    wa, wb = model.w_a, model.w_b
    disc = (wa - wb) ** 2 + 4.0 * wa * wb * phi
    return 0.5 * (wa + wb + np.sqrt(disc))


def rk1rk1_curve(model):
    """The same model through the generic machinery: two atoms at zero
    with walls w_a and w_b.  Its rate equals half of rk1rk1_rate."""
    ea = spectra.Ensemble(density=spectra.dirac(0.0), wall=model.w_a)
    eb = spectra.Ensemble(density=spectra.dirac(0.0), wall=model.w_b)
    conv = freeconv._add_conv_atomic_ok(ea, eb)
    return ratefn._build_curve(conv, note="two rank-one projections")
