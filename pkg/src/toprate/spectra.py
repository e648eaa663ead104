"""Spectral densities, walled ensembles, and joint eigenvalue sampling.

A SpectralDensity is one of a small set of closed-form laws (semicircle,
Marchenko-Pastur with optional scale, quarter circle, the singular value
law of a Gaussian rectangular matrix, a point mass) or a tabulated density
on a Chebyshev-spaced grid.  An Ensemble pairs a density with a confining
potential and an optional hard wall bounding the top eigenvalue.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateDensity, InvalidShapeRatio, NonConvergence
from . import numerics


@dataclass
class SupportInterval:
    lower: float
    upper: float

    def width(self):
        return self.upper - self.lower

    def midpoint(self):
        return 0.5 * (self.lower + self.upper)


@dataclass
class SpectralDensity:
    """A probability density for eigenvalues or singular values.

    kind is one of 'semicircle', 'marchenko_pastur', 'quarter_circle',
    'gauss_rect_lsvd', 'dirac', 'tabulated'.  edge_coeff is the soft-edge
    amplitude gamma0 defined by rho(x) ~ (gamma0^{3/2}/pi) sqrt(a_plus - x).
    """
    kind: str
    params: dict
    support: SupportInterval
    edge_coeff: Optional[float] = None
    grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def is_atomic(self):
        return self.kind == "dirac"


def semicircle(sigma=1.0):
    """Semicircle law on [-2 sigma, 2 sigma]."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return SpectralDensity(
        kind="semicircle",
        params={"sigma": float(sigma)},
        support=SupportInterval(-2.0 * sigma, 2.0 * sigma),
        edge_coeff=1.0 / sigma,
    )


def marchenko_pastur(q, scale=1.0):
    """Marchenko-Pastur law with ratio q in (0, 1], optionally scaled.

    The scaled density is rho(x) = mp_q(x / scale) / scale, supported on
    scale * [(1 - sqrt(q))^2, (1 + sqrt(q))^2].
    """
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    if scale <= 0:
        raise ValueError("scale must be positive")
    sq = np.sqrt(q)
    lo, hi = scale * (1.0 - sq) ** 2, scale * (1.0 + sq) ** 2
    # rho ~ (gamma0^{3/2}/pi) sqrt(hi - x) near hi
    gamma0 = (np.sqrt((hi - lo) / scale) / (2.0 * q * hi / scale)) ** (2.0 / 3.0) / scale
    return SpectralDensity(
        kind="marchenko_pastur",
        params={"q": float(q), "scale": float(scale)},
        support=SupportInterval(lo, hi),
        edge_coeff=gamma0,
    )


def quarter_circle(sigma=1.0):
    """Quarter circle law on [0, 2 sigma] (singular values of a square
    Gaussian matrix)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return SpectralDensity(
        kind="quarter_circle",
        params={"sigma": float(sigma)},
        support=SupportInterval(0.0, 2.0 * sigma),
        edge_coeff=2.0 ** (2.0 / 3.0) / sigma,
    )


def gauss_rect_lsvd(sigma=1.0, q=1.0):
    """Singular value law of an n x m Gaussian matrix with n/m = q."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    sq = np.sqrt(q)
    lo, hi = sigma * (1.0 - sq), sigma * (1.0 + sq)
    # rho(s) = sqrt((s^2-lo^2)(hi^2-s^2)) / (pi sigma^2 q s); near hi the
    # amplitude is sqrt((hi^2-lo^2) 2 hi) / (pi sigma^2 q hi)
    amp = np.sqrt((hi * hi - lo * lo) * 2.0 * hi) / (sigma * sigma * q * hi)
    return SpectralDensity(
        kind="gauss_rect_lsvd",
        params={"sigma": float(sigma), "q": float(q)},
        support=SupportInterval(lo, hi),
        edge_coeff=amp ** (2.0 / 3.0),
    )


def dirac(a):
    """Point mass at a."""
    return SpectralDensity(
        kind="dirac",
        params={"a": float(a)},
        support=SupportInterval(float(a), float(a)),
    )


def tabulated(grid, values, edge_coeff=None):
    """Density given by linear interpolation of samples on an increasing
    grid.  The trapezoid integral of the stored representation must equal
    1 within 1e-8."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 8:
        raise ValueError("grid and values must be matching 1-d arrays")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if np.any(values < -1e-12):
        raise ValueError("density values must be nonnegative")
    total = np.trapz(values, grid)
    if abs(total - 1.0) > 1e-8:
        raise ValueError("tabulated density must integrate to 1 within 1e-8, "
                         "got %.3e" % total)
    return SpectralDensity(
        kind="tabulated",
        params={},
        support=SupportInterval(float(grid[0]), float(grid[-1])),
        edge_coeff=edge_coeff,
        grid=grid,
        values=np.maximum(values, 0.0),
    )


def eval_density(d, x):
    """Evaluate the density at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    lo, hi = d.support.lower, d.support.upper
    if d.kind == "semicircle":
        s2 = d.params["sigma"] ** 2
        inside = (x > lo) & (x < hi)
        out = np.zeros_like(x)
        out[inside] = np.sqrt(4.0 * s2 - x[inside] ** 2) / (2.0 * np.pi * s2)
        return out if out.ndim else float(out)
    if d.kind == "marchenko_pastur":
        q, s = d.params["q"], d.params["scale"]
        z = x / s
        zlo, zhi = lo / s, hi / s
        inside = (z > zlo) & (z < zhi)
        out = np.zeros_like(z)
        zi = z[inside]
        out[inside] = np.sqrt((zhi - zi) * (zi - zlo)) / (2.0 * np.pi * q * zi) / s
        return out if out.ndim else float(out)
    if d.kind == "quarter_circle":
        s2 = d.params["sigma"] ** 2
        inside = (x > lo) & (x < hi)
        out = np.zeros_like(x)
        out[inside] = np.sqrt(4.0 * s2 - x[inside] ** 2) / (np.pi * s2)
        return out if out.ndim else float(out)
    if d.kind == "gauss_rect_lsvd":
        sig, q = d.params["sigma"], d.params["q"]
        inside = (x > lo) & (x < hi)
        out = np.zeros_like(x)
        xi = x[inside]
        out[inside] = np.sqrt((xi * xi - lo * lo) * (hi * hi - xi * xi)) \
            / (np.pi * sig * sig * q * xi)
        return out if out.ndim else float(out)
    if d.kind == "dirac":
        out = np.where(x == d.params["a"], np.inf, 0.0)
        return out if out.ndim else float(out)
    if d.kind == "tabulated":
        out = np.interp(x, d.grid, d.values, left=0.0, right=0.0)
        return out if out.ndim else float(out)
    raise ValueError("unknown density kind %r" % d.kind)


def weighted_nodes(d, n=512):
    """Quadrature nodes and weights absorbing the density: for smooth f,
    sum w_k f(x_k) ~ int f(x) rho(x) dx.  Uses the cosine substitution
    x = mid + half cos(phi) so square-root edges become smooth.
    """
    if d.kind == "dirac":
        return (np.array([d.params["a"]]), np.array([1.0]))
    key = ("nodes", n)
    if key not in d._cache:
        phi, w = numerics.panel_nodes(0.0, np.pi, n)
        half = 0.5 * d.support.width()
        mid = d.support.midpoint()
        lam = mid + half * np.cos(phi)
        wt = w * half * np.sin(phi) * eval_density(d, lam)
        d._cache[key] = (lam, wt)
    return d._cache[key]


def _cdf_table(d):
    if "cdf" not in d._cache:
        if d.kind == "tabulated":
            xs = d.grid
            mids = np.concatenate([[0.0], np.cumsum(
                0.5 * (d.values[1:] + d.values[:-1]) * np.diff(xs))])
            F = mids / mids[-1]
        else:
            phi = np.linspace(np.pi, 0.0, 4097)
            half = 0.5 * d.support.width()
            mid = d.support.midpoint()
            xs = mid + half * np.cos(phi)
            f = eval_density(d, xs) * half * np.sin(phi)
            F = np.concatenate([[0.0], np.cumsum(
                0.5 * (f[1:] + f[:-1]) * np.abs(np.diff(phi)))])
            F = F / F[-1]
        d._cache["cdf"] = (xs, F)
    return d._cache["cdf"]


def cdf(d, x):
    """Cumulative distribution function of the density."""
    if d.kind == "dirac":
        x = np.asarray(x, dtype=float)
        out = np.where(x >= d.params["a"], 1.0, 0.0)
        return out if out.ndim else float(out)
    xs, F = _cdf_table(d)
    out = np.interp(np.asarray(x, dtype=float), xs, F, left=0.0, right=1.0)
    return out if out.ndim else float(out)


def classical_positions(d, n):
    """Deterministic eigenvalue positions: the i-th position solves
    CDF(a_i) = i/(n+1).  Raises DegenerateDensity for a point mass."""
    if d.kind == "dirac":
        raise DegenerateDensity("classical positions undefined for a point mass")
    xs, F = _cdf_table(d)
    targets = np.arange(1, n + 1) / (n + 1.0)
    return np.interp(targets, F, xs)


def symmetrize(rho):
    """Even density mu(x) = (rho(x) + rho(-x)) / 2."""
    if rho.kind == "semicircle":
        return rho
    if rho.kind == "quarter_circle":
        return semicircle(rho.params["sigma"])
    if rho.kind == "gauss_rect_lsvd" and rho.params["q"] == 1.0:
        return semicircle(rho.params["sigma"])
    if rho.kind == "dirac":
        raise DegenerateDensity("symmetrization of a point mass is not a density")
    hi = max(abs(rho.support.lower), abs(rho.support.upper))
    grid = numerics.cheb_grid(-hi, hi, 1025)
    vals = 0.5 * (eval_density(rho, grid) + eval_density(rho, -grid))
    total = np.trapz(vals, grid)
    return tabulated(grid, vals / total)


def lsvd_to_square(rho, q=None):
    """Push a singular value density s to the eigenvalue density of the
    squared matrix: mu(lam) = rho(sqrt(lam)) / (2 sqrt(lam))."""
    if rho.support.lower < 0:
        raise ValueError("singular value density must live on [0, inf)")
    if rho.kind == "quarter_circle":
        return marchenko_pastur(1.0, scale=rho.params["sigma"] ** 2)
    if rho.kind == "gauss_rect_lsvd":
        return marchenko_pastur(rho.params["q"], scale=rho.params["sigma"] ** 2)
    if rho.kind == "dirac":
        return dirac(rho.params["a"] ** 2)
    if rho.support.lower <= 0:
        raise ValueError("generic squared transform needs a positive lower edge")
    grid = numerics.cheb_grid(rho.support.lower ** 2, rho.support.upper ** 2, 1025)
    s = np.sqrt(grid)
    vals = eval_density(rho, s) / (2.0 * s)
    total = np.trapz(vals, grid)
    return tabulated(grid, vals / total)


def save_density_csv(d, path, n=512):
    """Write the density to CSV (header x,density) on a Chebyshev grid,
    normalized so the stored trapezoid integral is exactly 1."""
    grid = numerics.cheb_grid(d.support.lower, d.support.upper, n)
    vals = eval_density(d, grid)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    total = np.trapz(vals, grid)
    if total <= 0:
        raise ValueError("density has no mass to write")
    vals = vals / total
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "density"])
        for x, v in zip(grid, vals):
            w.writerow([repr(float(x)), repr(float(v))])


def load_density_csv(path):
    """Read a tabulated density written by save_density_csv."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["x", "density"]:
            raise ValueError("expected header 'x,density'")
        for row in r:
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    return tabulated(np.array(xs), np.array(vs))


@dataclass
class Ensemble:
    """A density plus a confining potential and a hard wall.

    v_prime is the derivative of the potential appearing at rate N/2 in the
    joint law; v is the potential itself (needed only for sampling).  wall
    is the upper hard constraint on eigenvalues; floor is a lower domain
    boundary for the potential (0 for Wishart-type laws).
    """
    density: SpectralDensity
    v_prime: Optional[Callable] = None
    wall: float = np.inf
    v: Optional[Callable] = None
    floor: float = -np.inf

    def __post_init__(self):
        if self.wall < self.density.support.upper - 1e-9:
            raise ValueError("wall must not cut into the spectral bulk")

    def wall_at_edge(self):
        return np.isfinite(self.wall) and \
            abs(self.wall - self.density.support.upper) <= 1e-9


def goe_ensemble(sigma=1.0, wall=np.inf):
    s2 = float(sigma) ** 2
    return Ensemble(
        density=semicircle(sigma),
        v_prime=lambda lam: np.asarray(lam) / s2,
        v=lambda lam: np.asarray(lam) ** 2 / (2.0 * s2),
        wall=wall,
    )


def wishart_ensemble(q, wall=np.inf, scale=1.0):
    q = float(q)
    s = float(scale)

    def vp(lam):
        lam = np.asarray(lam, dtype=float)
        return 1.0 / (q * s) + (1.0 - 1.0 / q) / lam

    def v(lam):
        lam = np.asarray(lam, dtype=float)
        return lam / (q * s) + (1.0 - 1.0 / q) * np.log(lam)

    return Ensemble(density=marchenko_pastur(q, s), v_prime=vp, v=v,
                    wall=wall, floor=0.0)


def fixed_ensemble(density):
    """Non-fluctuating factor: eigenvalues pinned at classical positions,
    modeled as a wall at the spectral edge."""
    return Ensemble(density=density, wall=density.support.upper)


@dataclass
class RectEnsemble:
    """A rectangular factor: singular value density, shape ratio q = n/m,
    the derivative of the squared-spectrum potential, and a wall on the
    top singular value."""
    lsvd: SpectralDensity
    shape_q: float
    v_prime_tilde: Optional[Callable] = None
    wall: float = np.inf
    v_tilde: Optional[Callable] = None

    def __post_init__(self):
        if not 0.0 < self.shape_q <= 1.0:
            raise InvalidShapeRatio("shape ratio must lie in (0, 1]")
        if self.wall < self.lsvd.support.upper - 1e-9:
            raise ValueError("wall must not cut into the spectral bulk")

    def wall_at_edge(self):
        return np.isfinite(self.wall) and \
            abs(self.wall - self.lsvd.support.upper) <= 1e-9

    def square_density(self):
        if "square" not in self.lsvd._cache:
            self.lsvd._cache["square"] = lsvd_to_square(self.lsvd)
        return self.lsvd._cache["square"]


def gauss_rect_ensemble(sigma, q, wall=np.inf):
    sigma, q = float(sigma), float(q)

    def vpt(lam):
        lam = np.asarray(lam, dtype=float)
        return 1.0 / (q * sigma * sigma) + (1.0 - 1.0 / q) / lam

    def vt(lam):
        lam = np.asarray(lam, dtype=float)
        return lam / (q * sigma * sigma) + (1.0 - 1.0 / q) * np.log(lam)

    return RectEnsemble(lsvd=gauss_rect_lsvd(sigma, q), shape_q=q,
                        v_prime_tilde=vpt, v_tilde=vt, wall=wall)


def fixed_rect_ensemble(lsvd, shape_q):
    return RectEnsemble(lsvd=lsvd, shape_q=shape_q,
                        wall=lsvd.support.upper)


@dataclass
class EigenConfiguration:
    values: np.ndarray
    wall: float
    acceptance: Optional[float] = None


def metropolis_wall_sample(e, n, steps, seed):
    """Sample the joint eigenvalue law of the ensemble restricted to
    lambda_i <= wall, by single-site Metropolis moves.

    Parameters
    ----------
    e : Ensemble with both v and v_prime set.
    n : number of eigenvalues.
    steps : total sweeps; the first half is burn-in, during which the
        proposal width is tuned toward 30-50% acceptance.
    seed : integer seed; runs are deterministic given (e, n, steps, seed).
    """
    if e.v is None:
        raise ValueError("metropolis sampling needs the potential v")
    rng = np.random.Generator(np.random.Philox(seed))
    wall, floor = e.wall, e.floor

    lam = classical_positions(e.density, n).astype(float)
    if np.isfinite(wall):
        span = e.density.support.width()
        cap = wall - 1e-8 * span * (1.0 + np.arange(n)[::-1])
        lam = np.minimum(lam, cap)
    step = 0.5 * e.density.support.width() / np.sqrt(n)

    burn = steps // 2
    accepted_recent = []
    acc_post, att_post = 0, 0
    for sweep in range(steps):
        order = rng.permutation(n)
        xi = rng.standard_normal(n)
        uni = rng.random(n)
        acc_sweep = 0
        for k in order:
            prop = lam[k] + step * xi[k]
            if prop >= wall or prop <= floor:
                continue
            diff = np.abs(prop - lam)
            old = np.abs(lam[k] - lam)
            diff[k] = 1.0
            old[k] = 1.0
            if np.any(diff == 0.0):
                continue
            dlog = np.sum(np.log(diff)) - np.sum(np.log(old))
            dv = 0.5 * n * float(e.v(prop) - e.v(lam[k]))
            if np.log(uni[k]) < dlog - dv:
                lam[k] = prop
                acc_sweep += 1
        rate = acc_sweep / n
        accepted_recent.append(rate)
        if len(accepted_recent) >= 50 and \
                np.mean(accepted_recent[-50:]) < 0.01:
            raise NonConvergence("metropolis acceptance collapsed below 1%")
        if sweep < burn and (sweep + 1) % 20 == 0:
            recent = np.mean(accepted_recent[-20:])
            if recent < 0.30:
                step *= 0.75
            elif recent > 0.50:
                step *= 1.30
        if sweep >= burn:
            acc_post += acc_sweep
            att_post += n
    acc = acc_post / max(att_post, 1)
    return EigenConfiguration(values=np.sort(lam), wall=wall, acceptance=acc)
