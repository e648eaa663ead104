"""Finite-size Monte Carlo checks of the rate predictions.

Each sample draws from its own counter-based stream (Philox jumped by the
sample index), so a (model, n, samples, seed) tuple reproduces the same
numbers regardless of execution order or platform.  The exactly solvable
two-projection model is drawn in one vectorized pass from a single stream
under the same contract.
"""

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientTail
from . import descriptors, rankone, spectra

_TOPS_CACHE = {}


@dataclass
class McConfig:
    model: str
    n: int
    samples: int
    seed: int


@dataclass
class McReport:
    config: McConfig
    top_mean: float
    top_std: float
    top_min: float
    top_max: float
    histogram_edges: list
    histogram_counts: list
    rate_points: list
    wall_seconds: Optional[float] = None

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def sample_goe(n, rng, sigma=1.0):
    """One GOE matrix scaled so the bulk fills [-2 sigma, 2 sigma]."""
    a = rng.standard_normal((n, n))
    return sigma * (a + a.T) / np.sqrt(2.0 * n)


def sample_wishart(n, q, rng, scale=1.0):
    """One Wishart matrix X X^T / m with m = round(n/q)."""
    m = max(int(round(n / q)), n)
    x = rng.standard_normal((n, m))
    return scale * (x @ x.T) / m


def sample_ginibre(n, m, rng, sigma=1.0):
    return sigma * rng.standard_normal((n, m)) / np.sqrt(m)


def haar_orthogonal(n, rng):
    """Haar-distributed orthogonal matrix via sign-fixed QR."""
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def _psd_sqrt(mat):
    vals, vecs = np.linalg.eigh(mat)
    root = np.sqrt(np.maximum(vals, 0.0))
    return (vecs * root) @ vecs.T


def _square_factor_matrix(e, n, rng):
    """Realize one square factor at size n.  Returns (matrix, is_scalar).

    Fluctuating factors with closed matrix models are drawn directly; a
    finite off-edge wall triggers a short Metropolis run over the
    constrained joint law; everything else enters at its classical
    positions (to be conjugated by an independent rotation upstream).
    """
    d = e.density
    if d.kind == "dirac":
        return d.params["a"] * np.eye(n), True
    fluct = e.v_prime is not None and not e.wall_at_edge()
    if fluct and np.isfinite(e.wall):
        sub = int(rng.integers(0, 2 ** 62))
        cfg = spectra.metropolis_wall_sample(e, n, steps=400, seed=sub)
        return np.diag(cfg.values), False
    if fluct and d.kind == "semicircle":
        return sample_goe(n, rng, d.params["sigma"]), False
    if fluct and d.kind == "marchenko_pastur":
        return sample_wishart(n, d.params["q"], rng,
                              d.params.get("scale", 1.0)), False
    return np.diag(spectra.classical_positions(d, n)), False


def _rect_factor_matrix(re, n, m, rng):
    d = re.lsvd
    fluct = re.v_prime_tilde is not None and not re.wall_at_edge() \
        and not np.isfinite(re.wall)
    if fluct and d.kind == "gauss_rect_lsvd":
        return sample_ginibre(n, m, rng, d.params["sigma"])
    out = np.zeros((n, m))
    if d.kind == "dirac":
        np.fill_diagonal(out, d.params["a"])
    else:
        np.fill_diagonal(out, spectra.classical_positions(d, n))
    return out


def _top_from_spec(spec, n, rng):
    kind = spec["kind"]
    if kind == "goe":
        return float(np.linalg.eigvalsh(
            sample_goe(n, rng, spec["sigma"]))[-1])
    if kind == "wishart":
        return float(np.linalg.eigvalsh(
            sample_wishart(n, spec["q"], rng))[-1])
    if kind == "ginibre":
        m = max(int(round(n / spec["q"])), n)
        x = sample_ginibre(n, m, rng, spec["sigma"])
        return float(np.linalg.svd(x, compute_uv=False)[0])
    if kind == "rk1rk1":
        g1 = rng.gamma(0.5)
        g2 = rng.gamma(0.5 * n)
        phi = g1 / (g1 + g2)
        wa, wb = spec["w_a"], spec["w_b"]
        disc = (wa - wb) ** 2 + 4.0 * wa * wb * phi
        return float(0.5 * (wa + wb + np.sqrt(disc)))
    if kind in ("sum", "prod"):
        ea, eb = spec["factors"]
        a, sa = _square_factor_matrix(ea, n, rng)
        b, sb = _square_factor_matrix(eb, n, rng)
        if not sb and not sa:
            u = haar_orthogonal(n, rng)
            b = u @ b @ u.T
        if kind == "sum":
            mat = a + b
        else:
            ra = _psd_sqrt(a)
            mat = ra @ b @ ra
        return float(np.linalg.eigvalsh(mat)[-1])
    if kind == "rect":
        q = spec["q"]
        m = max(int(round(n / q)), n)
        ra, rb = spec["factors"]
        a = _rect_factor_matrix(ra, n, m, rng)
        b = _rect_factor_matrix(rb, n, m, rng)
        u1 = haar_orthogonal(n, rng)
        u2 = haar_orthogonal(m, rng)
        c = a + u1 @ b @ u2.T
        return float(np.linalg.svd(c, compute_uv=False)[0])
    if kind in ("spikeadd", "spikemul"):
        base, _ = _square_factor_matrix(spec["base"], n, rng)
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        if kind == "spikeadd":
            mat = base + spec["gamma"] * np.outer(u, u)
        else:
            v = _psd_sqrt(base) @ u
            mat = base + spec["gamma"] * np.outer(v, v)
        return float(np.linalg.eigvalsh(mat)[-1])
    raise ValueError("unknown model kind %r" % kind)


def sample_model_top(cfg, i):
    """Top eigenvalue (or singular value) of the i-th draw of the model."""
    spec = descriptors.parse_mc_model(cfg.model)
    rng = np.random.Generator(np.random.Philox(cfg.seed).jumped(i))
    return _top_from_spec(spec, cfg.n, rng)


def _collect_tops(cfg):
    key = (cfg.model, cfg.n, cfg.samples, cfg.seed)
    if key in _TOPS_CACHE:
        return _TOPS_CACHE[key]
    spec = descriptors.parse_mc_model(cfg.model)
    if spec["kind"] == "rk1rk1":
        model = rankone.Rk1PlusRk1(spec["w_a"], spec["w_b"])
        tops = rankone.rk1rk1_sample(model, cfg.n, cfg.samples, cfg.seed)
    else:
        tops = np.empty(cfg.samples)
        base = np.random.Philox(cfg.seed)
        for i in range(cfg.samples):
            rng = np.random.Generator(base.jumped(i))
            tops[i] = _top_from_spec(spec, cfg.n, rng)
    _TOPS_CACHE[key] = tops
    return tops


def _rate_points(tops, cfg, x_grid):
    out = []
    s = len(tops)
    any_hit = False
    for x in np.asarray(x_grid, dtype=float):
        hits = int(np.sum(tops >= x))
        p = hits / s
        if hits > 0:
            any_hit = True
            rate = float(-np.log(p) / cfg.n)
            stderr = float(np.sqrt(p * (1.0 - p) / s) / (cfg.n * p))
        else:
            rate, stderr = None, None
        out.append({"x": float(x), "p_hat": p, "hits": hits,
                    "rate": rate, "stderr": stderr,
                    "flagged": hits < 10})
    if len(out) and not any_hit:
        raise InsufficientTail("no sample reached any grid point")
    return out


def run_mc(cfg, x_grid=None):
    """Run the model and return a deterministic report: top statistics, a
    40-bin histogram, and empirical rate points on the optional grid."""
    tops = _collect_tops(cfg)
    counts, edges = np.histogram(tops, bins=40)
    pts = _rate_points(tops, cfg, x_grid) if x_grid is not None else []
    return McReport(
        config=cfg,
        top_mean=float(np.mean(tops)),
        top_std=float(np.std(tops)),
        top_min=float(np.min(tops)),
        top_max=float(np.max(tops)),
        histogram_edges=[float(v) for v in edges],
        histogram_counts=[int(c) for c in counts],
        rate_points=pts,
    )


def empirical_rate(cfg, x_grid):
    """Empirical speed-n rate -log p_hat(x) / n with a delta-method
    standard error; points with no hits carry null rates, and a grid
    nothing reaches raises InsufficientTail."""
    tops = _collect_tops(cfg)
    return _rate_points(tops, cfg, x_grid)


def histogram_vs_density(values, density):
    """Sup distance between the empirical CDF of values and the CDF of a
    density (a SpectralDensity, or a (grid, rho) pair)."""
    v = np.sort(np.asarray(values, dtype=float))
    if isinstance(density, spectra.SpectralDensity):
        f = spectra.cdf(density, v)
    else:
        grid, rho = density
        grid = np.asarray(grid, dtype=float)
        rho = np.asarray(rho, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(
            0.5 * (rho[1:] + rho[:-1]) * np.diff(grid))])
        f = np.interp(v, grid, cum / cum[-1], left=0.0, right=1.0)
    k = len(v)
    upper = np.arange(1, k + 1) / k
    lower = np.arange(0, k) / k
    return float(max(np.max(upper - f), np.max(f - lower)))
