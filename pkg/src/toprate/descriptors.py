"""Plain-text descriptors for factors and sampling models.

A square factor is colon-separated kind:params:wall.  The wall token is
'edge' (pin the factor at its spectral edge, i.e. a fixed non-fluctuating
factor), 'inf' (no wall), or a number (hard wall at or above the edge).
Kinds: sc:sigma:wall, mp:q:wall, qc:sigma:wall, dirac:a:wall,
tab:path:wall, plus the aliases goe:sigma[:wall] and wishart:q[:wall]
which carry their canonical confining potentials and default to no wall.
sc and mp with a non-edge wall also carry the canonical potentials, so
they describe fluctuating matrices.

Rectangular factors: gaussrect:sigma:q:wall, or qc:sigma:wall /
dirac:a:wall / tab:path:wall with the shape ratio supplied by the
surrounding command.

Sampling models: goe:sigma, wishart:q, ginibre:sigma:q, rk1rk1:wa:wb,
spikeadd:gamma:<factor>, spikemul:gamma:<factor>, sum:<f>+<f>,
prod:<f>+<f>, rect[:q]:<f>+<f>.
"""

import numpy as np

from . import spectra


def _wall_value(tok):
    return np.inf if tok == "inf" else float(tok)


def _walled(density, tok, fluct_builder=None):
    if tok == "edge":
        return spectra.fixed_ensemble(density)
    wall = _wall_value(tok)
    if fluct_builder is not None:
        return fluct_builder(wall)
    return spectra.Ensemble(density=density, wall=wall)


def parse_ensemble(desc):
    """Parse a square-factor descriptor into an Ensemble."""
    toks = desc.split(":")
    kind = toks[0]
    if kind == "goe":
        if len(toks) not in (2, 3):
            raise ValueError("expected goe:sigma[:wall], got %r" % desc)
        sigma = float(toks[1])
        wall = np.inf
        if len(toks) == 3:
            wall = 2.0 * sigma if toks[2] == "edge" else _wall_value(toks[2])
        return spectra.goe_ensemble(sigma, wall=wall)
    if kind == "wishart":
        if len(toks) not in (2, 3):
            raise ValueError("expected wishart:q[:wall], got %r" % desc)
        q = float(toks[1])
        wall = np.inf
        if len(toks) == 3:
            wall = (1.0 + np.sqrt(q)) ** 2 if toks[2] == "edge" \
                else _wall_value(toks[2])
        return spectra.wishart_ensemble(q, wall=wall)
    if kind == "sc":
        if len(toks) != 3:
            raise ValueError("expected sc:sigma:wall, got %r" % desc)
        sigma = float(toks[1])
        return _walled(spectra.semicircle(sigma), toks[2],
                       lambda w: spectra.goe_ensemble(sigma, wall=w))
    if kind == "mp":
        if len(toks) != 3:
            raise ValueError("expected mp:q:wall, got %r" % desc)
        q = float(toks[1])
        return _walled(spectra.marchenko_pastur(q), toks[2],
                       lambda w: spectra.wishart_ensemble(q, wall=w))
    if kind == "qc":
        if len(toks) != 3:
            raise ValueError("expected qc:sigma:wall, got %r" % desc)
        return _walled(spectra.quarter_circle(float(toks[1])), toks[2])
    if kind == "dirac":
        if len(toks) != 3:
            raise ValueError("expected dirac:a:wall, got %r" % desc)
        a = float(toks[1])
        if toks[2] == "edge":
            return spectra.Ensemble(density=spectra.dirac(a), wall=a)
        return spectra.Ensemble(density=spectra.dirac(a),
                                wall=_wall_value(toks[2]))
    if kind == "tab":
        if len(toks) != 3:
            raise ValueError("expected tab:path:wall, got %r" % desc)
        return _walled(spectra.load_density_csv(toks[1]), toks[2])
    raise ValueError("unknown factor kind %r in %r" % (kind, desc))


def parse_rect_ensemble(desc, shape_q=None):
    """Parse a rectangular-factor descriptor into a RectEnsemble.

    shape_q supplies the shape ratio for kinds that do not carry their
    own (qc, dirac, tab); gaussrect always uses its own q parameter.
    """
    toks = desc.split(":")
    kind = toks[0]
    if kind == "gaussrect":
        if len(toks) != 4:
            raise ValueError("expected gaussrect:sigma:q:wall, got %r" % desc)
        sigma, q = float(toks[1]), float(toks[2])
        if toks[3] == "edge":
            return spectra.fixed_rect_ensemble(
                spectra.gauss_rect_lsvd(sigma, q), q)
        return spectra.gauss_rect_ensemble(sigma, q,
                                           wall=_wall_value(toks[3]))
    if kind == "qc":
        lsvd = spectra.quarter_circle(float(toks[1]))
    elif kind == "dirac":
        lsvd = spectra.dirac(float(toks[1]))
    elif kind == "tab":
        lsvd = spectra.load_density_csv(toks[1])
    else:
        raise ValueError("unknown rectangular kind %r in %r" % (kind, desc))
    if len(toks) != 3:
        raise ValueError("expected %s:param:wall, got %r" % (kind, desc))
    q = 1.0 if shape_q is None else float(shape_q)
    if toks[2] == "edge":
        return spectra.fixed_rect_ensemble(lsvd, q)
    return spectra.RectEnsemble(lsvd=lsvd, shape_q=q,
                                wall=_wall_value(toks[2]))


def infer_shape_q(descs):
    """Shape ratio from the first gaussrect descriptor, if any."""
    for desc in descs:
        toks = desc.split(":")
        if toks[0] == "gaussrect" and len(toks) >= 3:
            return float(toks[2])
    return None


def _floatable(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def parse_mc_model(model):
    """Parse a sampling-model string into a spec dict."""
    kind, _, rest = model.partition(":")
    if kind == "goe":
        return {"kind": "goe", "sigma": float(rest)}
    if kind == "wishart":
        return {"kind": "wishart", "q": float(rest)}
    if kind == "ginibre":
        toks = rest.split(":")
        if len(toks) != 2:
            raise ValueError("expected ginibre:sigma:q, got %r" % model)
        return {"kind": "ginibre", "sigma": float(toks[0]),
                "q": float(toks[1])}
    if kind == "rk1rk1":
        toks = rest.split(":")
        if len(toks) != 2:
            raise ValueError("expected rk1rk1:wa:wb, got %r" % model)
        return {"kind": "rk1rk1", "w_a": float(toks[0]),
                "w_b": float(toks[1])}
    if kind in ("spikeadd", "spikemul"):
        g, _, base = rest.partition(":")
        if not base:
            raise ValueError("expected %s:gamma:<factor>, got %r"
                             % (kind, model))
        return {"kind": kind, "gamma": float(g),
                "base": parse_ensemble(base)}
    if kind in ("sum", "prod"):
        descs = rest.split("+")
        if len(descs) != 2:
            raise ValueError("expected %s:<factor>+<factor>, got %r"
                             % (kind, model))
        return {"kind": kind,
                "factors": [parse_ensemble(t) for t in descs]}
    if kind == "rect":
        first, _, remainder = rest.partition(":")
        if _floatable(first):
            q = float(first)
            rest = remainder
        else:
            q = infer_shape_q(rest.split("+"))
            if q is None:
                q = 1.0
        descs = rest.split("+")
        if len(descs) != 2:
            raise ValueError("expected rect[:q]:<factor>+<factor>, got %r"
                             % model)
        return {"kind": "rect", "q": q,
                "factors": [parse_rect_ensemble(t, q) for t in descs]}
    raise ValueError("unknown model kind %r in %r" % (kind, model))
