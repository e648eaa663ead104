"""Command line interface.

Rate curves, bulk densities, tilted free energy derivatives, and transform
tables are written as CSV; Monte Carlo reports as JSON.  All output is
deterministic: floats use repr round-tripping, reports carry no
timestamps, and a fixed seed fixes every byte.

Exit codes: 0 success, 2 usage or domain errors, 3 failed numerical
convergence, 4 Monte Carlo tail too thin to estimate.
"""

import argparse
import contextlib
import csv
import sys

import numpy as np

from .errors import InsufficientTail, NonConvergence, TopRateError
from . import (descriptors, freeconv, freenergy, mcvalidate, rankone,
               ratefn, transforms)


def _parse_grid(s):
    parts = s.split(":")
    if len(parts) != 3:
        raise ValueError("grid must be lo:hi:n, got %r" % s)
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("grid needs at least one point")
    return np.linspace(lo, hi, n)


@contextlib.contextmanager
def _out_stream(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _write_curve(fh, curve, grid):
    w = _csv_writer(fh)
    w.writerow(["x", "rate", "theta_star", "regime"])
    rates = curve.eval(grid)
    thetas = curve.theta_star(grid)
    regimes = curve.regimes(grid)
    for x, r, th, rg in zip(grid, rates, thetas, regimes):
        w.writerow([repr(float(x)), repr(float(r)), repr(float(th)),
                    int(rg)])


def cmd_rate_one(args):
    e = descriptors.parse_ensemble(args.ensemble)
    grid = _parse_grid(args.grid)
    rates = ratefn.psi_one_matrix(e, grid)
    thetas = np.full(grid.shape, np.inf)
    ok = np.isfinite(rates)
    if np.any(ok):
        thetas[ok] = transforms.stieltjes_second(e, grid[ok])
    with _out_stream(args.out) as fh:
        w = _csv_writer(fh)
        w.writerow(["x", "rate", "theta_star", "regime"])
        for x, r, th, good in zip(grid, rates, thetas, ok):
            w.writerow([repr(float(x)), repr(float(r)), repr(float(th)),
                        1 if good else 0])
    return 0


def cmd_rate_sum(args):
    curve = ratefn.rate_sum(descriptors.parse_ensemble(args.a),
                            descriptors.parse_ensemble(args.b))
    with _out_stream(args.out) as fh:
        _write_curve(fh, curve, _parse_grid(args.grid))
    return 0


def cmd_rate_prod(args):
    curve = ratefn.rate_prod(descriptors.parse_ensemble(args.a),
                             descriptors.parse_ensemble(args.b))
    with _out_stream(args.out) as fh:
        _write_curve(fh, curve, _parse_grid(args.grid))
    return 0


def _rect_pair(args):
    q = args.q
    if q is None:
        q = descriptors.infer_shape_q([args.a, args.b])
    ra = descriptors.parse_rect_ensemble(args.a, q)
    rb = descriptors.parse_rect_ensemble(args.b, q)
    return ra, rb


def cmd_rate_rect(args):
    ra, rb = _rect_pair(args)
    curve = ratefn.rate_rect(ra, rb)
    with _out_stream(args.out) as fh:
        _write_curve(fh, curve, _parse_grid(args.grid))
    return 0


def cmd_rank_one(args):
    base = descriptors.parse_ensemble(args.base)
    curve = rankone.spike_rate(base, args.gamma, args.op)
    with _out_stream(args.out) as fh:
        _write_curve(fh, curve, _parse_grid(args.grid))
    return 0


def cmd_rk1rk1(args):
    model = rankone.Rk1PlusRk1(args.wa, args.wb)
    grid = _parse_grid(args.grid)
    rates = rankone.rk1rk1_rate(model, grid)
    dens = rankone.rk1rk1_density(model, args.n, grid) \
        if args.n is not None else None
    with _out_stream(args.out) as fh:
        w = _csv_writer(fh)
        if dens is None:
            w.writerow(["x", "rate"])
            for x, r in zip(grid, rates):
                w.writerow([repr(float(x)), repr(float(r))])
        else:
            w.writerow(["x", "rate", "density"])
            for x, r, d in zip(grid, rates, dens):
                w.writerow([repr(float(x)), repr(float(r)), repr(float(d))])
    return 0


def cmd_mc(args):
    cfg = mcvalidate.McConfig(model=args.model, n=args.n,
                              samples=args.samples, seed=args.seed)
    grid = _parse_grid(args.grid) if args.grid else None
    report = mcvalidate.run_mc(cfg, grid)
    with _out_stream(args.out) as fh:
        fh.write(report.to_json())
        fh.write("\n")
    return 0


def _conv_from_args(args):
    if args.op == "add":
        return freeconv.add_conv(descriptors.parse_ensemble(args.a),
                                 descriptors.parse_ensemble(args.b))
    if args.op == "mul":
        return freeconv.mul_conv(descriptors.parse_ensemble(args.a),
                                 descriptors.parse_ensemble(args.b))
    ra, rb = _rect_pair(args)
    return freeconv.rect_conv(ra, rb)


def cmd_density(args):
    conv = _conv_from_args(args)
    grid = _parse_grid(args.grid)
    rho = freeconv.density_on_support(conv, grid, eps=args.eps)
    with _out_stream(args.out) as fh:
        w = _csv_writer(fh)
        w.writerow(["x", "density"])
        for x, r in zip(grid, rho):
            w.writerow([repr(float(x)), repr(float(r))])
    return 0


def cmd_tilt(args):
    conv = _conv_from_args(args)
    model = freenergy.tilt_model(conv, x=args.x)
    thetas = _parse_grid(args.theta_grid)
    quen = freenergy.quenched_dtheta(model, thetas)
    ann = freenergy.annealed_dtheta(model, thetas)
    diff = freenergy.tilt_diff(model, thetas)
    with _out_stream(args.out) as fh:
        w = _csv_writer(fh)
        w.writerow(["theta", "quenched", "annealed", "diff"])
        for th, qv, av, dv in zip(thetas, quen, ann, diff):
            w.writerow([repr(float(th)), repr(float(qv)), repr(float(av)),
                        repr(float(dv))])
    return 0


def cmd_stieltjes_inverse(args):
    e = descriptors.parse_ensemble(args.ensemble)
    ys = _parse_grid(args.y_grid)
    z = transforms.r_transform(e, ys) + 1.0 / ys
    with _out_stream(args.out) as fh:
        w = _csv_writer(fh)
        w.writerow(["y", "z"])
        for y, zz in zip(ys, z):
            w.writerow([repr(float(y)), repr(float(zz))])
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="toprate",
        description="Right tail rate functions for the top eigenvalue or "
                    "singular value of free sums, products and rectangular "
                    "sums, with Monte Carlo validation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_out(sp):
        sp.add_argument("--out", default=None, help="output path "
                        "(default: stdout)")

    sp = sub.add_parser("rate-one", help="rate of a single walled ensemble")
    sp.add_argument("--ensemble", required=True)
    sp.add_argument("--grid", required=True, help="lo:hi:n")
    add_out(sp)
    sp.set_defaults(func=cmd_rate_one)

    sp = sub.add_parser("rate-sum", help="rate of a free sum")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--grid", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_rate_sum)

    sp = sub.add_parser("rate-prod", help="rate of a free product")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--grid", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_rate_prod)

    sp = sub.add_parser("rate-rect", help="rate of a rectangular free sum")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--q", type=float, default=None,
                    help="shape ratio (default: from a gaussrect factor)")
    sp.add_argument("--grid", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_rate_rect)

    sp = sub.add_parser("rank-one", help="rate for a rank-one deformation")
    sp.add_argument("--base", required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--op", choices=("add", "mul"), default="add")
    sp.add_argument("--grid", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_rank_one)

    sp = sub.add_parser("rk1rk1",
                        help="exact two-projection model: rate and "
                             "finite-n density")
    sp.add_argument("--wa", type=float, required=True)
    sp.add_argument("--wb", type=float, required=True)
    sp.add_argument("--n", type=int, default=None,
                    help="matrix size for the exact density column")
    sp.add_argument("--grid", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_rk1rk1)

    sp = sub.add_parser("mc", help="Monte Carlo top statistics report")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--grid", default=None,
                    help="optional lo:hi:n grid of tail points")
    add_out(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("density", help="bulk density of a convolution")
    sp.add_argument("--op", choices=("add", "mul", "rect"), required=True)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--grid", required=True)
    add_out(sp)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("tilt", help="tilted free energy derivatives at x")
    sp.add_argument("--op", choices=("add", "mul", "rect"), required=True)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--theta-grid", required=True, dest="theta_grid")
    add_out(sp)
    sp.set_defaults(func=cmd_tilt)

    sp = sub.add_parser("stieltjes-inverse",
                        help="continued inverse of the Stieltjes transform")
    sp.add_argument("--ensemble", required=True)
    sp.add_argument("--y-grid", required=True, dest="y_grid")
    add_out(sp)
    sp.set_defaults(func=cmd_stieltjes_inverse)

    return p


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args) or 0
    except InsufficientTail as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except NonConvergence as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except (TopRateError, ValueError, NotImplementedError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
