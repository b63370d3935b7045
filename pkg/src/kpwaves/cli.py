"""Command-line front end: kernel tables, wave solves, and verification.

Subcommands
-----------
kernel   kernel values, far-field limit checks, decay/singularity fits
solve    run the solitary-wave solver and persist the result
verify   diagnostics report for a stored wave file
riesz    residuals of the composed-Riesz sphere identity

All artifacts land under ``--out-dir`` together with a ``manifest.json``
listing files and their SHA-256.  Exit codes: 0 all checks passed, 1 checks
ran but failed, 2 configuration or IO error (including rejection of an
exponent outside the existence range).
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import diagnostics, grids, kernels, solver
from .quadrature import QuadratureSpec

_FMT = "%.17g"


class _CheckTable:
    """Accumulates (name, value, expected, tolerance) rows with pass/fail."""

    def __init__(self):
        self.rows = []

    def add(self, name, value, expected, tol):
        ok = abs(value - expected) <= tol
        self.rows.append((name, float(value), float(expected), float(tol), ok))
        return ok

    @property
    def all_pass(self):
        return all(r[4] for r in self.rows)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("name,value,expected,tolerance,pass\n")
            for name, value, expected, tol, ok in self.rows:
                fh.write("%s,%s,%s,%s,%s\n" % (
                    name, _FMT % value, _FMT % expected, _FMT % tol,
                    "pass" if ok else "fail"))


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_FMT % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_json(path, doc):
    def default(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, Fraction):
            return str(obj)
        raise TypeError(type(obj).__name__)

    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=default)
        fh.write("\n")


def _manifest(out_dir, argv):
    entries = []
    for name in sorted(os.listdir(out_dir)):
        if name == "manifest.json":
            continue
        path = os.path.join(out_dir, name)
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        entries.append({"path": name, "sha256": digest})
    _write_json(os.path.join(out_dir, "manifest.json"), {
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": argv,
        "artifacts": entries,
    })


_WHICH = {"H0": (1, 0), "K0": (2, 0), "K1": (3, 0), "K2": (2, 1)}


def _parse_p(text):
    p = Fraction(text)
    if p.denominator % 2 == 0:
        raise ValueError("exponent denominator must be odd")
    return p


def _parse_sigma(text):
    sigma = np.array([float(t) for t in text.split(",")])
    n = np.linalg.norm(sigma)
    if n == 0:
        raise ValueError("zero direction")
    return sigma / n


def cmd_kernel(args, argv):
    checks = _CheckTable()
    d = _WHICH[args.which]
    quad = QuadratureSpec(splitting_radius=1.0, outer_cutoff=60.0,
                          abs_tol=args.abs_tol, rel_tol=args.rel_tol)
    did = False
    if args.limit_check:
        did = True
        rows = []
        for k in range(8):
            theta = np.pi * (k + 0.5) / 8.0
            sigma = np.array([np.cos(theta), np.sin(theta)])
            measured = kernels.k0_limit_richardson(sigma, args.limit_radius)
            predicted = kernels.k0_limit(sigma)
            if abs(predicted) > 1e-3:
                ok = checks.add("limit_sigma1=%.4f" % sigma[0], measured,
                                predicted, 0.02 * abs(predicted))
            else:
                ok = checks.add("limit_sigma1=%.4f" % sigma[0], measured,
                                predicted, 1e-3)
            rows.append((sigma[0], float(measured), float(predicted),
                         float(abs(measured - predicted)
                               / max(abs(predicted), 1e-3))))
        _write_csv(os.path.join(args.out_dir, "limit_check.csv"),
                   ["sigma1", "measured_limit", "predicted", "rel_err"], rows)
    if args.decay_fit:
        did = True
        radii = np.geomspace(args.fit_rmin, args.fit_rmax, 10)
        sigma = _parse_sigma(args.sigma)
        samples = [(r, kernels.kernel_value(d, r * sigma, quad))
                   for r in radii]
        fit = kernels.decay_fit(samples)
        expected = {-1: -1.0}.get(0, -2.0 if args.which == "K0"
                                  else (-1.0 if args.which == "H0" else -3.0))
        checks.add("far_field_slope_%s" % args.which, fit.slope, expected,
                   0.05 if args.which in ("K0", "H0") else 0.1)
        _write_csv(os.path.join(args.out_dir, "decay_fit.csv"),
                   ["radius", "value"], [(float(r), float(v))
                                         for r, v in samples])
        _write_json(os.path.join(args.out_dir, "decay_fit.json"),
                    {"which": args.which, "slope": fit.slope,
                     "stderr": fit.stderr, "n_used": fit.n_used,
                     "expected": expected})
    if args.singularity_fit:
        did = True
        fit = kernels.singularity_fit(d, args.axis)
        _write_json(os.path.join(args.out_dir, "singularity_fit.json"),
                    {"which": args.which, "axis": args.axis,
                     "beta": fit.beta, "stderr": fit.stderr,
                     "log_flag": fit.log_flag,
                     "radii": fit.radii, "values": fit.values})
    if args.riesz_check:
        did = True
        _riesz_rows(checks, args.dim, [_parse_sigma(args.sigma)], args.out_dir)
    if args.points:
        did = True
        rows = []
        for tok in args.points.split(";"):
            x = np.array([float(t) for t in tok.split(",")])
            rows.append(tuple(x) + (float(kernels.kernel_value(d, x, quad)),))
        _write_csv(os.path.join(args.out_dir, "kernel_values.csv"),
                   ["x%d" % (i + 1) for i in range(args.dim)] + ["value"],
                   rows)
    if not did:
        print("kernel: nothing to do (pass --limit-check, --decay-fit, "
              "--singularity-fit, --riesz-check, or --points)",
              file=sys.stderr)
        return 2
    checks.write_csv(os.path.join(args.out_dir, "kernel_checks.csv"))
    _manifest(args.out_dir, argv)
    return 0 if checks.all_pass else 1


def _riesz_rows(checks, dim, sigmas, out_dir):
    rows = []
    for sigma in sigmas:
        for axis in range(1, dim + 1):
            res = kernels.verify_riesz_identity(np.asarray(sigma), axis)
            checks.add("riesz_dim%d_axis%d_sigma=%s"
                       % (dim, axis, ",".join("%g" % s for s in sigma)),
                       res, 0.0, 1e-6)
            rows.append((dim, axis) + tuple(sigma) + (float(res),))
    _write_csv(os.path.join(out_dir, "riesz_residuals.csv"),
               ["dim", "axis"] + ["sigma%d" % (i + 1) for i in range(dim)]
               + ["residual"], rows)


def cmd_riesz(args, argv):
    checks = _CheckTable()
    sigmas = ([_parse_sigma(args.sigma)] if args.sigma else
              [_parse_sigma(s) for s in
               ("1,0", "0,1", "0.6,0.8", "0.948683,-0.316228")])
    if args.dim == 3 and args.sigma is None:
        sigmas = [np.array([1.0, 0, 0]), np.array([0, 0, 1.0]),
                  _parse_sigma("0.6,0,0.8"), _parse_sigma("0.5,0.5,0.7071")]
    _riesz_rows(checks, args.dim, sigmas, args.out_dir)
    checks.write_csv(os.path.join(args.out_dir, "riesz_checks.csv"))
    _manifest(args.out_dir, argv)
    return 0 if checks.all_pass else 1


def cmd_solve(args, argv):
    try:
        p = _parse_p(args.p)
        sup = solver.admissible_p_sup(args.dim)
        if not (0 < p < sup):
            print("solve: rejected p = %s: no non-constant solitary wave "
                  "exists for p >= 4/(2N-3) = %s in dimension %d"
                  % (p, sup, args.dim), file=sys.stderr)
            return 2
        grid = grids.Grid([args.box] * args.dim, [args.grid] * args.dim)
    except (ValueError, ZeroDivisionError) as exc:
        print("solve: bad configuration: %s" % exc, file=sys.stderr)
        return 2
    state = solver.solve_solitary_wave(grid, p, args.seed,
                                       max_iter=args.max_iter, tol=args.tol)
    res = solver.residual_conv(state)
    base = os.path.join(args.out_dir, args.name)
    grids.save_field(base, state.field, p=(p.numerator, p.denominator),
                     speed=state.c, residual=res)
    _write_csv(base + "_history.csv", ["iteration", "relative_update",
                                       "stabilization_factor"],
               [(i, float(r), float(s))
                for i, (r, s) in enumerate(state.history)])
    _write_json(base + "_summary.json", {
        "iterations": len(state.history),
        "residual_conv": res,
        "residual_h0": solver.residual_h0(state),
        "converged": res < args.residual_target,
    })
    _manifest(args.out_dir, argv)
    if res >= args.residual_target:
        print("solve: residual %.3e above target %.3e"
              % (res, args.residual_target), file=sys.stderr)
        return 1
    return 0


def cmd_verify(args, argv):
    try:
        field, meta = grids.load_field(args.wavefile)
        p = Fraction(int(meta.get("p_num", 1)), int(meta.get("p_den", 1)))
        state = solver.WaveState(field, p, c=float(meta.get("speed", 1.0)))
    except (grids.FieldFormatError, ValueError, KeyError) as exc:
        print("verify: cannot load %r: %s" % (args.wavefile, exc),
              file=sys.stderr)
        return 2
    checks = _CheckTable()
    rep = diagnostics.pohozaev_check(state)
    tol = args.tol_pohozaev
    checks.add("pohozaev_dilation", rep.residual_dilation, 0.0, tol)
    for k, r in enumerate(rep.residual_transverse, start=2):
        checks.add("pohozaev_transverse_k%d" % k, r, 0.0, tol)
    checks.add("pohozaev_total", rep.residual_total, 0.0, tol)
    if rep.ratio_errors is not None:
        for name, err, scale in zip(("cubic", "d1_sq", "transverse_sq"),
                                    rep.ratio_errors, (4.0, 2 / 3, 1 / 3)):
            checks.add("ratio_%s" % name, err / scale, 0.0, args.tol_ratio)
    doc = {
        "mass": rep.mass, "energy": rep.energy, "action": rep.action,
        "residuals": {"dilation": rep.residual_dilation,
                      "transverse": list(rep.residual_transverse),
                      "total": rep.residual_total},
    }
    if args.profile:
        lo = 0.15 * min(state.grid.half_lengths)
        radii = [lo, 1.5 * lo, 2.0 * lo]
        prof = diagnostics.profile_extract(
            state, radii, diagnostics.circle_directions(args.directions))
        checks.add("profile_sup_gap", prof.sup_gap, 0.0, args.tol_profile)
        doc["profile"] = {
            "radii": list(prof.radii),
            "extrapolated": prof.extrapolated,
            "prediction": prof.prediction,
            "sup_gap": prof.sup_gap,
            "uniformity_claimed": prof.uniformity_claimed,
        }
        _write_csv(os.path.join(args.out_dir, "profile.csv"),
                   ["sigma1", "sigma2", "extrapolated", "prediction"],
                   [(s[0], s[1], float(e), float(q))
                    for s, e, q in zip(prof.directions, prof.extrapolated,
                                       prof.prediction)])
    for which, expect, tol_fit in (("v", -float(state.grid.dim), 0.35),):
        fit = diagnostics.decay_exponent(state, (1.0,) + (0.0,) *
                                         (state.grid.dim - 1), which)
        doc["decay_%s" % which] = {"slope": fit.slope, "stderr": fit.stderr}
    _write_json(os.path.join(args.out_dir, "verify_report.json"), doc)
    checks.write_csv(os.path.join(args.out_dir, "verify_checks.csv"))
    _manifest(args.out_dir, argv)
    return 0 if checks.all_pass else 1


def _load_config(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError("bad config line %r" % line)
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def make_parser():
    top = argparse.ArgumentParser(prog="kpwaves", description=__doc__)
    top.add_argument("--config", help="key=value defaults file; "
                                      "explicit flags win")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", default="out")
        p.add_argument("--dim", type=int, default=2)
        p.add_argument("--rng-seed", type=int, default=0)

    pk = sub.add_parser("kernel", help="kernel values and asymptotic checks")
    common(pk)
    pk.add_argument("--which", choices=sorted(_WHICH), default="K0")
    pk.add_argument("--limit-check", action="store_true")
    pk.add_argument("--limit-radius", type=float, default=100.0)
    pk.add_argument("--decay-fit", action="store_true")
    pk.add_argument("--singularity-fit", action="store_true")
    pk.add_argument("--riesz-check", action="store_true")
    pk.add_argument("--axis", type=int, default=1)
    pk.add_argument("--sigma", default="1,0")
    pk.add_argument("--points", help="semicolon-separated points 'x1,x2;...'")
    pk.add_argument("--fit-rmin", type=float, default=50.0)
    pk.add_argument("--fit-rmax", type=float, default=500.0)
    pk.add_argument("--abs-tol", type=float, default=1e-8)
    pk.add_argument("--rel-tol", type=float, default=1e-6)
    pk.set_defaults(func=cmd_kernel)

    ps = sub.add_parser("solve", help="compute a solitary wave")
    common(ps)
    ps.add_argument("--p", default="1/1")
    ps.add_argument("--grid", type=int, default=512)
    ps.add_argument("--box", type=float, default=40.0)
    ps.add_argument("--seed", default="gaussian-bump")
    ps.add_argument("--max-iter", type=int, default=2000)
    ps.add_argument("--tol", type=float, default=1e-12)
    ps.add_argument("--residual-target", type=float, default=1e-8)
    ps.add_argument("--name", default="wave")
    ps.set_defaults(func=cmd_solve)

    pv = sub.add_parser("verify", help="diagnostics for a stored wave")
    common(pv)
    pv.add_argument("wavefile")
    pv.add_argument("--profile", action="store_true")
    pv.add_argument("--directions", type=int, default=32)
    pv.add_argument("--tol-pohozaev", type=float, default=2e-2)
    pv.add_argument("--tol-ratio", type=float, default=1e-2)
    pv.add_argument("--tol-profile", type=float, default=5e-2)
    pv.set_defaults(func=cmd_verify)

    pr = sub.add_parser("riesz", help="composed-Riesz identity residuals")
    common(pr)
    pr.add_argument("--sigma", default=None)
    pr.set_defaults(func=cmd_riesz)
    top._kp_subparsers = {"kernel": pk, "solve": ps, "verify": pv,
                          "riesz": pr}
    return top


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    # pre-scan for --config so file values become defaults that flags override
    try:
        probe, _ = parser.parse_known_args(argv)
    except SystemExit:
        raise
    args = None
    if getattr(probe, "config", None):
        try:
            defaults = _load_config(probe.config)
        except (OSError, ValueError) as exc:
            print("bad config file: %s" % exc, file=sys.stderr)
            return 2
        parser.set_defaults(**defaults)
        for sub_parser in parser._kp_subparsers.values():
            sub_parser.set_defaults(**defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        os.makedirs(args.out_dir, exist_ok=True)
    except OSError as exc:
        print("cannot create out dir: %s" % exc, file=sys.stderr)
        return 2
    try:
        return args.func(args, argv)
    except (ValueError, grids.FieldFormatError) as exc:
        print("%s: %s" % (args.command, exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
