"""Command-line front end.

Exit status: 0 success, 1 certification failure, 2 usage error.  Angles on
the command line are in degrees unless ``--radians`` is given; design files
use units of pi.  CSV output uses 17 significant digits and a versioned
header comment naming the units.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from .geometry import DesignParams
from .numerics.ball import parse_rational

EXIT_OK, EXIT_CERT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational or decimal: {text!r}") from exc


def _positive_rational(text: str) -> Fraction:
    v = _rational(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _load_params(args) -> DesignParams:
    if args.config is None:
        return DesignParams()
    try:
        return DesignParams.from_file(args.config)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {args.config}") from exc
    except ValueError as exc:
        raise UsageError(f"bad config {args.config}: {exc}") from exc


def _angles(values, radians: bool) -> tuple:
    vals = [float(v) for v in values]
    return tuple(vals) if radians else tuple(math.radians(v) for v in vals)


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


# -- commands -----------------------------------------------------------------


def cmd_igm(args) -> int:
    from .igm import NoRealModeError, SolutionAtInfinityError, solve_igm

    params = _load_params(args)
    chi = _angles(args.chi, args.radians)
    for c in chi[:2]:
        if abs(c) >= math.pi:
            raise UsageError("roll and pitch must lie in (-180, 180) degrees")
    o = tuple(math.tan(c / 2) for c in chi)
    try:
        ws = solve_igm(o, params)
    except (NoRealModeError, SolutionAtInfinityError) as exc:
        print(f"igm: {exc}", file=sys.stderr)
        return EXIT_CERT
    rows = []
    for lab in ws.j:
        th = ws.theta_degrees(lab)
        rows.append({"label": lab, "theta_deg": list(th), "j": [float(x) for x in ws.j[lab]]})
    if args.format == "json":
        _emit(json.dumps({"version": 1, "units": "theta in degrees, j = tan(theta/2)",
                          "chi_deg": [math.degrees(c) for c in chi], "modes": rows}, indent=1) + "\n", args.out)
    else:
        lines = ["# igm v1; theta in degrees; j = tan(theta/2)", "label,theta1_deg,theta2_deg,theta3_deg,j1,j2,j3"]
        for r in rows:
            lines.append(",".join([r["label"], *map(_fmt, r["theta_deg"]), *map(_fmt, r["j"])]))
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_fgm(args) -> int:
    from .kantorovich import CertificationError, certified_fgm, track_path

    params = _load_params(args)
    theta = _angles(args.theta, args.radians)
    try:
        if args.track:
            pts = track_path([(math.pi / 2,) * 3, theta], sigma=args.sigma, max_step=float(args.max_step),
                             params=params)
            o, cert = pts[-1].o, pts[-1].cert
            extra = f"# tracked in {len(pts)} certified points\n"
        else:
            from .numerics.ball import boxed

            j = tuple(boxed(math.tan(t / 2), args.sigma) for t in theta) if args.sigma else \
                tuple(math.tan(t / 2) for t in theta)
            res = certified_fgm(j, params)
            o, cert = res.o, res.cert
            extra = ""
    except CertificationError as exc:
        print(f"fgm: {exc}", file=sys.stderr)
        return EXIT_CERT
    lines = ["# fgm v1; o = tan(chi/2); chi in degrees", "axis,o_mid,o_rad,chi_deg"]
    for k, b in enumerate(o, 1):
        lines.append(f"{k},{_fmt(b.mid)},{_fmt(b.rad)},{_fmt(math.degrees(2 * math.atan(float(b.mid))))}")
    lines.append(f"# kantorovich product {cert.product:.6g} (A0 {cert.A0:.6g}, B0 {cert.B0:.6g}, C {cert.C:.6g})")
    _emit(extra + "\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_pave(args) -> int:
    from .igm import PavingError, pave_prescribed_workspace

    params = _load_params(args)
    try:
        res = pave_prescribed_workspace(params, n=args.n, r_o=args.r_o, sigma_o3=args.r_o3,
                                        half=args.half, backend=args.backend)
    except PavingError as exc:
        print(f"pave: {exc}", file=sys.stderr)
        return EXIT_CERT
    if args.format == "json":
        _emit(json.dumps({"version": 1, "stops": res.stops.rows()}, indent=1) + "\n", args.out)
    else:
        _emit(res.stops.to_csv(), args.out)
    if args.log:
        _emit(res.cell_log() + "\n", args.log)
    return EXIT_OK


def cmd_scan_type1(args) -> int:
    from .variety import scan_workspace

    params = _load_params(args)
    rep = scan_workspace(params, n=args.n, chi_max_deg=args.chi_max, backend=args.backend)
    if args.out:
        _emit(rep.to_csv(), args.out)
    mins = ", ".join(f"{x:.6g}" for x in rep.min_delta_mig())
    print(f"{rep.n}x{rep.n} cells: {rep.verdict}; min discriminant mignitudes ({mins})")
    for note in rep.notes:
        print(f"note: {note}")
    if args.zeta_map:
        from .gci import type1_map

        m = type1_map(params, n=args.n, threshold=args.threshold, chi1_max_deg=args.chi_max)
        _emit(m.to_csv(), args.zeta_map)
    return EXIT_OK if rep.clear else EXIT_CERT


def cmd_scan_kanto(args) -> int:
    from .kantorovich import certify_workspace_scan

    params = _load_params(args)
    rep = certify_workspace_scan(params, step=args.step, sigma=args.sigma, chi_max_deg=args.chi_max,
                                 workers=args.workers, backend=args.backend)
    if args.out:
        _emit(rep.to_csv(), args.out)
    print(rep.summary())
    for o1, o2, p in rep.failures()[:10]:
        print(f"failed at o = ({o1:.17g}, {o2:.17g}), product {p:.6g}")
    return EXIT_OK if rep.all_passed else EXIT_CERT


def cmd_margin(args) -> int:
    from .variety import DEFAULT_SCHEDULE, margin_search

    params = _load_params(args)
    schedule = tuple(float(r) for r in args.schedule) if args.schedule else DEFAULT_SCHEDULE
    rep = margin_search(params, schedule, n=args.n, chi_max_deg=args.chi_max, method=args.method,
                        backend=args.backend)
    lines = ["# margin v1; radius in rad on every fabrication parameter", "radius,verdict,min_lower"]
    lines += rep.lines()
    _emit("\n".join(lines) + "\n", args.out)
    print(f"max safe radius: {rep.max_safe}; first failing radius: {rep.first_failing}", file=sys.stderr)
    return EXIT_OK if rep.max_safe is not None else EXIT_CERT


def cmd_gci(args) -> int:
    from .gci import gci

    params = _load_params(args)
    res = gci(params, n=args.grid, chi_max_deg=args.chi_max)
    print(f"GCI = {res.gci:.6f}, zeta_min = {res.zeta_min:.6f}, zeta_max = {res.zeta_max:.6f}")
    if args.out:
        _emit(res.to_csv(), args.out)
    return EXIT_OK


def cmd_emit_variety(args) -> int:
    from .polysys import dump_system
    from .variety import computed_wc, computed_winf, reference_wc, reference_winf

    params = _load_params(args)
    if args.computed or args.config is not None:
        wc, wi = computed_wc(params), computed_winf(params)
    else:
        wc, wi = reference_wc(), reference_winf()
    head = "# {} v1; coeff : (e_j1, e_j2, e_j3, e_o1, e_o2, e_o3)\n"
    text = ""
    if args.which in ("wc", "both"):
        text += head.format("critical-value polynomials") + dump_system(wc)
    if args.which in ("winf", "both"):
        text += ("\n" if text else "") + head.format("leading coefficients") + dump_system(wi)
    _emit(text, args.out)
    return EXIT_OK


def selftest(params: DesignParams = DesignParams(), out=None) -> bool:
    """Golden-value checks; prints one PASS/FAIL line per item."""
    from .geometry import PiAngle, constraint_f
    from .igm import REFERENCE_STOPS, joint_stop_degrees, pave_prescribed_workspace, solve_igm
    from .numerics.algebraic import SQRT2
    from .polysys import canonical_system, reference_system
    from .variety import eval_wc, verify_reference

    out = out or sys.stdout
    items = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        items.append(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)

    def eq_f():
        f = constraint_f((PiAngle(Fraction(1, 2)),) * 3, (PiAngle(0),) * 3, params)
        return all(x == 0 for x in f), f"f = {tuple(str(x) for x in f)}"

    def equilibrium():
        j = solve_igm((0, 0, 0), params)["+++"]
        return tuple(j) == (1, 1, 1), f"(+++) j = {tuple(str(x) for x in j)}"

    def reference():
        sys_ = canonical_system(params)
        ref = reference_system()
        same = [a == b for a, b in zip(sys_, ref)]
        return all(same), f"per-equation match {same}"

    def variety():
        v = verify_reference()
        o1 = SQRT2 - 1
        z = eval_wc((o1, 0, 0), params)[0]
        ok = all(v["wc"]) and all(v["winf"]) and z == 0
        return ok, f"reference/recomputed {v}; first critical value at o1 = sqrt(2) - 1: {z}"

    def stops():
        res = pave_prescribed_workspace(params)
        degs = joint_stop_degrees(res.stops)
        return degs == REFERENCE_STOPS, f"stops {degs}"

    check("reference posture residual", eq_f)
    check("reference posture (+++) leaf", equilibrium)
    check("reference system match", reference)
    check("variety polynomials", variety)
    check("joint stops", stops)
    return all(items)


def cmd_selftest(args) -> int:
    params = _load_params(args)
    return EXIT_OK if selftest(params) else EXIT_CERT


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spmcert", description="Certified kinematics of a 3-DOF spherical parallel manipulator.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="design parameter file (key = value, angles in units of pi)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    common.add_argument("--backend", choices=("cython", "python"), default=None,
                        help="ball kernel (default: compiled if available)")
    common.add_argument("--workers", type=_positive_int, default=1, help="worker processes for scans")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("igm", parents=[common], help="all 8 working modes at one orientation")
    s.add_argument("--chi", nargs=3, type=float, required=True, metavar=("ROLL", "PITCH", "YAW"))
    s.add_argument("--radians", action="store_true", help="angles in rad instead of degrees")
    s.set_defaults(fn=cmd_igm)

    s = sub.add_parser("fgm", parents=[common], help="certified forward model at joint angles")
    s.add_argument("--theta", nargs=3, type=float, required=True, metavar=("T1", "T2", "T3"))
    s.add_argument("--radians", action="store_true", help="angles in rad instead of degrees")
    s.add_argument("--sigma", type=int, default=0, help="box joints to this many bits (0: point joints)")
    s.add_argument("--track", action="store_true", help="track from the reference posture")
    s.add_argument("--max-step", type=_positive_rational, default=Fraction(1, 20), help="joint step for --track (rad)")
    s.set_defaults(fn=cmd_fgm)

    s = sub.add_parser("pave", parents=[common], help="ball paving of W* and joint stops")
    s.add_argument("--n", type=_positive_int, default=35, help="cells per axis")
    s.add_argument("--r-o", type=_rational, default=Fraction(5, 900), help="cell radius on o1, o2")
    s.add_argument("--r-o3", type=_rational, default=Fraction(1, 10000), help="radius on o3")
    s.add_argument("--half", type=_rational, default=Fraction(177, 1000), help="half width of the lattice in o")
    s.add_argument("--log", help="per-cell JSON log path")
    s.set_defaults(fn=cmd_pave)

    s = sub.add_parser("scan-type1", parents=[common], help="discriminant clearance scan of W*")
    s.add_argument("--n", type=_positive_int, default=35)
    s.add_argument("--chi-max", type=float, default=20.0, help="workspace bound (degrees)")
    s.add_argument("--zeta-map", help="also write the zeta(B) map CSV here")
    s.add_argument("--threshold", type=float, default=0.25)
    s.set_defaults(fn=cmd_scan_type1)

    s = sub.add_parser("scan-kanto", parents=[common], help="Kantorovich test over W*(o3 = 0)")
    s.add_argument("--step", type=_positive_rational, default=Fraction(1, 100))
    s.add_argument("--sigma", type=_positive_int, default=9)
    s.add_argument("--chi-max", type=float, default=20.0, help="workspace bound (degrees)")
    s.set_defaults(fn=cmd_scan_kanto)

    s = sub.add_parser("margin", parents=[common], help="largest fabrication radius keeping W* clear")
    s.add_argument("--schedule", nargs="+", type=_rational, help="radii to try (rad)")
    s.add_argument("--method", choices=("bisect", "direct"), default="bisect")
    s.add_argument("--n", type=_positive_int, default=35, help="cells per axis for --method direct")
    s.add_argument("--chi-max", type=float, default=20.0, help="workspace bound (degrees)")
    s.set_defaults(fn=cmd_margin)

    s = sub.add_parser("gci", parents=[common], help="global conditioning index")
    s.add_argument("--grid", type=_positive_int, default=80)
    s.add_argument("--chi-max", type=float, default=20.0, help="workspace bound (degrees)")
    s.set_defaults(fn=cmd_gci)

    s = sub.add_parser("emit-variety", parents=[common], help="print the discriminant variety polynomials")
    s.add_argument("--which", choices=("wc", "winf", "both"), default="both")
    s.add_argument("--computed", action="store_true", help="recompute instead of the shipped reference")
    s.set_defaults(fn=cmd_emit_variety)

    s = sub.add_parser("selftest", parents=[common], help="golden-value checks")
    s.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"spmcert: {exc}", file=sys.stderr)
        return EXIT_USAGE


run = main

if __name__ == "__main__":
    sys.exit(main())
