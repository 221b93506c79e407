"""Command-line front end: ``qcgeom classify|verify|frame|normalize``.

Exit codes: 0 success, 1 usage / parse / I/O error, 2 geometric rejection.
Reports are printed as an aligned table, or as JSON with ``--json`` (fixed
key order, floats with 17 significant digits).
"""

import argparse
import math
import sys

import numpy as np

from . import __version__
from .batteries import BATTERIES, run_batteries
from .calibration import calibrate
from .classify import PARABOLIC, assemble_delta, classify, heisenberg_invariants
from .errors import GeometricRejection, InputError, QCGeomError
from .frame import DEFAULT_TOL_SP1, hat_structure
from .surface import load_surface, project_to_surface, pullback_surface, sample_points

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- serialization ------------------------------------------------------------


def _plain(obj):
    """numpy scalars/arrays -> Python scalars/lists."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _fmt_float(x):
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def to_json(obj, indent=0):
    """JSON text with insertion-ordered keys and 17-digit floats."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_quote(k)}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return _quote(str(obj))


def _quote(s):
    out = ['"']
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def render_table(report):
    """Human-readable rendering of a report."""
    lines = []

    def walk(obj, prefix):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(v, f"{prefix}.{k}" if prefix else k)
        elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
            for i, v in enumerate(obj):
                walk(v, f"{prefix}[{i}]")
        else:
            lines.append((prefix, _table_value(obj)))

    walk(report, "")
    width = max(len(k) for k, _ in lines)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in lines)


def _table_value(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        if v and isinstance(v[0], list):
            return "; ".join(" ".join(_table_value(x) for x in row) for row in v)
        return " ".join(_table_value(x) for x in v)
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


# --- report pieces -----------------------------------------------------------


def _new_report(command, args):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "surface": None,
        "outcome": "OK",
        "rng_seed": args.seed,
    }


def _surface_echo(spec):
    return {
        "dim": spec.n_plus_1,
        "rho": spec.to_text().split("\n")[1][len("rho = "):],
        "box_center": spec.box_center,
        "box_halfwidth": spec.box_halfwidth,
    }


def _map_echo(F):
    return {"A": F.A, "omega": F.omega.as_array(), "q0": F.q0}


def _classification(spec, args):
    c = classify(spec, samples=args.samples, rng_seed=args.seed, tol_sp1=args.tol_sp1,
                 tol_const=args.tol_const)
    diagnostics = dict(c.diagnostics)
    if c.label == PARABOLIC:
        inv = heisenberg_invariants(spec, c.points, c.delta, tol_sp1=args.tol_sp1)
        diagnostics["fl0_dev"] = inv["fl0_dev"]
        diagnostics["potential_fit_residual"] = inv["potential_fit_residual"]
    block = {
        "label": c.label,
        "inertia": list(c.inertia),
        "normalizer": _map_echo(c.normalizer),
        "residual": c.residual,
    }
    return c, block, diagnostics


def cmd_classify(spec, args, report):
    c, block, diagnostics = _classification(spec, args)
    report["classification"] = block
    report["diagnostics"] = diagnostics
    report["points_used"] = len(c.points)
    return EXIT_OK


def cmd_normalize(spec, args, report):
    c, block, diagnostics = _classification(spec, args)
    report["classification"] = block
    model = pullback_surface(spec, c.normalizer)
    report["normalized_surface"] = _surface_echo(model)
    report["diagnostics"] = diagnostics
    report["points_used"] = len(c.points)
    return EXIT_OK


def cmd_verify(spec, args, report):
    points = sample_points(spec, args.samples, args.seed)
    results = run_batteries(spec, points, tuple(args.battery), tol_sp1=args.tol_sp1)
    report["batteries"] = [
        {
            "name": r.name,
            "passed": r.passed,
            "skipped": r.skipped,
            "worst_residual": r.worst,
            "checks": [{"name": ch.name, "value": ch.value, "tol": ch.tol, "passed": ch.passed}
                       for ch in r.checks],
            **({"note": r.note} if r.note else {}),
        }
        for r in results
    ]
    report["diagnostics"] = {"worst_residual": max(r.worst for r in results)}
    report["points_used"] = len(points)
    passed = all(r.passed for r in results)
    if not passed:
        report["outcome"] = "Rejected"
        report["message"] = "failed: " + ", ".join(r.name for r in results if not r.passed)
    return EXIT_OK if passed else EXIT_REJECTED


def cmd_frame(spec, args, report):
    try:
        seed = np.array([float(v) for v in args.point.split(",")])
    except ValueError:
        raise UsageError("--point must be comma-separated reals") from None
    if seed.size != spec.dim:
        raise UsageError(f"--point needs {spec.dim} values, got {seed.size}")
    p = project_to_surface(spec, seed)
    frame = hat_structure(spec, p, args.tol_sp1)
    cf = calibrate(frame)
    report["frame"] = {
        "point": p,
        "N": frame.N,
        "eta_hat_pairings": frame.reeb_dirs @ frame.hat_reeb().T,
        "II_H_eigenvalues": np.linalg.eigvalsh(frame.II[3:, 3:]),
        "mu": cf.mu,
        "f": cf.f,
        "S": cf.S,
        "r": cf.r,
        "xi": cf.xi,
        "Delta": assemble_delta(cf),
    }
    report["diagnostics"] = {
        **{k: v for k, v in frame.diagnostics.as_dict().items() if k != "passed"},
        "S_spread": cf.S_spread,
        "r_cross_dev": cf.r_cross_dev,
        "cross_term": cf.cross_term,
    }
    report["points_used"] = 1
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "verify": cmd_verify,
    "frame": cmd_frame,
    "normalize": cmd_normalize,
}


def build_parser():
    parser = _Parser(prog="qcgeom", description="Classify and verify qc-hypersurfaces of H^{n+1}.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-s", "--surface", required=True, help="surface file")
        p.add_argument("--samples", type=int, default=32, help="sample points (default 32)")
        p.add_argument("--seed", type=int, default=1, help="sampling seed (default 1)")
        p.add_argument("--json", action="store_true", help="print the report as JSON")
        p.add_argument("--tol-sp1", type=float, default=DEFAULT_TOL_SP1,
                       help="Sp(1)-invariance tolerance for II on H")
        p.add_argument("--tol-const", type=float, default=1e-6,
                       help="tolerance on the constancy of Delta")
        if name == "verify":
            p.add_argument("--battery", action="append", choices=list(BATTERIES) + ["all"],
                           help="battery to run (repeatable; default all)")
        if name == "frame":
            p.add_argument("--point", required=True,
                           help="comma-separated coordinates, projected onto the surface")
    return parser


def _emit(report, as_json, out):
    report = _plain(report)
    out.write((to_json(report) if as_json else render_table(report)) + "\n")


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR
    if args.command == "verify" and not args.battery:
        args.battery = ["all"]
    if args.samples < 1:
        err.write("error: --samples must be positive\n")
        return EXIT_ERROR
    report = _new_report(args.command, args)
    code = EXIT_OK
    try:
        spec = load_surface(args.surface)
        report["surface"] = _surface_echo(spec)
        code = COMMANDS[args.command](spec, args, report)
    except GeometricRejection as exc:
        report["outcome"] = "Rejected"
        report["error"] = type(exc).__name__
        report["message"] = str(exc)
        report["diagnostics"] = dict(exc.diagnostics or {})
        err.write(f"rejected: {type(exc).__name__}: {exc}\n")
        code = EXIT_REJECTED
    except (QCGeomError, OSError) as exc:
        report["outcome"] = "Error"
        report["error"] = type(exc).__name__
        report["message"] = str(exc)
        err.write(f"error: {args.surface}: {exc}\n")
        code = EXIT_ERROR
    if report["surface"] is None:
        del report["surface"]
    _emit(report, args.json, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
