"""Command line front end: ``ghtorus <command> ...``.

Exit codes: 0 when a report was produced, 2 for invalid input, 3 when a
precision or search budget ran out, 1 for any other analysis failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys as _sys
from fractions import Fraction

import numpy as np

from .conditions import hl_membership, reduction_bound_check
from .diophantine import (
    irrationality_profile,
    profile_csv,
    profile_dict,
    sda_csv,
    sda_dict,
    sda_witness_search,
)
from .errors import BudgetError, GhError, ResonantFrequency, ValidationError
from .expr import compile_array_expr
from .fourier import SpectralField, t_grid
from .gw import GW_FAILS, exact_resonance_certificate, gw_scan
from .model import load_system, window_points
from .solver import (
    BACKWARD,
    DIRECTIONS,
    FORWARD,
    map_certified,
    apply_operator,
    kernel_witness,
    mixed_witness,
    precondition_subsequence,
    solve_mode,
)
from .verdict import classify, emit_report, resonant_members, scan_csv, witness_csv

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3


class NoWitness(GhError):
    """Neither an exact resonance nor a failing lattice scan was found."""


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


def _load(args):
    system = load_system(args.config)
    if args.xi_max is not None:
        system = system.with_window(xi_max=args.xi_max)
    if args.grid is not None:
        system = system.with_tolerances(grid_points=args.grid)
    return system


def _text_lines(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in pairs)


# --- commands ------------------------------------------------------------------------
# each returns (printed output, {file name: content})


def cmd_classify(args):
    v = classify(_load(args))
    files = emit_report(v, "csv-bundle")
    if args.format == "json":
        return files["verdict.json"], files
    if args.format == "text":
        return emit_report(v, "text"), files
    return files.get("witness.csv") or files.get("scan.csv") or files["verdict.json"], files


def cmd_gw_scan(args):
    system = _load(args)
    target = system if system.is_constant else system.normal_form()
    report = gw_scan(target)
    files = {"scan.json": _dump(report.to_dict()), "scan.csv": scan_csv(report)}
    if args.format == "json":
        return files["scan.json"], files
    if args.format == "csv":
        return files["scan.csv"], files
    text = _text_lines([
        ("system", "as given" if system.is_constant else "averaged coefficients"),
        ("trend", report.verdict_trend),
        ("min |L|", repr(report.min_value)),
        ("fitted C", repr(report.fitted_c)),
        ("fitted M", repr(report.fitted_m)),
        ("worst sequence", " ".join(str(r.xi) for r in report.worst_sequence) or "-"),
    ])
    return text, files


def cmd_dio(args):
    if args.eta is None and len(args.values) == 1:
        prof = irrationality_profile(args.values[0], args.depth)
        payload, table = profile_dict(prof), profile_csv(prof)
        summary = [("liouville trend", prof.liouville_trend), ("best exponent", prof.best_exponent),
                   ("rational", prof.rational)]
    else:
        wit = sda_witness_search(args.values, args.eta or 1, args.q_budget, depth=args.depth)
        payload, table = sda_dict(wit), sda_csv(wit)
        summary = [("eta", wit.eta), ("trend", wit.verdict_trend), ("samples", len(wit.sequence))]
    files = {"dio.json": _dump(payload), "dio.csv": table}
    if args.format == "json":
        return files["dio.json"], files
    if args.format == "csv":
        return table, files
    return _text_lines(summary), files


def _rhs_field(system, text):
    n, N, G = system.n, system.N, system.tolerances.grid_points
    t_names = ["t"] if n == 1 else [f"t{i + 1}" for i in range(n)]
    xi_names = ["xi"] if N == 1 else [f"xi{i + 1}" for i in range(N)]
    fn = compile_array_expr(text, t_names + xi_names, "rhs")
    grids = np.meshgrid(*([t_grid(G)] * n), indexing="ij")
    freqs, slices = [], []
    for xi in window_points(N, system.window.xi_max).tolist():
        arrays = dict(zip(t_names, grids))
        arrays.update({name: np.full(grids[0].shape, float(v)) for name, v in zip(xi_names, xi)})
        freqs.append(tuple(xi))
        slices.append(np.asarray(fn(**arrays), dtype=complex))
    return SpectralField(n, N, G, tuple(freqs), tuple(slices))


def cmd_solve(args):
    system = _load(args)
    if not 0 <= args.operator < system.n:
        raise ValidationError("operator", f"index in [0, {system.n}) required")
    f = _rhs_field(system, args.rhs)
    rows, solved = [], []
    for xi, s in zip(f.frequencies, f.slices):
        try:
            u, info = solve_mode(args.operator, system, s, xi, variant=args.variant, return_info=True)
        except ResonantFrequency:
            rows.append({"xi": list(xi), "status": "RESONANT"})
            continue
        solved.append((xi, s, u, info))
    if solved:
        u_field = SpectralField(f.n, f.N, f.grid_points, tuple(x for x, *_ in solved), tuple(u for _, _, u, _ in solved))
        back = apply_operator(args.operator, system, u_field)
        for (xi, s, u, info), lu in zip(solved, back.slices):
            rows.append({
                "xi": list(xi),
                "status": "SOLVED",
                "gap": info["prefactor"],
                "tags": info["tags"],
                "solutionSup": float(np.abs(u).max()),
                "residualSup": float(np.abs(lu - s).max()),
            })
    rows.sort(key=lambda r: (max(abs(v) for v in r["xi"]), r["xi"]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi", "status", "gap", "tags", "solution_sup", "residual_sup"])
    for r in rows:
        w.writerow([" ".join(map(str, r["xi"])), r["status"], r.get("gap", ""), " ".join(r.get("tags", [])),
                    r.get("solutionSup", ""), r.get("residualSup", "")])
    worst = max((r["residualSup"] for r in rows if "residualSup" in r), default=0.0)
    payload = {"operator": args.operator, "variant": args.variant, "maxResidual": worst, "rows": rows}
    files = {"solve.json": _dump(payload), "solve.csv": buf.getvalue()}
    if args.format == "json":
        return files["solve.json"], files
    if args.format == "csv":
        return files["solve.csv"], files
    resonant = sum(r["status"] == "RESONANT" for r in rows)
    return _text_lines([("operator", args.operator), ("solved", len(rows) - resonant),
                        ("resonant", resonant), ("max residual", repr(worst))]), files


def cmd_reduce(args):
    system = _load(args)
    ops = []
    for j in range(system.n):
        ops.append({
            "operator": j,
            "membership": hl_membership(j, system).to_dict(),
            "reductionBound": reduction_bound_check(j, system).to_dict(),
        })
    certs = {d: map_certified(system, d) for d in DIRECTIONS}
    payload = {"operators": ops, "normalFormCertified": certs}
    files = {"reduce.json": _dump(payload)}
    if args.format == "json":
        return files["reduce.json"], files
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["operator", "inH", "inL", "clause", "ThetaHat", "reductionTrend", "fittedKappa"])
        for o in ops:
            m, r = o["membership"], o["reductionBound"]
            w.writerow([o["operator"], m["inH"], m["inL"], m["clause"] or "", m["ThetaHat"], r["trend"], r["fittedKappa"]])
        files["reduce.csv"] = buf.getvalue()
        return files["reduce.csv"], files
    pairs = []
    for o in ops:
        m, r = o["membership"], o["reductionBound"]
        pairs.append((f"operator {o['operator']}",
                      f"inH={m['inH']} inL={m['inL']} clause={m['clause']} reduction={r['trend']}"))
    pairs += [(f"map {d}", "certified" if ok else "uncertified") for d, ok in certs.items()]
    return _text_lines(pairs), files


def build_witness(system):
    """Kernel witness from an exact resonance progression, else a mixed witness from the averaged scan."""
    cert = exact_resonance_certificate(system)
    if cert is not None:
        return kernel_witness(system, resonant_members(cert, sys=system))
    target = system if system.is_constant else system.normal_form()
    scan = gw_scan(target)
    if scan.verdict_trend != GW_FAILS:
        raise NoWitness(f"no exact resonance and the lattice scan reports {scan.verdict_trend}")
    return mixed_witness(system, precondition_subsequence(system, scan.witness_candidates()))


def cmd_witness(args):
    system = _load(args)
    bundle = build_witness(system)
    failures = bundle.invariant_failures(system.tolerances.quad_tol)
    payload = dict(bundle.to_dict(), invariantFailures=failures)
    files = {"witness.json": _dump(payload), "witness.csv": witness_csv(bundle)}
    if args.format == "json":
        return files["witness.json"], files
    if args.format == "csv":
        return files["witness.csv"], files
    return _text_lines([
        ("construction", bundle.construction),
        ("frequencies", len(bundle.field)),
        ("field decay", bundle.decay.classification if bundle.decay else "-"),
        ("invariants", "hold" if not failures else "; ".join(failures)),
    ]), files


# --- parser --------------------------------------------------------------------------


def _exact_int(text):
    """Integer from ``1e30``, ``10**30`` or plain text without float rounding."""
    try:
        if "**" in text:
            base, power = text.split("**")
            return int(base) ** int(power)
        value = Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"integer expected, got {text!r}") from None
    if value.denominator != 1:
        raise argparse.ArgumentTypeError(f"integer expected, got {text!r}")
    return int(value)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--xi-max", type=int, help="override the frequency window radius")
    common.add_argument("--grid", type=int, help="override the number of t grid points")
    common.add_argument("--out", help="directory for report files")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")

    parser = argparse.ArgumentParser(prog="ghtorus", description="Global hypoellipticity diagnostics on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_text in (
        ("classify", cmd_classify, "run the rule chain and report a verdict"),
        ("gw-scan", cmd_gw_scan, "lattice lower-bound scan of the (averaged) system"),
        ("reduce", cmd_reduce, "class memberships and normal-form certification"),
        ("witness", cmd_witness, "construct a singular solution"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("config")
        p.set_defaults(func=fn)

    p = sub.add_parser("solve", parents=[common], help="solve L_j u = f mode by mode")
    p.add_argument("config")
    p.add_argument("rhs", help="expression in t (or t1..tn) and xi (or xi1..xiN)")
    p.add_argument("--operator", type=int, default=0)
    p.add_argument("--variant", choices=(BACKWARD, FORWARD), default=BACKWARD)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("dio", parents=[common], help="Diophantine profile of one value or a vector")
    p.add_argument("values", nargs="+", help="numbers or expressions such as 'root(3/2, 4)*liouville(4)'")
    p.add_argument("--eta", type=int, help="power for simultaneous approximation")
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--q-budget", type=_exact_int, default=10**30)
    p.set_defaults(func=cmd_dio)
    return parser


def _write(out_dir, files):
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        output, files = args.func(args)
        if args.out:
            _write(args.out, files)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=_sys.stderr)
        return EXIT_INVALID
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=_sys.stderr)
        return EXIT_BUDGET
    except GhError as exc:
        print(f"{type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"cannot read or write: {exc}", file=_sys.stderr)
        return EXIT_INVALID
    _sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
