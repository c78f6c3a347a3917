"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import math
import sys

from . import __version__
from .eigen import solve_spectrum
from .errors import NumericalError, ValidationError
from .metrics import PairingMode, bound_check, fmt, pair_and_score, report_csv
from .operators import FourierBasis, LogWindow, build_generator, constrain_kill, constrain_perturb
from .scan import ScanConfig, sweep, write_spectrum_csv
from .specfun import sieve_mangoldt
from .weil import Fejer, build_xi, verify_explicit_formula
from .zeros import load_zeros, verify_first_zeros


def _open_out(path):
    if path and path != "-":
        return open(path, "w", newline="")
    return contextlib.nullcontext(sys.stdout)


def _spectrum(kappa: int, builder: str, solver: str, xi_method: str, tol: float):
    basis = FourierBasis(LogWindow(float(kappa)), kappa)
    ell = basis.window.half_width
    limit = kappa * kappa if xi_method == "gram" else kappa
    xi = build_xi(ell, kappa, sieve_mangoldt(limit), tol, xi_method)
    make = constrain_kill if builder == "kill" else constrain_perturb
    op = make(build_generator(basis), xi.unit(), basis)
    return solve_spectrum(op, solver)


def cmd_sieve(args) -> int:
    table = sieve_mangoldt(args.limit)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "lambda_n"])
        for n, lam in table.entries:
            w.writerow([n, fmt(lam)])
    print(f"# prime powers: {len(table)}, psi({args.limit}) = {fmt(table.chebyshev_psi(args.limit))}", file=sys.stderr)
    return 0


def cmd_xi(args) -> int:
    ell = math.log(args.lam)
    if not ell > 0:
        raise ValidationError(f"lambda must exceed 1, got {args.lam}")
    limit = math.floor(math.exp(2 * ell if args.method == "gram" else ell))
    xi = build_xi(ell, args.n, sieve_mangoldt(limit), args.tol, args.method)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "xi"])
        for k, v in zip(xi.indices, xi.components):
            w.writerow([int(k), fmt(v)])
    return 0


def cmd_spectrum(args) -> int:
    spec = _spectrum(args.kappa, args.builder, args.solver, args.xi_method, args.tol)
    with _open_out(args.out) as fh:
        write_spectrum_csv(fh, spec.eigenvalues)
    print(f"# solver={spec.solver} fallback={spec.fallback} nu0={spec.nu0:.3e}", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    zeros = load_zeros(args.zeros)
    spec = _spectrum(args.kappa, args.builder, args.solver, args.xi_method, args.tol)
    count = args.count or min(args.kappa, zeros.count)
    report = pair_and_score(spec, zeros, PairingMode.parse(args.pairing), count, args.kappa, args.kappa)
    bound, ok = bound_check(report)
    with _open_out(args.out) as fh:
        fh.write(report_csv(report))
    print(
        f"# pairing={report.pairing.value} count={count} epsilon={fmt(report.epsilon)} "
        f"uniform={fmt(report.uniform)} bound={fmt(bound)} bound_satisfied={ok} "
        f"uniform_ln_kappa={fmt(report.kappa_product)}",
        file=sys.stderr,
    )
    return 0


def cmd_verify_ef(args) -> int:
    zeros = load_zeros(args.zeros)
    f = Fejer(args.window)
    mangoldt = sieve_mangoldt(math.floor(math.exp(args.window)) + 1)
    rep = verify_explicit_formula(f, zeros, args.count or zeros.count, mangoldt, args.tol)
    for name in ("weil", "zero_side", "difference", "tail_bound", "quadrature_error"):
        print(f"{name},{fmt(getattr(rep, name))}")
    print(f"passed,{rep.passed}")
    return 0 if rep.passed else 1


def cmd_verify_zeros(args) -> int:
    zeros = load_zeros(args.zeros)
    rep = verify_first_zeros(zeros, args.count, args.tol)
    print("index,ordinate,z_below,z_above,ok")
    for c in rep.checks:
        print(f"{c.index},{fmt(c.ordinate)},{fmt(c.z_below)},{fmt(c.z_above)},{c.ok}")
    if not rep.passed:
        print(f"# no sign change bracketing zero {rep.failed_index}", file=sys.stderr)
        return 1
    return 0


def cmd_scan(args) -> int:
    cfg = ScanConfig(
        kappa_from=args.kappa_from,
        kappa_to=args.kappa_to,
        kappa_step=args.step,
        scan_radius=args.radius,
        pairing=PairingMode.parse(args.pairing).value,
        builder=args.builder,
        solver=args.solver,
        xi_method=args.xi_method,
        zeros_path=args.zeros,
        max_zeros=args.max_zeros,
        tol=args.tol,
        output_dir=args.out_dir,
        workers=args.workers,
        long_running=args.long,
        dump_spectra=args.dump_spectra,
    )
    result = sweep(cfg)
    print(f"# wrote {result.csv_path} ({len(result.rows)} rows)", file=sys.stderr)
    for p in result.figure_paths:
        print(f"# wrote {p}", file=sys.stderr)
    if result.failures:
        print(f"# {len(result.failures)} points failed; see failures.log", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zetaspec", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sieve", help="tabulate the von Mangoldt function")
    s.add_argument("--limit", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sieve)

    def operator_opts(sp):
        sp.add_argument("--kappa", type=int, required=True, help="lambda = N = kappa")
        sp.add_argument("--builder", choices=["kill", "perturb"], default="kill")
        sp.add_argument("--solver", choices=["dense", "secular"], default="secular")
        sp.add_argument("--xi-method", choices=["riesz", "gram"], default="riesz")
        sp.add_argument("--tol", type=float, default=1e-9)

    s = sub.add_parser("xi", help="truncated Weil vector")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--method", choices=["riesz", "gram"], default="riesz")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--out")
    s.set_defaults(func=cmd_xi)

    s = sub.add_parser("spectrum", help="spectrum of the constrained operator")
    operator_opts(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("compare", help="pair a spectrum with zeros and score it")
    operator_opts(s)
    s.add_argument("--zeros", help="zeros file (default: bundled 1000 zeros)")
    s.add_argument("--pairing", choices=["sorted", "nearest"], default="sorted")
    s.add_argument("--count", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("verify-ef", help="explicit-formula check on a Fejer window")
    s.add_argument("--zeros")
    s.add_argument("--window", type=float, default=2.0, help="Fejer half width a")
    s.add_argument("--count", type=int)
    s.add_argument("--tol", type=float, default=1e-2)
    s.set_defaults(func=cmd_verify_ef)

    s = sub.add_parser("verify-zeros", help="Hardy Z sign changes at table ordinates")
    s.add_argument("--zeros")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--tol", type=float, default=1e-4)
    s.set_defaults(func=cmd_verify_zeros)

    s = sub.add_parser("scan", help="kappa sweep with local extremum scans")
    s.add_argument("--from", dest="kappa_from", type=int, default=50)
    s.add_argument("--to", dest="kappa_to", type=int, default=1000)
    s.add_argument("--step", type=int, default=50)
    s.add_argument("--radius", type=int, default=10)
    s.add_argument("--zeros")
    s.add_argument("--max-zeros", type=int, default=1000)
    s.add_argument("--pairing", choices=["sorted", "nearest"], default="nearest")
    s.add_argument("--builder", choices=["kill", "perturb"], default="kill")
    s.add_argument("--solver", choices=["dense", "secular"], default="secular")
    s.add_argument("--xi-method", choices=["riesz", "gram"], default="riesz")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--long", action="store_true", help="allow kappa beyond the desk cap of 1000")
    s.add_argument("--dump-spectra", action="store_true")
    s.add_argument("--out-dir", default="scan-out")
    s.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure in {exc.stage}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
