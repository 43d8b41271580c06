"""Command line front end: ``wavhelm {cond,galerkin,adaptive,basis,lemmas}``.

Every command prints CSV on stdout (or writes it with ``--out`` together with
a JSON manifest).  Exit codes: 0 success, 1 failed numerical check,
2 invalid flags, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3
FMT = "{:.5e}"


class UsageError(ValueError):
    pass


def configure_threads() -> int | None:
    """Honour ``WAVHELM_THREADS`` for numba (BLAS only if set before numpy loads)."""
    raw = os.environ.get("WAVHELM_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"WAVHELM_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError("WAVHELM_THREADS must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n


def parse_levels(text: str) -> list[int]:
    """``"6"`` -> [6]; ``"1..8"`` -> [1, ..., 8]."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}") from exc
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}")
    return list(range(lo, hi + 1))


def _num(x) -> str:
    return FMT.format(x)


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else _num(c) if isinstance(c, float)
                              else str(c) for c in row))
    return "\n".join(lines) + "\n"


# commands --------------------------------------------------------------------

def cmd_cond(args) -> tuple[str, int]:
    from .basis1d import BasisSpec1D
    from .solver import condition_number
    from .tensor_operator import HelmholtzOperator

    rows, code = [], EXIT_OK
    for s in args.levels:
        op = HelmholtzOperator(args.eps, args.a, args.dim,
                               BasisSpec1D(args.j0, s, ortho=args.ortho,
                                           ortho_method=args.ortho_method))
        est = condition_number(op, tol=args.tol, maxit=args.maxit)
        if not est.converged:
            code = EXIT_NOCONV
        rows.append([s, op.size, float(est.lmin), float(est.lmax), float(est.cond)])
    return _csv(["s", "N", "lambda_min", "lambda_max", "cond"], rows), code


def cmd_galerkin(args) -> tuple[str, int]:
    from .basis1d import BasisSpec1D
    from .problems import ManufacturedProblem, error_norms, rhs_load_vector
    from .solver import multilevel_galerkin
    from .tensor_operator import HelmholtzOperator

    p = ManufacturedProblem.boundary_layer(args.dim, args.eps, args.a)
    rows, code = [], EXIT_OK
    for s in args.levels:
        ops = [HelmholtzOperator(args.eps, args.a, args.dim,
                                 BasisSpec1D(args.j0, j, ortho=args.ortho,
                                             ortho_method=args.ortho_method)) for j in range(s + 1)]
        rhs = [rhs_load_vector(p, op) for op in ops]
        rep = multilevel_galerkin(ops, rhs, tol=args.tol_const * 2.0 ** (-2 * s))
        if not rep.converged:
            code = EXIT_NOCONV
        linf, l2 = error_norms(rep.solution, p, ops[-1], grid_exp=args.grid_exp)
        M = f"{rep.equivalent_iterations:.2f}" if args.dim == 2 else "nan"
        its = ";".join(str(m) for m in rep.level_iterations)
        rows.append([s, ops[-1].size, M, linf, l2, its])
    return _csv(["s", "N", "M", "linf", "l2", "level_iterations"], rows), code


def cmd_adaptive(args) -> tuple[str, int]:
    from .adaptive import AdaptiveOperator, adaptive_solve
    from .problems import ManufacturedProblem

    if not 0.0 < args.theta < 1.0:
        raise UsageError("--theta must lie in (0, 1)")
    op = AdaptiveOperator(args.eps, args.a, j0=args.j0, maxlevel=args.maxlevel, dim=2)
    p = ManufacturedProblem.boundary_layer(2, args.eps, args.a)
    res = adaptive_solve(op, p, theta=args.theta, target=args.target,
                         max_cycles=args.max_cycles, max_size=args.max_size,
                         coarsen_every=args.coarsen_every,
                         coarsen_fraction=args.coarsen_fraction)
    rows = [[c, n, float(r), float(li), float(l2)] for c, n, r, li, l2 in res.history]
    code = EXIT_NOCONV if res.status in ("stagnated", "max_cycles") else EXIT_OK
    return _csv(["cycle", "size", "residual", "linf", "l2"], rows), code


def cmd_basis(args) -> tuple[str, int]:
    import numpy as np

    from .basis1d import scaling_function, wavelet_function
    from .spline_kernel import differentiate

    if not 1 <= args.k <= 2**args.j:
        raise UsageError(f"--k must lie in 1..{2**args.j}")
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    phi, psi = scaling_function(args.j, args.k), wavelet_function(args.j, args.k)
    if args.deriv:
        phi, psi = differentiate(phi), differentiate(psi)
    x = np.linspace(0.0, 1.0, args.points)
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(x, phi(x), psi(x))]
    return _csv(["x", "phi", "psi"], rows), EXIT_OK


def cmd_lemmas(args) -> tuple[str, int]:
    import numpy as np

    from .refinement import verify_norm_lemmas

    rep = verify_norm_lemmas(args.jmax)
    rows = []
    for j, v in rep.dual_norms.items():
        rows.append(["dual_m0", j, v, 2.8, str(v <= 2.8)])
    for j, v in rep.compressed_norms.items():
        rows.append(["compressed", j, v, float(2 * np.sqrt(2)), str(v < 2 * np.sqrt(2))])
    rows.append(["exponent", args.jmax, rep.exponent, 0.5, str(rep.exponent < 0.5)])
    ok = rep.dual_ok and rep.compressed_ok and rep.exponent_ok
    return _csv(["check", "j", "value", "bound", "pass"], rows), EXIT_OK if ok else EXIT_CHECK


# parser ----------------------------------------------------------------------

def _positive_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavhelm", description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write CSV here plus a <out>.manifest.json sidecar")
    sub = ap.add_subparsers(dest="command", required=True)

    def coeffs(p):
        p.add_argument("--eps", type=_positive_float, default=1.0)
        p.add_argument("--a", type=_positive_float, default=0.0)
        p.add_argument("--j0", type=int, choices=(2, 3), default=2)
        p.add_argument("--ortho", action="store_true",
                       help="orthogonalize the coarsest scaling functions")
        p.add_argument("--ortho-method", choices=("eigen", "cholesky", "lowdin"),
                       default="eigen")

    p = sub.add_parser("cond", help="condition numbers of the preconditioned operator")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), default=2)
    p.add_argument("--levels", type=parse_levels, required=True, help="s or lo..hi")
    coeffs(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--maxit", type=int, default=5000)
    p.set_defaults(func=cmd_cond)

    p = sub.add_parser("galerkin", help="multilevel Galerkin solve of the layer problem")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), default=2)
    p.add_argument("--levels", type=parse_levels, required=True)
    coeffs(p)
    p.add_argument("--grid-exp", type=int, default=None,
                   help="max-norm grid has 2**G+1 points per axis (default max(J+2, 10))")
    p.add_argument("--tol-const", type=float, default=1e-4,
                   help="per-level stop ||r|| <= C 2**(-2s)")
    p.set_defaults(func=cmd_galerkin)

    p = sub.add_parser("adaptive", help="adaptive solve of the 2D layer problem")
    p.add_argument("--eps", type=_positive_float, default=1.0)
    p.add_argument("--a", type=_positive_float, default=0.0)
    p.add_argument("--j0", type=int, choices=(2, 3), default=2)
    p.add_argument("--maxlevel", type=int, default=10)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--target", type=float, default=1e-6)
    p.add_argument("--max-cycles", type=int, default=200)
    p.add_argument("--max-size", type=int, default=100_000,
                   help="stop (successfully) once the active set reaches this size")
    p.add_argument("--coarsen-every", type=int, default=5)
    p.add_argument("--coarsen-fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_adaptive)

    p = sub.add_parser("basis", help="basis function samples")
    bsub = p.add_subparsers(dest="action", required=True)
    d = bsub.add_parser("dump")
    d.add_argument("--j", type=int, required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--points", type=int, default=2**12 + 1)
    d.add_argument("--deriv", action="store_true")
    d.set_defaults(func=cmd_basis)

    p = sub.add_parser("lemmas", help="numerical checks of the dual-matrix norm bounds")
    lsub = p.add_subparsers(dest="action", required=True)
    v = lsub.add_parser("verify")
    v.add_argument("--jmax", type=int, default=9)
    v.set_defaults(func=cmd_lemmas)
    return ap


def _manifest(args, argv, csv_text: str) -> dict:
    from . import __version__

    flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {
        "command": args.command,
        "argv": list(argv),
        "flags": json.loads(json.dumps(flags, default=str)),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": {os.path.basename(args.out): hashlib.sha256(csv_text.encode()).hexdigest()},
    }


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        configure_threads()
        if getattr(args, "j", 2) < 2:
            raise UsageError("--j must be >= 2")
        if getattr(args, "maxlevel", 10) < getattr(args, "j0", 2):
            raise UsageError("--maxlevel must be >= --j0")
        text, code = args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"wavhelm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        with open(args.out + ".manifest.json", "w") as fh:
            json.dump(_manifest(args, argv, text), fh, indent=2, sort_keys=True)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
