"""Command-line front end.

Exit codes: 0 success / feasible, 1 usage, I/O or parse error,
2 infeasible or rejected input, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import hardy, knob_group
from .errors import UnistochasticError, ValidationError
from .linalg_core import transition_probability_matrix
from .modality import VALIDATION_TOL, ProbabilityMatrix, validate_bistochastic
from .phase_solver import (FEASIBLE, INCONCLUSIVE, INFEASIBLE, SolverConfig, certify_n3,
                           solve_phases)

EXIT_OK, EXIT_USAGE, EXIT_REJECTED, EXIT_INCONCLUSIVE = 0, 1, 2, 3
_STATUS_EXIT = {FEASIBLE: EXIT_OK, INFEASIBLE: EXIT_REJECTED, INCONCLUSIVE: EXIT_INCONCLUSIVE}


class UsageError(Exception):
    """Bad arguments, unreadable files or malformed JSON (exit code 1)."""

    def __init__(self, message, **detail):
        super().__init__(message)
        self.detail = detail


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _read_json(path):
    if path is None:
        raise UsageError("--input is required")
    try:
        with open(path) if path != "-" else sys.stdin as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}", path=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc.msg}", path=path,
                         line=exc.lineno, column=exc.colno) from exc


def _read_matrix(path) -> ProbabilityMatrix:
    try:
        return ProbabilityMatrix.from_json(_read_json(path))
    except ValidationError:
        raise
    except UnistochasticError as exc:
        raise UsageError(str(exc), path=path) from exc


def _solver_config(args) -> SolverConfig:
    doc = {}
    if args.config:
        doc = _read_json(args.config)
        if not isinstance(doc, dict):
            raise UsageError("solver config must be a JSON object")
    for key, flag in (("tol", "tol"), ("max_iter", "max_iter"), ("starts", "starts"),
                      ("seed", "seed"), ("hops", "hops"), ("workers", "workers")):
        value = getattr(args, flag)
        if value is not None:
            doc[key] = value
    try:
        return SolverConfig.from_json(doc)
    except UnistochasticError as exc:
        raise UsageError(str(exc)) from exc


# -- verbs ------------------------------------------------------------------------

def cmd_validate(args):
    pm = _read_matrix(args.input)
    tol = VALIDATION_TOL if args.tol is None else args.tol
    valid = validate_bistochastic(pm, tol=tol)
    return EXIT_OK, valid.to_json()


def cmd_solve(args):
    cfg = _solver_config(args)
    pm = validate_bistochastic(_read_matrix(args.input))
    report = solve_phases(pm, cfg)
    return _STATUS_EXIT[report.status], report.to_json()


def cmd_roundtrip(args):
    cfg = _solver_config(args)
    pm = validate_bistochastic(_read_matrix(args.input))
    report = solve_phases(pm, cfg)
    doc = {"status": report.status, "report": report.to_json()}
    if report.feasible:
        again = transition_probability_matrix(report.sigma_tilde(pm))
        doc["max_abs_error"] = float(np.max(np.abs(again.p - pm.p)))
        doc["reconstructed"] = again.to_json()
    return _STATUS_EXIT[report.status], doc


def cmd_certify3(args):
    pm = validate_bistochastic(_read_matrix(args.input))
    if pm.n != 3:
        raise UsageError(f"certify3 needs a 3 x 3 matrix, got n = {pm.n}")
    cert = certify_n3(pm)
    return _STATUS_EXIT[cert.status], cert.to_json()


def _pairs(m):
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def cmd_knob_demo(args):
    g = knob_group.rotation(args.axis, args.angle)
    u = knob_group.SO3.represent(g)
    probs = transition_probability_matrix(u)
    axis, angle = g.payload
    return EXIT_OK, {
        "n": 2,
        "axis": list(axis),
        "angle": angle,
        "unitary": _pairs(u),
        "probabilities": [float(x) for x in probs.p.ravel()],
    }


def cmd_commutative_demo(args):
    pm = knob_group.commutative_limit_probabilities(args.phases)
    doc = pm.to_json()
    doc["max_deviation_from_identity"] = float(np.max(np.abs(pm.p - np.eye(pm.n))))
    return EXIT_OK, doc


def cmd_tomography(args):
    doc = _read_json(args.input)
    try:
        if args.forward:
            rho = hardy.DensityMatrix.from_json(doc)
            f = hardy.build_fiducial_set(rho.n)
            return EXIT_OK, [float(x) for x in hardy.probabilities_of(rho, f)]
        if not isinstance(doc, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in doc):
            raise UsageError("tomography input must be a JSON array of numbers")
        n = math.isqrt(len(doc))
        if n < 1 or n * n != len(doc):
            raise UsageError(f"need K = N^2 probabilities, got {len(doc)}")
        rho = hardy.tomography_reconstruct(doc, hardy.build_fiducial_set(n))
    except UnistochasticError as exc:
        raise UsageError(str(exc)) from exc
    code = EXIT_OK if rho.diagnostics["consistent"] else EXIT_REJECTED
    return code, rho.to_json()


def cmd_hardy_count(args):
    kind = hardy.TheoryKind(args.kind)
    try:
        if args.na is not None or args.nb is not None:
            if args.na is None or args.nb is None:
                raise UsageError("--na and --nb go together")
            n, k = hardy.composite_counts(args.na, args.nb, kind)
            return EXIT_OK, {"N": n, "K": k, "K_A": hardy.capacity(kind, args.na),
                             "K_B": hardy.capacity(kind, args.nb),
                             "consistent": k == hardy.capacity(kind, n)}
        if args.n is not None:
            return EXIT_OK, {"K": hardy.capacity(kind, args.n)}
        ns = list(range(2, args.max_n + 1))
        ks = [hardy.capacity(kind, n) for n in ns]
        fit = hardy.infer_power(ns, ks)
        return EXIT_OK, {"kind": kind.value,
                         "table": [{"N": n, "K": k} for n, k in zip(ns, ks)],
                         "r": fit.r}
    except UnistochasticError as exc:
        raise UsageError(str(exc)) from exc


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unistochastic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(p, solver=False):
        p.add_argument("--input", help="input JSON file ('-' for stdin)")
        p.add_argument("--output", help="write JSON here instead of stdout")
        p.add_argument("--tol", type=float, default=None,
                       help="tolerance (solver default 1e-10, validation default 1e-9)")
        if solver:
            p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
            p.add_argument("--starts", type=int, default=None, help="random starts (default 32)")
            p.add_argument("--max-iter", dest="max_iter", type=int, default=None,
                           help="iterations per descent (default 500)")
            p.add_argument("--hops", type=int, default=None,
                           help="perturbation rounds per start (default 8)")
            p.add_argument("--workers", type=int, default=None, help="solver threads")
            p.add_argument("--config", help='JSON {"tol", "max_iter", "starts", "seed"}')
        return p

    common(sub.add_parser("validate", help="check a probability matrix is bistochastic"))
    common(sub.add_parser("solve", help="phase completion"), solver=True)
    common(sub.add_parser("roundtrip", help="solve, rebuild the matrix, report the error"),
           solver=True)
    common(sub.add_parser("certify3", help="analytic 3 x 3 unistochasticity test"))
    p = common(sub.add_parser("knob-demo", help="SU(2) image of a rotation"))
    p.add_argument("--axis", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--angle", type=float, required=True, help="radians")
    p = common(sub.add_parser("commutative-demo", help="probabilities of a diagonal unitary"))
    p.add_argument("--phases", type=float, nargs="+", required=True)
    p = common(sub.add_parser("tomography", help="reconstruct a state from N^2 probabilities"))
    p.add_argument("--forward", action="store_true",
                   help="input is a density matrix; emit its fiducial probabilities")
    p = common(sub.add_parser("hardy-count", help="K(N) counting relations"))
    p.add_argument("--kind", choices=[k.value for k in hardy.TheoryKind], default="quantum")
    p.add_argument("--n", type=int)
    p.add_argument("--na", type=int)
    p.add_argument("--nb", type=int)
    p.add_argument("--max-n", dest="max_n", type=int, default=6)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "roundtrip": cmd_roundtrip,
    "certify3": cmd_certify3,
    "knob-demo": cmd_knob_demo,
    "commutative-demo": cmd_commutative_demo,
    "tomography": cmd_tomography,
    "hardy-count": cmd_hardy_count,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        code, doc = COMMANDS[args.verb](args)
    except UsageError as exc:
        stderr.write(_dump({"error": str(exc), **exc.detail}))
        return EXIT_USAGE
    except ValidationError as exc:
        code, doc, args = EXIT_REJECTED, exc.to_dict(), locals().get("args")
    except UnistochasticError as exc:
        stderr.write(_dump({"error": str(exc)}))
        return EXIT_USAGE
    text = _dump(doc)
    if args is not None and args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            stderr.write(_dump({"error": f"cannot write {args.output}: {exc.strerror}"}))
            return EXIT_USAGE
    else:
        stdout.write(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
