"""
Command line interface.

Subcommands ``solve``, ``verify-product``, ``check-ud``, ``simulate`` and
``certify`` each produce a :class:`~seqdisc.models.run_report.RunReport` on
stdout (``--json`` for the machine-readable form); logs go to stderr.

Exit codes: 0 pass, 1 verification failed, 2 invalid input or capacity,
3 numeric or solver failure.
"""

import argparse
import hashlib
import logging
import math
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .ensemble import Ensemble, Povm, success_probability
from .errors import InvalidInputError, SeqdiscError
from .file_parser import FileParser, povm_to_file, write_document
from .linalg import eig_hermitian
from .logging_config import configure_logging
from .minerror import (CERTIFICATE_TOL, check_hykl_certificate, guessing_value, helstrom_two, min_error_program,
                       solve_min_error, verify_product_min_error)
from .models.run_report import InputDigest, RunReport
from .random_instances import RNG_NAME, make_rng, parse_random_spec
from .sdp import dump_program
from .settings import DEFAULT_SOLVER_OPTIONS, DEFAULT_TOLERANCES, Settings, load_settings
from .unambiguous import (UD_CERTIFICATE_TOL, certify_ud_povm, check_sequence_ud_feasible, check_ud_feasible,
                          check_ud_solution, compute_theta, solve_unambiguous, ud_program, ud_two_pure_closed_form,
                          verify_product_unambiguous)

logger = logging.getLogger("seqdisc")

PARADIGMS = ("min-error", "unambiguous")
DEFAULT_PRODUCT_TOL = 1e-5


def _digest(path: str) -> InputDigest:
    try:
        with open(path, "rb") as file:
            return InputDigest(path=path, sha256=hashlib.sha256(file.read()).hexdigest())
    except OSError as e:
        raise InvalidInputError(f"{path}: {e.strerror or e}") from e


def _tolerances(**extra: float) -> Dict[str, float]:
    values = dict(DEFAULT_TOLERANCES.model_dump())
    values["gap_tol"] = DEFAULT_SOLVER_OPTIONS.gap_tol
    values["feas_tol"] = DEFAULT_SOLVER_OPTIONS.feas_tol
    values.update(extra)
    return values


def _load_components(args: argparse.Namespace, report: RunReport) -> List[Ensemble]:
    components = []
    for path in args.ensembles:
        report.inputs.append(_digest(path))
        components.append(FileParser.parse_ensemble(path))
    repeat = getattr(args, "repeat", None)
    if repeat is not None:
        if repeat < 1:
            raise InvalidInputError(f"--repeat must be positive, got {repeat}")
        components = components * repeat
    return components


def _status(passed: bool) -> str:
    return "pass" if passed else "fail"


def _pure_vector(state: np.ndarray) -> Optional[np.ndarray]:
    values, vectors = eig_hermitian(state)
    if values[0] < 1 - 1e-9:
        return None
    return vectors[:, 0]


def cmd_solve(args: argparse.Namespace, settings: Settings, report: RunReport) -> RunReport:
    report.inputs.append(_digest(args.ensemble))
    e = FileParser.parse_ensemble(args.ensemble)
    report.mode = f"solve {args.paradigm}"
    report.values["states"] = e.count
    report.values["dimension"] = e.dim
    if args.paradigm == "min-error":
        tol = args.tol if args.tol is not None else CERTIFICATE_TOL
        result = solve_min_error(e, certificate_tol=tol)
        certificate = check_hykl_certificate(e, result.povm, tol)
        report.values["p"] = result.p
        report.values["guessing_value"] = guessing_value(e)
        if e.count == 2:
            report.values["helstrom_p"] = helstrom_two(e).p
        report.certificates["hykl"] = certificate.model_dump()
        report.solver.append(result.solution.summary())
        povm, passed = result.povm, certificate.passed
        if args.dump_sdp:
            with open(args.dump_sdp, "w", encoding="utf-8") as stream:
                dump_program(min_error_program(e), stream)
    else:
        tol = args.tol if args.tol is not None else UD_CERTIFICATE_TOL
        solution = solve_unambiguous(e)
        certificate = check_ud_solution(e, solution, tol)
        report.values["p"] = solution.p
        report.values["theta_ranks"] = solution.ranks
        report.values["feasible"] = check_ud_feasible(e).feasible
        vectors = [_pure_vector(s) for s in e.states]
        if e.count == 2 and all(v is not None for v in vectors):
            report.values["closed_form_p"] = ud_two_pure_closed_form(e.priors[0], vectors[0], e.priors[1], vectors[1])
        report.certificates["ud"] = certificate.model_dump()
        if solution.solution is not None:
            report.solver.append(solution.solution.summary())
        povm, passed = solution.povm, certificate.passed
        if args.dump_sdp:
            _dump_ud_program(e, args.dump_sdp)
    report.tolerances = _tolerances(certificate_tol=tol)
    if args.emit_povm:
        write_document(povm_to_file(povm, label=f"{args.paradigm} optimum"), args.emit_povm)
    report.status = _status(passed)
    return report


def _dump_ud_program(e: Ensemble, path: str) -> None:
    restricted, _ = e.restricted_to_support()
    thetas = [compute_theta(restricted, j) for j in range(restricted.count)]
    if not any(t.rank for t in thetas):
        logger.warning("No conclusive subspace, no program to dump")
        return
    program, _ = ud_program(restricted, thetas)
    with open(path, "w", encoding="utf-8") as stream:
        dump_program(program, stream)


def cmd_verify_product(args: argparse.Namespace, settings: Settings, report: RunReport) -> RunReport:
    components = _load_components(args, report)
    report.mode = f"verify-product {args.paradigm}"
    direct_cap = args.direct_cap if args.direct_cap is not None else settings.direct_cap
    if args.paradigm == "min-error":
        result = verify_product_min_error(components, product_tol=args.tol, direct_cap=direct_cap,
                                          dim_cap=settings.dim_cap, max_workers=settings.max_workers)
        certificate_tol = CERTIFICATE_TOL
    else:
        report.seed = args.seed
        report.rng = RNG_NAME
        result = verify_product_unambiguous(components, product_tol=args.tol, direct_cap=direct_cap,
                                            dim_cap=settings.dim_cap, max_workers=settings.max_workers,
                                            sample_tuples=args.sample_tuples, rng=make_rng(args.seed))
        certificate_tol = UD_CERTIFICATE_TOL
    dumped = result.model_dump()
    report.values = {key: dumped[key] for key in
                     ("k", "local_values", "product_value", "direct_value", "abs_diff", "tensored_value",
                      "theta_agreement")}
    report.values["direct"] = next((s.detail or s.status for s in result.stages if s.name == "direct"), None)
    report.certificates = {key: dumped[key] for key in
                           ("local_certificates", "tensored_certificate", "direct_certificate", "kernel_checks")}
    report.certificates["stages"] = dumped["stages"]
    report.solver = result.solver_stats
    report.tolerances = _tolerances(product_tol=args.tol, certificate_tol=certificate_tol)
    report.status = _status(result.passed)
    return report


def cmd_check_ud(args: argparse.Namespace, settings: Settings, report: RunReport) -> RunReport:
    direct_cap = args.direct_cap if args.direct_cap is not None else settings.direct_cap
    report.tolerances = _tolerances()
    if args.random:
        spec = parse_random_spec(args.random)
        report.mode = "check-ud random"
        report.seed = spec.seed
        report.rng = RNG_NAME
        rng = make_rng(spec.seed)
        agreements, feasible = [], []
        for _ in range(spec.trials):
            components = spec.components(rng)
            per_component = check_sequence_ud_feasible(components, "per-component")
            direct = check_sequence_ud_feasible(components, "direct", cap=settings.dim_cap)
            agreements.append(per_component.feasible == direct.feasible)
            feasible.append(per_component.feasible)
        report.values = {"random": spec.model_dump(), "trials": spec.trials, "feasible": feasible,
                         "agreements": sum(agreements), "agree": all(agreements)}
        report.status = _status(all(agreements))
        return report

    components = _load_components(args, report)
    if not components:
        raise InvalidInputError("check-ud needs ensemble files or --random")
    report.mode = "check-ud"
    per_component = check_sequence_ud_feasible(components, "per-component")
    report.values["per_component"] = per_component.feasible
    report.certificates["per_component"] = per_component.model_dump()
    total_dim = int(np.prod([c.dim for c in components]))
    agree = True
    if total_dim <= direct_cap:
        direct = check_sequence_ud_feasible(components, "direct", cap=settings.dim_cap)
        agree = direct.feasible == per_component.feasible
        report.values["direct"] = direct.feasible
        report.certificates["direct"] = direct.model_dump()
    else:
        report.values["direct"] = f"skipped (capacity): dimension {total_dim} exceeds cap {direct_cap}"
    report.values["feasible"] = per_component.feasible
    report.values["agree"] = agree
    report.status = _status(agree)
    return report


def _born_table(component: Ensemble, povm: Povm) -> np.ndarray:
    table = np.real(np.einsum("xab,oba->xo", component.states, povm.effects))
    table = np.clip(table, 0.0, None)
    return table / table.sum(axis=1, keepdims=True)


def _sample_rows(table: np.ndarray, rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cumulative = np.cumsum(table, axis=1)[rows]
    cumulative[:, -1] = 1.0
    u = rng.random(len(rows))
    return (u[:, None] >= cumulative).sum(axis=1)


def cmd_simulate(args: argparse.Namespace, settings: Settings, report: RunReport) -> RunReport:
    if args.shots < 1:
        raise InvalidInputError(f"--shots must be at least 1, got {args.shots}")
    components = _load_components(args, report)
    report.mode = f"simulate {args.paradigm}"
    report.seed = args.seed
    report.rng = RNG_NAME
    if args.paradigm == "min-error":
        povms = [solve_min_error(c).povm for c in components]
        local_values = [float(success_probability(c, m)) for c, m in zip(components, povms)]
    else:
        solutions = [solve_unambiguous(c) for c in components]
        povms = [s.povm for s in solutions]
        local_values = [float(s.p) for s in solutions]
    analytic = float(math.prod(local_values))

    rng = make_rng(args.seed)
    n = args.shots
    correct = np.ones(n, dtype=bool)
    conclusive = np.ones(n, dtype=bool)
    for component, povm in zip(components, povms):
        states = rng.choice(component.count, size=n, p=component.priors)
        outcomes = _sample_rows(_born_table(component, povm), states, rng)
        if povm.inconclusive_index is not None:
            conclusive &= outcomes != povm.inconclusive_index
        correct &= outcomes == states
    successes = int(np.sum(correct & conclusive))
    misidentified = int(np.sum(conclusive & ~correct))
    p_hat = successes / n
    stderr = math.sqrt(p_hat * (1 - p_hat) / n)
    analytic_stderr = math.sqrt(max(analytic * (1 - analytic), 0.0) / n)
    within = bool(abs(p_hat - analytic) <= 3 * max(analytic_stderr, stderr))
    report.values = {
        "shots": n,
        "analytic_p": analytic,
        "local_values": local_values,
        "empirical_p": p_hat,
        "stderr": stderr,
        "within_3_sigma": within,
    }
    passed = within
    if args.paradigm == "unambiguous":
        report.values["conclusive"] = int(np.sum(conclusive))
        report.values["misidentified"] = misidentified
        passed = passed and misidentified == 0
    report.tolerances = _tolerances(sigma_multiple=3.0)
    report.status = _status(passed)
    return report


def cmd_certify(args: argparse.Namespace, settings: Settings, report: RunReport) -> RunReport:
    report.inputs.extend([_digest(args.ensemble), _digest(args.povm)])
    e = FileParser.parse_ensemble(args.ensemble)
    povm = FileParser.parse_povm(args.povm)
    if povm.dim != e.dim:
        raise InvalidInputError(f"POVM dimension {povm.dim} does not match ensemble dimension {e.dim}")
    report.values["p"] = success_probability(e, povm)
    if povm.inconclusive_index is None:
        tol = args.tol if args.tol is not None else CERTIFICATE_TOL
        certificate = check_hykl_certificate(e, povm, tol)
        report.mode = "certify min-error"
        report.certificates["hykl"] = certificate.model_dump()
    else:
        tol = args.tol if args.tol is not None else UD_CERTIFICATE_TOL
        certificate = certify_ud_povm(e, povm, tol)
        report.mode = "certify unambiguous"
        report.certificates["ud"] = certificate.model_dump()
    report.values["optimal"] = certificate.passed
    report.tolerances = _tolerances(certificate_tol=tol)
    report.status = _status(certificate.passed)
    return report


COMMANDS = {
    "solve": cmd_solve,
    "verify-product": cmd_verify_product,
    "check-ud": cmd_check_ud,
    "simulate": cmd_simulate,
    "certify": cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Emit the machine-readable JSON report.")
    common.add_argument("--log-file", default=None, help="Also write logs to this file (default: SEQDISC_LOG_FILE).")
    common.add_argument("--timing", action="store_true", help="Record wall time in the report.")

    parser = argparse.ArgumentParser(prog="seqdisc", description="Optimal discrimination of quantum state sequences.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[common], help="Solve one ensemble.")
    solve.add_argument("--paradigm", choices=PARADIGMS, required=True)
    solve.add_argument("ensemble")
    solve.add_argument("--emit-povm", default=None, metavar="PATH", help="Write the optimal POVM file here.")
    solve.add_argument("--dump-sdp", default=None, metavar="PATH", help="Write the assembled program here.")
    solve.add_argument("--tol", type=float, default=None, help="Certificate tolerance.")

    verify = commands.add_parser("verify-product", parents=[common], help="Check the product theorem.")
    verify.add_argument("--paradigm", choices=PARADIGMS, required=True)
    verify.add_argument("ensembles", nargs="+")
    verify.add_argument("--tol", type=float, default=DEFAULT_PRODUCT_TOL)
    verify.add_argument("--direct-cap", type=int, default=None, help="Largest sequence dimension solved directly.")
    verify.add_argument("--sample-tuples", type=int, default=None,
                        help="Check the kernel decomposition on this many sampled tuples only.")
    verify.add_argument("--repeat", type=int, default=None, help="Use K copies of the listed ensembles.")
    verify.add_argument("--seed", type=int, default=0)

    check = commands.add_parser("check-ud", parents=[common], help="Unambiguous feasibility of a sequence.")
    check.add_argument("ensembles", nargs="*")
    check.add_argument("--random", nargs="+", default=None, metavar="KEY=VALUE",
                       help="Random suite, e.g. d=3 l=3 k=2 seed=7 trials=10.")
    check.add_argument("--direct-cap", type=int, default=None)
    check.add_argument("--repeat", type=int, default=None)

    simulate = commands.add_parser("simulate", parents=[common], help="Monte-Carlo run of the local strategy.")
    simulate.add_argument("--paradigm", choices=PARADIGMS, required=True)
    simulate.add_argument("ensembles", nargs="+")
    simulate.add_argument("--shots", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--repeat", type=int, default=None)

    certify = commands.add_parser("certify", parents=[common], help="Decide optimality of a given POVM.")
    certify.add_argument("ensemble")
    certify.add_argument("povm")
    certify.add_argument("--tol", type=float, default=None)
    return parser


def _flatten(prefix: str, value: Any, lines: List[str]) -> None:
    if isinstance(value, dict):
        for key, item in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), item, lines)
    elif isinstance(value, list) and any(isinstance(item, (dict, list)) for item in value):
        for index, item in enumerate(value):
            _flatten(f"{prefix}[{index}]", item, lines)
    else:
        lines.append(f"{prefix}: {value}")


def render(report: RunReport, as_json: bool) -> str:
    if as_json:
        return report.model_dump_json(indent=2)
    lines: List[str] = []
    _flatten("", report.model_dump(exclude_none=True), lines)
    return "\n".join(lines)


def _error_report(report: RunReport, errors: List[str]) -> RunReport:
    return report.model_copy(update={"status": "error", "errors": errors})


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_file)
    report = RunReport(version=__version__, command=["seqdisc"] + argv, mode=args.command)
    started = time.perf_counter()
    exit_code = 0
    try:
        settings = load_settings()
        configure_logging(args.log_file or settings.log_file, level=settings.log_level)
        report = COMMANDS[args.command](args, settings, report)
        exit_code = 0 if report.status == "pass" else 1
    except SeqdiscError as e:
        logger.error("%s failed: %s", args.command, e)
        errors = list(getattr(e, "violations", None) or [str(e)])
        if str(e) not in errors:
            errors.insert(0, str(e))
        report = _error_report(report, errors)
        exit_code = e.exit_code
    except Exception as e:
        logger.error("Unexpected error in %s", args.command, exc_info=True)
        report = _error_report(report, [f"{type(e).__name__}: {e}"])
        exit_code = 3
    if args.timing:
        report.wall_time_s = time.perf_counter() - started
    logger.info("%s finished with status %s in %.3f s", args.command, report.status, time.perf_counter() - started)
    try:
        output = render(report, args.json)
    except ValueError as e:
        logger.error("Report for %s could not be rendered", args.command, exc_info=True)
        report = _error_report(report.model_copy(update={"values": {}, "certificates": {}, "solver": []}),
                               [f"report not serializable: {e}"])
        output = render(report, args.json)
        exit_code = 3
    print(output)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
