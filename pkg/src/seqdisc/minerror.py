"""
Minimum-error discrimination.

The optimal success probability of an ensemble ``{(q_i, σ_i)}`` solves::

    maximize    Σ_i q_i Tr(σ_i M_i)
    subject to  Σ_i M_i = I,  M_i ⪰ 0

A measurement is optimal exactly when ``Σ_i q_i σ_i M_i ⪰ q_j σ_j`` for every
``j`` (:func:`check_hykl_certificate`). For a sequence of independently drawn
states the tensor product of optimal local measurements is optimal, so the
sequence optimum is the product of the local optima
(:func:`verify_product_min_error`).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .ensemble import (Ensemble, Povm, SequenceEnsemble, build_sequence_ensemble, success_probability,
                       tensor_povm)
from .errors import CapacityError, InvalidInputError, SeqdiscError, SolverFailure
from .linalg import eig_hermitian, hermitize, projector, psd_sqrt_inv, support_basis, trace_norm
from .models.reports import HyklCertificate, ProductTheoremReport, StageResult
from .sdp import (ConicProgram, Constraint, Relation, SdpSolution, SdpStatus, embedded_coefficient,
                  hermitian_basis, solve, unembed)
from .settings import DEFAULT_SOLVER_OPTIONS, DEFAULT_TOLERANCES, SolverOptions, ToleranceConfig

logger = logging.getLogger("seqdisc")

CERTIFICATE_TOL = 1e-6
PRODUCT_TOL = 1e-5
MIN_ERROR_GAP_TOL = 1e-10
REFINEMENT_FACTOR = 1e-2
MAX_REFINEMENTS = 2


class HelstromResult(NamedTuple):
    p: float
    povm: Povm


class MinErrorResult(NamedTuple):
    p: float
    povm: Povm
    solution: SdpSolution


def _as_ensemble(e) -> Ensemble:
    return e.materialize() if isinstance(e, SequenceEnsemble) else e


def helstrom_two(e: Ensemble, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> HelstromResult:
    """
    Closed-form optimum for two states, ``p = (1 + ||η_1 ρ_1 - η_2 ρ_2||_1) / 2``.

    Outcome 1 projects onto the nonnegative eigenspace of ``η_1 ρ_1 - η_2 ρ_2``
    (its kernel included), outcome 2 onto the negative one.

    :raises InvalidInputError: unless the ensemble has exactly two states.
    """
    if e.count != 2:
        raise InvalidInputError(f"Helstrom closed form needs exactly 2 states, got {e.count}")
    weighted = e.weighted_states()
    difference = hermitize(weighted[0] - weighted[1])
    values, vectors = eig_hermitian(difference, tol)
    zero = tol.rank_tol * max(1.0, float(np.max(np.abs(values))))
    keep = values >= -zero
    first = vectors[:, keep] @ vectors[:, keep].conj().T
    effects = np.array([hermitize(first), hermitize(np.eye(e.dim) - first)])
    p = 0.5 * (1.0 + trace_norm(difference, tol))
    return HelstromResult(p, Povm(e.dim, effects))


def guessing_value(e: Ensemble) -> float:
    """Success of always naming the most likely state, a lower bound on the optimum."""
    return float(np.max(e.priors))


def square_root_measurement(e: Ensemble, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> Povm:
    """
    Square-root measurement ``M_i = ρ̄^{-1/2} q_i σ_i ρ̄^{-1/2}`` with ``ρ̄ = Σ q_i σ_i``.

    The kernel of ``ρ̄`` is added to the first effect so the effects are complete.
    """
    average = hermitize(np.sum(e.weighted_states(), axis=0))
    root = psd_sqrt_inv(average, tol)
    effects = np.array([hermitize(root @ w @ root) for w in e.weighted_states()])
    effects[0] += np.eye(e.dim) - projector(support_basis(average, tol))
    return Povm(e.dim, effects)


def min_error_program(e: Ensemble) -> ConicProgram:
    """Embedded real program: one ``2d`` block per effect, ``d^2`` completeness rows."""
    block = 2 * e.dim
    objective = tuple(embedded_coefficient(w) for w in e.weighted_states())
    constraints = []
    for basis_element in hermitian_basis(e.dim):
        coefficient = embedded_coefficient(basis_element)
        constraints.append(Constraint(
            coefficients=(coefficient,) * e.count,
            rhs=float(np.real(np.trace(basis_element))),
            relation=Relation.EQ,
        ))
    return ConicProgram(blocks=(block,) * e.count, objective=objective, constraints=tuple(constraints))


def _meets(solution: SdpSolution, opts: SolverOptions) -> bool:
    return (solution.gap <= opts.gap_tol and solution.complementarity <= opts.gap_tol
            and solution.primal_residual <= opts.feas_tol and solution.dual_residual <= opts.feas_tol)


def solve_min_error(e: Ensemble, opts: SolverOptions = DEFAULT_SOLVER_OPTIONS,
                    tol: ToleranceConfig = DEFAULT_TOLERANCES,
                    certificate_tol: float = CERTIFICATE_TOL) -> MinErrorResult:
    """
    Optimal minimum-error measurement of an ensemble.

    The program is solved to a gap of at most ``MIN_ERROR_GAP_TOL``, the
    effects are renormalized to exact completeness, and the result is only
    returned once :func:`check_hykl_certificate` passes at ``certificate_tol``.
    A failing certificate tightens the gap and feasibility tolerances by
    ``REFINEMENT_FACTOR`` and solves again, at most ``MAX_REFINEMENTS`` times.
    A refined run that stalls is kept when its best iterate still meets the
    caller's ``opts``.

    :raises SolverFailure: if the solver misses ``opts`` or the certificate never passes.
    """
    e = _as_ensemble(e)
    program = min_error_program(e)
    run_opts = opts.model_copy(update={"gap_tol": min(opts.gap_tol, MIN_ERROR_GAP_TOL)})
    for attempt in range(MAX_REFINEMENTS + 1):
        solution = solve(program, run_opts)
        if not _meets(solution, opts):
            raise SolverFailure(
                f"minimum-error SDP ended {solution.status.value} after {solution.iterations} iterations "
                f"(gap {solution.gap:.2e})", solution)
        stalled = not solution.optimal
        if stalled:
            logger.info("Minimum-error solve stopped at gap %.2e; keeping the best iterate", solution.gap)
            solution = replace(solution, status=SdpStatus.OPTIMAL)
        effects = np.array([unembed(w) for w in solution.primal_blocks])
        povm = Povm(e.dim, effects).normalized(tol)
        certificate = check_hykl_certificate(e, povm, certificate_tol)
        if certificate.passed:
            p = success_probability(e, povm)
            logger.debug("Minimum-error optimum %.10f (SDP primal %.10f, %d refinements)",
                         p, solution.primal_value, attempt)
            return MinErrorResult(p, povm, solution)
        worst = min(certificate.min_eigenvalues)
        if stalled:
            break
        logger.info("Certificate eigenvalue %.2e at gap %.2e, refining", worst, solution.gap)
        run_opts = run_opts.model_copy(update={"gap_tol": run_opts.gap_tol * REFINEMENT_FACTOR,
                                               "feas_tol": run_opts.feas_tol * REFINEMENT_FACTOR})
    raise SolverFailure(
        f"minimum-error measurement fails its optimality certificate (smallest eigenvalue {worst:.2e}, "
        f"gap {solution.gap:.2e})", solution)


def check_hykl_certificate(e: Ensemble, m: Povm, tol: float = CERTIFICATE_TOL) -> HyklCertificate:
    """
    Test ``Σ_i q_i σ_i M_i ⪰ q_j σ_j`` for every state ``j``.

    ``Γ = Σ_i q_i σ_i M_i`` is symmetrized before each PSD test. The certificate
    passes when every smallest eigenvalue is at least ``-tol * scale`` with
    ``scale = max(1, ||Γ||)``.

    :raises InvalidInputError: on dimension mismatch, an inconclusive outcome,
        or an effect count different from the state count.
    """
    e = _as_ensemble(e)
    if m.dim != e.dim:
        raise InvalidInputError(f"POVM dimension {m.dim} does not match ensemble dimension {e.dim}")
    if m.inconclusive_index is not None or m.outcome_count != e.count:
        raise InvalidInputError(
            f"certificate needs one effect per state, got {m.outcome_count} effects for {e.count} states")
    weighted = e.weighted_states()
    gamma = hermitize(np.einsum("iab,ibc->ac", weighted, m.effects))
    scale = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(gamma)))))
    min_eigenvalues = [float(np.linalg.eigvalsh(hermitize(gamma - w))[0]) for w in weighted]
    passed = all(v >= -tol * scale for v in min_eigenvalues)
    return HyklCertificate(min_eigenvalues=min_eigenvalues, scale=scale, tolerance=tol, passed=passed)


def _solve_components(components: Sequence[Ensemble], opts: SolverOptions, tol: ToleranceConfig,
                      certificate_tol: float, max_workers: int) -> List[MinErrorResult]:
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(lambda c: solve_min_error(c, opts, tol, certificate_tol), components))


def verify_product_min_error(components: Sequence[Ensemble],
                             opts: SolverOptions = DEFAULT_SOLVER_OPTIONS,
                             tol: ToleranceConfig = DEFAULT_TOLERANCES,
                             product_tol: float = PRODUCT_TOL,
                             certificate_tol: float = CERTIFICATE_TOL,
                             direct_cap: int = 64,
                             dim_cap: Optional[int] = None,
                             max_workers: int = 4) -> ProductTheoremReport:
    """
    Check that the sequence optimum equals the product of the local optima.

    Stages: local solves with certificates, the tensored local measurement with
    its certificate and success on the sequence ensemble, and the direct solve
    of the sequence ensemble when its dimension is within ``direct_cap``.
    Capacity and solver failures of the sequence stages are recorded in
    ``stages`` and do not abort the report.

    :raises SolverFailure: if a local solve fails, since nothing can be compared.
    """
    if not components:
        raise InvalidInputError("product verification needs at least one component")
    stages: List[StageResult] = []
    local = _solve_components(components, opts, tol, certificate_tol, max_workers)
    local_values = [r.p for r in local]
    local_certificates = [check_hykl_certificate(c, r.povm, certificate_tol) for c, r in zip(components, local)]
    product_value = math.prod(local_values)
    stages.append(StageResult(name="local", status="ok"))
    report = ProductTheoremReport(
        paradigm="min-error",
        k=len(components),
        local_values=local_values,
        product_value=product_value,
        local_certificates=local_certificates,
        solver_stats=[r.solution.summary() for r in local],
        tolerance=product_tol,
        passed=False,
    )

    sequence: Optional[SequenceEnsemble] = None
    try:
        sequence = build_sequence_ensemble(components, materialize=True, cap=dim_cap)
        povm = tensor_povm([r.povm for r in local], cap=dim_cap)
        report.tensored_value = success_probability(sequence, povm, cap=dim_cap)
        report.tensored_certificate = check_hykl_certificate(sequence.materialize(dim_cap), povm, certificate_tol)
        stages.append(StageResult(name="tensored", status="ok"))
    except CapacityError as e:
        logger.warning("Tensored measurement skipped: %s", e)
        stages.append(StageResult(name="tensored", status="skipped", detail=f"skipped (capacity): {e}"))

    total_dim = int(np.prod([c.dim for c in components]))
    if len(components) == 1:
        report.direct_value = local_values[0]
        report.direct_certificate = local_certificates[0]
        stages.append(StageResult(name="direct", status="ok", detail="single component"))
    elif sequence is None or total_dim > direct_cap:
        logger.warning("Direct solve skipped: sequence dimension %d exceeds direct cap %d", total_dim, direct_cap)
        stages.append(StageResult(name="direct", status="skipped",
                                  detail=f"skipped (capacity): dimension {total_dim} exceeds cap {direct_cap}"))
    else:
        try:
            direct = solve_min_error(sequence.materialize(dim_cap), opts, tol, certificate_tol)
            report.direct_value = direct.p
            report.direct_certificate = check_hykl_certificate(sequence.materialize(dim_cap), direct.povm,
                                                               certificate_tol)
            report.solver_stats.append(direct.solution.summary())
            stages.append(StageResult(name="direct", status="ok"))
        except SeqdiscError as e:
            logger.warning("Direct solve failed: %s", e)
            stages.append(StageResult(name="direct", status="failed", detail=str(e)))

    if report.direct_value is not None:
        report.abs_diff = abs(report.direct_value - product_value)
    report.stages = stages
    certificates = list(local_certificates)
    certificates += [c for c in (report.tensored_certificate, report.direct_certificate) if c is not None]
    report.passed = bool(all(c.passed for c in certificates)
                     and all(s.status != "failed" for s in stages)
                     and (report.abs_diff is None or report.abs_diff <= product_tol)
                     and (report.tensored_value is None
                          or abs(report.tensored_value - product_value) <= product_tol))
    logger.info("Minimum-error product check: product %.10f, direct %s, passed %s",
                product_value, report.direct_value, report.passed)
    return report
