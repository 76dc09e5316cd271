"""
Unambiguous discrimination.

State ``j`` of an ensemble can only be named without error on
``Θ_j = ∩_{i≠j} ker σ_i``. With ``Θ_j`` an orthonormal basis of that subspace
the optimal success probability solves::

    maximize    Σ_j q_j Tr(σ_j Θ_j Δ_j Θ_j^dagger)
    subject to  Σ_j Θ_j Δ_j Θ_j^dagger ⪯ I,  Δ_j ⪰ 0

whose dual is ``minimize Tr(Z)`` subject to ``Z ⪰ 0`` and
``Θ_j^dagger (Z - q_j σ_j) Θ_j ⪰ 0``. Programs are solved inside the joint
support of the ensemble and lifted back.

For sequences of independently drawn states the conclusive subspaces, the
primal and the dual variables all tensorize, so the sequence optimum is the
product of the local optima (:func:`build_product_ud_solution`,
:func:`verify_product_unambiguous`).
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .ensemble import Ensemble, Povm, SequenceEnsemble, build_sequence_ensemble, success_probability
from .errors import CapacityError, InvalidInputError, SeqdiscError, SolverFailure
from .linalg import (ComplexMatrix, SubspaceBasis, hermitize, joint_support, kernel_basis, kron_all, span_basis,
                     subspace_distance, subspace_equal, subspace_intersection, support_basis, tensor_subspace)
from .models.reports import (KernelDecompositionCheck, ProductTheoremReport, StageResult, UdCertificate,
                             UdFeasibility)
from .sdp import (ConicProgram, Constraint, SdpSolution, embedded_coefficient, hermitian_basis,
                  hermitian_coordinates, solve, unembed)
from .settings import DEFAULT_SOLVER_OPTIONS, DEFAULT_TOLERANCES, SolverOptions, ToleranceConfig

logger = logging.getLogger("seqdisc")

UD_CERTIFICATE_TOL = 1e-7
PRODUCT_TOL = 1e-5


@dataclass(eq=False)
class UdSolution:
    """
    Optimal unambiguous measurement with its primal and dual variables.

    ``thetas`` and ``dual_z`` live in the ensemble's own space; ``deltas[j]`` is
    ``r_j x r_j`` (``0 x 0`` when state ``j`` is never identifiable). The POVM
    lists one conclusive effect per state, then the inconclusive effect.
    """

    p: float
    deltas: List[ComplexMatrix]
    thetas: List[SubspaceBasis]
    dual_z: ComplexMatrix
    povm: Povm
    support: SubspaceBasis
    solution: Optional[SdpSolution] = None

    @property
    def ranks(self) -> List[int]:
        return [t.rank for t in self.thetas]

    @property
    def gap(self) -> float:
        return self.solution.gap if self.solution is not None else 0.0

    def conclusive_effect(self, j: int) -> ComplexMatrix:
        theta = self.thetas[j].columns
        return theta @ self.deltas[j] @ theta.conj().T


def _as_ensemble(e) -> Ensemble:
    return e.materialize() if isinstance(e, SequenceEnsemble) else e


def compute_theta(e: Ensemble, j: int, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """
    Orthonormal basis of the intersection of the kernels of every state but ``j``.

    A rank-0 result is legal: state ``j`` can then never be identified.
    """
    e = _as_ensemble(e)
    if not 0 <= j < e.count:
        raise InvalidInputError(f"state index {j} out of range for {e.count} states")
    kernels = [kernel_basis(s, tol) for i, s in enumerate(e.states) if i != j]
    return subspace_intersection(kernels, tol)


def check_ud_feasible(e: Ensemble, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> UdFeasibility:
    """
    Support criterion: every state is identifiable iff removing any single
    state shrinks the joint support of the ensemble.

    Projector distances are reported so near-tolerance ties can be audited.
    """
    e = _as_ensemble(e)
    full = joint_support(e.states, tol)
    verdicts, distances, removed_ranks = [], [], []
    for j in range(e.count):
        rest = joint_support([s for i, s in enumerate(e.states) if i != j], tol)
        distance = subspace_distance(full, rest)
        verdicts.append(distance > tol.subspace_eq_tol)
        distances.append(distance)
        removed_ranks.append(rest.rank)
    return UdFeasibility(
        mode="single",
        verdicts=verdicts,
        distances=distances,
        support_rank=full.rank,
        removed_ranks=removed_ranks,
        tolerance=tol.subspace_eq_tol,
        feasible=all(verdicts),
    )


def check_sequence_ud_feasible(components: Sequence[Ensemble],
                               mode: Literal["per-component", "direct"] = "per-component",
                               tol: ToleranceConfig = DEFAULT_TOLERANCES,
                               cap: Optional[int] = None) -> UdFeasibility:
    """
    Feasibility of unambiguous discrimination for a sequence ensemble.

    ``per-component`` combines the verdicts of the components; ``direct``
    applies the support criterion to the materialized sequence ensemble. The
    two modes agree.

    :raises CapacityError: in direct mode beyond the dimension cap.
    """
    if mode == "per-component":
        reports = [check_ud_feasible(c, tol) for c in components]
        verdicts = [r.feasible for r in reports]
        return UdFeasibility(mode="per-component", verdicts=verdicts, components=reports,
                             tolerance=tol.subspace_eq_tol, feasible=all(verdicts))
    if mode == "direct":
        sequence = build_sequence_ensemble(components, materialize=True, cap=cap)
        report = check_ud_feasible(sequence.materialize(cap), tol)
        return report.model_copy(update={"mode": "direct"})
    raise InvalidInputError(f"unknown feasibility mode {mode!r}")


def pure_states_independent(e: Ensemble, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """
    Linear independence of the state vectors of a pure-state ensemble.

    :raises InvalidInputError: if some state is not pure.
    """
    e = _as_ensemble(e)
    vectors = []
    for index, state in enumerate(e.states):
        support = support_basis(state, tol)
        if support.rank != 1:
            raise InvalidInputError(f"state {index} has rank {support.rank}, expected a pure state")
        vectors.append(support.columns[:, 0])
    return span_basis(np.column_stack(vectors), tol).rank == e.count


def ud_two_pure_closed_form(eta1: float, psi1: npt.ArrayLike, eta2: float, psi2: npt.ArrayLike) -> float:
    """
    Optimal unambiguous success for two pure states, valid for all priors.

    With ``s = |<ψ_1|ψ_2>|`` and ``η_min <= η_max``: ``1 - 2 sqrt(η_1 η_2) s``
    while ``s <= sqrt(η_min / η_max)``, otherwise only the likelier state is
    ever identified and the value is ``η_max (1 - s^2)``.
    """
    psi1 = np.asarray(psi1, dtype=np.complex128).reshape(-1)
    psi2 = np.asarray(psi2, dtype=np.complex128).reshape(-1)
    s = abs(np.vdot(psi1, psi2)) / (np.linalg.norm(psi1) * np.linalg.norm(psi2))
    low, high = sorted((eta1, eta2))
    if s <= math.sqrt(low / high):
        return 1.0 - 2.0 * math.sqrt(eta1 * eta2) * s
    return high * (1.0 - s * s)


def ud_program(e: Ensemble, thetas: Sequence[SubspaceBasis]) -> Tuple[ConicProgram, List[int]]:
    """
    Embedded real program for an ensemble already restricted to its joint support.

    One ``2 r_j`` block per identifiable state, then a ``2d`` slack block for
    ``I - Σ Θ_j Δ_j Θ_j^dagger``.

    :return: the program and the state indices of its Δ blocks.
    """
    active = [j for j, t in enumerate(thetas) if t.rank > 0]
    blocks = tuple(2 * thetas[j].rank for j in active) + (2 * e.dim,)
    objective = tuple(embedded_coefficient(e.priors[j] * _compress(thetas[j], e.states[j])) for j in active)
    objective += (None,)
    constraints = []
    for basis_element in hermitian_basis(e.dim):
        coefficients = tuple(embedded_coefficient(_compress(thetas[j], basis_element)) for j in active)
        constraints.append(Constraint(coefficients=coefficients + (embedded_coefficient(basis_element),),
                                      rhs=float(np.real(np.trace(basis_element)))))
    return ConicProgram(blocks=blocks, objective=objective, constraints=tuple(constraints)), active


def _compress(theta: SubspaceBasis, operator: ComplexMatrix) -> ComplexMatrix:
    return hermitize(theta.columns.conj().T @ operator @ theta.columns)


def _assemble_povm(dim: int, conclusive: Sequence[ComplexMatrix]) -> Povm:
    inconclusive = hermitize(np.eye(dim) - sum(conclusive))
    return Povm(dim, np.array(list(conclusive) + [inconclusive]), inconclusive_index=len(conclusive))


def conclusive_subspaces(e: Ensemble, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> List[SubspaceBasis]:
    """Conclusive subspaces found in the joint support and lifted back, the frame :func:`solve_unambiguous` uses."""
    e = _as_ensemble(e)
    restricted, support = e.restricted_to_support(tol)
    return [SubspaceBasis(e.dim, support.columns @ compute_theta(restricted, j, tol).columns)
            for j in range(restricted.count)]


def solve_unambiguous(e: Ensemble, opts: SolverOptions = DEFAULT_SOLVER_OPTIONS,
                      tol: ToleranceConfig = DEFAULT_TOLERANCES) -> UdSolution:
    """
    Optimal unambiguous measurement of an ensemble.

    The program runs in the joint support of the states; conclusive bases,
    effects and the dual ``Z`` are lifted back by padding with zeros. States
    whose conclusive subspace is empty get a zero effect, and when no state is
    identifiable ``p = 0`` without calling the solver. The Δ blocks are scaled
    down if rounding pushed ``Σ Θ_j Δ_j Θ_j^dagger`` past the identity.

    :raises SolverFailure: if the interior point method does not reach optimality.
    """
    e = _as_ensemble(e)
    restricted, support = e.restricted_to_support(tol)
    b = support.columns
    local_thetas = [compute_theta(restricted, j, tol) for j in range(restricted.count)]
    thetas = [SubspaceBasis(e.dim, b @ t.columns) for t in local_thetas]
    deltas: List[ComplexMatrix] = [np.zeros((t.rank, t.rank), dtype=np.complex128) for t in local_thetas]
    solution = None
    local_z = np.zeros((restricted.dim, restricted.dim), dtype=np.complex128)

    if any(t.rank for t in local_thetas):
        program, active = ud_program(restricted, local_thetas)
        solution = solve(program, opts)
        if not solution.optimal:
            raise SolverFailure(
                f"unambiguous SDP ended {solution.status.value} after {solution.iterations} iterations "
                f"(gap {solution.gap:.2e})", solution)
        for j, block in zip(active, solution.primal_blocks):
            deltas[j] = unembed(block)
        total = sum(t.columns @ deltas[j] @ t.columns.conj().T for j, t in enumerate(local_thetas))
        top = float(np.linalg.eigvalsh(hermitize(total))[-1])
        if top > 1.0:
            deltas = [d / top for d in deltas]
        local_z = hermitize(hermitian_coordinates(solution.dual_multipliers, restricted.dim))
    else:
        logger.info("No state has a conclusive subspace; unambiguous success is 0")

    conclusive = [hermitize(t.columns @ d @ t.columns.conj().T) for t, d in zip(thetas, deltas)]
    povm = _assemble_povm(e.dim, conclusive)
    p = success_probability(e, povm)
    return UdSolution(p=p, deltas=deltas, thetas=thetas, dual_z=hermitize(b @ local_z @ b.conj().T),
                      povm=povm, support=support, solution=solution)


def check_ud_solution(e: Ensemble, sol: UdSolution, tol: float = UD_CERTIFICATE_TOL) -> UdCertificate:
    """
    Residuals of a primal/dual pair against the unambiguous program.

    Checks ``Σ M_j ⪯ I``, ``Z ⪰ 0``, ``Θ_j^dagger (Z - q_j σ_j) Θ_j ⪰ 0``,
    ``Tr(σ_i M_j) = 0`` for ``i ≠ j`` and ``p = Tr(Z)``.
    """
    e = _as_ensemble(e)
    if len(sol.thetas) != e.count or sol.povm.dim != e.dim:
        raise InvalidInputError("solution does not match the ensemble")
    conclusive = [sol.conclusive_effect(j) for j in range(e.count)]
    primal = max(0.0, float(np.linalg.eigvalsh(hermitize(sum(conclusive)))[-1]) - 1.0)
    dual_residuals = []
    for j, theta in enumerate(sol.thetas):
        if theta.rank == 0:
            dual_residuals.append(0.0)
            continue
        compressed = _compress(theta, sol.dual_z - e.priors[j] * e.states[j])
        dual_residuals.append(max(0.0, -float(np.linalg.eigvalsh(compressed)[0])))
    z_psd = max(0.0, -float(np.linalg.eigvalsh(hermitize(sol.dual_z))[0]))
    unambiguity = _unambiguity_residual(e, conclusive)
    value_gap = abs(sol.p - float(np.real(np.trace(sol.dual_z))))
    passed = bool(max([primal, z_psd, unambiguity, value_gap] + dual_residuals) <= tol)
    return UdCertificate(primal_residual=primal, dual_residuals=dual_residuals, z_psd_residual=z_psd,
                         unambiguity_residual=unambiguity, value_gap=value_gap, tolerance=tol, passed=passed)


def _unambiguity_residual(e: Ensemble, conclusive: Sequence[ComplexMatrix]) -> float:
    worst = 0.0
    for j, effect in enumerate(conclusive):
        for i, state in enumerate(e.states):
            if i != j:
                worst = max(worst, abs(float(np.real(np.trace(state @ effect)))))
    return worst


def certify_ud_povm(e: Ensemble, povm: Povm, tol: float = UD_CERTIFICATE_TOL,
                    opts: SolverOptions = DEFAULT_SOLVER_OPTIONS,
                    tolerances: ToleranceConfig = DEFAULT_TOLERANCES) -> UdCertificate:
    """
    Decide optimality of a given unambiguous measurement.

    Unambiguity is checked directly; the value of the measurement is compared
    with ``Tr(Z)`` of an optimal dual, which bounds every unambiguous strategy.

    :raises InvalidInputError: without an inconclusive effect or with the
        wrong number of conclusive effects.
    """
    e = _as_ensemble(e)
    if povm.inconclusive_index is None or len(povm.conclusive_outcomes()) != e.count:
        raise InvalidInputError(
            f"an unambiguous POVM needs {e.count} conclusive effects and an inconclusive one")
    optimum = solve_unambiguous(e, opts, tolerances)
    conclusive = list(povm.conclusive_effects())
    primal = max(0.0, float(np.linalg.eigvalsh(hermitize(sum(conclusive)))[-1]) - 1.0)
    reference = check_ud_solution(e, optimum, tol)
    value = success_probability(e, povm)
    unambiguity = _unambiguity_residual(e, conclusive)
    value_gap = abs(value - float(np.real(np.trace(optimum.dual_z))))
    residuals = [primal, reference.z_psd_residual, unambiguity, value_gap] + reference.dual_residuals
    return UdCertificate(primal_residual=primal, dual_residuals=reference.dual_residuals,
                         z_psd_residual=reference.z_psd_residual, unambiguity_residual=unambiguity,
                         value_gap=value_gap, tolerance=tol, passed=bool(max(residuals) <= tol))


def build_product_ud_solution(components: Sequence[Ensemble], local_solutions: Sequence[UdSolution],
                              tol: float = UD_CERTIFICATE_TOL, cap: Optional[int] = None) -> UdSolution:
    """
    Sequence solution from local ones: ``Θ(x) = ⊗ Θ^i_{x_i}``, ``Δ(x) = ⊗ Δ^i_{x_i}``, ``Z = ⊗ Z_i``.

    Tuples are enumerated lexicographically. The value is the primal
    objective of the tensored variables on the sequence ensemble.

    :raises InvalidInputError: if a local solution fails its own certificate.
    :raises CapacityError: beyond the dimension cap.
    """
    if len(components) != len(local_solutions) or not components:
        raise InvalidInputError("need one local solution per component")
    if len(components) == 1:
        return local_solutions[0]
    violations = []
    for index, (component, local) in enumerate(zip(components, local_solutions)):
        certificate = check_ud_solution(component, local, tol)
        if not certificate.passed:
            violations.append(f"component {index}: local residuals {certificate.model_dump()}")
    if violations:
        raise InvalidInputError("local solutions rejected", violations)

    sequence = build_sequence_ensemble(components, materialize=False, cap=cap)
    thetas, deltas, conclusive = [], [], []
    for index in sequence.tuples():
        thetas.append(tensor_subspace([s.thetas[x] for s, x in zip(local_solutions, index)], cap))
        if thetas[-1].rank:
            deltas.append(kron_all([s.deltas[x] for s, x in zip(local_solutions, index)], cap))
        else:
            deltas.append(np.zeros((0, 0), dtype=np.complex128))
        conclusive.append(kron_all([s.conclusive_effect(x) for s, x in zip(local_solutions, index)], cap))
    dual_z = kron_all([s.dual_z for s in local_solutions], cap)
    support = tensor_subspace([s.support for s in local_solutions], cap)
    povm = _assemble_povm(sequence.total_dim, conclusive)
    p = success_probability(sequence, povm, cap=cap)
    return UdSolution(p=p, deltas=deltas, thetas=thetas, dual_z=dual_z, povm=povm, support=support)


def restrict_sequence_frame(components: Sequence[Ensemble], tol: ToleranceConfig = DEFAULT_TOLERANCES,
                            cap: Optional[int] = None
                            ) -> Tuple[List[Ensemble], List[SubspaceBasis], SubspaceBasis]:
    """
    Restrict every component to its joint support.

    :return: the restricted components, their support bases ``B_i`` and the
        product basis ``B_1 ⊗ ... ⊗ B_k``, which spans the joint support of the
        sequence ensemble.
    """
    restricted, bases = [], []
    for component in components:
        r, b = component.restricted_to_support(tol)
        restricted.append(r)
        bases.append(b)
    return restricted, bases, tensor_subspace(bases, cap)


def verify_kernel_decompositions(components: Sequence[Ensemble], indices: Sequence[Sequence[int]],
                                 tol: ToleranceConfig = DEFAULT_TOLERANCES,
                                 cap: Optional[int] = None) -> List[KernelDecompositionCheck]:
    """
    Compare, for each tuple, the conclusive subspace of the sequence computed
    two ways: by intersecting the kernels of all other sequence states, and by
    tensoring the component conclusive subspaces.

    Both sides are computed in the restricted product frame, where the
    sequence states span the space.
    """
    restricted, _, _ = restrict_sequence_frame(components, tol, cap)
    sequence = build_sequence_ensemble(restricted, materialize=True, cap=cap)
    flat = sequence.materialize(cap)
    kernels = [kernel_basis(s, tol) for s in flat.states]
    local_thetas = [[compute_theta(r, j, tol) for j in range(r.count)] for r in restricted]
    checks = []
    for index in indices:
        index = tuple(int(x) for x in index)
        position = sequence.flat_index(index)
        others = [k for t, k in enumerate(kernels) if t != position]
        direct = subspace_intersection(others, tol)
        tensored = tensor_subspace([thetas[x] for thetas, x in zip(local_thetas, index)], cap)
        distance = subspace_distance(direct, tensored)
        checks.append(KernelDecompositionCheck(
            index=list(index),
            equal=bool(distance <= tol.subspace_eq_tol),
            distance=distance,
            rank_direct=direct.rank,
            rank_tensored=tensored.rank,
            tolerance=tol.subspace_eq_tol,
        ))
    return checks


def verify_kernel_decomposition(components: Sequence[Ensemble], index: Sequence[int],
                                tol: ToleranceConfig = DEFAULT_TOLERANCES,
                                cap: Optional[int] = None) -> KernelDecompositionCheck:
    """Single-tuple form of :func:`verify_kernel_decompositions`."""
    return verify_kernel_decompositions(components, [index], tol, cap)[0]


def tensor_witness_residual(vectors: Sequence[npt.ArrayLike], spans: Sequence[SubspaceBasis],
                            cap: Optional[int] = None) -> float:
    """
    Relative distance of ``a_1 ⊗ ... ⊗ a_k`` from ``W_1 ⊗ ... ⊗ W_k``.

    Positive whenever every ``a_i`` lies outside ``W_i``.
    """
    vector = kron_all([np.asarray(v, dtype=np.complex128).reshape(-1, 1) for v in vectors], cap)[:, 0]
    span = tensor_subspace(spans, cap)
    residual = vector - span.columns @ (span.columns.conj().T @ vector)
    return float(np.linalg.norm(residual) / np.linalg.norm(vector))


def _sample_indices(counts: Sequence[int], sample: Optional[int],
                    rng: Optional[np.random.Generator]) -> List[Tuple[int, ...]]:
    indices = list(itertools.product(*(range(c) for c in counts)))
    if sample is None or sample >= len(indices):
        return indices
    rng = rng if rng is not None else np.random.default_rng(0)
    chosen = sorted(rng.choice(len(indices), size=sample, replace=False))
    return [indices[i] for i in chosen]


def verify_product_unambiguous(components: Sequence[Ensemble],
                               opts: SolverOptions = DEFAULT_SOLVER_OPTIONS,
                               tol: ToleranceConfig = DEFAULT_TOLERANCES,
                               product_tol: float = PRODUCT_TOL,
                               certificate_tol: float = UD_CERTIFICATE_TOL,
                               direct_cap: int = 64,
                               dim_cap: Optional[int] = None,
                               max_workers: int = 4,
                               sample_tuples: Optional[int] = None,
                               rng: Optional[np.random.Generator] = None) -> ProductTheoremReport:
    """
    Check that the unambiguous sequence optimum equals the product of the local optima.

    Stages: local solves, the tensored primal/dual solution with its
    certificate on the sequence ensemble, the kernel decomposition on all (or
    ``sample_tuples`` sampled) tuples, the agreement of the tensored and
    directly intersected conclusive subspaces, and the direct solve. The
    direct solve only runs once the subspaces agree and the dimension is
    within ``direct_cap``.

    :raises SolverFailure: if a local solve fails.
    """
    if not components:
        raise InvalidInputError("product verification needs at least one component")
    stages: List[StageResult] = []
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        local = list(executor.map(lambda c: solve_unambiguous(c, opts, tol), components))
    local_values = [s.p for s in local]
    local_certificates = [check_ud_solution(c, s, certificate_tol) for c, s in zip(components, local)]
    product_value = math.prod(local_values)
    stages.append(StageResult(name="local", status="ok"))
    report = ProductTheoremReport(
        paradigm="unambiguous",
        k=len(components),
        local_values=local_values,
        product_value=product_value,
        local_certificates=local_certificates,
        solver_stats=[s.solution.summary() for s in local if s.solution is not None],
        tolerance=product_tol,
        passed=False,
    )

    sequence: Optional[Ensemble] = None
    product_solution: Optional[UdSolution] = None
    try:
        sequence = build_sequence_ensemble(components, materialize=True, cap=dim_cap).materialize(dim_cap)
        product_solution = build_product_ud_solution(components, local, certificate_tol, dim_cap)
        report.tensored_value = product_solution.p
        report.tensored_certificate = check_ud_solution(sequence, product_solution, certificate_tol)
        stages.append(StageResult(name="tensored", status="ok"))
    except CapacityError as e:
        logger.warning("Tensored solution skipped: %s", e)
        stages.append(StageResult(name="tensored", status="skipped", detail=f"skipped (capacity): {e}"))
    except InvalidInputError as e:
        logger.warning("Tensored solution rejected: %s", e)
        stages.append(StageResult(name="tensored", status="failed", detail=str(e)))

    if sequence is not None:
        indices = _sample_indices([c.count for c in components], sample_tuples, rng)
        report.kernel_checks = verify_kernel_decompositions(components, indices, tol, dim_cap)
        failed = [c.index for c in report.kernel_checks if not c.equal]
        stages.append(StageResult(name="kernel-decomposition", status="failed" if failed else "ok",
                                  detail=f"unequal tuples {failed}" if failed else f"{len(indices)} tuples"))

    if sequence is not None and product_solution is not None and len(components) > 1:
        intersected = conclusive_subspaces(sequence, tol)
        report.theta_agreement = all(
            subspace_equal(a, b, tol) for a, b in zip(intersected, product_solution.thetas))
        stages.append(StageResult(
            name="theta", status="ok" if report.theta_agreement else "failed",
            detail="" if report.theta_agreement else "tensored and intersected conclusive subspaces differ"))

    total_dim = int(np.prod([c.dim for c in components]))
    direct: Optional[UdSolution] = None
    if len(components) == 1:
        direct = local[0]
        stages.append(StageResult(name="direct", status="ok", detail="single component"))
    elif report.theta_agreement is False:
        logger.warning("Direct solve skipped: conclusive subspaces differ")
        stages.append(StageResult(name="direct", status="skipped", detail="skipped: conclusive subspaces differ"))
    elif sequence is None or total_dim > direct_cap:
        logger.warning("Direct solve skipped: sequence dimension %d exceeds direct cap %d", total_dim, direct_cap)
        stages.append(StageResult(name="direct", status="skipped",
                                  detail=f"skipped (capacity): dimension {total_dim} exceeds cap {direct_cap}"))
    else:
        try:
            direct = solve_unambiguous(sequence, opts, tol)
            report.direct_certificate = check_ud_solution(sequence, direct, certificate_tol)
            if direct.solution is not None:
                report.solver_stats.append(direct.solution.summary())
            stages.append(StageResult(name="direct", status="ok"))
        except SeqdiscError as e:
            logger.warning("Direct solve failed: %s", e)
            direct = None
            stages.append(StageResult(name="direct", status="failed", detail=str(e)))

    if direct is not None:
        report.direct_value = direct.p
        report.abs_diff = abs(direct.p - product_value)
        if len(components) == 1:
            report.direct_certificate = local_certificates[0]
            report.theta_agreement = True
    report.stages = stages
    certificates = list(local_certificates)
    certificates += [c for c in (report.tensored_certificate, report.direct_certificate) if c is not None]
    report.passed = bool(all(c.passed for c in certificates)
                         and all(s.status != "failed" for s in stages)
                         and report.theta_agreement is not False
                         and (report.abs_diff is None or report.abs_diff <= product_tol)
                         and (report.tensored_value is None
                              or abs(report.tensored_value - product_value) <= product_tol))
    logger.info("Unambiguous product check: product %.10f, direct %s, passed %s",
                product_value, report.direct_value, report.passed)
    return report
