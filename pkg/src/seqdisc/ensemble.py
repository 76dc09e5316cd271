"""
Ensembles, sequence ensembles and measurements.

An :class:`Ensemble` is a finite list of prior/density-operator pairs on one
Hilbert space. A :class:`SequenceEnsemble` is the product ensemble of
independently drawn components: tuple ``(x_1, ..., x_k)`` carries prior
``∏ η^i_{x_i}`` and state ``ρ^1_{x_1} ⊗ ... ⊗ ρ^k_{x_k}``. Tuples are always
enumerated in lexicographic order.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from .errors import CapacityError, InvalidInputError, NumericError
from .linalg import (ComplexMatrix, SubspaceBasis, as_hermitian, hermitize, is_psd,
                     joint_support, kron_all, psd_sqrt_inv)
from .settings import DEFAULT_TOLERANCES, ToleranceConfig, current_dim_cap

logger = logging.getLogger("seqdisc")

SequenceIndex = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Validated ensemble; build it with :func:`validate_ensemble`."""

    dim: int
    priors: np.ndarray
    states: np.ndarray  # shape (count, dim, dim)
    label: str = ""

    @property
    def count(self) -> int:
        return len(self.priors)

    def weighted_states(self) -> np.ndarray:
        """``q_j σ_j`` for every state, shape (count, dim, dim)."""
        return self.priors[:, None, None] * self.states

    def restricted_to_support(self, tol: ToleranceConfig = DEFAULT_TOLERANCES
                              ) -> Tuple["Ensemble", SubspaceBasis]:
        """
        Conjugate every state into the joint support ``B`` of the ensemble.

        :return: the ensemble of ``B^dagger σ_j B`` on ``C^rank(B)`` and the basis ``B``.
        """
        basis = joint_support(self.states, tol)
        b = basis.columns
        restricted = np.array([hermitize(b.conj().T @ s @ b) for s in self.states])
        return Ensemble(basis.rank, self.priors.copy(), restricted, self.label), basis


def validate_ensemble(states: Sequence[Tuple[float, npt.ArrayLike]],
                      label: str = "",
                      tol: ToleranceConfig = DEFAULT_TOLERANCES) -> Ensemble:
    """
    Validate ``(prior, density operator)`` pairs into an :class:`Ensemble`.

    Priors are never renormalized and zero priors are rejected.

    :raises InvalidInputError: listing every violated invariant.
    """
    violations: List[str] = []
    if len(states) < 2:
        violations.append(f"ensemble needs at least 2 states, got {len(states)}")
    priors: List[float] = []
    matrices: List[ComplexMatrix] = []
    dims = set()
    for index, (prior, rho) in enumerate(states):
        prior = float(prior)
        if not np.isfinite(prior) or prior <= 0.0 or prior > 1.0:
            violations.append(f"state {index}: prior {prior!r} outside (0, 1]")
        priors.append(prior)
        try:
            matrix = as_hermitian(rho, tol.hermiticity_tol)
        except InvalidInputError as e:
            violations.append(f"state {index}: {e}")
            continue
        dims.add(matrix.shape[0])
        trace = float(np.real(np.trace(matrix)))
        if abs(trace - 1.0) > tol.trace_tol:
            violations.append(f"state {index}: trace {trace:.12g} is not 1")
        check = is_psd(matrix, tol)
        if not check.is_psd:
            violations.append(f"state {index}: not PSD (min eigenvalue {check.min_eigenvalue:.3e})")
        matrices.append(matrix)
    if len(dims) > 1:
        violations.append(f"states live on different dimensions {sorted(dims)}")
    total = sum(priors)
    if priors and abs(total - 1.0) > tol.prior_tol:
        violations.append(f"priors sum {total:.12g}")
    if violations:
        raise InvalidInputError("; ".join(violations), violations)
    return Ensemble(dims.pop(), np.array(priors), np.array(matrices), label)


@dataclass(frozen=True, eq=False)
class SequenceEnsemble:
    """Product ensemble of independently drawn component ensembles."""

    components: Tuple[Ensemble, ...]
    materialized: Optional[Ensemble] = field(default=None)

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def total_count(self) -> int:
        return int(np.prod([c.count for c in self.components]))

    @property
    def total_dim(self) -> int:
        return int(np.prod([c.dim for c in self.components]))

    @property
    def dim(self) -> int:
        return self.total_dim

    @property
    def count(self) -> int:
        return self.total_count

    def tuples(self) -> Iterator[SequenceIndex]:
        """Sequence indices in lexicographic order."""
        return itertools.product(*(range(c.count) for c in self.components))

    def prior(self, index: SequenceIndex) -> float:
        self._check_index(index)
        return float(np.prod([c.priors[x] for c, x in zip(self.components, index)]))

    def state(self, index: SequenceIndex, cap: Optional[int] = None) -> ComplexMatrix:
        self._check_index(index)
        return kron_all([c.states[x] for c, x in zip(self.components, index)], cap)

    def flat_index(self, index: SequenceIndex) -> int:
        """Position of ``index`` in the lexicographic enumeration."""
        self._check_index(index)
        return int(np.ravel_multi_index(index, [c.count for c in self.components]))

    def materialize(self, cap: Optional[int] = None) -> Ensemble:
        """The materialized product ensemble; built on demand under the cap."""
        if self.materialized is not None:
            return self.materialized
        return _materialize(self.components, cap)

    def _check_index(self, index: SequenceIndex) -> None:
        if len(index) != self.k or any(not 0 <= x < c.count for c, x in zip(self.components, index)):
            raise InvalidInputError(f"sequence index {tuple(index)} out of range")


def _materialize(components: Sequence[Ensemble], cap: Optional[int]) -> Ensemble:
    if len(components) == 1:
        return components[0]
    cap = current_dim_cap() if cap is None else cap
    total_dim = int(np.prod([c.dim for c in components]))
    if total_dim > cap:
        raise CapacityError(total_dim, cap, "sequence ensemble dimension")
    priors = reduce(np.kron, [c.priors for c in components])
    states = [kron_all([c.states[x] for c, x in zip(components, index)], cap)
              for index in itertools.product(*(range(c.count) for c in components))]
    label = " x ".join(c.label or "E" for c in components)
    return Ensemble(total_dim, priors, np.array(states), label)


def build_sequence_ensemble(components: Sequence[Ensemble], materialize: bool = False,
                            cap: Optional[int] = None) -> SequenceEnsemble:
    """
    Build the sequence ensemble of independently drawn components.

    :param materialize: build every tuple state eagerly (subject to ``cap``).
    :raises CapacityError: when materializing beyond the dimension cap.
    """
    if not components:
        raise InvalidInputError("a sequence needs at least one component ensemble")
    components = tuple(components)
    materialized = _materialize(components, cap) if materialize else None
    logger.debug("Sequence ensemble: k=%d, total_count=%d, total_dim=%d",
                 len(components), int(np.prod([c.count for c in components])),
                 int(np.prod([c.dim for c in components])))
    return SequenceEnsemble(components, materialized)


def iid_sequence(ensemble: Ensemble, k: int, materialize: bool = False,
                 cap: Optional[int] = None) -> SequenceEnsemble:
    """The i.i.d. sequence ensemble of ``k`` independent copies of ``ensemble``."""
    if k < 1:
        raise InvalidInputError(f"sequence length must be positive, got {k}")
    return build_sequence_ensemble([ensemble] * k, materialize, cap)


@dataclass(frozen=True, eq=False)
class Povm:
    """Validated measurement; build it with :func:`validate_povm`."""

    dim: int
    effects: np.ndarray  # shape (outcomes, dim, dim)
    inconclusive_index: Optional[int] = None

    @property
    def outcome_count(self) -> int:
        return len(self.effects)

    def conclusive_outcomes(self) -> List[int]:
        return [o for o in range(self.outcome_count) if o != self.inconclusive_index]

    def conclusive_effects(self) -> np.ndarray:
        return self.effects[self.conclusive_outcomes()]

    def normalized(self, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> "Povm":
        """
        Restore exact completeness by the congruence ``S^{-1/2} M_i S^{-1/2}``, ``S = Σ M_i``.

        Positivity and the supports of the effects are preserved.
        """
        total = hermitize(self.effects.sum(axis=0))
        root = psd_sqrt_inv(total, tol)
        effects = np.array([hermitize(root @ m @ root) for m in self.effects])
        return Povm(self.dim, effects, self.inconclusive_index)


def validate_povm(effects: Sequence[npt.ArrayLike], inconclusive_index: Optional[int] = None,
                  tol: ToleranceConfig = DEFAULT_TOLERANCES) -> Povm:
    """
    Validate measurement effects: each PSD within ``psd_tol``, summing to identity.

    :raises InvalidInputError: listing every violated invariant.
    """
    violations: List[str] = []
    if not effects:
        raise InvalidInputError("a POVM needs at least one effect")
    matrices: List[ComplexMatrix] = []
    for index, effect in enumerate(effects):
        try:
            matrix = as_hermitian(effect, tol.hermiticity_tol)
        except InvalidInputError as e:
            violations.append(f"effect {index}: {e}")
            continue
        check = is_psd(matrix, tol)
        if not check.is_psd:
            violations.append(f"effect {index}: not PSD (min eigenvalue {check.min_eigenvalue:.3e})")
        matrices.append(matrix)
    if violations:
        raise InvalidInputError("; ".join(violations), violations)
    dims = {m.shape[0] for m in matrices}
    if len(dims) != 1:
        raise InvalidInputError(f"effects live on different dimensions {sorted(dims)}")
    dim = dims.pop()
    deviation = float(np.max(np.abs(sum(matrices) - np.eye(dim))))
    if deviation > tol.completeness_tol:
        raise InvalidInputError(f"effects do not sum to identity (max deviation {deviation:.3e})")
    if inconclusive_index is not None and not 0 <= inconclusive_index < len(matrices):
        raise InvalidInputError(f"inconclusive index {inconclusive_index} out of range")
    return Povm(dim, np.array(matrices), inconclusive_index)


def tensor_povm(povms: Sequence[Povm], cap: Optional[int] = None) -> Povm:
    """
    Tensor product measurement ``{M^1_{x_1} ⊗ ... ⊗ M^k_{x_k}}``.

    Effects are listed in lexicographic tuple order. When some factor has an
    inconclusive outcome, every product touching one is merged into a single
    inconclusive effect placed last.
    """
    if not povms:
        raise InvalidInputError("tensor_povm needs at least one POVM")
    if len(povms) == 1:
        return povms[0]
    cap = current_dim_cap() if cap is None else cap
    total_dim = int(np.prod([p.dim for p in povms]))
    if total_dim > cap:
        raise CapacityError(total_dim, cap, "tensored POVM dimension")
    conclusive: List[ComplexMatrix] = []
    inconclusive = np.zeros((total_dim, total_dim), dtype=np.complex128)
    has_inconclusive = any(p.inconclusive_index is not None for p in povms)
    for outcome in itertools.product(*(range(p.outcome_count) for p in povms)):
        effect = kron_all([p.effects[o] for p, o in zip(povms, outcome)], cap)
        if any(o == p.inconclusive_index for p, o in zip(povms, outcome)):
            inconclusive += effect
        else:
            conclusive.append(effect)
    if has_inconclusive:
        return Povm(total_dim, np.array(conclusive + [inconclusive]), len(conclusive))
    return Povm(total_dim, np.array(conclusive), None)


def tensor_assignment(assignments: Sequence[Mapping[int, int]],
                      counts: Sequence[int]) -> Dict[int, int]:
    """
    Product outcome-to-state map for a :func:`tensor_povm` of local measurements.

    :param assignments: per-component conclusive outcome -> state index maps, with
        outcomes numbered among the component's conclusive outcomes.
    :param counts: state counts ``ℓ_i`` of the components.
    :return: map from conclusive product outcome to flat (lexicographic) tuple index.
    """
    result: Dict[int, int] = {}
    keys = [sorted(a) for a in assignments]
    for flat_outcome, outcome in enumerate(itertools.product(*keys)):
        states = tuple(a[o] for a, o in zip(assignments, outcome))
        result[flat_outcome] = int(np.ravel_multi_index(states, counts))
    return result


def identity_assignment(povm: Povm) -> Dict[int, int]:
    """Conclusive outcome ``n`` (in order) names state ``n``."""
    return {n: n for n in range(len(povm.conclusive_outcomes()))}


EnsembleLike = Union[Ensemble, SequenceEnsemble]


def _clamp_probability(value: float) -> float:
    if -1e-9 <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + 1e-9:
        return 1.0
    if not 0.0 <= value <= 1.0:
        logger.warning("Probability %.12g lies outside [0, 1] beyond rounding", value)
    return value


def success_probability(ensemble: EnsembleLike, povm: Povm,
                        assignment: Optional[Mapping[int, int]] = None,
                        cap: Optional[int] = None) -> float:
    """
    Probability that the named state is the true one, ``Σ_o η_{a(o)} Tr(ρ_{a(o)} M_o)``.

    :param assignment: conclusive outcome (numbered among conclusive outcomes) ->
        state index; identity when omitted. For a sequence ensemble the state
        index is the flat lexicographic tuple index.
    :raises InvalidInputError: on dimension mismatch or incomplete assignment.
    """
    if povm.dim != ensemble.dim:
        raise InvalidInputError(f"POVM dimension {povm.dim} does not match ensemble dimension {ensemble.dim}")
    conclusive = povm.conclusive_outcomes()
    assignment = dict(identity_assignment(povm) if assignment is None else assignment)
    missing = [n for n in range(len(conclusive)) if n not in assignment]
    if missing:
        raise InvalidInputError(f"assignment misses outcomes {missing}")
    total = 0.0
    for n, outcome in enumerate(conclusive):
        state_index = assignment[n]
        if not 0 <= state_index < ensemble.count:
            raise InvalidInputError(f"outcome {n} assigned to unknown state {state_index}")
        if isinstance(ensemble, SequenceEnsemble):
            index = tuple(int(x) for x in np.unravel_index(state_index, [c.count for c in ensemble.components]))
            prior, rho = ensemble.prior(index), ensemble.state(index, cap)
        else:
            prior, rho = ensemble.priors[state_index], ensemble.states[state_index]
        total += prior * float(np.real(np.trace(rho @ povm.effects[outcome])))
    return _clamp_probability(total)


def validate_cost_matrix(entries: npt.ArrayLike) -> np.ndarray:
    """Validate a square finite real cost matrix."""
    matrix = np.asarray(entries, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputError(f"cost matrix must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("cost matrix has non-finite entries")
    return matrix


def average_cost(ensemble: EnsembleLike, povm: Povm, cost: npt.ArrayLike,
                 cap: Optional[int] = None) -> float:
    """
    Average cost ``Σ_ij q_i C_ij Tr(σ_i M_j)`` of a measurement.

    :raises InvalidInputError: when ``cost`` is not N x N with N the state count
        and the conclusive effect count.
    """
    cost = validate_cost_matrix(cost)
    conclusive = povm.conclusive_effects()
    n = ensemble.count
    if cost.shape != (n, n) or len(conclusive) != n:
        raise InvalidInputError(
            f"cost matrix shape {cost.shape} needs {n} states and {n} conclusive effects, "
            f"got {len(conclusive)} effects")
    if povm.dim != ensemble.dim:
        raise InvalidInputError(f"POVM dimension {povm.dim} does not match ensemble dimension {ensemble.dim}")
    if isinstance(ensemble, SequenceEnsemble):
        ensemble = ensemble.materialize(cap)
    weighted = ensemble.weighted_states()
    # overlaps[i, j] = q_i Tr(σ_i M_j)
    overlaps = np.real(np.einsum("iab,jba->ij", weighted, conclusive))
    value = float(np.sum(cost * overlaps))
    if not np.isfinite(value):
        raise NumericError("average cost is not finite")
    return value
