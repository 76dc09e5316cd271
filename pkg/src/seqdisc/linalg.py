"""
Dense complex-Hermitian linear algebra.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; subspaces are
carried as :class:`SubspaceBasis` objects holding an orthonormal column basis.
Every rank decision uses a relative cutoff ``rank_tol`` against the largest
eigenvalue or singular value of the operator at hand.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .errors import CapacityError, InvalidInputError, NumericError
from .settings import DEFAULT_TOLERANCES, ToleranceConfig, current_dim_cap

logger = logging.getLogger("seqdisc")

ComplexMatrix = npt.NDArray[np.complex128]

ORTHONORMAL_TOL = 1e-10
_PHASE_FLOOR = 1e-8


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of C^ambient_dim, stored as columns."""

    ambient_dim: int
    columns: ComplexMatrix

    def __post_init__(self):
        columns = np.asarray(self.columns, dtype=np.complex128)
        if columns.ndim != 2 or columns.shape[0] != self.ambient_dim:
            raise InvalidInputError(
                f"basis shape {columns.shape} does not match ambient dimension {self.ambient_dim}")
        if columns.shape[1] > self.ambient_dim:
            raise InvalidInputError(
                f"rank {columns.shape[1]} exceeds ambient dimension {self.ambient_dim}")
        gram = columns.conj().T @ columns
        if columns.shape[1] and np.max(np.abs(gram - np.eye(columns.shape[1]))) > ORTHONORMAL_TOL:
            raise InvalidInputError("basis columns are not orthonormal")
        object.__setattr__(self, "columns", columns)

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @classmethod
    def empty(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=np.complex128))

    @classmethod
    def full(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(ambient_dim, np.eye(ambient_dim, dtype=np.complex128))

    def __repr__(self) -> str:
        return f"<SubspaceBasis rank {self.rank} in C^{self.ambient_dim}>"


class PsdCheck(NamedTuple):
    """Outcome of a PSD decision with its smallest-eigenvalue witness."""

    is_psd: bool
    min_eigenvalue: float


def is_hermitian(matrix: npt.ArrayLike, tol: float = DEFAULT_TOLERANCES.hermiticity_tol) -> bool:
    """Check if matrix is square and Hermitian to ``tol`` (max entry asymmetry)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol)


def as_hermitian(matrix: npt.ArrayLike, tol: float = DEFAULT_TOLERANCES.hermiticity_tol) -> ComplexMatrix:
    """
    Validate a Hermitian operator and return it as an exactly Hermitian array.

    :param matrix: square matrix-like input.
    :param tol: largest admissible ``|H[i][j] - conj(H[j][i])|``.
    :return: ``(H + H^dagger) / 2`` as ``complex128``.
    :raises InvalidInputError: for non-square, non-finite or non-Hermitian input.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("matrix has non-finite entries")
    asymmetry = float(np.max(np.abs(matrix - matrix.conj().T)))
    if asymmetry > tol:
        raise InvalidInputError(f"matrix is not Hermitian (max asymmetry {asymmetry:.3e})")
    return (matrix + matrix.conj().T) / 2


def _fix_phases(vectors: ComplexMatrix) -> ComplexMatrix:
    """Rotate each column so its first non-negligible component is real positive."""
    vectors = np.array(vectors, dtype=np.complex128)
    for col in range(vectors.shape[1]):
        column = vectors[:, col]
        significant = np.nonzero(np.abs(column) > _PHASE_FLOOR)[0]
        if significant.size:
            lead = column[significant[0]]
            vectors[:, col] = column * (abs(lead) / lead)
    return vectors


def eig_hermitian(matrix: npt.ArrayLike,
                  tol: ToleranceConfig = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, ComplexMatrix]:
    """
    Eigendecomposition of a Hermitian operator.

    Eigenvalues are returned in descending order; each eigenvector is phase
    fixed so that its first non-negligible component is real and positive.

    :param matrix: Hermitian operator.
    :param tol: tolerances; ``hermiticity_tol`` gates the input.
    :return: ``(eigenvalues, eigenvectors)`` with eigenvectors as columns.
    :raises InvalidInputError: for non-Hermitian input.
    :raises NumericError: if LAPACK fails to converge.
    """
    hermitian = as_hermitian(matrix, tol.hermiticity_tol)
    try:
        values, vectors = np.linalg.eigh(hermitian)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"Hermitian eigensolver did not converge: {e}") from e
    order = np.argsort(-values, kind="stable")
    return values[order], _fix_phases(vectors[:, order])


def kron(a: npt.ArrayLike, b: npt.ArrayLike, cap: Optional[int] = None) -> ComplexMatrix:
    """
    Kronecker product ``a ⊗ b``.

    :param cap: largest admissible row or column count of the result; defaults
        to the configured dimension cap.
    :raises CapacityError: if the product is larger than ``cap``.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    cap = current_dim_cap() if cap is None else cap
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise CapacityError(max(rows, cols), cap, "Kronecker dimension")
    return np.kron(a, b)


def kron_all(matrices: Sequence[npt.ArrayLike], cap: Optional[int] = None) -> ComplexMatrix:
    """Kronecker product of a non-empty sequence, left to right."""
    if not matrices:
        raise InvalidInputError("kron_all needs at least one matrix")
    return reduce(lambda acc, m: kron(acc, m, cap), matrices[1:], np.asarray(matrices[0], dtype=np.complex128))


def _rank_split(values: np.ndarray, rank_tol: float) -> np.ndarray:
    """Boolean mask of eigenvalues counted as nonzero."""
    top = float(values.max()) if values.size else 0.0
    if top <= 0.0:
        return np.zeros(values.shape, dtype=bool)
    return values >= rank_tol * top


def kernel_basis(rho: npt.ArrayLike, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """
    Orthonormal basis of the kernel of a PSD operator.

    Eigenvalues below ``rank_tol * lambda_max`` count as zero; a zero operator
    has the whole space as kernel.
    """
    values, vectors = eig_hermitian(rho, tol)
    nonzero = _rank_split(values, tol.rank_tol)
    return SubspaceBasis(vectors.shape[0], vectors[:, ~nonzero])


def support_basis(rho: npt.ArrayLike, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """Orthonormal basis of the support (range) of a PSD operator; complement of :func:`kernel_basis`."""
    values, vectors = eig_hermitian(rho, tol)
    nonzero = _rank_split(values, tol.rank_tol)
    return SubspaceBasis(vectors.shape[0], vectors[:, nonzero])


def projector(basis: SubspaceBasis) -> ComplexMatrix:
    """Orthogonal projector ``B B^dagger`` onto the subspace."""
    return basis.columns @ basis.columns.conj().T


def span_basis(vectors: npt.ArrayLike, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """
    Orthonormal basis of the column span of ``vectors``.

    Left singular vectors are kept when their singular value is at least
    ``rank_tol`` times the largest one.
    """
    vectors = np.asarray(vectors, dtype=np.complex128)
    if vectors.ndim != 2:
        raise InvalidInputError(f"expected a matrix of column vectors, got shape {vectors.shape}")
    ambient = vectors.shape[0]
    if vectors.shape[1] == 0:
        return SubspaceBasis.empty(ambient)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    keep = _rank_split(s, tol.rank_tol)
    return SubspaceBasis(ambient, _fix_phases(u[:, keep]))


def _check_same_ambient(bases: Sequence[SubspaceBasis]) -> int:
    if not bases:
        raise InvalidInputError("need at least one subspace")
    dims = {b.ambient_dim for b in bases}
    if len(dims) != 1:
        raise InvalidInputError(f"ambient dimension mismatch: {sorted(dims)}")
    return dims.pop()


def orthogonal_complement(basis: SubspaceBasis, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """Orthonormal basis of the orthogonal complement."""
    d = basis.ambient_dim
    if basis.rank == 0:
        return SubspaceBasis.full(d)
    if basis.rank == d:
        return SubspaceBasis.empty(d)
    values, vectors = eig_hermitian(np.eye(d) - projector(basis), tol)
    return SubspaceBasis(d, vectors[:, values > 0.5])


def subspace_sum(*bases: SubspaceBasis, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """Span of the union of the subspaces, re-orthonormalized."""
    d = _check_same_ambient(bases)
    stacked = np.hstack([b.columns for b in bases]) if bases else np.zeros((d, 0))
    return span_basis(stacked, tol)


def subspace_intersection(bases: Sequence[SubspaceBasis],
                          tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """
    Intersection of subspaces, computed as the complement of the sum of complements.

    :raises InvalidInputError: for an empty list or mismatched ambient dimensions.
    """
    _check_same_ambient(bases)
    complements = [orthogonal_complement(b, tol) for b in bases]
    return orthogonal_complement(subspace_sum(*complements, tol=tol), tol)


def subspace_distance(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """Frobenius distance between the two orthogonal projectors."""
    _check_same_ambient([a, b])
    return float(np.linalg.norm(projector(a) - projector(b)))


def subspace_equal(a: SubspaceBasis, b: SubspaceBasis,
                   tol: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """Subspaces are equal when their projectors agree within ``subspace_eq_tol``."""
    return subspace_distance(a, b) <= tol.subspace_eq_tol


def subspace_contains(outer: SubspaceBasis, inner: SubspaceBasis,
                      tol: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """True when ``inner`` lies inside ``outer`` within ``subspace_eq_tol``."""
    _check_same_ambient([outer, inner])
    residual = inner.columns - projector(outer) @ inner.columns
    return float(np.linalg.norm(residual)) <= tol.subspace_eq_tol


def tensor_subspace(bases: Sequence[SubspaceBasis], cap: Optional[int] = None) -> SubspaceBasis:
    """Tensor product ``W_1 ⊗ ... ⊗ W_k`` of subspaces via Kronecker products of their bases."""
    if not bases:
        raise InvalidInputError("tensor_subspace needs at least one subspace")
    ambient = int(np.prod([b.ambient_dim for b in bases]))
    cap = current_dim_cap() if cap is None else cap
    if ambient > cap:
        raise CapacityError(ambient, cap, "Kronecker dimension")
    if any(b.rank == 0 for b in bases):
        return SubspaceBasis.empty(ambient)
    columns = reduce(np.kron, [b.columns for b in bases])
    return SubspaceBasis(ambient, columns)


def trace_norm(matrix: npt.ArrayLike, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator."""
    hermitian = as_hermitian(matrix, tol.hermiticity_tol)
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian))))


def is_psd(matrix: npt.ArrayLike, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> PsdCheck:
    """
    Decide ``H ⪰ 0`` within ``psd_tol`` scaled by ``max(1, lambda_max)``.

    :return: the verdict and the smallest eigenvalue as a witness.
    """
    hermitian = as_hermitian(matrix, tol.hermiticity_tol)
    values = np.linalg.eigvalsh(hermitian)
    lam_min, lam_max = float(values[0]), float(values[-1])
    return PsdCheck(lam_min >= -tol.psd_tol * max(1.0, lam_max), lam_min)


def psd_sqrt_inv(matrix: npt.ArrayLike, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> ComplexMatrix:
    """Inverse square root of a PSD operator on its support (zero on the kernel)."""
    values, vectors = eig_hermitian(matrix, tol)
    nonzero = _rank_split(values, tol.rank_tol)
    scaled = np.zeros_like(values)
    scaled[nonzero] = 1.0 / np.sqrt(values[nonzero])
    return (vectors * scaled) @ vectors.conj().T


def hermitize(matrix: npt.ArrayLike) -> ComplexMatrix:
    """``(M + M^dagger) / 2`` without validation."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    return (matrix + matrix.conj().T) / 2


def ket_bra(vector: npt.ArrayLike) -> ComplexMatrix:
    """Projector ``|v><v|`` of a normalized copy of ``vector``."""
    vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise InvalidInputError("cannot normalize the zero vector")
    vector = vector / norm
    return np.outer(vector, vector.conj())


def joint_support(operators: Iterable[npt.ArrayLike],
                  tol: ToleranceConfig = DEFAULT_TOLERANCES) -> SubspaceBasis:
    """Support of a set of PSD operators, taken as the support of their average."""
    operators: List[ComplexMatrix] = [np.asarray(op, dtype=np.complex128) for op in operators]
    if not operators:
        raise InvalidInputError("joint_support needs at least one operator")
    return support_basis(sum(operators) / len(operators), tol)
