"""
Semidefinite programming over real symmetric PSD blocks.

A :class:`ConicProgram` is put in the standard form::

    maximize    <C, X>
    subject to  A(X) = b,  X ⪰ 0            (X block diagonal)

with dual::

    minimize    b^T y
    subject to  A^T(y) - C = Z ⪰ 0

Inequality rows ``<A_i, X> <= b_i`` get a 1 x 1 slack block, minimization
negates ``C``. The solver is an infeasible primal-dual interior point method
using the HKM search direction with Mehrotra's predictor-corrector. Each block
keeps its constraint coefficients as a sparse ``m x n^2`` matrix so the Schur
complement ``M_ij = Tr(A_i X A_j Z^-1)`` is assembled block by block.

Complex Hermitian programs are expressed through :func:`embed_complex`, which
doubles inner products: coefficient matrices are therefore ``embed(H) / 2``.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg
import scipy.sparse

from .errors import InvalidInputError
from .linalg import ComplexMatrix, as_hermitian, hermitize
from .settings import DEFAULT_SOLVER_OPTIONS, DEFAULT_TOLERANCES, SolverOptions

logger = logging.getLogger("seqdisc")

SYMMETRY_TOL = 1e-12
_MIN_STEP = 1e-12

RealMatrix = npt.NDArray[np.float64]
Coefficient = Union[None, RealMatrix, scipy.sparse.spmatrix]


class Relation(str, Enum):
    EQ = "="
    LE = "<="


class Sense(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


class SdpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERIC_FAILURE = "numeric-failure"


@dataclass(frozen=True, eq=False)
class Constraint:
    """One affine row ``Σ_b <A_b, X_b> (= | <=) rhs``; ``None`` marks a zero block."""

    coefficients: Tuple[Coefficient, ...]
    rhs: float
    relation: Relation = Relation.EQ


@dataclass(frozen=True, eq=False)
class ConicProgram:
    """Block-diagonal SDP in the cone-only form documented in the module docstring."""

    blocks: Tuple[int, ...]
    objective: Tuple[Coefficient, ...]
    constraints: Tuple[Constraint, ...]
    sense: Sense = Sense.MAXIMIZE

    def __post_init__(self):
        if not self.blocks or any(int(n) < 1 for n in self.blocks):
            raise InvalidInputError(f"program needs at least one block of positive size, got {self.blocks}")
        if len(self.objective) != len(self.blocks):
            raise InvalidInputError("objective must give one matrix per block")
        _check_block_matrices(self.objective, self.blocks, "objective")
        for index, constraint in enumerate(self.constraints):
            if len(constraint.coefficients) != len(self.blocks):
                raise InvalidInputError(
                    f"constraint {index} has {len(constraint.coefficients)} blocks, program has {len(self.blocks)}")
            _check_block_matrices(constraint.coefficients, self.blocks, f"constraint {index}")


def _check_block_matrices(matrices: Sequence[Coefficient], sizes: Sequence[int], what: str) -> None:
    for block, (matrix, n) in enumerate(zip(matrices, sizes)):
        if matrix is None:
            continue
        if matrix.shape != (n, n):
            raise InvalidInputError(f"{what}: block {block} has shape {matrix.shape}, expected {(n, n)}")
        asymmetry = abs(matrix - matrix.T)
        asymmetry = asymmetry.max() if asymmetry.size else 0.0
        if asymmetry > SYMMETRY_TOL:
            raise InvalidInputError(f"{what}: block {block} is not symmetric (max asymmetry {asymmetry:.3e})")


@dataclass
class SdpSolution:
    """Result of :func:`solve`; values are reported in the program's own sense."""

    status: SdpStatus
    primal_value: float
    dual_value: float
    primal_blocks: List[RealMatrix]
    dual_blocks: List[RealMatrix]
    dual_multipliers: np.ndarray
    gap: float
    primal_residual: float
    dual_residual: float
    complementarity: float
    iterations: int
    slacks: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "complementarity": self.complementarity,
            "iterations": self.iterations,
        }


# Complex to real embedding


def embed_complex(h: npt.ArrayLike, tol: float = DEFAULT_TOLERANCES.hermiticity_tol) -> RealMatrix:
    """
    Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]`` of a Hermitian operator.

    The map is linear, injective and PSD preserving, and
    ``Tr(embed(A) embed(B)) = 2 Tr(AB)``.
    """
    h = as_hermitian(h, tol)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed(w: npt.ArrayLike) -> ComplexMatrix:
    """
    Inverse of :func:`embed_complex` on its image, averaging the two copies.

    ``W = [[W11, W12], [W21, W22]]`` maps to ``((W11 + W22) + i (W21 - W12)) / 2``.
    """
    w = np.asarray(w, dtype=float)
    d = w.shape[0] // 2
    if w.shape != (2 * d, 2 * d):
        raise InvalidInputError(f"cannot un-embed a matrix of shape {w.shape}")
    w11, w12, w21, w22 = w[:d, :d], w[:d, d:], w[d:, :d], w[d:, d:]
    return hermitize(((w11 + w22) + 1j * (w21 - w12)) / 2)


def embedded_coefficient(h: npt.ArrayLike) -> RealMatrix:
    """``embed(H) / 2``, so that ``<embedded_coefficient(A), embed(B)> = Tr(AB)``."""
    return embed_complex(hermitize(h)) / 2


def hermitian_basis(d: int) -> List[ComplexMatrix]:
    """
    Orthonormal basis of the ``d x d`` Hermitian matrices under ``Re Tr(AB)``.

    Diagonal units first, then for every pair ``k < l`` the symmetric and the
    antisymmetric off-diagonal elements scaled by ``1/sqrt(2)``.
    """
    basis = []
    for k in range(d):
        unit = np.zeros((d, d), dtype=np.complex128)
        unit[k, k] = 1.0
        basis.append(unit)
    scale = 1 / math.sqrt(2)
    for k in range(d):
        for l in range(k + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[k, l] = sym[l, k] = scale
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[k, l], anti[l, k] = -1j * scale, 1j * scale
            basis.extend((sym, anti))
    return basis


def hermitian_coordinates(y: npt.ArrayLike, d: int) -> ComplexMatrix:
    """Operator ``Σ_j y_j E_j`` for the basis of :func:`hermitian_basis`."""
    y = np.asarray(y, dtype=float)
    return sum(coef * e for coef, e in zip(y, hermitian_basis(d)))


# Standard form


@dataclass
class _StandardForm:
    sizes: List[int]
    program_blocks: int
    c: List[RealMatrix]
    a: List[scipy.sparse.csr_matrix]
    b: np.ndarray
    negated: bool

    @classmethod
    def from_program(cls, program: ConicProgram) -> "_StandardForm":
        m = len(program.constraints)
        inequalities = [i for i, con in enumerate(program.constraints) if con.relation is Relation.LE]
        sizes = [int(n) for n in program.blocks] + [1] * len(inequalities)
        sign = -1.0 if program.sense is Sense.MINIMIZE else 1.0
        c = [sign * _dense(obj, n) for obj, n in zip(program.objective, program.blocks)]
        c += [np.zeros((1, 1)) for _ in inequalities]
        a = []
        for block, n in enumerate(program.blocks):
            rows, cols, vals = [], [], []
            for i, constraint in enumerate(program.constraints):
                coef = constraint.coefficients[block]
                if coef is None:
                    continue
                flat = _dense(coef, n).ravel()
                nonzero = np.flatnonzero(flat)
                rows.append(np.full(nonzero.size, i))
                cols.append(nonzero)
                vals.append(flat[nonzero])
            a.append(_csr(rows, cols, vals, (m, n * n)))
        for i in inequalities:
            a.append(scipy.sparse.csr_matrix(([1.0], ([i], [0])), shape=(m, 1)))
        b = np.array([con.rhs for con in program.constraints], dtype=float)
        return cls(sizes, len(program.blocks), c, a, b, program.sense is Sense.MINIMIZE)

    def apply(self, x: Sequence[np.ndarray]) -> np.ndarray:
        """``A(X)``; non-symmetric arguments act through their symmetric part."""
        return sum(a_b @ x_b.ravel() for a_b, x_b in zip(self.a, x))

    def adjoint(self, y: np.ndarray) -> List[RealMatrix]:
        """``A^T(y)`` block by block."""
        return [(a_b.T @ y).reshape(n, n) for a_b, n in zip(self.a, self.sizes)]


def _dense(matrix: Coefficient, n: int) -> RealMatrix:
    if matrix is None:
        return np.zeros((n, n))
    if scipy.sparse.issparse(matrix):
        return matrix.toarray().astype(float)
    return np.asarray(matrix, dtype=float)


def _csr(rows, cols, vals, shape) -> scipy.sparse.csr_matrix:
    if not rows:
        return scipy.sparse.csr_matrix(shape)
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def _inner(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(a_b, b_b) for a_b, b_b in zip(a, b)))


def _frobenius(blocks: Sequence[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(blk * blk)) for blk in blocks))


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``alpha`` keeping ``X + alpha dX ⪰ 0``, via ``L^-1 dX L^-T``."""
    try:
        chol = scipy.linalg.cholesky(x, lower=True)
    except np.linalg.LinAlgError:
        return 0.0
    half = scipy.linalg.solve_triangular(chol, dx, lower=True)
    scaled = scipy.linalg.solve_triangular(chol, half.T, lower=True)
    lam_min = float(scipy.linalg.eigvalsh(_sym(scaled), subset_by_index=[0, 0])[0])
    return math.inf if lam_min >= 0 else -1.0 / lam_min


def _step_length(x: Sequence[np.ndarray], dx: Sequence[np.ndarray]) -> float:
    return min(_max_step(x_b, dx_b) for x_b, dx_b in zip(x, dx))


@dataclass
class _Iterate:
    x: List[RealMatrix]
    y: np.ndarray
    z: List[RealMatrix]


@dataclass
class _Measures:
    pobj: float
    dobj: float
    gap: float
    pres: float
    dres: float
    compl: float

    @property
    def worst(self) -> float:
        return max(self.gap, self.pres, self.dres, self.compl)


class _InteriorPoint:
    """HKM predictor-corrector iterations over a :class:`_StandardForm`."""

    def __init__(self, form: _StandardForm, opts: SolverOptions):
        self.form = form
        self.opts = opts
        self.n_total = sum(form.sizes)
        self.b_scale = 1.0 + float(np.linalg.norm(form.b))
        self.c_scale = 1.0 + _frobenius(form.c)

    def measures(self, it: _Iterate) -> Tuple[_Measures, np.ndarray, List[RealMatrix]]:
        form = self.form
        rp = form.b - form.apply(it.x)
        aty = form.adjoint(it.y)
        rd = [c_b - aty_b + z_b for c_b, aty_b, z_b in zip(form.c, aty, it.z)]
        pobj = _inner(form.c, it.x)
        dobj = float(form.b @ it.y)
        scale = max(1.0, abs(pobj))
        measures = _Measures(
            pobj=pobj,
            dobj=dobj,
            gap=abs(pobj - dobj) / scale,
            pres=float(np.linalg.norm(rp)) / self.b_scale,
            dres=_frobenius(rd) / self.c_scale,
            compl=_inner(it.x, it.z) / scale,
        )
        return measures, rp, rd

    def converged(self, m: _Measures) -> bool:
        return (m.gap <= self.opts.gap_tol and m.compl <= self.opts.gap_tol
                and m.pres <= self.opts.feas_tol and m.dres <= self.opts.feas_tol)

    def schur(self, x: Sequence[np.ndarray], zinv: Sequence[np.ndarray]) -> np.ndarray:
        m = len(self.form.b)
        schur = np.zeros((m, m))
        for a_b, x_b, zinv_b in zip(self.form.a, x, zinv):
            if a_b.nnz == 0:
                continue
            kron = np.kron(x_b, zinv_b)
            schur += np.asarray(a_b @ np.asarray(a_b @ kron).T)
        return _sym(schur)

    def direction(self, factor, it: _Iterate, zinv, rp, rd, rc):
        form = self.form
        rhs = form.apply(rc) + form.apply([x_b @ rd_b @ zinv_b for x_b, rd_b, zinv_b in zip(it.x, rd, zinv)]) - rp
        dy = scipy.linalg.cho_solve(factor, rhs)
        aty = form.adjoint(dy)
        dz = [_sym(aty_b - rd_b) for aty_b, rd_b in zip(aty, rd)]
        dx = [_sym(rc_b - x_b @ dz_b @ zinv_b) for rc_b, x_b, dz_b, zinv_b in zip(rc, it.x, dz, zinv)]
        return dx, dy, dz

    def factor(self, schur: np.ndarray):
        try:
            return scipy.linalg.cho_factor(schur, lower=True)
        except np.linalg.LinAlgError:
            shift = 1e-12 * max(1.0, float(np.trace(schur)) / max(1, schur.shape[0]))
            logger.debug("Schur complement not positive definite, regularizing by %.1e", shift)
            return scipy.linalg.cho_factor(schur + shift * np.eye(schur.shape[0]), lower=True)

    def run(self) -> Tuple[SdpStatus, _Iterate, _Measures, int]:
        form, opts = self.form, self.opts
        tau = opts.init_scale
        it = _Iterate(
            x=[tau * np.eye(n) for n in form.sizes],
            y=np.zeros(len(form.b)),
            z=[tau * np.eye(n) for n in form.sizes],
        )
        best: Optional[Tuple[_Iterate, _Measures, int]] = None
        for iteration in range(opts.max_iterations + 1):
            measures, rp, rd = self.measures(it)
            if best is None or measures.worst < best[1].worst:
                best = (it, measures, iteration)
            logger.debug("it %3d  pobj %+.10e  dobj %+.10e  gap %.2e  pres %.2e  dres %.2e",
                         iteration, measures.pobj, measures.dobj, measures.gap, measures.pres, measures.dres)
            if self.converged(measures):
                return SdpStatus.OPTIMAL, it, measures, iteration
            if float(np.linalg.norm(it.y)) > opts.divergence_threshold:
                logger.info("Dual iterates diverged after %d iterations; program reported infeasible", iteration)
                return SdpStatus.INFEASIBLE, it, measures, iteration
            if iteration == opts.max_iterations:
                break
            try:
                it = self.step(it, rp, rd)
            except np.linalg.LinAlgError as e:
                logger.warning("Interior point step failed at iteration %d: %s", iteration, e)
                break
            if it is None:
                logger.warning("Interior point method stalled at iteration %d", iteration)
                break
        best_it, best_measures, best_iteration = best
        return SdpStatus.NUMERIC_FAILURE, best_it, best_measures, best_iteration

    def step(self, it: _Iterate, rp: np.ndarray, rd: List[RealMatrix]) -> Optional[_Iterate]:
        zinv = [scipy.linalg.cho_solve(scipy.linalg.cho_factor(z_b, lower=True), np.eye(z_b.shape[0]))
                for z_b in it.z]
        zinv = [_sym(zi) for zi in zinv]
        factor = self.factor(self.schur(it.x, zinv))
        mu = _inner(it.x, it.z) / self.n_total

        # predictor
        rc = [-x_b for x_b in it.x]
        dx, dy, dz = self.direction(factor, it, zinv, rp, rd, rc)
        alpha_p = min(1.0, _step_length(it.x, dx))
        alpha_d = min(1.0, _step_length(it.z, dz))
        mu_aff = _inner([x_b + alpha_p * d for x_b, d in zip(it.x, dx)],
                        [z_b + alpha_d * d for z_b, d in zip(it.z, dz)]) / self.n_total
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector
        rc = [sigma * mu * zinv_b - x_b - dx_b @ dz_b @ zinv_b
              for zinv_b, x_b, dx_b, dz_b in zip(zinv, it.x, dx, dz)]
        dx, dy, dz = self.direction(factor, it, zinv, rp, rd, rc)
        alpha_p = min(1.0, self.opts.step_fraction * _step_length(it.x, dx))
        alpha_d = min(1.0, self.opts.step_fraction * _step_length(it.z, dz))
        if alpha_p < _MIN_STEP and alpha_d < _MIN_STEP:
            return None
        return _Iterate(
            x=[_sym(x_b + alpha_p * d) for x_b, d in zip(it.x, dx)],
            y=it.y + alpha_d * dy,
            z=[_sym(z_b + alpha_d * d) for z_b, d in zip(it.z, dz)],
        )


def solve(program: ConicProgram, opts: SolverOptions = DEFAULT_SOLVER_OPTIONS) -> SdpSolution:
    """
    Solve a conic program with the primal-dual interior point method.

    The run is deterministic for identical inputs and options. A
    non-optimal outcome is not raised; it is reported through
    :attr:`SdpSolution.status` with the best iterate attached.

    :param program: the assembled program.
    :param opts: stopping tolerances and iteration controls.
    :return: the solution in the sense of ``program``.
    """
    form = _StandardForm.from_program(program)
    logger.info("Solving SDP: %s, blocks %s, %d constraints",
                program.sense.value, list(program.blocks), len(program.constraints))
    status, it, measures, iterations = _InteriorPoint(form, opts).run()
    sign = -1.0 if form.negated else 1.0
    k = form.program_blocks
    solution = SdpSolution(
        status=status,
        primal_value=sign * measures.pobj,
        dual_value=sign * measures.dobj,
        primal_blocks=it.x[:k],
        dual_blocks=it.z[:k],
        dual_multipliers=sign * it.y,
        gap=measures.gap,
        primal_residual=measures.pres,
        dual_residual=measures.dres,
        complementarity=measures.compl,
        iterations=iterations,
        slacks=np.array([float(s[0, 0]) for s in it.x[k:]]),
    )
    logger.info("SDP %s after %d iterations: primal %.10f, dual %.10f, gap %.2e",
                status.value, iterations, solution.primal_value, solution.dual_value, measures.gap)
    return solution


def dump_program(program: ConicProgram, stream: TextIO) -> None:
    """
    Write the standard form of ``program`` as plain text.

    Layout, one item per line::

        * comment lines
        m                     number of equality rows
        nblocks
        n_1 n_2 ...           block sizes, slack blocks last
        b_1 b_2 ...           right-hand sides
        mat block i j value   upper-triangle entries, 1-based

    ``mat`` is 0 for the maximized objective and ``i`` for constraint row
    ``i``. Minimization programs are written with the objective negated.
    """
    form = _StandardForm.from_program(program)
    m = len(form.b)
    stream.write(f"* seqdisc conic program, sense {program.sense.value}\n")
    stream.write(f"* {form.program_blocks} program blocks, {len(form.sizes) - form.program_blocks} slack blocks\n")
    stream.write(f"{m}\n{len(form.sizes)}\n")
    stream.write(" ".join(str(n) for n in form.sizes) + "\n")
    stream.write(" ".join(repr(float(v)) for v in form.b) + "\n")
    for block, c_b in enumerate(form.c, start=1):
        for i, j in zip(*np.triu_indices(c_b.shape[0])):
            if c_b[i, j] != 0:
                stream.write(f"0 {block} {i + 1} {j + 1} {float(c_b[i, j])!r}\n")
    for block, (a_b, n) in enumerate(zip(form.a, form.sizes), start=1):
        coo = a_b.tocoo()
        for row, col, value in sorted(zip(coo.row, coo.col, coo.data)):
            i, j = divmod(int(col), n)
            if i <= j and value != 0:
                stream.write(f"{row + 1} {block} {i + 1} {j + 1} {float(value)!r}\n")
