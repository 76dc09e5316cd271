"""
Seeded random ensembles for property checks and ``--random`` runs.

Pure states are Haar distributed, mixed states come from a normalized
Wishart construction ``G G^dagger / Tr`` with ``G`` of shape ``d x rank`` (so
``rank < d`` leaves a nontrivial kernel), and priors are flat Dirichlet
samples. Every generator is a NumPy ``PCG64`` stream.
"""

import re
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import unitary_group

from .ensemble import Ensemble, validate_ensemble
from .errors import InvalidInputError
from .linalg import ComplexMatrix, hermitize, ket_bra, projector, span_basis

RNG_NAME = "numpy.PCG64"

StateKind = Literal["pure", "mixed"]


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_unitary(d: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-random unitary."""
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=np.complex128)
    return unitary_group.rvs(d, random_state=rng)


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vector drawn from the unitarily invariant distribution on the sphere."""
    vector = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return vector / np.linalg.norm(vector)


def random_mixed_state(d: int, rng: np.random.Generator, rank: Optional[int] = None,
                       floor: float = 0.05) -> ComplexMatrix:
    """
    Density operator ``G G^dagger / Tr`` of the given rank.

    ``floor`` mixes in the normalized projector onto the support, bounding the
    nonzero eigenvalues away from zero so rank decisions stay unambiguous.
    """
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise InvalidInputError(f"rank {rank} outside [1, {d}]")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    wishart = g @ g.conj().T
    wishart /= np.real(np.trace(wishart))
    support = projector(span_basis(g))
    return hermitize((1 - floor) * wishart + floor * support / rank)


def random_priors(n: int, rng: np.random.Generator) -> np.ndarray:
    """Flat Dirichlet sample, renormalized so the sum is 1 to rounding."""
    priors = rng.dirichlet(np.ones(n))
    return priors / priors.sum()


def random_ensemble(d: int, count: int, rng: np.random.Generator, kind: StateKind = "mixed",
                    rank: Optional[int] = None, equal_priors: bool = False, label: str = "") -> Ensemble:
    """Validated random ensemble of ``count`` states on ``C^d``."""
    priors = np.full(count, 1.0 / count) if equal_priors else random_priors(count, rng)
    if kind == "pure":
        states = [ket_bra(random_pure_state(d, rng)) for _ in range(count)]
    else:
        states = [random_mixed_state(d, rng, rank) for _ in range(count)]
    return validate_ensemble(list(zip(priors, states)), label=label or f"random-{kind}-d{d}-l{count}")


def dependent_pure_ensemble(d: int, count: int, rng: np.random.Generator) -> Ensemble:
    """Pure states with one vector a combination of the others, so unambiguous discrimination fails."""
    if count < 2:
        raise InvalidInputError("need at least two states")
    vectors = [random_pure_state(d, rng) for _ in range(count - 1)]
    weights = rng.standard_normal(len(vectors)) + 1j * rng.standard_normal(len(vectors))
    vectors.append(sum(w * v for w, v in zip(weights, vectors)))
    priors = random_priors(count, rng)
    return validate_ensemble([(p, ket_bra(v)) for p, v in zip(priors, vectors)], label=f"dependent-d{d}-l{count}")


class RandomSpec(BaseModel):
    """Parameters of ``--random d=D l=L k=K seed=S trials=T [kind=pure|mixed] [rank=R]``."""
    d: int = Field(ge=1)
    l: int = Field(ge=2)
    k: int = Field(1, ge=1)
    seed: int = 0
    trials: int = Field(1, ge=1)
    kind: StateKind = "mixed"
    rank: Optional[int] = None

    def components(self, rng: np.random.Generator) -> List[Ensemble]:
        rank = self.rank if self.rank is not None else (max(1, self.d - 1) if self.kind == "mixed" else None)
        return [random_ensemble(self.d, self.l, rng, self.kind, rank) for _ in range(self.k)]


_TOKEN = re.compile(r"^(\w+)=(\S+)$")


def parse_random_spec(tokens: List[str]) -> RandomSpec:
    """
    Parse ``key=value`` tokens into a :class:`RandomSpec`.

    :raises InvalidInputError: for malformed tokens or out-of-range values.
    """
    values = {}
    for token in tokens:
        match = _TOKEN.match(token)
        if not match:
            raise InvalidInputError(f"--random expects key=value tokens, got {token!r}")
        values[match.group(1)] = match.group(2)
    try:
        return RandomSpec.model_validate(values)
    except ValueError as e:
        raise InvalidInputError(f"--random: {e}") from e
