"""
File models for ensembles and measurements.

Complex numbers are ``[re, im]`` pairs and matrices are row-major lists of
rows. A pure state may be given as a ``vector`` instead of a ``matrix``.
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

ComplexPair = Tuple[float, float]
MatrixRows = List[List[ComplexPair]]


def to_array(rows: MatrixRows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)


def to_rows(matrix: np.ndarray) -> MatrixRows:
    return [[(float(z.real), float(z.imag)) for z in row] for row in np.asarray(matrix)]


def _check_square(rows: MatrixRows, dimension: int, where: str) -> None:
    if len(rows) != dimension:
        raise ValueError(f"{where}: expected {dimension} rows, got {len(rows)}")
    for r, row in enumerate(rows):
        if len(row) != dimension:
            raise ValueError(f"{where}[{r}]: expected {dimension} entries, got {len(row)}")


class StateRecord(BaseModel):
    """One ensemble member; exactly one of ``matrix`` and ``vector`` is set."""
    model_config = ConfigDict(extra="forbid")

    prior: float
    matrix: Optional[MatrixRows] = None
    vector: Optional[List[ComplexPair]] = None

    @model_validator(mode="after")
    def _one_representation(self):
        if (self.matrix is None) == (self.vector is None):
            raise ValueError("exactly one of 'matrix' and 'vector' must be given")
        return self

    def density_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return to_array(self.matrix)
        vector = np.array([complex(re, im) for re, im in self.vector], dtype=np.complex128)
        return np.outer(vector, vector.conj())


class EnsembleFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(ge=1)
    states: List[StateRecord]
    label: Optional[str] = None

    @model_validator(mode="after")
    def _shapes_match_dimension(self):
        for index, state in enumerate(self.states):
            if state.matrix is not None:
                _check_square(state.matrix, self.dimension, f"states[{index}].matrix")
            elif len(state.vector) != self.dimension:
                raise ValueError(
                    f"states[{index}].vector: expected {self.dimension} entries, got {len(state.vector)}")
        return self


class PovmFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(ge=1)
    effects: List[MatrixRows]
    inconclusive_index: Optional[int] = None
    label: Optional[str] = None

    @model_validator(mode="after")
    def _shapes_match_dimension(self):
        for index, effect in enumerate(self.effects):
            _check_square(effect, self.dimension, f"effects[{index}]")
        if self.inconclusive_index is not None and not 0 <= self.inconclusive_index < len(self.effects):
            raise ValueError(f"inconclusive_index {self.inconclusive_index} out of range")
        return self
