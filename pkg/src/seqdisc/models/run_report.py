"""
Machine-readable report of one command-line run.

Reports are byte-stable: identical inputs, options and seed give identical
JSON. Wall time is only recorded on request.
"""

from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_serializer


def to_plain(value: Any) -> Any:
    """Replace numpy scalars and arrays, however deeply nested, by Python values."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {key: to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    return value


class InputDigest(BaseModel):
    path: str
    sha256: str


class RunReport(BaseModel):
    """
    Represents the outcome of one command with every tolerance it was tested against.
    """
    tool: str = "seqdisc"
    version: str
    command: List[str]
    mode: str
    inputs: List[InputDigest] = Field(default_factory=list)
    values: Dict[str, Any] = Field(default_factory=dict)
    certificates: Dict[str, Any] = Field(default_factory=dict)
    solver: List[Dict[str, Any]] = Field(default_factory=list)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    seed: Optional[int] = None
    rng: Optional[str] = None
    wall_time_s: Optional[float] = None
    status: Literal["pass", "fail", "error"] = "pass"
    errors: List[str] = Field(default_factory=list)

    @field_serializer("values", "certificates", "solver")
    def _serialize_free_form(self, value: Any) -> Any:
        return to_plain(value)
