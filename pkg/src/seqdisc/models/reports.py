"""
Report models for certificates, feasibility checks and product-theorem runs.

Every numeric verdict carries the tolerance it was tested against.
"""

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field


class HyklCertificate(BaseModel):
    """
    Minimum-error optimality certificate of a measurement.

    ``min_eigenvalues[j]`` is the smallest eigenvalue of
    ``(Γ + Γ^dagger)/2 - q_j σ_j`` with ``Γ = Σ_i q_i σ_i M_i``.
    """
    min_eigenvalues: List[float]
    scale: float
    tolerance: float
    passed: bool


class UdCertificate(BaseModel):
    """
    Residuals of an unambiguous-discrimination primal/dual pair.

    All residuals are nonnegative and zero for an exact optimum.
    """
    primal_residual: float
    dual_residuals: List[float]
    z_psd_residual: float
    unambiguity_residual: float
    value_gap: float
    tolerance: float
    passed: bool


Certificate = Union[HyklCertificate, UdCertificate]


class UdFeasibility(BaseModel):
    """
    Support-criterion verdicts: state ``j`` is identifiable when removing it shrinks the joint support.
    """
    mode: Literal["single", "per-component", "direct"] = "single"
    verdicts: List[bool]
    distances: List[float] = Field(default_factory=list)
    support_rank: Optional[int] = None
    removed_ranks: List[int] = Field(default_factory=list)
    components: List["UdFeasibility"] = Field(default_factory=list)
    tolerance: float
    feasible: bool


class KernelDecompositionCheck(BaseModel):
    """Directly intersected versus tensored conclusive subspace for one sequence tuple."""
    index: List[int]
    equal: bool
    distance: float
    rank_direct: int
    rank_tensored: int
    tolerance: float


class StageResult(BaseModel):
    name: str
    status: Literal["ok", "skipped", "failed"]
    detail: str = ""


class ProductTheoremReport(BaseModel):
    """
    Local optima, their product and the directly computed sequence optimum.

    The report is complete even when a stage failed or the check did not pass;
    ``abs_diff`` is always recorded when the direct value exists.
    """
    paradigm: Literal["min-error", "unambiguous"]
    k: int
    local_values: List[float]
    product_value: float
    direct_value: Optional[float] = None
    abs_diff: Optional[float] = None
    tensored_value: Optional[float] = None
    local_certificates: List[Certificate] = Field(default_factory=list)
    tensored_certificate: Optional[Certificate] = None
    direct_certificate: Optional[Certificate] = None
    theta_agreement: Optional[bool] = None
    kernel_checks: List[KernelDecompositionCheck] = Field(default_factory=list)
    stages: List[StageResult] = Field(default_factory=list)
    solver_stats: List[dict] = Field(default_factory=list)
    tolerance: float
    passed: bool

    def stage(self, name: str) -> Optional[StageResult]:
        return next((s for s in self.stages if s.name == name), None)


UdFeasibility.model_rebuild()
