from .files import EnsembleFile, PovmFile, StateRecord
from .reports import (HyklCertificate, KernelDecompositionCheck, ProductTheoremReport, StageResult, UdCertificate,
                      UdFeasibility)
from .run_report import InputDigest, RunReport

__all__ = [
    "EnsembleFile",
    "HyklCertificate",
    "InputDigest",
    "KernelDecompositionCheck",
    "PovmFile",
    "ProductTheoremReport",
    "RunReport",
    "StageResult",
    "StateRecord",
    "UdCertificate",
    "UdFeasibility",
]
