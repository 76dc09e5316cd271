"""Optimal discrimination of sequences of quantum states."""

__version__ = "0.1.0"

from .ensemble import (Ensemble, Povm, SequenceEnsemble, build_sequence_ensemble, iid_sequence,  # noqa: E402
                       success_probability, tensor_povm, validate_ensemble, validate_povm)
from .errors import CapacityError, InvalidInputError, NumericError, SeqdiscError, SolverFailure  # noqa: E402
from .minerror import (check_hykl_certificate, helstrom_two, solve_min_error,  # noqa: E402
                       verify_product_min_error)
from .unambiguous import (check_sequence_ud_feasible, check_ud_feasible, check_ud_solution,  # noqa: E402
                          solve_unambiguous, verify_product_unambiguous)

__all__ = [
    "CapacityError",
    "Ensemble",
    "InvalidInputError",
    "NumericError",
    "Povm",
    "SeqdiscError",
    "SequenceEnsemble",
    "SolverFailure",
    "build_sequence_ensemble",
    "check_hykl_certificate",
    "check_sequence_ud_feasible",
    "check_ud_feasible",
    "check_ud_solution",
    "helstrom_two",
    "iid_sequence",
    "solve_min_error",
    "solve_unambiguous",
    "success_probability",
    "tensor_povm",
    "validate_ensemble",
    "validate_povm",
    "verify_product_min_error",
    "verify_product_unambiguous",
]
