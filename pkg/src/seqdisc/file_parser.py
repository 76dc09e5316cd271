"""
Reading and writing ensemble and measurement files.

Files are JSON documents following :class:`~seqdisc.models.files.EnsembleFile`
and :class:`~seqdisc.models.files.PovmFile`. Every problem is reported as an
:class:`~seqdisc.errors.InvalidInputError` naming the file and the offending
line or field.
"""

import json
import logging
import os
from typing import Any, List, Optional

from pydantic import ValidationError

from .ensemble import Ensemble, Povm, validate_ensemble, validate_povm
from .errors import InvalidInputError
from .models.files import EnsembleFile, PovmFile, StateRecord, to_array, to_rows
from .settings import DEFAULT_TOLERANCES, ToleranceConfig

logger = logging.getLogger("seqdisc")


def _field_errors(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        messages.append(f"{location}: {item['msg']}")
    return messages


class FileParser:
    """
    Parser for ensemble and POVM files.
    """

    @staticmethod
    def parse_file(file_path: str, kind: str = "ensemble", tol: ToleranceConfig = DEFAULT_TOLERANCES):
        """
        Parse a file based on its extension into a validated ensemble or POVM.

        :param file_path: Path to the file to parse
        :param kind: ``"ensemble"`` or ``"povm"``
        :return: :class:`Ensemble` or :class:`Povm`
        :raises InvalidInputError: for unsupported formats and invalid content
        """
        extension = os.path.splitext(file_path)[1].lower()
        if extension != ".json":
            logger.warning(f"Unsupported file format: {extension}")
            raise InvalidInputError(f"{file_path}: unsupported file format {extension!r}")
        data = FileParser._load_json(file_path)
        if kind == "ensemble":
            return FileParser._parse_ensemble(file_path, data, tol)
        if kind == "povm":
            return FileParser._parse_povm(file_path, data, tol)
        raise InvalidInputError(f"unknown file kind {kind!r}")

    @staticmethod
    def parse_ensemble(file_path: str, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> Ensemble:
        return FileParser.parse_file(file_path, "ensemble", tol)

    @staticmethod
    def parse_povm(file_path: str, tol: ToleranceConfig = DEFAULT_TOLERANCES) -> Povm:
        return FileParser.parse_file(file_path, "povm", tol)

    @staticmethod
    def _load_json(file_path: str) -> Any:
        try:
            with open(file_path, "r", encoding="utf-8") as file:
                return json.load(file)
        except json.JSONDecodeError as e:
            logger.error(f"Error parsing JSON file {file_path}: {str(e)}")
            raise InvalidInputError(f"{file_path}: line {e.lineno} column {e.colno}: {e.msg}") from e
        except OSError as e:
            raise InvalidInputError(f"{file_path}: {e.strerror or e}") from e

    @staticmethod
    def _parse_ensemble(file_path: str, data: Any, tol: ToleranceConfig) -> Ensemble:
        try:
            document = EnsembleFile.model_validate(data)
        except ValidationError as e:
            violations = _field_errors(e)
            raise InvalidInputError(f"{file_path}: " + "; ".join(violations), violations) from e
        return ensemble_from_file(document, tol, source=file_path)

    @staticmethod
    def _parse_povm(file_path: str, data: Any, tol: ToleranceConfig) -> Povm:
        try:
            document = PovmFile.model_validate(data)
        except ValidationError as e:
            violations = _field_errors(e)
            raise InvalidInputError(f"{file_path}: " + "; ".join(violations), violations) from e
        return povm_from_file(document, tol, source=file_path)


def ensemble_from_file(document: EnsembleFile, tol: ToleranceConfig = DEFAULT_TOLERANCES,
                       source: Optional[str] = None) -> Ensemble:
    """Validate a parsed ensemble document; priors are never renormalized."""
    pairs = [(state.prior, state.density_matrix()) for state in document.states]
    try:
        return validate_ensemble(pairs, label=document.label or "", tol=tol)
    except InvalidInputError as e:
        if source is None:
            raise
        raise InvalidInputError(f"{source}: {e}", e.violations) from e


def ensemble_to_file(e: Ensemble) -> EnsembleFile:
    states = [StateRecord(prior=float(prior), matrix=to_rows(rho)) for prior, rho in zip(e.priors, e.states)]
    return EnsembleFile(dimension=e.dim, states=states, label=e.label or None)


def povm_from_file(document: PovmFile, tol: ToleranceConfig = DEFAULT_TOLERANCES,
                   source: Optional[str] = None) -> Povm:
    effects = [to_array(effect) for effect in document.effects]
    try:
        return validate_povm(effects, document.inconclusive_index, tol)
    except InvalidInputError as e:
        if source is None:
            raise
        raise InvalidInputError(f"{source}: {e}", e.violations) from e


def povm_to_file(povm: Povm, label: Optional[str] = None) -> PovmFile:
    return PovmFile(dimension=povm.dim, effects=[to_rows(m) for m in povm.effects],
                    inconclusive_index=povm.inconclusive_index, label=label)


def write_document(document, file_path: str) -> None:
    """Write an ensemble or POVM document as indented JSON."""
    with open(file_path, "w", encoding="utf-8") as file:
        file.write(document.model_dump_json(indent=2, exclude_none=True))
        file.write("\n")
    logger.info("Wrote %s", file_path)
