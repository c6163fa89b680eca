"""Problem-spec validation with key suggestions."""

import json
import logging
from difflib import get_close_matches
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import ValidationError

from .exceptions import FileProcessingError, ProblemValidationError
from .models import CantorSetSpec, InitialConditions, ProblemSpec

logger = logging.getLogger(__name__)

REQUIRED_KEYS = {
    "const": ("a", "b", "c"),
    "linear": ("P", "Q", "R", "f1"),
}


class ProblemValidator:
    """Validates problem documents and suggests corrections for misspelled keys."""

    def __init__(self, cutoff: float = 0.6):
        self.cutoff = cutoff
        self.problem_keys = list(ProblemSpec.model_fields)
        self.ic_keys = list(InitialConditions.model_fields)
        self.set_keys = list(CantorSetSpec.model_fields)

    def suggest(self, key: str, known: List[str]) -> str:
        """Closest known key, or an empty string."""
        for candidate in known:
            if candidate.lower() == key.lower():
                return candidate
        matches = get_close_matches(key, known, n=1, cutoff=self.cutoff)
        return matches[0] if matches else ""

    def check_keys(self, document: Dict[str, Any]) -> Tuple[List[str], List[str], Dict[str, str]]:
        """
        Compare a document's keys with the problem schema.

        Returns:
            Tuple of (missing_keys, unknown_keys, suggestions)
        """
        unknown: List[str] = []
        suggestions: Dict[str, str] = {}

        def scan(section: Dict[str, Any], known: List[str], prefix: str) -> None:
            for key in section:
                if key in known:
                    continue
                unknown.append(prefix + key)
                suggestion = self.suggest(key, known)
                if suggestion:
                    suggestions[prefix + key] = prefix + suggestion

        scan(document, self.problem_keys, "")
        if isinstance(document.get("ic"), dict):
            scan(document["ic"], self.ic_keys, "ic.")
        if isinstance(document.get("set"), dict):
            scan(document["set"], self.set_keys, "set.")

        kind = document.get("type", "const")
        required = REQUIRED_KEYS.get(kind, ())
        missing = [key for key in required if document.get(key) is None]
        # A misspelled required key is reported once, as unknown with a suggestion.
        missing = [key for key in missing if key not in suggestions.values()]
        return missing, unknown, suggestions

    def validate(self, document: Any, name: str = "") -> ProblemSpec:
        """Validate one problem document."""
        if not isinstance(document, dict):
            raise ProblemValidationError(f"problem {name or '?'} must be a JSON object")
        missing, unknown, suggestions = self.check_keys(document)
        if missing or unknown:
            details = []
            if missing:
                details.append(f"missing {missing}")
            for key in unknown:
                hint = f" (did you mean '{suggestions[key]}'?)" if key in suggestions else ""
                details.append(f"unknown key '{key}'{hint}")
            raise ProblemValidationError(
                f"invalid problem {name or document.get('name') or '?'}: {'; '.join(details)}",
                missing_keys=missing,
                unknown_keys=unknown,
                suggestions=suggestions,
            )
        try:
            problem = ProblemSpec.model_validate(document)
        except ValidationError as e:
            raise ProblemValidationError(f"invalid problem {name or '?'}: {e}")
        if problem.name is None and name:
            problem = problem.model_copy(update={"name": name})
        return problem

    def validate_set(self, document: Any) -> CantorSetSpec:
        if not isinstance(document, dict):
            raise ProblemValidationError("set spec must be a JSON object")
        unknown = [key for key in document if key not in self.set_keys]
        if unknown:
            suggestions = {k: self.suggest(k, self.set_keys) for k in unknown}
            raise ProblemValidationError(
                f"unknown set keys {unknown}",
                unknown_keys=unknown,
                suggestions={k: v for k, v in suggestions.items() if v},
            )
        try:
            return CantorSetSpec.model_validate(document)
        except ValidationError as e:
            raise ProblemValidationError(f"invalid set spec: {e}")


def _read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FileProcessingError(f"Could not read {path}: {e}", file_path=str(path))


def load_problems(path: Union[str, Path]) -> List[ProblemSpec]:
    """Read a problem file holding one object, a list, or ``{"problems": [...]}``."""
    path = Path(path)
    document = _read_json(path)
    if isinstance(document, dict) and "problems" in document:
        document = document["problems"]
    items = document if isinstance(document, list) else [document]

    validator = ProblemValidator()
    problems = []
    for i, item in enumerate(items):
        name = f"{path.stem}[{i}]" if len(items) > 1 else path.stem
        problems.append(validator.validate(item, name=name))
    logger.info(f"Loaded {len(problems)} problems from {path}")
    return problems


def load_set_spec(path: Union[str, Path]) -> CantorSetSpec:
    """Read a set spec, bare or under a ``"set"`` key."""
    document = _read_json(path)
    if isinstance(document, dict) and isinstance(document.get("set"), dict):
        document = document["set"]
    return ProblemValidator().validate_set(document)
