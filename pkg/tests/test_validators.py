"""Tests for validators module."""

import logging

import pytest

from falcon.exceptions import FileProcessingError, ProblemValidationError
from falcon.validators import ProblemValidator, load_problems, load_set_spec

IVP = {"a": 1, "b": 5, "c": 6, "ic": {"x0": 0, "f0": 2, "Df0": 3}}


class TestProblemValidator:
    """Test problem-key validation and suggestions."""

    def test_valid_document(self):
        """Test a well-formed problem passes."""
        problem = ProblemValidator().validate(IVP, name="ivp")
        assert problem.name == "ivp"
        assert problem.ic.Df0 == 3.0

    def test_explicit_name_kept(self):
        """Test a name in the document wins over the file-derived one."""
        problem = ProblemValidator().validate({**IVP, "name": "mine"}, name="file[0]")
        assert problem.name == "mine"

    def test_misspelled_key(self):
        """Test a typo is reported once, as unknown with a suggestion."""
        missing, unknown, suggestions = ProblemValidator().check_keys({"a": 1, "b": 5, "cc": 6})
        assert missing == []
        assert unknown == ["cc"]
        assert suggestions == {"cc": "c"}

    def test_case_insensitive_suggestion(self):
        """Test a key differing only in case."""
        _, unknown, suggestions = ProblemValidator().check_keys({"A": 1, "b": 5, "c": 6})
        assert unknown == ["A"]
        assert suggestions["A"] == "a"

    def test_missing_key(self):
        """Test a required key that is simply absent."""
        missing, unknown, _ = ProblemValidator().check_keys({"a": 1, "b": 5})
        assert missing == ["c"]
        assert unknown == []

    def test_linear_requires_known_solution(self):
        """Test linear problems need f1."""
        missing, _, _ = ProblemValidator().check_keys(
            {"type": "linear", "P": "1", "Q": "0", "R": "1"}
        )
        assert missing == ["f1"]

    def test_nested_initial_condition_key(self):
        """Test keys inside ic are checked too."""
        document = {"a": 1, "b": 5, "c": 6, "ic": {"x0": 0, "f0": 2, "df0": 3}}
        _, unknown, suggestions = ProblemValidator().check_keys(document)
        assert unknown == ["ic.df0"]
        assert suggestions == {"ic.df0": "ic.Df0"}

    def test_validate_reports_suggestions(self):
        """Test the raised error carries the suggestions."""
        with pytest.raises(ProblemValidationError, match="did you mean 'c'") as exc_info:
            ProblemValidator().validate({"a": 1, "b": 5, "cc": 6})
        assert exc_info.value.unknown_keys == ["cc"]
        assert exc_info.value.suggestions == {"cc": "c"}
        assert exc_info.value.exit_code == 2

    def test_model_errors_wrapped(self):
        """Test pydantic errors become ProblemValidationError."""
        with pytest.raises(ProblemValidationError):
            ProblemValidator().validate({**IVP, "set": {"m": 3, "r": 0.5}})

    def test_not_an_object(self):
        """Test a non-object problem."""
        with pytest.raises(ProblemValidationError):
            ProblemValidator().validate([1, 5, 6])

    def test_set_spec(self):
        """Test set validation and its suggestions."""
        validator = ProblemValidator()
        assert validator.validate_set({"m": 2, "r": "1/4"}).alpha == pytest.approx(0.5)
        with pytest.raises(ProblemValidationError) as exc_info:
            validator.validate_set({"m": 2, "rr": 0.25})
        assert exc_info.value.suggestions == {"rr": "r"}


class TestLoading:
    """Test reading problem and set files."""

    def test_single_problem(self, write_json):
        """Test a file holding one object is named after the file."""
        problems = load_problems(write_json("ivp.json", IVP))
        assert len(problems) == 1
        assert problems[0].name == "ivp"

    def test_problem_list(self, write_json, caplog):
        """Test a list gets indexed names and a log line."""
        with caplog.at_level(logging.INFO):
            problems = load_problems(write_json("batch.json", [IVP, {**IVP, "c": 4}]))
        assert [p.name for p in problems] == ["batch[0]", "batch[1]"]
        assert "Loaded 2 problems" in caplog.text

    def test_wrapped_list(self, write_json):
        """Test the {"problems": [...]} form."""
        problems = load_problems(write_json("wrapped.json", {"problems": [IVP]}))
        assert problems[0].c == 6.0

    def test_empty_list(self, write_json):
        """Test an empty problem list."""
        assert load_problems(write_json("empty.json", [])) == []

    def test_invalid_json(self, temp_dir):
        """Test unreadable JSON."""
        path = temp_dir / "broken.json"
        path.write_text("{not json")
        with pytest.raises(FileProcessingError) as exc_info:
            load_problems(path)
        assert exc_info.value.file_path == str(path)

    def test_missing_file(self, temp_dir):
        """Test a path that does not exist."""
        with pytest.raises(FileProcessingError):
            load_problems(temp_dir / "absent.json")

    def test_set_spec_forms(self, write_json):
        """Test bare and nested set specs."""
        bare = load_set_spec(write_json("bare.json", {"m": 2, "r": "1/3"}))
        nested = load_set_spec(write_json("nested.json", {"set": {"m": 2, "r": "1/3"}}))
        assert bare == nested
