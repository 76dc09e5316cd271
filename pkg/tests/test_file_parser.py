import json
import math
import os
import tempfile
import unittest

import numpy as np
from ddt import data, ddt

from seqdisc.errors import InvalidInputError
from seqdisc.file_parser import FileParser, ensemble_to_file, povm_to_file, write_document
from seqdisc.minerror import helstrom_two


@ddt
class TestFileParser(unittest.TestCase):
    """Tests for the ensemble and POVM file formats."""

    INPUT_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "src", "files")

    def setUp(self) -> None:
        self.temp_dir = tempfile.TemporaryDirectory()
        unittest.TestCase.setUp(self)

    def tearDown(self) -> None:
        self.temp_dir.cleanup()
        unittest.TestCase.tearDown(self)

    def _write(self, name: str, text: str) -> str:
        path = os.path.join(self.temp_dir.name, name)
        with open(path, "w", encoding="utf-8") as file:
            file.write(text)
        return path

    @data("zero_plus.json", "trine.json", "orthogonal.json", "dependent_three.json")
    def test_sample_ensembles_parse(self, name):
        e = FileParser.parse_ensemble(os.path.join(self.INPUT_DIR, name))
        self.assertGreaterEqual(e.count, 2)
        self.assertAlmostEqual(float(np.sum(e.priors)), 1.0, places=9)

    @data("helstrom_zero_plus_povm.json", "identity_split_povm.json", "ud_zero_plus_povm.json")
    def test_sample_povms_parse(self, name):
        povm = FileParser.parse_povm(os.path.join(self.INPUT_DIR, name))
        np.testing.assert_allclose(povm.effects.sum(axis=0), np.eye(povm.dim), atol=1e-9)

    def test_vector_states(self):
        """Pure states given as vectors become their projectors."""
        e = FileParser.parse_ensemble(os.path.join(self.INPUT_DIR, "zero_plus.json"))
        np.testing.assert_allclose(e.states[1], 0.5 * np.ones((2, 2)), atol=1e-12)
        self.assertAlmostEqual(helstrom_two(e).p, 0.5 * (1 + math.sqrt(0.5)), places=12)

    def test_bad_prior_sum_is_reported(self):
        with self.assertRaises(InvalidInputError) as context:
            FileParser.parse_ensemble(os.path.join(self.INPUT_DIR, "bad_priors.json"))
        self.assertIn("priors sum 1.2", str(context.exception))
        self.assertIn("bad_priors.json", str(context.exception))

    def test_malformed_json_names_the_line(self):
        path = self._write("broken.json", '{\n  "dimension": 2,\n  "states": [\n')
        with self.assertRaises(InvalidInputError) as context:
            FileParser.parse_ensemble(path)
        self.assertIn("line", str(context.exception))

    def test_shape_errors_name_the_field(self):
        document = {"dimension": 2, "states": [
            {"prior": 0.5, "matrix": [[[1, 0], [0, 0]]]},
            {"prior": 0.5, "vector": [[0, 0], [1, 0]]},
        ]}
        path = self._write("shape.json", json.dumps(document))
        with self.assertRaises(InvalidInputError) as context:
            FileParser.parse_ensemble(path)
        self.assertIn("states[0].matrix", str(context.exception))

    def test_both_representations_rejected(self):
        document = {"dimension": 1, "states": [
            {"prior": 0.5, "matrix": [[[1, 0]]], "vector": [[1, 0]]},
            {"prior": 0.5, "vector": [[1, 0]]},
        ]}
        with self.assertRaises(InvalidInputError):
            FileParser.parse_ensemble(self._write("both.json", json.dumps(document)))

    def test_unknown_fields_rejected(self):
        document = {"dimension": 1, "states": [], "extra": 1}
        with self.assertRaises(InvalidInputError):
            FileParser.parse_ensemble(self._write("extra.json", json.dumps(document)))

    def test_non_hermitian_matrix_rejected(self):
        document = {"dimension": 2, "states": [
            {"prior": 0.5, "matrix": [[[1, 0], [0, 1]], [[0, 0], [0, 0]]]},
            {"prior": 0.5, "vector": [[0, 0], [1, 0]]},
        ]}
        with self.assertRaises(InvalidInputError) as context:
            FileParser.parse_ensemble(self._write("herm.json", json.dumps(document)))
        self.assertIn("state 0", str(context.exception))

    def test_unsupported_extension(self):
        with self.assertRaises(InvalidInputError):
            FileParser.parse_ensemble(self._write("ensemble.txt", "{}"))

    def test_missing_file(self):
        with self.assertRaises(InvalidInputError):
            FileParser.parse_ensemble(os.path.join(self.temp_dir.name, "absent.json"))

    def test_written_files_read_back(self):
        """An emitted measurement and ensemble parse to the same operators."""
        e = FileParser.parse_ensemble(os.path.join(self.INPUT_DIR, "trine.json"))
        povm = helstrom_two(FileParser.parse_ensemble(os.path.join(self.INPUT_DIR, "zero_plus.json"))).povm
        ensemble_path = os.path.join(self.temp_dir.name, "trine_copy.json")
        povm_path = os.path.join(self.temp_dir.name, "povm.json")
        write_document(ensemble_to_file(e), ensemble_path)
        write_document(povm_to_file(povm, label="helstrom"), povm_path)
        np.testing.assert_allclose(FileParser.parse_ensemble(ensemble_path).states, e.states, atol=1e-15)
        np.testing.assert_allclose(FileParser.parse_povm(povm_path).effects, povm.effects, atol=1e-15)


if __name__ == "__main__":
    unittest.main()
