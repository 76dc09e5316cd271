import math
import unittest

import numpy as np
from ddt import data, ddt, unpack

from seqdisc.ensemble import Povm, iid_sequence, success_probability, validate_ensemble, validate_povm
from seqdisc.errors import InvalidInputError, SolverFailure
from seqdisc.linalg import ket_bra
from seqdisc.minerror import (check_hykl_certificate, guessing_value, helstrom_two, solve_min_error,
                              square_root_measurement, verify_product_min_error)
from seqdisc.random_instances import make_rng, random_ensemble, random_unitary

HELSTROM_ZERO_PLUS = 0.5 * (1 + math.sqrt(0.5))


def zero_plus():
    return validate_ensemble([(0.5, ket_bra([1, 0])), (0.5, ket_bra([1, 1]))], label="zero-plus")


def trine():
    angles = [2 * math.pi * k / 3 for k in range(3)]
    return validate_ensemble([(1 / 3, ket_bra([math.cos(a), math.sin(a)])) for a in angles], label="trine")


@ddt
class TestMinError(unittest.TestCase):
    """Tests for minimum-error discrimination and its product theorem."""

    def test_helstrom_zero_plus(self):
        result = helstrom_two(zero_plus())
        self.assertAlmostEqual(result.p, HELSTROM_ZERO_PLUS, places=12)
        self.assertAlmostEqual(success_probability(zero_plus(), result.povm), HELSTROM_ZERO_PLUS, places=12)

    def test_helstrom_needs_two_states(self):
        with self.assertRaises(InvalidInputError):
            helstrom_two(trine())

    @data((2, "pure", 0), (2, "mixed", 1), (3, "mixed", 2), (4, "pure", 3))
    @unpack
    def test_solver_matches_helstrom(self, d, kind, seed):
        """The SDP optimum of two random states matches the closed form."""
        e = random_ensemble(d, 2, make_rng(seed), kind=kind)
        self.assertAlmostEqual(solve_min_error(e).p, helstrom_two(e).p, places=6)

    def test_trine(self):
        result = solve_min_error(trine())
        self.assertAlmostEqual(result.p, 2 / 3, places=6)
        self.assertTrue(check_hykl_certificate(trine(), result.povm).passed)

    def test_orthogonal_states_are_perfectly_distinguished(self):
        e = validate_ensemble([(0.3, ket_bra([1, 0])), (0.7, ket_bra([0, 1]))])
        self.assertAlmostEqual(solve_min_error(e).p, 1.0, places=6)

    def test_square_root_measurement_is_optimal_for_trine(self):
        """The square-root measurement of a symmetric ensemble passes the optimality test."""
        povm = square_root_measurement(trine())
        self.assertAlmostEqual(success_probability(trine(), povm), 2 / 3, places=10)
        self.assertTrue(check_hykl_certificate(trine(), povm).passed)

    @data(0, 1, 2)
    def test_solver_beats_simple_strategies(self, seed):
        e = random_ensemble(3, 4, make_rng(seed))
        p = solve_min_error(e).p
        self.assertGreaterEqual(p + 1e-7, guessing_value(e))
        self.assertGreaterEqual(p + 1e-7, success_probability(e, square_root_measurement(e)))
        self.assertLessEqual(p, 1.0)

    @data(*range(40))
    def test_solver_output_passes_certificate(self, seed):
        """Returned measurements of rank-deficient mixed ensembles certify at the default tolerance."""
        e = random_ensemble(3, 3, make_rng(seed), kind="mixed", rank=2)
        result = solve_min_error(e)
        self.assertTrue(check_hykl_certificate(e, result.povm).passed)
        self.assertLessEqual(result.solution.gap, 1e-7)

    def test_unattainable_certificate_raises(self):
        with self.assertRaises(SolverFailure):
            solve_min_error(trine(), certificate_tol=-1.0)

    @data((2, 2, "pure", 30), (3, 3, "mixed", 31), (3, 4, "pure", 32), (4, 3, "mixed", 33))
    @unpack
    def test_optimum_invariant_under_common_unitary(self, d, count, kind, seed):
        rng = make_rng(seed)
        e = random_ensemble(d, count, rng, kind=kind)
        u = random_unitary(d, rng)
        rotated = validate_ensemble([(q, u @ s @ u.conj().T) for q, s in zip(e.priors, e.states)])
        self.assertLessEqual(abs(solve_min_error(rotated).p - solve_min_error(e).p), 1e-7)

    @data((2, 2, "pure", 40), (2, 3, "mixed", 41), (3, 2, "mixed", 42), (3, 4, "pure", 43), (4, 5, "mixed", 44))
    @unpack
    def test_optimum_at_least_largest_prior(self, d, count, kind, seed):
        e = random_ensemble(d, count, make_rng(seed), kind=kind)
        p = solve_min_error(e).p
        self.assertGreaterEqual(p, float(np.max(e.priors)) - 1e-9)
        self.assertLessEqual(p, 1.0)

    def test_certificate_rejects_uninformative_measurement(self):
        certificate = check_hykl_certificate(zero_plus(), validate_povm([0.5 * np.eye(2), 0.5 * np.eye(2)]))
        self.assertFalse(certificate.passed)
        self.assertLess(min(certificate.min_eigenvalues), 0.0)

    def test_certificate_rejects_swapped_labels(self):
        povm = helstrom_two(zero_plus()).povm
        swapped = Povm(2, povm.effects[::-1].copy())
        self.assertFalse(check_hykl_certificate(zero_plus(), swapped).passed)

    def test_certificate_needs_one_effect_per_state(self):
        with self.assertRaises(InvalidInputError):
            check_hykl_certificate(trine(), helstrom_two(zero_plus()).povm)

    @data(2, 3)
    def test_product_theorem_iid(self, k):
        """Tensoring the Helstrom measurement is optimal for the sequence."""
        report = verify_product_min_error([zero_plus()] * k)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.product_value, HELSTROM_ZERO_PLUS ** k, places=6)
        self.assertLessEqual(report.abs_diff, 1e-5)
        self.assertTrue(report.tensored_certificate.passed)
        self.assertTrue(report.direct_certificate.passed)

    def test_product_theorem_mixed_components(self):
        rng = make_rng(7)
        components = [random_ensemble(2, 3, rng), random_ensemble(2, 2, rng, kind="pure")]
        report = verify_product_min_error(components)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.direct_value, report.product_value, places=5)

    def test_direct_stage_skipped_beyond_cap(self):
        """Only the direct stage is skipped; the tensored check still runs."""
        report = verify_product_min_error([zero_plus()] * 2, direct_cap=2)
        self.assertTrue(report.passed)
        self.assertIsNone(report.direct_value)
        self.assertEqual(report.stage("direct").status, "skipped")
        self.assertIn("skipped (capacity)", report.stage("direct").detail)
        self.assertAlmostEqual(report.tensored_value, report.product_value, places=8)

    def test_single_component_reuses_local_solve(self):
        report = verify_product_min_error([trine()])
        self.assertTrue(report.passed)
        self.assertEqual(report.direct_value, report.local_values[0])
        self.assertEqual(report.abs_diff, 0.0)

    def test_iid_sequence_value(self):
        sequence = iid_sequence(zero_plus(), 2)
        self.assertAlmostEqual(solve_min_error(sequence).p, HELSTROM_ZERO_PLUS ** 2, places=6)


if __name__ == "__main__":
    unittest.main()
