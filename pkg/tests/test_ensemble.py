import unittest

import numpy as np
from ddt import data, ddt

from seqdisc.ensemble import (average_cost, build_sequence_ensemble, iid_sequence, success_probability,
                              tensor_assignment, tensor_povm, validate_ensemble, validate_povm)
from seqdisc.errors import CapacityError, InvalidInputError
from seqdisc.linalg import ket_bra
from seqdisc.minerror import helstrom_two
from seqdisc.random_instances import make_rng, random_ensemble

ZERO = ket_bra([1, 0])
ONE = ket_bra([0, 1])
PLUS = ket_bra([1, 1])


def zero_plus():
    return validate_ensemble([(0.5, ZERO), (0.5, PLUS)], label="zero-plus")


@ddt
class TestEnsemble(unittest.TestCase):
    """Tests for ensembles, sequence ensembles and measurements."""

    def test_priors_are_not_renormalized(self):
        """A prior sum of 1.2 is reported, not fixed."""
        with self.assertRaises(InvalidInputError) as context:
            validate_ensemble([(0.6, ZERO), (0.6, ONE)])
        self.assertIn("priors sum 1.2", str(context.exception))

    def test_every_violation_is_listed(self):
        """Trace, positivity and prior problems are all collected."""
        bad = np.diag([1.5, -0.5])
        with self.assertRaises(InvalidInputError) as context:
            validate_ensemble([(0.7, 2 * ZERO), (0.7, bad)])
        violations = context.exception.violations
        self.assertTrue(any("trace" in v for v in violations))
        self.assertTrue(any("not PSD" in v for v in violations))
        self.assertTrue(any("priors sum" in v for v in violations))

    @data(0.0, -0.1)
    def test_non_positive_prior_rejected(self, prior):
        with self.assertRaises(InvalidInputError):
            validate_ensemble([(prior, ZERO), (1.0 - prior, ONE)])

    def test_single_state_rejected(self):
        with self.assertRaises(InvalidInputError):
            validate_ensemble([(1.0, ZERO)])

    def test_sequence_enumeration_is_lexicographic(self):
        """Tuple priors are products and flat indices follow lexicographic order."""
        e = zero_plus()
        trine = random_ensemble(2, 3, make_rng(1), kind="pure")
        sequence = build_sequence_ensemble([e, trine])
        self.assertEqual(sequence.total_count, 6)
        self.assertEqual(sequence.total_dim, 4)
        self.assertEqual(list(sequence.tuples())[:4], [(0, 0), (0, 1), (0, 2), (1, 0)])
        self.assertEqual(sequence.flat_index((1, 2)), 5)
        self.assertAlmostEqual(sequence.prior((1, 2)), 0.5 * trine.priors[2])
        flat = sequence.materialize()
        self.assertAlmostEqual(float(np.sum(flat.priors)), 1.0, places=12)
        np.testing.assert_allclose(flat.states[5], np.kron(PLUS, trine.states[2]), atol=1e-12)

    def test_single_component_sequence_is_the_component(self):
        e = zero_plus()
        self.assertIs(iid_sequence(e, 1).materialize(), e)

    def test_materialize_beyond_cap(self):
        with self.assertRaises(CapacityError):
            iid_sequence(zero_plus(), 4, materialize=True, cap=8)

    def test_povm_must_be_complete(self):
        with self.assertRaises(InvalidInputError) as context:
            validate_povm([ZERO, 0.5 * ONE])
        self.assertIn("sum to identity", str(context.exception))

    def test_tensored_povm_merges_inconclusive_outcomes(self):
        """Every product touching an inconclusive outcome lands in one final effect."""
        local = validate_povm([0.5 * ZERO, 0.5 * ONE, 0.5 * np.eye(2)], inconclusive_index=2)
        product = tensor_povm([local, local])
        self.assertEqual(product.outcome_count, 5)
        self.assertEqual(product.inconclusive_index, 4)
        np.testing.assert_allclose(product.effects.sum(axis=0), np.eye(4), atol=1e-12)
        np.testing.assert_allclose(product.effects[1], 0.25 * np.kron(ZERO, ONE), atol=1e-12)

    def test_product_success_is_product_of_local_success(self):
        """The tensored Helstrom measurement succeeds with the squared local value."""
        e = zero_plus()
        local = helstrom_two(e)
        sequence = iid_sequence(e, 2)
        product = tensor_povm([local.povm, local.povm])
        self.assertAlmostEqual(success_probability(sequence, product), local.p ** 2, places=12)

    def test_tensor_assignment_relabels(self):
        """Swapped local labels compose into a product relabelling."""
        swap = {0: 1, 1: 0}
        assignment = tensor_assignment([swap, {0: 0, 1: 1}], [2, 2])
        self.assertEqual(assignment, {0: 2, 1: 3, 2: 0, 3: 1})

    def test_assignment_changes_success(self):
        e = validate_ensemble([(0.3, ZERO), (0.7, ONE)])
        povm = validate_povm([ZERO, ONE])
        self.assertAlmostEqual(success_probability(e, povm), 1.0)
        self.assertAlmostEqual(success_probability(e, povm, {0: 1, 1: 0}), 0.0)

    def test_average_cost_with_zero_one_cost(self):
        """Zero-one cost is the error probability."""
        e = zero_plus()
        povm = helstrom_two(e).povm
        cost = 1.0 - np.eye(2)
        self.assertAlmostEqual(average_cost(e, povm, cost), 1.0 - success_probability(e, povm), places=12)

    @data(0, 1, 2)
    def test_average_cost_of_constant_costs(self, seed):
        """Zero cost averages to 0 and unit cost to 1 for any complete measurement."""
        e = random_ensemble(3, 3, make_rng(seed))
        povm = validate_povm([np.diag(row) for row in np.eye(3)])
        self.assertEqual(average_cost(e, povm, np.zeros((3, 3))), 0.0)
        self.assertAlmostEqual(average_cost(e, povm, np.ones((3, 3))), 1.0, places=12)

    def test_average_cost_shape_checked(self):
        with self.assertRaises(InvalidInputError):
            average_cost(zero_plus(), helstrom_two(zero_plus()).povm, np.zeros((3, 3)))

    def test_dimension_mismatch(self):
        with self.assertRaises(InvalidInputError):
            success_probability(zero_plus(), validate_povm([np.eye(3)]))


if __name__ == "__main__":
    unittest.main()
