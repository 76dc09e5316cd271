import unittest

import numpy as np
from ddt import data, ddt, unpack

from seqdisc.errors import InvalidInputError
from seqdisc.linalg import support_basis
from seqdisc.random_instances import (RandomSpec, make_rng, parse_random_spec, random_ensemble, random_mixed_state,
                                      random_unitary)


@ddt
class TestRandomInstances(unittest.TestCase):
    """Tests for the seeded instance generators."""

    def test_same_seed_same_ensemble(self):
        first = random_ensemble(3, 3, make_rng(42))
        second = random_ensemble(3, 3, make_rng(42))
        np.testing.assert_array_equal(first.states, second.states)
        np.testing.assert_array_equal(first.priors, second.priors)

    @data(1, 2, 4)
    def test_unitary(self, d):
        u = random_unitary(d, make_rng(d))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(d), atol=1e-12)

    @data((3, 1), (3, 2), (4, 4))
    @unpack
    def test_mixed_state_rank(self, d, rank):
        rho = random_mixed_state(d, make_rng(0), rank)
        self.assertAlmostEqual(float(np.real(np.trace(rho))), 1.0, places=12)
        self.assertEqual(support_basis(rho).rank, rank)
        self.assertGreaterEqual(float(np.linalg.eigvalsh(rho)[-rank]), 0.05 / rank - 1e-12)

    def test_mixed_state_rank_checked(self):
        with self.assertRaises(InvalidInputError):
            random_mixed_state(2, make_rng(0), 3)

    def test_parse_random_spec(self):
        spec = parse_random_spec(["d=3", "l=3", "k=2", "seed=7", "trials=10"])
        self.assertEqual(spec, RandomSpec(d=3, l=3, k=2, seed=7, trials=10))
        components = spec.components(make_rng(spec.seed))
        self.assertEqual(len(components), 2)
        self.assertEqual(components[0].dim, 3)

    @data(["d=3", "l"], ["d=3", "l=1"], ["d=x", "l=2"])
    def test_parse_random_spec_rejects(self, tokens):
        with self.assertRaises(InvalidInputError):
            parse_random_spec(tokens)


if __name__ == "__main__":
    unittest.main()
