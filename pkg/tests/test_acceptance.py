"""
Randomized property suites for the solvers and the product theorem.

Most sizes are kept small; one case per paradigm sits at a sequence dimension of 27.
"""

import contextlib
import io
import json
import math
import os
import unittest

import numpy as np
from ddt import data, ddt

from seqdisc.cli import main
from seqdisc.ensemble import Povm, build_sequence_ensemble, tensor_povm, validate_ensemble
from seqdisc.linalg import ket_bra
from seqdisc.minerror import check_hykl_certificate, helstrom_two, solve_min_error, verify_product_min_error
from seqdisc.random_instances import (dependent_pure_ensemble, make_rng, random_ensemble, random_pure_state,
                                      random_priors)
from seqdisc.unambiguous import (check_sequence_ud_feasible, check_ud_solution, solve_unambiguous,
                                 ud_two_pure_closed_form, verify_kernel_decompositions, verify_product_unambiguous)


def random_components(rng: np.random.Generator, k: int, max_dim: int = 3, kinds=("pure", "mixed")):
    """Components with d_i <= max_dim and two or three states; mixed states have rank d_i - 1."""
    components = []
    for _ in range(k):
        d = int(rng.integers(2, max_dim + 1))
        count = int(rng.integers(2, 4))
        kind = kinds[int(rng.integers(len(kinds)))]
        components.append(random_ensemble(d, count, rng, kind=kind, rank=d - 1 if kind == "mixed" else None))
    return components



def identifiable_components(rng: np.random.Generator, k: int, max_dim: int = 3):
    """Components where some state has a nonzero conclusive subspace.

    Either at most d_i linearly independent pure states, or two rank-2 states on C^3.
    """
    components = []
    for _ in range(k):
        d = int(rng.integers(2, max_dim + 1))
        count = int(rng.integers(2, d + 1))
        if d == 3 and count == 2 and rng.random() < 0.5:
            components.append(random_ensemble(d, count, rng, kind="mixed", rank=2))
        else:
            components.append(random_ensemble(d, count, rng, kind="pure"))
    return components


@ddt
class TestAcceptance(unittest.TestCase):
    """Oracles: closed forms, certificates and direct solves of the sequence ensemble."""

    def test_helstrom_agreement(self):
        rng = make_rng(100)
        for trial in range(100):
            d = int(rng.integers(1, 4)) + 1
            e = random_ensemble(d, 2, rng, kind="pure" if trial % 2 else "mixed")
            result = solve_min_error(e)
            self.assertLessEqual(abs(result.p - helstrom_two(e).p), 1e-6)
            self.assertTrue(check_hykl_certificate(e, result.povm).passed)
            self.assertLessEqual(result.solution.gap, 1e-7)

    def test_mislabelled_measurements_fail_the_certificate(self):
        rng = make_rng(101)
        for _ in range(20):
            e = random_ensemble(3, 3, rng)
            povm = solve_min_error(e).povm
            rolled = Povm(povm.dim, np.roll(povm.effects, 1, axis=0))
            self.assertFalse(check_hykl_certificate(e, rolled).passed)

    @data(2, 3)
    def test_min_error_product_theorem(self, k):
        rng = make_rng(200 + k)
        for _ in range(15):
            components = random_components(rng, k, max_dim=3 if k == 2 else 2)
            report = verify_product_min_error(components, direct_cap=27)
            self.assertTrue(report.passed, report.model_dump_json())
            self.assertLessEqual(report.abs_diff, 1e-5)
            self.assertTrue(report.tensored_certificate.passed)

    def test_min_error_product_theorem_at_dimension_bound(self):
        """Three qutrit components, sequence dimension 27, solved directly."""
        rng = make_rng(210)
        components = [random_ensemble(3, 2, rng, kind="mixed", rank=2) for _ in range(3)]
        report = verify_product_min_error(components, direct_cap=27)
        self.assertEqual(report.stage("direct").status, "ok")
        self.assertTrue(report.passed, report.model_dump_json())
        self.assertLessEqual(report.abs_diff, 1e-5)
        self.assertTrue(report.direct_certificate.passed)

    def test_tensored_min_error_measurement_is_certified(self):
        rng = make_rng(202)
        components = [random_ensemble(2, 2, rng), random_ensemble(3, 3, rng)]
        sequence = build_sequence_ensemble(components, materialize=True).materialize()
        povm = tensor_povm([solve_min_error(c).povm for c in components])
        self.assertTrue(check_hykl_certificate(sequence, povm).passed)

    @data(2, 3)
    def test_unambiguous_product_theorem(self, k):
        rng = make_rng(300 + k)
        for _ in range(15):
            components = identifiable_components(rng, k, max_dim=3 if k == 2 else 2)
            report = verify_product_unambiguous(components, direct_cap=27)
            self.assertTrue(all(value > 0 for value in report.local_values))
            self.assertTrue(report.theta_agreement)
            self.assertTrue(report.passed, report.model_dump_json())
            self.assertLessEqual(report.abs_diff, 1e-5)
            self.assertLessEqual(abs(report.tensored_value - report.product_value), 1e-7)
            self.assertTrue(report.tensored_certificate.passed)

    def test_unambiguous_product_theorem_at_dimension_bound(self):
        """Three qutrit components of three pure states give 27 identifiable sequences."""
        rng = make_rng(310)
        components = [random_ensemble(3, 3, rng, kind="pure") for _ in range(3)]
        report = verify_product_unambiguous(components, direct_cap=27)
        self.assertEqual(report.stage("direct").status, "ok")
        self.assertTrue(report.passed, report.model_dump_json())
        self.assertGreater(report.product_value, 0.0)
        self.assertLessEqual(report.abs_diff, 1e-5)
        self.assertLessEqual(abs(report.tensored_value - report.product_value), 1e-7)

    def test_feasibility_modes_agree(self):
        rng = make_rng(400)
        infeasible = 0
        for trial in range(200):
            components = random_components(rng, 2)
            if trial % 4 == 0:
                components[1] = dependent_pure_ensemble(2, 3, rng)
            per_component = check_sequence_ud_feasible(components, "per-component")
            direct = check_sequence_ud_feasible(components, "direct")
            self.assertEqual(per_component.feasible, direct.feasible)
            infeasible += not direct.feasible
        self.assertGreaterEqual(infeasible, 50)

    def test_kernel_decomposition_on_every_tuple(self):
        rng = make_rng(500)
        for _ in range(30):
            components = random_components(rng, 2)
            indices = list(build_sequence_ensemble(components).tuples())
            checks = verify_kernel_decompositions(components, indices)
            self.assertTrue(all(check.equal for check in checks))

    def test_two_pure_states_closed_form(self):
        rng = make_rng(600)
        for _ in range(100):
            d = int(rng.integers(2, 5))
            psi1, psi2 = random_pure_state(d, rng), random_pure_state(d, rng)
            e = validate_ensemble([(0.5, ket_bra(psi1)), (0.5, ket_bra(psi2))])
            solution = solve_unambiguous(e)
            expected = 1 - abs(np.vdot(psi1, psi2))
            self.assertLessEqual(abs(solution.p - expected), 1e-6)
            self.assertTrue(check_ud_solution(e, solution).passed)

    def test_two_pure_states_unequal_priors(self):
        """The closed form over every prior regime matches the solver."""
        rng = make_rng(601)
        for _ in range(30):
            psi1, psi2 = random_pure_state(3, rng), random_pure_state(3, rng)
            eta = random_priors(2, rng)
            e = validate_ensemble([(eta[0], ket_bra(psi1)), (eta[1], ket_bra(psi2))])
            expected = ud_two_pure_closed_form(eta[0], psi1, eta[1], psi2)
            self.assertLessEqual(abs(solve_unambiguous(e).p - expected), 1e-6)

    def test_monte_carlo_consistency(self):
        files = os.path.join(os.path.dirname(os.path.dirname(__file__)), "src", "files")
        zero_plus = os.path.join(files, "zero_plus.json")
        within = 0
        for seed in range(20):
            stdout = io.StringIO()
            with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(io.StringIO()):
                main(["simulate", "--paradigm", "min-error", zero_plus, zero_plus, "--shots", "1000000",
                      "--seed", str(seed), "--json"])
            values = json.loads(stdout.getvalue())["values"]
            self.assertAlmostEqual(values["analytic_p"], (0.5 * (1 + math.sqrt(0.5))) ** 2, places=6)
            within += values["within_3_sigma"]
        self.assertGreaterEqual(within, 19)

    def test_single_shot(self):
        files = os.path.join(os.path.dirname(os.path.dirname(__file__)), "src", "files")
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(io.StringIO()):
            main(["simulate", "--paradigm", "min-error", os.path.join(files, "zero_plus.json"), "--shots", "1",
                  "--json"])
        self.assertIn(json.loads(stdout.getvalue())["values"]["empirical_p"], (0.0, 1.0))


if __name__ == "__main__":
    unittest.main()
