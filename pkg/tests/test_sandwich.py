import unittest

import numpy as np

from src.analysis.bounds import source_profile
from src.analysis.oracle import OracleBudget
from src.analysis.sandwich import check_sandwich, run_sandwich, sandwich
from src.core.instances import d1, d2, d4
from src.lemmas.sfrl import SfrlBudget
from tests.helpers import random_source

ORACLE = OracleBudget(iterations=20, restarts=2, candidates_per_iteration=8)
SFRL = SfrlBudget(max_evaluations=500, restarts=2)


class TestCheckSandwich(unittest.TestCase):
    def test_ordered_values_pass(self):
        rep = check_sandwich("P1", 1.0, lower_theory=0.2, lower_constructed=0.5, oracle=0.7, upper_theory=1.0)
        self.assertTrue(rep.ok)

    def test_constructed_above_oracle(self):
        rep = check_sandwich("P1", 1.0, lower_theory=0.0, lower_constructed=0.9, oracle=0.7, upper_theory=1.0)
        self.assertFalse(rep.ok)
        self.assertEqual(len(rep.violations), 1)
        self.assertIn("lower_constructed", rep.violations[0])

    def test_oracle_above_upper(self):
        rep = check_sandwich("P2", 0.0, lower_theory=0.0, lower_constructed=0.0, oracle=1.5, upper_theory=1.0)
        self.assertIn("upper_theory", rep.violations[0])

    def test_incomplete_construction_skips_theory_check(self):
        kwargs = dict(lower_theory=0.6, lower_constructed=0.1, oracle=0.8, upper_theory=1.0)
        self.assertFalse(check_sandwich("P1", 0.5, **kwargs).ok)
        self.assertTrue(check_sandwich("P1", 0.5, constructed_complete=False, **kwargs).ok)

    def test_tolerance(self):
        rep = check_sandwich(
            "P1", 1.0, lower_theory=0.0, lower_constructed=1.0 + 1e-9, oracle=1.0, upper_theory=1.0, tol=1e-6
        )
        self.assertTrue(rep.ok)


class TestRunSandwich(unittest.TestCase):
    def test_d2_full_rate_is_tight(self):
        rep = sandwich(d2(), 1.0, budget=ORACLE, sfrl_budget=SFRL)
        self.assertTrue(rep.ok, msg=rep.violations)
        for v in (rep.lower_theory, rep.lower_constructed, rep.oracle, rep.upper_theory):
            self.assertAlmostEqual(v, 1.0, places=6)

    def test_d2_high_rate(self):
        out = run_sandwich(d2(), 1.5, budget=ORACLE, sfrl_budget=SFRL)
        self.assertTrue(out.report.ok, msg=out.report.violations)
        self.assertIn("HIGHRATE", out.mechanisms)
        self.assertNotIn("A", out.mechanisms)
        self.assertAlmostEqual(out.report.oracle, 1.0, places=6)

    def test_d2_unconstrained_reuses_highrate(self):
        out = run_sandwich(d2(), 3.0, budget=ORACLE, sfrl_budget=SFRL)
        self.assertTrue(out.complete)
        self.assertIn("HIGHRATE", out.mechanisms)
        self.assertTrue(out.reports["HIGHRATE"].feasible_p1)
        self.assertTrue(out.report.ok, msg=out.report.violations)

    def test_d1_half_rate(self):
        rep = sandwich(d1(), 0.5, budget=ORACLE, sfrl_budget=SFRL)
        self.assertTrue(rep.ok, msg=rep.violations)
        self.assertEqual(rep.lower_theory, 0.0)
        self.assertLessEqual(rep.oracle, 1.0 + 1e-6)

    def test_problem2(self):
        rep = sandwich(d1(), 0.0, problem="P2", budget=ORACLE, sfrl_budget=SFRL)
        self.assertTrue(rep.ok, msg=rep.violations)
        self.assertAlmostEqual(rep.lower_theory, 1.0, places=9)
        self.assertAlmostEqual(rep.lower_constructed, 1.0, places=9)
        rep = sandwich(d4(), 0.5, problem="P2", budget=ORACLE, sfrl_budget=SFRL)
        self.assertTrue(rep.ok, msg=rep.violations)

    def test_constructed_mechanisms_are_reused(self):
        P = d2()
        first = run_sandwich(P, 1.0, budget=ORACLE, sfrl_budget=SFRL)
        second = run_sandwich(P, 1.0, budget=ORACLE, sfrl_budget=SFRL, constructed=first.mechanisms)
        for name, mech in first.mechanisms.items():
            self.assertIs(second.mechanisms[name], mech)

    def test_random_sources(self):
        rng = np.random.default_rng(80)
        for _ in range(5):
            P = random_source(rng)
            r = 0.5 * source_profile(P).h_x_given_s
            rep = sandwich(P, r, budget=ORACLE, sfrl_budget=SFRL)
            self.assertTrue(rep.ok, msg=rep.violations)


if __name__ == "__main__":
    unittest.main()
