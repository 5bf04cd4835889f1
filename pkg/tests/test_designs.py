import unittest
from fractions import Fraction

import numpy as np

from src.analysis.bounds import bounds_p1, source_profile
from src.core.instances import d1, d2, d3, d4
from src.core.measures import H, I, induce
from src.core.pmf import Mechanism
from src.designs.evaluation import evaluate
from src.designs.problem1 import (
    ALPHA_DENOMINATOR,
    DegenerateSource,
    RegimeError,
    build_p1,
    rounded_alpha,
)
from src.designs.problem2 import build_p2
from src.lemmas.sfrl import SfrlBudget
from tests.helpers import random_source

QUICK = SfrlBudget(max_evaluations=500, restarts=2)


class TestEvaluate(unittest.TestCase):
    def test_constant_mechanism(self):
        P = d1()
        rep = evaluate(P, Mechanism.constant(P), 0.0)
        for v in (rep.utility_p1, rep.utility_p2, rep.secrecy, rep.rate_p1, rep.rate_p2):
            self.assertEqual(v, 0.0)
        self.assertTrue(rep.feasible_p1)
        self.assertTrue(rep.feasible_p2)

    def test_copy_of_x_leaks_s(self):
        P = d1()
        rep = evaluate(P, Mechanism.copy_of(P, "X"), 1.0)
        self.assertAlmostEqual(rep.secrecy, 1.0, places=12)
        self.assertFalse(rep.feasible_p1)

    def test_y_equals_w_on_d1(self):
        P = d1()
        mech = Mechanism.from_function(P, lambda s, x, t: x[1])
        rep = evaluate(P, mech, 1.0)
        self.assertAlmostEqual(rep.utility_p1, 1.0, places=12)
        self.assertEqual(rep.secrecy, 0.0)
        self.assertAlmostEqual(rep.rate_p1, 1.0, places=12)
        self.assertTrue(rep.feasible_p1)
        self.assertEqual(rep.identity_residual, 0.0)

    def test_exact_masses_reproduce_the_mechanism(self):
        P = d2()
        mech, _ = build_p1(P, 1.0, "A")
        rep = evaluate(P, mech, 1.0)
        self.assertEqual(sum(Fraction(v) for v in rep.p_y_exact.values()), 1)
        # D2 の台は4セル
        self.assertEqual(len(rep.kernel_exact), 4)
        outputs = mech.output.symbols
        kernel = np.full(mech.kernel.shape, Fraction(0), dtype=object)
        kernel[..., 0] = Fraction(1)
        for key, row in rep.kernel_exact.items():
            s, x, t = key.split("|")
            idx = (P.alphabet("S").index(s), P.alphabet("X").index(x), P.alphabet("T").index(t))
            self.assertEqual(sum(Fraction(v) for v in row.values()), 1)
            kernel[idx] = Fraction(0)
            for y, v in row.items():
                kernel[idx + (outputs.index(y),)] = Fraction(v)
        rebuilt = evaluate(P, Mechanism(mech.inputs, mech.output, kernel), 1.0)
        self.assertEqual(rebuilt.utility_p1, rep.utility_p1)
        self.assertEqual(rebuilt.p_y_exact, rep.p_y_exact)

    def test_float_mode_has_no_exact_masses(self):
        P = d1()
        rep = evaluate(P.to_float(), Mechanism.copy_of(P, "T"), 1.0)
        self.assertIsNone(rep.p_y_exact)
        self.assertIsNone(rep.kernel_exact)


class TestProblem1Designs(unittest.TestCase):
    def test_d2_design_a_full_rate(self):
        P = d2()
        mech, log = build_p1(P, 1.0, "A")
        rep = evaluate(P, mech, 1.0)
        self.assertEqual(log.alpha_exact, "1")
        self.assertAlmostEqual(rep.utility_p1, 1.0, places=12)
        self.assertEqual(rep.secrecy, 0.0)
        self.assertAlmostEqual(rep.rate_p1, 1.0, places=12)
        self.assertTrue(log.guarantee_met)
        self.assertEqual(log.lower_bound_id, "L1")

    def test_d2_highrate_is_tight(self):
        P = d2()
        for r in (1.0, 1.5):
            mech, log = build_p1(P, r, "HIGHRATE")
            rep = evaluate(P, mech, r)
            self.assertAlmostEqual(rep.utility_p1, 1.0, places=9)
            self.assertEqual(rep.secrecy, 0.0)
            self.assertTrue(rep.feasible_p1)
            self.assertAlmostEqual(rep.utility_p1, H(P, "T") - H(P, "S"), places=9)

    def test_d3_design_b_has_zero_utility(self):
        P = d3()
        mech, _ = build_p1(P, 0.5, "B", budget=QUICK)
        rep = evaluate(P, mech, 0.5)
        self.assertEqual(rep.utility_p1, 0.0)
        self.assertEqual(rep.secrecy, 0.0)

    def test_design_a_internals(self):
        # I(U';X,S) = α H(X|S) = r
        P = d1()
        _, log = build_p1(P, 0.5, "A")
        self.assertAlmostEqual(log.measures["I(U';X,S)"], 0.5, places=9)
        self.assertEqual(log.measures["I(U';S)"], 0.0)
        self.assertEqual(log.witnesses["Y'"].determinism_residual, 0.0)
        self.assertIsNotNone(log.erasure_symbol)

    def test_regime_errors(self):
        P = d2()
        with self.assertRaises(RegimeError):
            build_p1(P, 1.5, "A")
        with self.assertRaises(RegimeError):
            build_p1(P, 0.5, "HIGHRATE")
        with self.assertRaises(RegimeError):
            build_p1(P, 2.0, "HIGHRATE")
        with self.assertRaises(RegimeError):
            build_p1(P, -0.1, "B", budget=QUICK)

    def test_degenerate_source(self):
        # D3 は X = S なので H(X|S) = 0
        with self.assertRaises(DegenerateSource):
            build_p1(d3(), 0.0, "A")
        with self.assertRaises(DegenerateSource):
            build_p1(d3(), 0.0, "C", budget=QUICK)

    def test_rounded_alpha_never_exceeds_ratio(self):
        a = rounded_alpha(1.0, 3.0)
        self.assertLessEqual(float(a), 1.0 / 3.0)
        self.assertLessEqual(a.denominator, ALPHA_DENOMINATOR)
        self.assertEqual(rounded_alpha(2.0, 1.0), Fraction(1))

    def test_highrate_matches_design_a_at_full_rate(self):
        rng = np.random.default_rng(40)
        checked = 0
        while checked < 10:
            P = random_source(rng, min_size=2)
            p = source_profile(P)
            if p.h_x_given_s <= 0 or p.h_x_given_s >= p.h_x:
                continue
            r = p.h_x_given_s
            a, _ = build_p1(P, r, "A")
            h, _ = build_p1(P, r, "HIGHRATE")
            self.assertAlmostEqual(evaluate(P, a, r).utility_p1, evaluate(P, h, r).utility_p1, places=9)
            checked += 1

    def test_lower_bounds_hold_on_random_sources(self):
        # SFRL は既定予算（評価 10^4 回）
        budget = SfrlBudget()
        rng = np.random.default_rng(41)
        sources = runs = 0
        while sources < 200:
            P = random_source(rng)
            p = source_profile(P)
            if p.h_x_given_s <= 0:
                continue
            sources += 1
            for frac in (0.2, 0.4, 0.6, 0.8, 1.0):
                r = frac * p.h_x_given_s
                bounds = bounds_p1(P, r, p)
                for design, bound in (("A", bounds.L1), ("B", bounds.L2), ("C", bounds.L3)):
                    mech, log = build_p1(P, r, design, budget=budget)
                    rep = evaluate(P, mech, r)
                    joint = induce(P, mech)
                    self.assertEqual(rep.secrecy, 0.0, msg=f"{design} r={r}")
                    self.assertLessEqual(rep.utility_p1, min(H(joint, "Y"), H(joint, "T")) + 1e-9)
                    self.assertLessEqual(rep.rate_p1, r + 1e-9, msg=f"{design} r={r}")
                    self.assertGreaterEqual(rep.utility_p1, bound - 1e-9, msg=f"{design} r={r}")
                    self.assertTrue(log.guarantee_met)
                    runs += 1
        self.assertEqual(runs, 200 * 5 * 3)

    def test_design_b_has_zero_rate(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            P = random_source(rng)
            mech, _ = build_p1(P, 0.0, "B", budget=QUICK)
            rep = evaluate(P, mech, 0.0)
            self.assertEqual(rep.rate_p1, 0.0)
            self.assertTrue(rep.feasible_p1)


class TestProblem2Design(unittest.TestCase):
    def test_full_regime_on_d1_and_d2(self):
        for P in (d1(), d2()):
            for r in (0.0, 0.5):
                mech, log = build_p2(P, r)
                rep = evaluate(P, mech, r)
                self.assertEqual(log.regime, "FULL")
                self.assertAlmostEqual(rep.utility_p2, 1.0, places=12)
                self.assertAlmostEqual(rep.utility_p2, H(P, "T", "S"), places=12)
                self.assertEqual(rep.secrecy, 0.0)

    def test_mid_regime_construction_on_d4(self):
        P = d4()
        mech, log = build_p2(P, 0.5, budget=QUICK)
        joint = induce(P, mech)
        self.assertEqual(I(joint, "Y", ("S", "X")), 0.0)
        self.assertEqual(H(joint, "T", ("S", "X", "Y")), 0.0)
        self.assertLessEqual(I(joint, "Y", "X", ("T", "S")), 5.0)
        self.assertGreaterEqual(I(joint, "Y", "T", "S"), H(P, "T", ("S", "X")) - 5.0)
        self.assertEqual(log.regime, "OPEN")

    def test_negative_rate(self):
        with self.assertRaises(ValueError):
            build_p2(d1(), -1.0)


if __name__ == "__main__":
    unittest.main()
