import math
import unittest
from fractions import Fraction

import numpy as np

from src.analysis.bounds import (
    L3_MINUS_FOUR,
    LOG_BASE_BITS,
    RATE_OUT_OF_SCOPE,
    S_FUNCTION_OF_T,
    X_FUNCTION_OF_S_OR_T,
    bounds_p1,
    bounds_p2,
    l1,
    l3,
    source_profile,
)
from src.core.instances import d1, d2, d4, d5, t_function_of_s
from tests.helpers import random_source, source_from_cells


class TestBoundsP1(unittest.TestCase):
    def test_d1_half_rate(self):
        b = bounds_p1(d1(), 0.5)
        self.assertEqual(b.regime, "LOW")
        self.assertAlmostEqual(b.L1, -0.5, places=12)
        self.assertAlmostEqual(b.L2, -5.0, places=12)
        self.assertAlmostEqual(b.L3, -5.0, places=12)
        self.assertAlmostEqual(b.upper, 1.0, places=12)
        self.assertEqual(b.best_lower_id, "L1")
        self.assertEqual(b.best_lower_clipped, 0.0)
        self.assertIn(LOG_BASE_BITS, b.footnotes)
        self.assertIn(L3_MINUS_FOUR, b.footnotes)

    def test_d2_full_rate(self):
        b = bounds_p1(d2(), 1.0)
        self.assertEqual(b.regime, "LOW")
        self.assertAlmostEqual(b.L1, 1.0, places=12)
        self.assertAlmostEqual(b.L1_prime, 1.0, places=12)
        self.assertAlmostEqual(b.best_lower, 1.0, places=12)
        self.assertAlmostEqual(b.upper, 1.0, places=12)

    def test_d2_high_rate(self):
        b = bounds_p1(d2(), 1.5)
        self.assertEqual(b.regime, "HIGH")
        self.assertIsNone(b.L1)
        self.assertIsNone(b.L3)
        self.assertAlmostEqual(b.L1_prime, 1.0, places=12)
        self.assertEqual(b.best_lower_id, "L1_prime")
        self.assertIn(S_FUNCTION_OF_T, b.footnotes)
        self.assertAlmostEqual(b.L1_prime, b.upper, places=12)

    def test_s_function_of_t_only_when_s_is_determined(self):
        # D1 の T=W は S と独立
        self.assertNotIn(S_FUNCTION_OF_T, bounds_p1(d1(), 1.5).footnotes)
        # D2 でも LOW では付けない
        self.assertNotIn(S_FUNCTION_OF_T, bounds_p1(d2(), 0.5).footnotes)

    def test_unconstrained_regime(self):
        b = bounds_p1(d2(), 2.0)
        self.assertEqual(b.regime, "UNCONSTRAINED")
        self.assertIn(RATE_OUT_OF_SCOPE, b.footnotes)

    def test_negative_rate(self):
        with self.assertRaises(ValueError):
            bounds_p1(d1(), -0.5)

    def test_l1_l3_gap_at_full_rate(self):
        rng = np.random.default_rng(50)
        for _ in range(50):
            P = random_source(rng)
            p = source_profile(P)
            if p.h_x_given_s <= 0:
                continue
            r = p.h_x_given_s
            gap = math.log2(min(p.h_t, p.h_xs) + 1.0) + 4.0
            self.assertAlmostEqual(l1(p, r) - l3(p, r), gap, places=9)

    def test_l1_is_nondecreasing_in_rate(self):
        rng = np.random.default_rng(52)
        for _ in range(50):
            p = source_profile(random_source(rng))
            values = [l1(p, k * p.h_x_given_s / 8) for k in range(9)]
            for prev, cur in zip(values, values[1:]):
                self.assertGreaterEqual(cur, prev - 1e-12)

    def test_l3_is_nondecreasing_on_builtin_instances(self):
        for P in (d1(), d2(), d4(), d5(), t_function_of_s()):
            p = source_profile(P)
            values = [l3(p, k * p.h_x_given_s / 8) for k in range(9)]
            for prev, cur in zip(values, values[1:]):
                self.assertGreaterEqual(cur, prev - 1e-9)

    def test_l3_can_decrease_when_s_is_independent_of_t(self):
        # S, X は独立な公平ビット、T は定数: L3(r) = -r - 4
        P = source_from_cells({(s, x, "t"): Fraction(1, 4) for s in "01" for x in "01"})
        p = source_profile(P)
        self.assertAlmostEqual(l3(p, 0.0), -4.0, places=12)
        self.assertAlmostEqual(l3(p, 1.0), -5.0, places=12)

    def test_upper_dominates_lower_on_random_sources(self):
        rng = np.random.default_rng(51)
        for _ in range(50):
            P = random_source(rng)
            p = source_profile(P)
            for r in (0.0, p.h_x_given_s / 2, p.h_x_given_s, p.h_x):
                b = bounds_p1(P, r, p)
                self.assertLessEqual(b.best_lower, b.upper + 1e-9)


class TestBoundsP2(unittest.TestCase):
    def test_full_regime_when_x_is_function_of_s_and_t(self):
        for P in (d1(), d2()):
            b = bounds_p2(P, 0.0)
            self.assertEqual(b.regime, "FULL")
            self.assertAlmostEqual(b.exact_value, 1.0, places=12)
            self.assertAlmostEqual(b.usable_lower, 1.0, places=12)

    def test_x_function_of_t_footnote(self):
        # D2: X = T
        self.assertIn(X_FUNCTION_OF_S_OR_T, bounds_p2(d2(), 0.0).footnotes)

    def test_d4_regimes(self):
        P = d4()
        b = bounds_p2(P, 0.5)
        self.assertEqual(b.regime, "OPEN")
        self.assertAlmostEqual(b.threshold, 5.0, places=12)
        self.assertAlmostEqual(b.L1c, -5.0, places=12)
        self.assertEqual(b.usable_lower, 0.0)
        self.assertIsNone(b.exact_value)
        self.assertEqual(bounds_p2(P, 1.0).regime, "FULL")

    def test_negative_rate(self):
        with self.assertRaises(ValueError):
            bounds_p2(d1(), -0.5)


if __name__ == "__main__":
    unittest.main()
