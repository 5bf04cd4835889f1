import unittest
from dataclasses import replace
from fractions import Fraction

import numpy as np

from src.core.instances import d1, d2
from src.core.measures import I
from src.core.pmf import Alphabet, JointPMF
from src.lemmas.frl import frl_construct, refine, witness_joint, witness_verify
from tests.helpers import random_pair, random_source


def two_row_pair() -> JointPMF:
    # C 公平ビット、P_{D|C=0}=(1/2,1/2)、P_{D|C=1}=(1/4,3/4)
    mass = np.array([[Fraction(1, 4), Fraction(1, 4)], [Fraction(1, 8), Fraction(3, 8)]], dtype=object)
    return JointPMF(("C", "D"), (Alphabet.indexed("c", 2), Alphabet.indexed("d", 2)), mass)


class TestRefine(unittest.TestCase):
    def test_common_refinement_of_two_rows(self):
        rows = [[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 4), Fraction(3, 4)]]
        lengths, map_f = refine(rows)
        self.assertEqual(lengths, [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)])
        self.assertEqual(map_f[:, 0].tolist(), [0, 0, 1])
        self.assertEqual(map_f[:, 1].tolist(), [0, 1, 1])

    def test_zero_rows_are_skipped(self):
        lengths, map_f = refine([None, [Fraction(1)]])
        self.assertEqual(lengths, [Fraction(1)])
        self.assertEqual(map_f[:, 0].tolist(), [-1])


class TestFrlConstruct(unittest.TestCase):
    def test_certificates_on_random_pairs(self):
        rng = np.random.default_rng(10)
        for _ in range(500):
            joint = random_pair(rng)
            w = frl_construct(joint)
            rep = witness_verify(w, joint)
            self.assertEqual(rep.independence_residual, 0.0)
            self.assertEqual(rep.determinism_residual, 0.0)
            self.assertLessEqual(rep.i_u_d, rep.h_d_given_c + 1e-9)
            self.assertTrue(rep.exact)

    def test_cell_count_bound(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            joint = random_pair(rng)
            w = frl_construct(joint)
            supports = (np.asarray(joint.mass) > 0).sum(axis=1)
            bound = 1 + sum(int(k) - 1 for k in supports if k > 0)
            self.assertLessEqual(w.u_alphabet.size, bound)
            self.assertEqual(sum(w.p_u), 1)

    def test_composite_condition(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            P = random_source(rng)
            w = frl_construct(P, cond=("S", "X"), target="T")
            rep = witness_verify(w, P)
            self.assertEqual(rep.independence_residual, 0.0)
            self.assertEqual(rep.determinism_residual, 0.0)

    def test_float_mode_residuals_are_small(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            joint = random_pair(rng).to_float()
            rep = witness_verify(frl_construct(joint), joint)
            self.assertFalse(rep.exact)
            self.assertLess(rep.independence_residual, 1e-9)
            self.assertLess(rep.determinism_residual, 1e-9)

    def test_d2_witness_is_high_bit_of_t(self):
        # S = T mod 2, X = T: FRL(S→X) は T の上位ビットを取り出す
        P = d2()
        w = frl_construct(P, cond=("S",), target="X")
        j = witness_joint(w, P.marginal(("S", "X")))
        self.assertEqual(w.u_alphabet.size, 2)
        self.assertAlmostEqual(I(j, "U", "X"), 1.0, places=12)
        self.assertEqual(I(j, "U", "S"), 0.0)

    def test_exact_witness_is_ok(self):
        joint = two_row_pair()
        rep = witness_verify(frl_construct(joint), joint)
        self.assertTrue(rep.ok)

    def test_corrupted_coupling_is_reported(self):
        joint = two_row_pair()
        w = frl_construct(joint)
        self.assertEqual(w.u_alphabet.size, 3)
        coupling = np.array(w.coupling, dtype=object)
        # (c0, d0) の行: (1/2, 1/2, 0) -> (1/2, 1/2, 1/8) -> 正規化
        coupling[0, 0, 2] += Fraction(1, 8)
        coupling[0, 0, :] = coupling[0, 0, :] / sum(coupling[0, 0, :])
        self.assertEqual(list(coupling[0, 0, :]), [Fraction(4, 9), Fraction(4, 9), Fraction(1, 9)])
        rep = witness_verify(replace(w, coupling=coupling), joint)
        self.assertGreater(rep.independence_residual, 0.0)
        self.assertGreater(rep.determinism_residual, 0.0)
        self.assertFalse(rep.ok)

    def test_d1_witness_recovers_w(self):
        P = d1()
        w = frl_construct(P, cond=("S",), target="X")
        rep = witness_verify(w, P)
        self.assertAlmostEqual(rep.i_u_d, 1.0, places=12)
        self.assertAlmostEqual(rep.h_d_given_c, 1.0, places=12)


if __name__ == "__main__":
    unittest.main()
