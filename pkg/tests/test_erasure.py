import unittest
from fractions import Fraction

import numpy as np

from src.core.instances import d2
from src.core.measures import I
from src.core.pmf import Alphabet, JointPMF
from src.designs.erasure import (
    ERASURE_MARKER,
    AlphaOutOfRange,
    erase,
    erase_axis,
    erasure_channel,
    fresh_symbol,
)
from src.lemmas.frl import frl_construct
from tests.helpers import random_mass


def fair_copy() -> JointPMF:
    """U = V の公平ビット。"""
    mass = np.array([[Fraction(1, 2), Fraction(0)], [Fraction(0), Fraction(1, 2)]], dtype=object)
    return JointPMF(("U", "V"), (Alphabet(("0", "1")), Alphabet(("0", "1"))), mass)


class TestErasure(unittest.TestCase):
    def test_identity_on_random_pairs(self):
        rng = np.random.default_rng(30)
        for _ in range(200):
            shape = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
            joint = JointPMF(("U", "V"), (Alphabet.indexed("u", shape[0]), Alphabet.indexed("v", shape[1])), random_mass(rng, shape))
            alpha = Fraction(int(rng.integers(0, 11)), 10)
            erased = erase_axis(joint, "U", alpha, "U'")
            self.assertAlmostEqual(I(erased, "U'", "V"), float(alpha) * I(joint, "U", "V"), delta=1e-9)

    def test_half_erasure_of_fair_copy(self):
        erased = erase_axis(fair_copy(), "U", Fraction(1, 2), "U'")
        self.assertAlmostEqual(I(erased, "U'", "V"), 0.5, places=12)

    def test_alpha_one_keeps_information(self):
        erased = erase_axis(fair_copy(), "U", Fraction(1), "U'")
        self.assertAlmostEqual(I(erased, "U'", "V"), 1.0, places=12)

    def test_alpha_zero_is_constant(self):
        erased = erase_axis(fair_copy(), "U", Fraction(0), "U'")
        self.assertEqual(I(erased, "U'", "V"), 0.0)

    def test_alpha_out_of_range(self):
        with self.assertRaises(AlphaOutOfRange):
            erase_axis(fair_copy(), "U", Fraction(3, 2), "U'")
        w = frl_construct(d2(), cond=("S",), target="X")
        with self.assertRaises(AlphaOutOfRange):
            erase(w, -0.1)

    def test_channel_rows(self):
        ch = erasure_channel(3, Fraction(1, 4))
        self.assertEqual(ch.shape, (3, 4))
        for u in range(3):
            self.assertEqual(ch[u, u], Fraction(1, 4))
            self.assertEqual(ch[u, 3], Fraction(3, 4))
            self.assertEqual(sum(ch[u]), 1)

    def test_fresh_symbol_avoids_taken_labels(self):
        taken = [Alphabet(("c" + ERASURE_MARKER, "a")), Alphabet(("c" + ERASURE_MARKER * 2,))]
        self.assertEqual(fresh_symbol(taken), "c" + ERASURE_MARKER * 3)

    def test_erased_witness_alphabet(self):
        P = d2()
        w = frl_construct(P, cond=("S",), target="X")
        erased = erase(w, Fraction(1, 3), reserved=P.alphabets)
        self.assertEqual(erased.u_prime_alphabet.size, w.u_alphabet.size + 1)
        self.assertEqual(erased.u_prime_alphabet.symbols[-1], erased.erasure_symbol)
        for alph in P.alphabets + (w.u_alphabet,):
            self.assertNotIn(erased.erasure_symbol, alph.symbols)
        kernel = erased.kernel_given_rows_and_target(P)
        self.assertEqual(kernel.shape, (2, 4, 3))


if __name__ == "__main__":
    unittest.main()
