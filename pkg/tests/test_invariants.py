import logging
import math
import time
import unittest

import numpy as np

from sln_atlas.circlefield import (
    CircleDiffeo,
    IntervalField,
    SampledField,
    TrigPoly,
    ZeroDatum,
    eval_field,
    find_zeros,
    pushforward,
    reflect,
    trig_field,
)
from sln_atlas.invariants import (
    AmbiguousMatch,
    Closeness,
    HitchinInvariants,
    InsufficientDerivativeDepth,
    NotAZero,
    canonical_key,
    compare_values,
    dihedral_images,
    equivalent_germs,
    equivalent_interval,
    equivalent_invariants,
    germ_invariants,
    interval_invariants,
    invariants,
    laurent_at_zero,
    residue,
)

from . import FULL_SUITES

# 0.3 + sin(theta) + 0.2 cos(2 theta): two simple zeros where sin(theta) ~ -0.427
GENERIC = trig_field(0.3, cos=(0.0, 0.2), sin=(1.0,))
# (1 - t^2)(0.5 + 0.2 t): vanishes only at the endpoints, not symmetric under t -> -t
LOPSIDED = IntervalField.polynomial([0.5, 0.2, -0.5, -0.2])


def is_cyclic_rotation(a, b, tol):
    if len(a) != len(b):
        return False
    for shift in range(len(b)):
        rotated = b[shift:] + b[:shift]
        if all(m == n and abs(r - s) <= tol for (m, r), (n, s) in zip(a, rotated)):
            return True
    return False


def random_simple_trig(rng):
    """ A random trig polynomial of degree <= 6 whose zeros are all simple and well separated """
    while True:
        degree = int(rng.integers(1, 7))
        field = trig_field(rng.uniform(-1, 1), rng.uniform(-1, 1, degree), rng.uniform(-1, 1, degree))
        try:
            zeros = find_zeros(field)
        except ValueError:
            continue
        thetas = [z.theta for z in zeros]
        gaps = np.diff(thetas + [thetas[0] + 2 * np.pi]) if thetas else []
        slopes = [abs(eval_field(field, z.theta, 1)) for z in zeros]
        if all(z.order == 1 for z in zeros) and min(slopes, default=1) > 0.05 and min(gaps, default=1) > 0.05:
            return field


def random_diffeo(rng):
    amplitude = rng.uniform(0, 0.3)
    cos, sin = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
    # |p'| <= sum_j j (|a_j| + |b_j|), kept below 1 so that h' > 0
    scale = amplitude / sum(j * (abs(a) + abs(b)) for j, (a, b) in enumerate(zip(cos, sin), start=1))
    return CircleDiffeo(TrigPoly(0.0, tuple(cos * scale), tuple(sin * scale)), shift=rng.uniform(0, 2 * np.pi))


class TestGlobalInvariant(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)

    def test_constant_fields(self) -> None:
        for c in (0.5, 1.0, 2.0, -3.0):
            inv = invariants(trig_field(c))

            self.assertEqual(inv.k, 0)
            self.assertEqual(inv.sigma, 1 if c > 0 else -1)
            self.assertAlmostEqual(inv.mu, 2 * math.pi / c, delta=1e-12)

    def test_cosine_perturbation(self) -> None:
        rng = np.random.default_rng(7)
        for _ in range(50 if FULL_SUITES else 10):
            b = rng.uniform(-2, 2)
            a = abs(b) + 0.1 + rng.uniform(0, 2)

            mu = invariants(trig_field(a, cos=(b,))).mu

            self.assertAlmostEqual(mu, 2 * math.pi / math.sqrt(a * a - b * b), delta=1e-8)

    def test_finite_part_of_one_minus_cos(self) -> None:
        inv = invariants(trig_field(1.0, cos=(-1.0,)))
        # the cutoff integral over [eps, 2 pi - eps] is 2 cot(eps / 2); its finite part is extrapolated to 0
        cutoff = lambda eps: 2 / math.tan(eps / 2) - 4 / eps  # noqa: E731
        extrapolated = (10 * cutoff(1e-3) - cutoff(1e-2)) / 9

        self.assertEqual(inv.k, 1)
        self.assertEqual(inv.zero_data[0][0], 2)
        self.assertAlmostEqual(inv.zero_data[0][1], 0.0, delta=1e-9)
        self.assertAlmostEqual(inv.mu, 0.0, delta=1e-6)
        self.assertAlmostEqual(inv.mu, extrapolated, delta=1e-6)

    def test_square_of_one_minus_cos(self) -> None:
        inv = invariants(trig_field(1.5, cos=(-2.0, 0.5)))

        self.assertEqual(inv.k, 1)
        self.assertEqual(inv.zero_data[0][0], 4)
        self.assertAlmostEqual(inv.zero_data[0][1], 0.0, delta=1e-9)
        self.assertAlmostEqual(inv.mu, 0.0, delta=1e-6)

    def test_close_zeros(self) -> None:
        # sin(theta) (cos(theta) - cos(beta)): simple zeros at 0, beta, pi and 2 pi - beta. When every zero
        # of a trig polynomial is real and simple, its residues and mu both vanish.
        for beta in (0.05, 0.063, 0.2, 1.0):
            c = math.cos(beta)
            inv = invariants(trig_field(sin=(-c, 0.5)))
            expected = [1 / (1 - c), -1 / math.sin(beta) ** 2, 1 / (1 + c), -1 / math.sin(beta) ** 2]

            with self.subTest(beta=beta):
                self.assertEqual(inv.k, 4)
                for (order, r), s in zip(inv.zero_data, expected):
                    self.assertEqual(order, 1)
                    self.assertAlmostEqual(r, s, delta=1e-8 * abs(s))
                self.assertAlmostEqual(inv.mu, 0.0, delta=1e-6)

    def test_sine(self) -> None:
        inv = invariants(trig_field(sin=(1.0,)))

        self.assertEqual(inv.k, 2)
        self.assertEqual(inv.sigma, 1)
        self.assertEqual([m for m, _ in inv.zero_data], [1, 1])
        self.assertAlmostEqual(inv.zero_data[0][1], 1.0, places=12)
        self.assertAlmostEqual(inv.zero_data[1][1], -1.0, places=12)
        self.assertAlmostEqual(inv.mu, 0.0, delta=1e-8)


class TestResidues(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)

    def test_simple_zero_residue_is_reciprocal_slope(self) -> None:
        for zero in find_zeros(GENERIC):
            self.assertAlmostEqual(residue(GENERIC, zero), 1 / eval_field(GENERIC, zero.theta, 1), delta=1e-10)

    def test_laurent_coefficients_of_sine(self) -> None:
        zero = find_zeros(trig_field(sin=(1.0,)))[0]
        laurent = laurent_at_zero(trig_field(sin=(1.0,)), zero, depth=1)

        self.assertAlmostEqual(laurent.c(-1), 1.0, places=12)
        self.assertAlmostEqual(laurent.c(0), 0.0, places=12)
        self.assertAlmostEqual(laurent.c(1), 1 / 6, places=10)

    def test_insufficient_depth(self) -> None:
        sampled = SampledField(trig_field(sin=(1.0,)).derivatives, depth=4)

        with self.assertRaises(InsufficientDerivativeDepth):
            residue(sampled, ZeroDatum(0.0, 3, ()))
        with self.assertRaises(InsufficientDerivativeDepth):
            laurent_at_zero(sampled, ZeroDatum(0.0, 1, ()), depth=3)


class TestCanonicalKey(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)

    def test_images(self) -> None:
        inv = HitchinInvariants(3, 1, ((1, 0.5), (2, -1.0), (1, 0.25)), 1.5, 1e-9)
        images = dihedral_images(inv)

        self.assertEqual(len(images), 6)
        self.assertEqual(images[1], (1, ((2, -1.0), (1, 0.25), (1, 0.5))))
        self.assertEqual(images[3], (-1, ((1, 0.25), (2, -1.0), (1, 0.5))))

    def test_key_is_the_same_for_every_relabeling(self) -> None:
        rng = np.random.default_rng(11)
        for _ in range(200 if FULL_SUITES else 30):
            k = int(rng.integers(1, 8))
            data = tuple((int(rng.integers(1, 4)), float(rng.choice([-1.0, 0.5, 2.0]))) for _ in range(k))
            inv = HitchinInvariants(k, 1, data, float(rng.normal()), 1e-9)
            key = canonical_key(inv)

            for sigma, image in dihedral_images(inv):
                self.assertEqual(canonical_key(HitchinInvariants(k, sigma, image, inv.mu, 1e-9)), key)

    def test_key_prefers_positive_sigma(self) -> None:
        inv = HitchinInvariants(2, -1, ((1, 1.0), (1, 1.0)), 0.0, 1e-9)

        self.assertEqual(canonical_key(inv).canonical_sigma, 1)

    def test_key_without_zeros(self) -> None:
        key = canonical_key(invariants(trig_field(-2.0)))

        self.assertEqual((key.k, key.canonical_sequence, key.canonical_sigma), (0, (), -1))


class TestEquivalence(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)

    def test_compare_values(self) -> None:
        self.assertEqual(compare_values(1.0, 1.0 + 1e-7, 1e-6), Closeness.Match)
        self.assertEqual(compare_values(1.0, 1.0 + 5e-6, 1e-6), Closeness.Near)
        self.assertEqual(compare_values(1.0, 1.1, 1e-6), Closeness.Apart)
        self.assertEqual(compare_values(1000.0, 1000.0005, 1e-6), Closeness.Match)

    def test_rotated_listing(self) -> None:
        a = HitchinInvariants(3, 1, ((1, 0.5), (2, -1.0), (1, 0.25)), 1.5, 1e-9)
        b = HitchinInvariants(3, 1, ((1, 0.25), (1, 0.5), (2, -1.0)), 1.5, 1e-9)

        self.assertTrue(equivalent_invariants(a, b))

    def test_different_invariants(self) -> None:
        a = HitchinInvariants(2, 1, ((1, 1.0), (1, -1.0)), 0.0, 1e-9)

        self.assertFalse(equivalent_invariants(a, HitchinInvariants(2, 1, ((1, 1.0), (1, -2.0)), 0.0, 1e-9)))
        self.assertFalse(equivalent_invariants(a, HitchinInvariants(2, 1, ((1, 1.0), (1, -1.0)), 1.0, 1e-9)))
        self.assertFalse(equivalent_invariants(a, HitchinInvariants(1, 1, ((2, 0.0),), 0.0, 1e-9)))

    def test_near_tie_is_ambiguous(self) -> None:
        a = HitchinInvariants(2, 1, ((1, 1.0), (1, -1.0)), 0.0, 1e-9)
        b = HitchinInvariants(2, 1, ((1, 1.000005), (1, -1.0)), 0.0, 1e-9)

        with self.assertRaises(AmbiguousMatch):
            equivalent_invariants(a, b, 1e-6)
        self.assertTrue(equivalent_invariants(a, b, 1e-5))

    def test_reflection_reverses_listing_and_negates_mu(self) -> None:
        a, b = invariants(GENERIC), invariants(reflect(GENERIC))

        self.assertEqual(a.k, b.k)
        self.assertTrue(is_cyclic_rotation(list(a.zero_data[::-1]), list(b.zero_data), 1e-9))
        self.assertAlmostEqual(b.mu, -a.mu, delta=1e-8)

    def test_pushforward_preserves_invariants(self) -> None:
        diffeo = CircleDiffeo(TrigPoly.from_terms(0.0, cos=(0.0, 0.05), sin=(0.1,)), shift=0.4)
        a, b = invariants(GENERIC), invariants(pushforward(GENERIC, diffeo))

        self.assertTrue(equivalent_invariants(a, b, 1e-5))

    def test_conjugation_invariance_suite(self) -> None:
        started = time.perf_counter()
        rng = np.random.default_rng(3)
        fields, diffeos = (100, 10) if FULL_SUITES else (4, 2)
        checked = ambiguous = 0
        for _ in range(fields):
            field = random_simple_trig(rng)
            base = invariants(field)
            for zero in find_zeros(field):
                self.assertAlmostEqual(residue(field, zero), 1 / eval_field(field, zero.theta, 1), delta=1e-10)
            for _ in range(diffeos):
                pushed = invariants(pushforward(field, random_diffeo(rng)))
                try:
                    self.assertTrue(equivalent_invariants(base, pushed, 1e-5))
                    checked += 1
                except AmbiguousMatch:
                    ambiguous += 1
        self.assertLess(ambiguous, 0.02 * (checked + ambiguous) + 1)
        if FULL_SUITES:
            self.assertLess(time.perf_counter() - started, 120.0)


class TestZeroTransport(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)

    def test_pushforward_moves_zeros(self) -> None:
        rng = np.random.default_rng(13)
        for _ in range(100 if FULL_SUITES else 10):
            field = random_simple_trig(rng)
            a, b = rng.uniform(-0.9, 0.9), rng.uniform(-0.45, 0.45)
            # h(theta) = theta + a sin(theta) + b cos(2 theta) with |a| + 2 |b| <= 0.9
            scale = 0.9 / max(0.9, abs(a) + 2 * abs(b))
            diffeo = CircleDiffeo(TrigPoly(0.0, (0.0, b * scale), (a * scale, 0.0)))
            expected = [(float(np.mod(diffeo(z.theta), 2 * np.pi)), z.order) for z in find_zeros(field)]
            found = [(z.theta, z.order) for z in find_zeros(pushforward(field, diffeo))]

            self.assertEqual(len(found), len(expected))
            for theta, order in expected:
                distance, other_order = min(
                    (abs(np.mod(theta - other + np.pi, 2 * np.pi) - np.pi), m) for other, m in found
                )
                self.assertLess(distance, 1e-6)
                self.assertEqual(other_order, order)

    def test_index_sum_vanishes(self) -> None:
        rng = np.random.default_rng(19)
        for _ in range(100 if FULL_SUITES else 20):
            field = random_simple_trig(rng)

            self.assertEqual(sum(np.sign(eval_field(field, z.theta, 1)) for z in find_zeros(field)), 0)


class TestIntervalInvariants(unittest.TestCase):
    def setUp(self):
        super().setUp()
        logging.getLogger("sln_atlas").setLevel(logging.CRITICAL)

    def test_half_parabola(self) -> None:
        inv = interval_invariants(IntervalField.polynomial([0.5, 0.0, -0.5]))

        self.assertEqual([m for m, _ in inv.records], [1, 1])
        self.assertAlmostEqual(inv.records[0][1], 1.0, places=12)
        self.assertAlmostEqual(inv.records[1][1], -1.0, places=12)
        self.assertEqual(len(inv.gaps), 1)
        self.assertAlmostEqual(inv.gaps[0], 0.0, delta=1e-9)

    def test_reflection_flips_invariants(self) -> None:
        inv, reflected = interval_invariants(LOPSIDED), interval_invariants(LOPSIDED.reflected())
        flipped = inv.flipped()

        for (m, r), (n, s) in zip(flipped.records, reflected.records):
            self.assertEqual(m, n)
            self.assertAlmostEqual(r, s, places=10)
        self.assertAlmostEqual(flipped.gaps[0], reflected.gaps[0], places=8)

    def test_equivalent_interval(self) -> None:
        self.assertTrue(equivalent_interval(LOPSIDED, LOPSIDED))
        self.assertFalse(equivalent_interval(LOPSIDED, LOPSIDED.reflected()))
        self.assertTrue(equivalent_interval(LOPSIDED, LOPSIDED.reflected(), allow_flip=True))

    def test_germs(self) -> None:
        germ = germ_invariants(IntervalField.polynomial([0.0, 3.0]))

        self.assertEqual(germ.order, 1)
        self.assertAlmostEqual(germ.residue, 1 / 3)
        self.assertEqual(germ_invariants(IntervalField.polynomial([0.0, 0.0, 0.0, 2.0])).order, 3)
        with self.assertRaises(NotAZero):
            germ_invariants(IntervalField.polynomial([1.0, 1.0]))

    def test_equivalent_germs(self) -> None:
        a = germ_invariants(IntervalField.polynomial([0.0, 3.0]))

        self.assertTrue(equivalent_germs(a, germ_invariants(IntervalField.polynomial([0.0, 3.0, 0.0, 5.0]))))
        self.assertFalse(equivalent_germs(a, germ_invariants(IntervalField.polynomial([0.0, 2.0]))))
        with self.assertRaises(AmbiguousMatch):
            equivalent_germs(a, germ_invariants(IntervalField.polynomial([0.0, 3.00001])))


if __name__ == "__main__":
    unittest.main()
