import itertools
import json
import os
import tempfile
import unittest

import numpy as np

from errors import DegreeMismatch, DegreeTooLarge, GroupTooLarge, InvalidPermutation
from permgroup import (
    Permutation,
    centralizer_size_in_symmetric_group,
    close,
    compose,
    conjugate,
    conjugation_orbit,
    conjugation_orbits,
    conjugation_stabilizer_size,
    cyclic_group,
    group_from_dict,
    identity,
    inverse,
    is_k_weakly_versatile,
    is_k_weakly_versatile_bruteforce,
    is_permutant,
    is_transitive,
    load_group,
    min_nontrivial_permutant_size,
    named_group,
    orbit,
    parse_cycles,
    power,
    save_group,
    stabilizer,
    symmetric_group,
    transitive_groups,
    trivial_group,
)


def cyc(text, n=4):
    return parse_cycles(text, n)


def random_perm(rng, n):
    return Permutation(tuple(rng.permutation(n).tolist()))


class TestPermutation(unittest.TestCase):
    def test_invalid_images(self):
        """Test qu'un tableau qui n'est pas une bijection est refusé"""
        with self.assertRaises(InvalidPermutation):
            Permutation((0, 0, 1))
        with self.assertRaises(InvalidPermutation):
            Permutation((1, 2, 3))

    def test_compose_applies_right_factor_first(self):
        a, b = cyc('(1 2)'), cyc('(1 3)(2 4)')
        ab = compose(a, b)
        self.assertEqual(ab.images, tuple(a.images[j] for j in b.images))
        self.assertEqual(ab, cyc('(1 3 2 4)'))
        self.assertEqual(compose(b, a), cyc('(1 4 2 3)'))
        self.assertEqual(a * b, ab)

    def test_conjugation_relabels_cycles(self):
        """(12)(13)(24)(12) = (14)(23)"""
        result = conjugate(cyc('(1 2)'), cyc('(1 3)(2 4)'))
        self.assertEqual(result, cyc('(1 4)(2 3)'))
        self.assertEqual(result.cycle_string(), '(1 4)(2 3)')

    def test_involution_and_identity(self):
        swap = parse_cycles('(1 2)', 2)
        self.assertTrue(compose(swap, swap).is_identity())
        h = cyc('(1 2 3)')
        self.assertEqual(compose(identity(4), h), h)
        self.assertEqual(compose(h, identity(4)), h)

    def test_degree_mismatch(self):
        with self.assertRaises(DegreeMismatch):
            compose(identity(3), identity(4))

    def test_inverse_and_associativity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b, c = (random_perm(rng, 6) for _ in range(3))
            self.assertEqual(inverse(inverse(a)), a)
            self.assertTrue(compose(a, inverse(a)).is_identity())
            self.assertEqual(compose(compose(a, b), c), compose(a, compose(b, c)))

    def test_cycle_type_order_power(self):
        h = parse_cycles('(1 2 3)(4 5)', 6)
        self.assertEqual(dict(h.cycle_type()), {3: 1, 2: 1, 1: 1})
        self.assertEqual(h.order(), 6)
        self.assertTrue(power(h, 6).is_identity())
        self.assertEqual(power(h, -1), h.inverse())
        self.assertEqual(power(h, 2), compose(h, h))

    def test_parse_cycles(self):
        self.assertEqual(parse_cycles('(1 2)(1 3)', 3), parse_cycles('(1 3 2)', 3))
        self.assertTrue(parse_cycles('()', 3).is_identity())
        self.assertTrue(parse_cycles('id', 3).is_identity())
        self.assertEqual(parse_cycles('(1, 2, 3)', 3), parse_cycles('(1 2 3)', 3))
        self.assertEqual(identity(3).cycle_string(), '()')
        for bad in ('(1 5)', '(1 1)', '1 2', '(a b)'):
            with self.assertRaises(InvalidPermutation):
                parse_cycles(bad, 4)


class TestGroups(unittest.TestCase):
    def test_named_group_orders(self):
        expected = {'S4': 24, 'A4': 12, 'C4': 4, 'D4': 8, 'V4': 4, 'F5': 20, 'I3': 1, 'S1': 1}
        for name, order in expected.items():
            self.assertEqual(named_group(name).order, order, name)
        with self.assertRaises(ValueError):
            named_group('X4')
        with self.assertRaises(ValueError):
            named_group('F6')

    def test_cyclic_group_contains_powers(self):
        sigma = cyc('(1 2 3 4)')
        G = close([sigma])
        self.assertEqual(G.order, 4)
        for k in range(4):
            self.assertIn(power(sigma, k), G)

    def test_closure_is_canonical(self):
        G1 = close([cyc('(1 2)'), cyc('(1 2 3 4)')])
        G2 = close([cyc('(1 2 3 4)'), cyc('(1 2)')])
        self.assertEqual(G1.elements, G2.elements)
        self.assertEqual(list(G1.elements), sorted(G1.elements))

    def test_group_cap(self):
        with self.assertRaises(GroupTooLarge):
            close([cyc('(1 2)'), cyc('(1 2 3 4)')], cap=10)
        with self.assertRaises(ValueError):
            close([])

    def test_transitivity(self):
        self.assertFalse(is_transitive(trivial_group(2)))
        self.assertTrue(is_transitive(symmetric_group(2)))
        for n in range(2, 7):
            for G in transitive_groups(n):
                self.assertTrue(is_transitive(G))

    def test_orbit_and_stabilizer(self):
        G = symmetric_group(4)
        self.assertEqual(orbit(G, 2), [0, 1, 2, 3])
        stab = stabilizer(G, 0)
        self.assertEqual(len(stab), 6)
        self.assertTrue(all(g(0) == 0 for g in stab))
        self.assertEqual(orbit(trivial_group(3), 1), [1])

    def test_group_file(self):
        G = named_group('D5')
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'group.json')
            save_group(G, path)
            self.assertEqual(load_group(path).elements, G.elements)
            with open(path, 'w') as f:
                json.dump({"degree": 4, "generators": ["(1 2)", "(1 2 3 4)"]}, f)
            self.assertEqual(load_group(path).order, 24)
        self.assertEqual(load_group('A4').order, 12)
        with self.assertRaises(DegreeMismatch):
            group_from_dict({"degree": 3, "generators": [[1, 0]]})


class TestConjugation(unittest.TestCase):
    def setUp(self):
        self.S4 = symmetric_group(4)

    def test_orbits_in_s4(self):
        transpositions = conjugation_orbit(cyc('(1 2)'), self.S4)
        self.assertEqual(transpositions.size, 6)
        self.assertEqual(
            transpositions.members,
            {cyc(f'({a} {b})') for a, b in itertools.combinations(range(1, 5), 2)},
        )
        sigma2 = power(cyc('(1 2 3 4)'), 2)
        doubles = conjugation_orbit(sigma2, self.S4)
        self.assertEqual(doubles.members, {cyc('(1 2)(3 4)'), cyc('(1 3)(2 4)'), cyc('(1 4)(2 3)')})
        self.assertEqual(conjugation_orbit(identity(4), self.S4).size, 1)

    def test_class_sizes_of_s4(self):
        orbits = conjugation_orbits(self.S4, self.S4.elements)
        self.assertEqual(sorted(o.size for o in orbits), [1, 3, 6, 6, 8])

    def test_orbit_stabilizer_and_invariance(self):
        rng = np.random.default_rng(2)
        for n in range(2, 7):
            for G in transitive_groups(n):
                for _ in range(5):
                    h = random_perm(rng, n)
                    o = conjugation_orbit(h, G)
                    self.assertEqual(G.order, o.size * conjugation_stabilizer_size(h, G))
                    g = G.elements[int(rng.integers(G.order))]
                    self.assertEqual(conjugation_orbit(conjugate(g, h), G).members, o.members)

    def test_centralizer_sizes(self):
        self.assertEqual(centralizer_size_in_symmetric_group(identity(4)), 24)
        self.assertEqual(centralizer_size_in_symmetric_group(cyc('(1 2 3 4)')), 4)
        self.assertEqual(centralizer_size_in_symmetric_group(cyc('(1 3)(2 4)')), 8)
        for n in range(1, 6):
            Sn = symmetric_group(n)
            for h in Sn.elements:
                brute = sum(1 for g in Sn.elements if compose(g, h) == compose(h, g))
                self.assertEqual(centralizer_size_in_symmetric_group(h), brute)

    def test_is_permutant(self):
        self.assertTrue(is_permutant([], self.S4))
        self.assertFalse(is_permutant([cyc('(1 2 3 4)')], self.S4))
        doubles = [cyc('(1 2)(3 4)'), cyc('(1 3)(2 4)'), cyc('(1 4)(2 3)')]
        self.assertTrue(is_permutant(doubles, self.S4))
        rng = np.random.default_rng(3)
        for G in transitive_groups(4):
            H = {random_perm(rng, 4) for _ in range(3)}
            union = set().union(*(conjugation_orbit(h, G).members for h in H))
            self.assertEqual(is_permutant(H, G), H == union)
            self.assertTrue(is_permutant(union, G))


class TestVersatility(unittest.TestCase):
    def test_examples(self):
        self.assertTrue(is_k_weakly_versatile(symmetric_group(4), 2))
        self.assertFalse(is_k_weakly_versatile(symmetric_group(4), 3))
        self.assertFalse(is_k_weakly_versatile(cyclic_group(4), 1))
        self.assertFalse(is_k_weakly_versatile(trivial_group(3), 1))
        with self.assertRaises(ValueError):
            is_k_weakly_versatile(symmetric_group(3), 0)

    def test_matches_literal_definition(self):
        for n in range(2, 6):
            for G in transitive_groups(n) + [trivial_group(n)]:
                for k in range(1, n):
                    self.assertEqual(is_k_weakly_versatile(G, k), is_k_weakly_versatile_bruteforce(G, k))

    def test_min_nontrivial_permutant(self):
        self.assertEqual(min_nontrivial_permutant_size(symmetric_group(4)), 3)
        self.assertEqual(min_nontrivial_permutant_size(trivial_group(2)), 1)
        with self.assertRaises(DegreeTooLarge):
            min_nontrivial_permutant_size(cyclic_group(8))

    def test_versatile_groups_have_large_permutants(self):
        for n in range(2, 6):
            for G in transitive_groups(n):
                smallest = min_nontrivial_permutant_size(G)
                for k in range(1, n):
                    if is_k_weakly_versatile(G, k):
                        self.assertGreater(smallest, k)


if __name__ == '__main__':
    unittest.main()
