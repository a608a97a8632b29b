"""
Тесты алгебры функций масс.

Запуск:
    python manage.py test apps.lab.belief
"""
import itertools

import numpy as np
from django.test import SimpleTestCase

from .core import (
    Frame,
    bel,
    betp,
    betp_subset,
    categorical,
    combine_with_retry,
    dempster_combine,
    discount,
    make_mass,
    mean_combine,
    members_of,
    pl,
    vacuous,
)
from .dense import (
    bel_pl_singletons_dense,
    betp_dense,
    dempster_combine_dense,
    discount_dense,
    from_dense,
    to_dense,
)
from .exceptions import (
    BadFrame,
    BadSubset,
    EmptyFocal,
    EmptyList,
    FrameMismatch,
    NegativeMass,
    SumNotOne,
    TotalConflict,
)


PETS = Frame(('Cat', 'Dog'))
AB = Frame(('a', 'b'))
ABC = Frame(('a', 'b', 'c'))


def random_mass(rng, frame, max_focal=4):
    """Случайная функция масс с 1..max_focal фокальными элементами."""
    n_subsets = (1 << frame.M) - 1
    k = int(rng.integers(1, min(max_focal, n_subsets) + 1))
    masks = rng.choice(np.arange(1, n_subsets + 1), size=k, replace=False)
    weights = rng.dirichlet(np.ones(k))
    return make_mass(frame, [(members_of(int(mask)), w) for mask, w in zip(masks, weights)], renormalize=True)


def all_subsets(frame):
    return [members_of(mask) for mask in range(1, 1 << frame.M)]


def example3():
    return make_mass(PETS, [({'Cat'}, 0.5), ({'Cat', 'Dog'}, 0.5)])


# ─── Конструирование ────────────────────────────────────────────────────

class FrameTest(SimpleTestCase):

    def test_bounds(self):
        with self.assertRaises(BadFrame):
            Frame(('a',))
        with self.assertRaises(BadFrame):
            Frame(tuple(f'c{i}' for i in range(21)))
        self.assertEqual(Frame(tuple(f'c{i}' for i in range(20))).M, 20)

    def test_labels_unique_and_non_empty(self):
        with self.assertRaises(BadFrame):
            Frame(('a', 'a'))
        with self.assertRaises(BadFrame):
            Frame(('a', ''))

    def test_mask_accepts_labels_and_indices(self):
        self.assertEqual(ABC.mask({'a', 2}), 0b101)
        with self.assertRaises(BadSubset):
            ABC.mask({3})
        with self.assertRaises(BadSubset):
            ABC.mask({'z'})


class MakeMassTest(SimpleTestCase):

    def test_categorical_certain(self):
        m = make_mass(PETS, [({'Cat'}, 1.0)])
        self.assertEqual(m, categorical(PETS, {'Cat'}))
        self.assertEqual(m.mass({'Cat'}), 1.0)

    def test_vacuous(self):
        m = make_mass(PETS, [({'Cat', 'Dog'}, 1.0)])
        self.assertTrue(m.is_vacuous)
        self.assertEqual(m, vacuous(PETS))

    def test_duplicates_summed_beyond_one(self):
        with self.assertRaises(SumNotOne):
            make_mass(AB, [({'a'}, 0.6), ({'a'}, 0.5)])

    def test_duplicates_summed(self):
        m = make_mass(AB, [({'a'}, 0.25), ({'a'}, 0.25), ({'a', 'b'}, 0.5)])
        self.assertEqual(dict(m.focal), {0b01: 0.5, 0b11: 0.5})

    def test_zero_entries_pruned(self):
        m = make_mass(AB, [({'a'}, 1.0), ({'b'}, 0.0)])
        self.assertEqual(list(m.focal), [0b01])

    def test_empty_focal(self):
        with self.assertRaises(EmptyFocal):
            make_mass(AB, [(set(), 0.2), ({'a'}, 0.8)])
        make_mass(AB, [(set(), 0.0), ({'a'}, 1.0)])

    def test_bad_subset(self):
        with self.assertRaises(BadSubset):
            make_mass(AB, [({2}, 1.0)])

    def test_negative(self):
        with self.assertRaises(NegativeMass):
            make_mass(AB, [({0}, -0.1), ({1}, 1.1)])

    def test_renormalize_only_when_asked(self):
        assignments = [({0}, 0.5), ({1}, 0.505)]
        with self.assertRaises(SumNotOne):
            make_mass(AB, assignments)
        m = make_mass(AB, assignments, renormalize=True)
        self.assertAlmostEqual(sum(m.focal.values()), 1.0, places=12)
        with self.assertRaises(SumNotOne):
            make_mass(AB, [({0}, 0.5), ({1}, 0.6)], renormalize=True)

    def test_immutable(self):
        m = vacuous(AB)
        with self.assertRaises(AttributeError):
            m.frame = ABC
        with self.assertRaises(TypeError):
            m.focal[1] = 0.5


# ─── Преобразования ─────────────────────────────────────────────────────

class DecisionTransformTest(SimpleTestCase):

    def test_betp_example3(self):
        p = betp(example3())
        self.assertEqual(p['Cat'], 0.75)
        self.assertEqual(p['Dog'], 0.25)

    def test_betp_vacuous_symmetric(self):
        for value in betp(vacuous(ABC)).p:
            self.assertAlmostEqual(value, 1 / 3, places=15)

    def test_betp_categorical(self):
        self.assertEqual(betp(categorical(ABC, {'a'})).p, (1.0, 0.0, 0.0))

    def test_betp_subset(self):
        m = example3()
        self.assertEqual(betp_subset(m, {'Cat', 'Dog'}), 1.0)
        self.assertEqual(betp_subset(m, {'Cat'}), 0.75)
        self.assertEqual(betp_subset(vacuous(PETS), {'Dog'}), 0.5)
        with self.assertRaises(EmptyFocal):
            betp_subset(m, set())

    def test_bel_pl_examples(self):
        self.assertEqual((bel(vacuous(ABC), {'b'}), pl(vacuous(ABC), {'b'})), (0.0, 1.0))
        self.assertEqual((bel(example3(), {'Cat'}), pl(example3(), {'Cat'})), (0.5, 1.0))
        m = categorical(AB, {'a'})
        self.assertEqual((bel(m, {'a'}), pl(m, {'a'})), (1.0, 1.0))
        with self.assertRaises(EmptyFocal):
            bel(m, set())
        with self.assertRaises(EmptyFocal):
            pl(m, ())


# ─── Комбинирование ─────────────────────────────────────────────────────

class CombinationTest(SimpleTestCase):

    def test_mean_example3(self):
        m = mean_combine([categorical(PETS, {'Cat'}), vacuous(PETS)])
        self.assertEqual(m, example3())

    def test_mean_single_and_symmetric(self):
        m = example3()
        self.assertIs(mean_combine([m]), m)
        split = mean_combine([categorical(AB, {'a'}), categorical(AB, {'b'})])
        self.assertEqual(dict(split.focal), {0b01: 0.5, 0b10: 0.5})

    def test_mean_errors(self):
        with self.assertRaises(EmptyList):
            mean_combine([])
        with self.assertRaises(FrameMismatch):
            mean_combine([vacuous(AB), vacuous(ABC)])

    def test_dempster_vacuous_identity(self):
        m = make_mass(ABC, [({'a'}, 0.3), ({'a', 'b'}, 0.2), ({'a', 'b', 'c'}, 0.5)])
        combined = dempster_combine(m, vacuous(ABC))
        for mask, value in m.focal.items():
            self.assertAlmostEqual(combined.focal[mask], value, places=15)

    def test_dempster_hand_expansion(self):
        m1 = make_mass(AB, [({'a'}, 0.6), ({'a', 'b'}, 0.4)])
        m2 = make_mass(AB, [({'b'}, 0.6), ({'a', 'b'}, 0.4)])
        m = dempster_combine(m1, m2)
        self.assertAlmostEqual(m.mass({'a'}), 0.375, places=12)
        self.assertAlmostEqual(m.mass({'b'}), 0.375, places=12)
        self.assertAlmostEqual(m.mass({'a', 'b'}), 0.25, places=12)

    def test_dempster_total_conflict(self):
        with self.assertRaises(TotalConflict):
            dempster_combine(categorical(AB, {'a'}), categorical(AB, {'b'}))
        with self.assertRaises(FrameMismatch):
            dempster_combine(vacuous(AB), vacuous(ABC))

    def test_retry_resolves_total_conflict(self):
        m = combine_with_retry(categorical(AB, {'a'}), categorical(AB, {'b'}))
        self.assertAlmostEqual(m.mass({'a'}), m.mass({'b'}), places=12)

    def test_discount_examples(self):
        m = example3()
        self.assertEqual(discount(m, 1.0), m)
        self.assertTrue(discount(m, 0.0).is_vacuous)
        d = discount(categorical(AB, {'a'}), 0.9)
        self.assertEqual(d.mass({'a'}), 0.9)
        self.assertAlmostEqual(d.mass({'a', 'b'}), 0.1, places=15)


# ─── Свойства на случайных массах ───────────────────────────────────────

class PropertyTest(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(20240611)

    def test_construction_invariants(self):
        for frame in (AB, ABC, Frame(tuple('abcde'))):
            for _ in range(50):
                m = random_mass(self.rng, frame)
                self.assertAlmostEqual(sum(m.focal.values()), 1.0, delta=1e-9)
                self.assertTrue(all(0.0 < v <= 1.0 for v in m.focal.values()))
                self.assertNotIn(0, m.focal)
                p = betp(m).as_array()
                self.assertTrue((p >= 0).all())
                self.assertAlmostEqual(p.sum(), 1.0, delta=1e-9)

    def test_plausibility_duality_and_sandwich(self):
        for frame in (AB, ABC, Frame(tuple('abcd'))):
            for _ in range(40):
                m = random_mass(self.rng, frame)
                for subset in all_subsets(frame):
                    complement = [i for i in range(frame.M) if i not in subset]
                    bel_complement = bel(m, complement) if complement else 0.0
                    self.assertAlmostEqual(pl(m, subset), 1.0 - bel_complement, delta=1e-12)
                    self.assertLessEqual(bel(m, subset), betp_subset(m, subset) + 1e-12)
                    self.assertLessEqual(betp_subset(m, subset), pl(m, subset) + 1e-12)

    def _assert_close(self, m1, m2, tol=1e-9):
        for mask in set(m1.focal) | set(m2.focal):
            self.assertAlmostEqual(m1.focal.get(mask, 0.0), m2.focal.get(mask, 0.0), delta=tol)

    def test_dempster_commutative_associative(self):
        for _ in range(50):
            a, b, c = (random_mass(self.rng, ABC) for _ in range(3))
            try:
                ab = dempster_combine(a, b)
                self._assert_close(ab, dempster_combine(b, a))
                self._assert_close(dempster_combine(ab, c), dempster_combine(a, dempster_combine(b, c)))
            except TotalConflict:
                continue

    def test_mean_of_copies_is_exact(self):
        for _ in range(30):
            m = random_mass(self.rng, ABC)
            self.assertEqual(mean_combine([m] * int(self.rng.integers(2, 9))), m)

    def test_bayesian_dempster_is_normalized_product(self):
        frame = Frame(tuple('abcd'))
        for _ in range(30):
            p1, p2 = self.rng.dirichlet(np.ones(4)), self.rng.dirichlet(np.ones(4))
            m1 = make_mass(frame, [((i,), v) for i, v in enumerate(p1)], renormalize=True)
            m2 = make_mass(frame, [((i,), v) for i, v in enumerate(p2)], renormalize=True)
            product = p1 * p2 / (p1 * p2).sum()
            np.testing.assert_allclose(betp(dempster_combine(m1, m2)).as_array(), product, atol=1e-12)

    def test_permutation_relabels_consistently(self):
        m = random_mass(self.rng, ABC)
        permuted = m.permuted([2, 0, 1])
        for subset in all_subsets(ABC):
            labels = {ABC.labels[i] for i in subset}
            self.assertAlmostEqual(bel(m, subset), bel(permuted, labels), delta=1e-15)


# ─── Плотное представление ──────────────────────────────────────────────

class DenseTest(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_round_trip(self):
        m = random_mass(self.rng, ABC)
        self.assertEqual(from_dense(ABC, to_dense([m])[0]), m)

    def test_dempster_matches_sparse(self):
        frame = Frame(tuple('abcd'))
        for _ in range(20):
            evidences = [random_mass(self.rng, frame) for _ in range(3)]
            evidences = [discount(m, 0.8) for m in evidences]
            stack = np.stack([to_dense([m]) for m in evidences])
            dense = from_dense(frame, dempster_combine_dense(stack)[0])
            sparse = dempster_combine(dempster_combine(evidences[0], evidences[1]), evidences[2])
            for mask in set(dense.focal) | set(sparse.focal):
                self.assertAlmostEqual(dense.focal.get(mask, 0.0), sparse.focal.get(mask, 0.0), delta=1e-11)

    def test_total_conflict_rows_raise(self):
        stack = np.stack([to_dense([categorical(AB, {'a'})]), to_dense([categorical(AB, {'b'})])])
        with self.assertRaises(TotalConflict):
            dempster_combine_dense(stack)

    def test_transforms_match_sparse(self):
        ms = [random_mass(self.rng, ABC) for _ in range(25)]
        dense = to_dense(ms)
        np.testing.assert_allclose(betp_dense(dense), [betp(m).p for m in ms], atol=1e-15)
        belief, plausibility = bel_pl_singletons_dense(dense)
        for row, m in enumerate(ms):
            for i in range(ABC.M):
                self.assertAlmostEqual(belief[row, i], bel(m, {i}), delta=1e-15)
                self.assertAlmostEqual(plausibility[row, i], pl(m, {i}), delta=1e-15)

    def test_discount_matches_sparse(self):
        ms = [random_mass(self.rng, ABC) for _ in range(10)]
        alphas = self.rng.uniform(0, 1, size=10)
        dense = discount_dense(to_dense(ms), alphas)
        for row, (m, alpha) in enumerate(zip(ms, alphas)):
            expected = to_dense([discount(m, alpha)])[0]
            np.testing.assert_allclose(dense[row], expected, atol=1e-15)

    def test_all_pairs_of_frames(self):
        for M in (2, 3, 5):
            frame = Frame(tuple(f'w{i}' for i in range(M)))
            for a, b in itertools.combinations([random_mass(self.rng, frame) for _ in range(4)], 2):
                a, b = discount(a, 0.9), discount(b, 0.9)
                stack = np.stack([to_dense([a]), to_dense([b])])
                np.testing.assert_allclose(
                    dempster_combine_dense(stack)[0], to_dense([dempster_combine(a, b)])[0], atol=1e-11,
                )
