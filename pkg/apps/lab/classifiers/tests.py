"""
Тесты эвиденциального и вероятностного K-NN.

Запуск:
    python manage.py test apps.lab.classifiers
"""
import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from apps.lab.belief.core import Frame, betp, categorical, make_mass
from apps.lab.belief.dense import DENSE_MAX_FRAME
from apps.lab.belief.exceptions import FrameMismatch
from apps.lab.uncertainty.batch import score_batch
from apps.lab.uncertainty.core import KlirParams, UncertaintyKind, evidential_epistemic_aleatoric, klir, nonspecificity

from .core import (
    EknnModel,
    PknnModel,
    auto_gamma,
    eknn_fit,
    eknn_predict_mass,
    pknn_fit,
    pknn_predict_proba,
)
from .exceptions import BadParameter, TooFewInstances


AB = Frame(('a', 'b'))
ABC = Frame(('a', 'b', 'c'))


def crisp_labels(frame, classes):
    return [categorical(frame, {int(c)}) for c in classes]


def random_training_set(rng, n=40, d=2, frame=ABC, rich_share=0.3):
    X = rng.normal(size=(n, d))
    y = rng.integers(0, frame.M, size=n)
    labels = []
    for c in y:
        if rng.uniform() < rich_share:
            other = (int(c) + 1) % frame.M
            labels.append(make_mass(frame, [({int(c)}, 0.6), ({int(c), other}, 0.4)]))
        else:
            labels.append(categorical(frame, {int(c)}))
    return X, y, labels


class EknnFitTest(SimpleTestCase):

    def test_auto_gamma_positive(self):
        rng = np.random.default_rng(1)
        X, _, labels = random_training_set(rng, n=10)
        model = eknn_fit(X, labels, K=7)
        self.assertTrue(math.isfinite(model.gamma))
        self.assertGreater(model.gamma, 0.0)

    def test_too_few_instances(self):
        rng = np.random.default_rng(2)
        X, _, labels = random_training_set(rng, n=10)
        with self.assertRaises(TooFewInstances):
            eknn_fit(X, labels, K=11)

    def test_identical_points_fall_back_to_unit_gamma(self):
        X = np.ones((8, 3))
        model = eknn_fit(X, crisp_labels(AB, [0, 1] * 4), K=3)
        self.assertEqual(model.gamma, 1.0)
        self.assertEqual(auto_gamma(np.zeros((1, 2))), 1.0)

    def test_auto_gamma_is_mean_over_all_pairs(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 4))
        pairs = [np.sum((X[i] - X[j]) ** 2) for i in range(30) for j in range(i + 1, 30)]
        self.assertAlmostEqual(auto_gamma(X), 1.0 / np.mean(pairs), delta=1e-12)

    def test_frame_mismatch(self):
        labels = [categorical(AB, {0}), categorical(ABC, {0})]
        with self.assertRaises(FrameMismatch):
            eknn_fit(np.zeros((2, 1)), labels, K=1)

    def test_parameter_ranges(self):
        labels = crisp_labels(AB, [0, 1])
        with self.assertRaises(BadParameter):
            eknn_fit(np.arange(2.0)[:, None], labels, K=1, alpha0=1.0)
        with self.assertRaises(BadParameter):
            eknn_fit(np.arange(2.0)[:, None], labels, K=1, gamma_mode=-2.0)


class EknnPredictTest(SimpleTestCase):

    def test_single_neighbor(self):
        model = eknn_fit([[0.0], [5.0]], crisp_labels(AB, [0, 1]), K=1, gamma_mode=0.5, standardize=False)
        m = eknn_predict_mass(model, [1.0])
        self.assertAlmostEqual(m.mass({'a'}), 0.95 * math.exp(-0.5), places=12)
        self.assertAlmostEqual(m.mass({'a', 'b'}), 1 - 0.95 * math.exp(-0.5), places=12)
        self.assertEqual(int(np.argmax(betp(m).p)), 0)

    def test_equidistant_opposite_neighbors(self):
        model = eknn_fit([[-1.0], [1.0]], crisp_labels(AB, [0, 1]), K=2, gamma_mode=1.0, standardize=False)
        p = betp(model.predict_mass([0.0])).p
        self.assertAlmostEqual(p[0], 0.5, places=12)
        self.assertAlmostEqual(p[1], 0.5, places=12)

    def test_combination_hand_expansion(self):
        # веса соседей: 0.95·exp(-d²) = 0.9 и 0.5
        d1 = math.sqrt(math.log(0.95 / 0.9))
        d2 = math.sqrt(math.log(0.95 / 0.5))
        model = eknn_fit([[d1], [-d2]], crisp_labels(AB, [0, 1]), K=2, gamma_mode=1.0, standardize=False)
        m = model.predict_mass([0.0])
        self.assertAlmostEqual(m.mass({'a'}), 0.8182, places=4)
        self.assertAlmostEqual(m.mass({'b'}), 0.0909, places=4)
        self.assertAlmostEqual(m.mass({'a', 'b'}), 0.0909, places=4)
        dense = model.predict_mass_batch([[0.0]])[0]
        for subset in ({'a'}, {'b'}, {'a', 'b'}):
            self.assertAlmostEqual(dense.mass(subset), m.mass(subset), delta=1e-12)

    def test_outputs_are_valid_masses(self):
        rng = np.random.default_rng(4)
        X, _, labels = random_training_set(rng, n=60)
        model = eknn_fit(X, labels, K=7)
        queries = rng.normal(scale=2.0, size=(1000, 2))
        for m in model.predict_mass_batch(queries):
            self.assertAlmostEqual(sum(m.focal.values()), 1.0, delta=1e-9)
            self.assertTrue(all(0.0 < v <= 1.0 for v in m.focal.values()))
            self.assertNotIn(0, m.focal)

    def test_dense_matches_sparse(self):
        rng = np.random.default_rng(5)
        X, _, labels = random_training_set(rng, n=40)
        model = eknn_fit(X, labels, K=7)
        queries = rng.normal(size=(50, 2))
        batch = model.predict_masses(queries)
        for row, x in enumerate(queries):
            sparse = model.predict_mass(x)
            for mask in range(1, 8):
                self.assertAlmostEqual(batch[row, mask], sparse.focal.get(mask, 0.0), delta=1e-9)

    def test_infinite_gamma_gives_vacuous(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(size=(20, 2))
        model = eknn_fit(X, crisp_labels(ABC, rng.integers(0, 3, size=20)), K=7, gamma_mode=1e6,
                         standardize=False)
        for x in rng.uniform(size=(20, 2)) + 3.0:
            self.assertAlmostEqual(nonspecificity(model.predict_mass(x)).value, math.log2(3), delta=1e-6)

    def test_nearest_exemplar_wins(self):
        exemplars = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        model = eknn_fit(exemplars, crisp_labels(ABC, [0, 1, 2]), K=3, alpha0=0.99, gamma_mode=1e-3,
                         standardize=False)
        rng = np.random.default_rng(7)
        queries = rng.uniform(-0.5, 1.5, size=(200, 2))
        nearest = np.argmin(((queries[:, None, :] - exemplars[None, :, :]) ** 2).sum(axis=2), axis=1)
        np.testing.assert_array_equal(model.predict(queries), nearest)
        for x, expected in zip(queries[:20], nearest[:20]):
            self.assertEqual(int(np.argmax(betp(model.predict_mass(x)).p)), expected)

    def test_training_order_does_not_matter(self):
        rng = np.random.default_rng(8)
        X, _, labels = random_training_set(rng, n=50)
        queries = rng.normal(size=(30, 2))
        base = eknn_fit(X, labels, K=7).predict_masses(queries)
        order = rng.permutation(50)
        shuffled = eknn_fit(X[order], [labels[i] for i in order], K=7).predict_masses(queries)
        np.testing.assert_allclose(base, shuffled, atol=1e-12)

    def test_class_weights(self):
        model = eknn_fit([[0.0], [1.0]], crisp_labels(AB, [0, 1]), K=2, gamma_mode=1.0, standardize=False)
        weights = model.class_weights([[0.0]])
        np.testing.assert_allclose(weights, [[0.95, 0.95 * math.exp(-1.0)]], atol=1e-15)

    def test_large_frame_scores_without_dense_matrix(self):
        frame = Frame(tuple(f'c{i}' for i in range(DENSE_MAX_FRAME + 1)))
        rng = np.random.default_rng(9)
        X, _, labels = random_training_set(rng, n=52, frame=frame)
        model = eknn_fit(X, labels, K=5)
        queries = rng.normal(size=(6, 2))
        with mock.patch('apps.lab.classifiers.core.to_dense', side_effect=AssertionError('n×2^M')):
            masses = model.scoring_masses(queries)
            scores = score_batch(UncertaintyKind.KLIR, masses=masses, lam=0.2)
            epistemic = score_batch(UncertaintyKind.EVID_EPISTEMIC, masses=masses)
            proba = model.predict_betp(queries)
        self.assertIsInstance(masses, list)
        self.assertEqual(proba.shape, (6, frame.M))
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        for row, m in enumerate(masses):
            self.assertAlmostEqual(scores[row], klir(m, KlirParams(0.2)).value, delta=1e-12)
            self.assertAlmostEqual(epistemic[row], evidential_epistemic_aleatoric(m)[0].value, delta=1e-12)


class PknnTest(SimpleTestCase):

    def test_inverse_distance_weights(self):
        model = pknn_fit([[1.0], [2.0]], [0, 1], AB, K=2, standardize=False)
        p = pknn_predict_proba(model, [0.0])
        self.assertAlmostEqual(p['a'], 2 / 3, places=12)
        self.assertAlmostEqual(p['b'], 1 / 3, places=12)

    def test_zero_distance_neighbor(self):
        model = pknn_fit([[0.0], [1.0], [3.0]], [0, 1, 1], AB, K=3, standardize=False)
        self.assertEqual(pknn_predict_proba(model, [0.0]).p, (1.0, 0.0))

    def test_zero_distance_split_between_classes(self):
        model = pknn_fit([[0.0], [0.0], [3.0]], [0, 1, 1], ABC, K=3, standardize=False)
        np.testing.assert_allclose(model.predict_proba([[0.0]]), [[0.5, 0.5, 0.0]])

    def test_single_class_neighborhood(self):
        model = pknn_fit([[0.0], [1.0], [9.0]], [2, 2, 0], ABC, K=2, standardize=False)
        np.testing.assert_allclose(model.predict_proba([[0.4]]), [[0.0, 0.0, 1.0]])

    def test_too_few_instances(self):
        with self.assertRaises(TooFewInstances):
            PknnModel.fit([[0.0]], [0], AB, K=2)

    def test_model_is_immutable(self):
        model = EknnModel.fit([[0.0], [1.0]], crisp_labels(AB, [0, 1]), K=1)
        with self.assertRaises(AttributeError):
            model.K = 2
