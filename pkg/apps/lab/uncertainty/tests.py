"""
Тесты мер неопределённости.

Запуск:
    python manage.py test apps.lab.uncertainty
"""
import math

import numpy as np
from django.test import SimpleTestCase
from scipy.optimize import brentq

from apps.lab.belief.core import (
    Frame,
    ProbabilityVector,
    bel,
    betp,
    categorical,
    make_mass,
    members_of,
    pl,
    vacuous,
)
from apps.lab.belief.dense import to_dense

from .batch import (
    discord_batch,
    entropy_batch,
    evidential_batch,
    klir_batch,
    least_confidence_batch,
    nonspecificity_batch,
    score_batch,
)
from .core import (
    KlirParams,
    UncertaintyKind,
    UncertaintyScore,
    discord,
    evidential_epistemic_aleatoric,
    evidential_total,
    klir,
    least_confidence,
    max_value,
    nonspecificity,
    shannon_entropy,
)
from .exceptions import BadCounts, BadResolution, InvalidLambda, UnknownMeasure
from .likelihood import (
    epistemic_binary_relative_likelihood,
    relative_likelihood_batch,
    relative_likelihood_total,
)


PETS = Frame(('Cat', 'Dog'))
AB = Frame(('a', 'b'))


def example3():
    return make_mass(PETS, [({'Cat'}, 0.5), ({'Cat', 'Dog'}, 0.5)])


def random_mass(rng, frame, max_focal=5):
    n_subsets = (1 << frame.M) - 1
    k = int(rng.integers(1, min(max_focal, n_subsets) + 1))
    masks = rng.choice(np.arange(1, n_subsets + 1), size=k, replace=False)
    weights = rng.dirichlet(np.ones(k))
    return make_mass(frame, [(members_of(int(mask)), w) for mask, w in zip(masks, weights)], renormalize=True)


def plausibility_oracle(p, n):
    """π(1) через точный поиск корня (brentq), независимо от сетки и бисекции."""
    total = p + n
    theta_hat = p / total if total > 0 else 0.5

    def log_lik(theta):
        value = 0.0
        if p:
            value += p * math.log(theta) if theta > 0 else -math.inf
        if n:
            value += n * math.log1p(-theta) if theta < 1 else -math.inf
        return value

    ll_hat = log_lik(theta_hat)

    def gap(theta):
        return math.exp(min(log_lik(theta) - ll_hat, 0.0)) - (2.0 * theta - 1.0)

    if gap(1.0) >= 0.0:
        return 1.0
    root = brentq(gap, max(theta_hat, 0.5), 1.0, xtol=1e-14)
    return 2.0 * root - 1.0


# ─── Вероятностные базовые меры ─────────────────────────────────────────

class ProbabilisticMeasuresTest(SimpleTestCase):

    def test_entropy_examples(self):
        self.assertAlmostEqual(shannon_entropy(ProbabilityVector(AB, (0.5, 0.5))).value, 1.0, places=12)
        self.assertEqual(shannon_entropy(ProbabilityVector(AB, (1.0, 0.0))).value, 0.0)
        self.assertAlmostEqual(shannon_entropy(ProbabilityVector(AB, (0.75, 0.25))).value, 0.8113, places=4)

    def test_least_confidence_examples(self):
        frame4 = Frame(tuple('abcd'))
        self.assertEqual(least_confidence(ProbabilityVector(AB, (1.0, 0.0))).value, 0.0)
        self.assertEqual(least_confidence(ProbabilityVector(frame4, (0.25,) * 4)).value, 0.75)
        self.assertEqual(least_confidence(ProbabilityVector(AB, (0.75, 0.25))).value, 0.25)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        frame = Frame(tuple('abcde'))
        for _ in range(100):
            p = ProbabilityVector(frame, rng.dirichlet(np.full(5, 0.5)))
            self.assertLessEqual(shannon_entropy(p).value, max_value(UncertaintyKind.ENTROPY, 5) + 1e-12)
            self.assertLessEqual(least_confidence(p).value, max_value(UncertaintyKind.LEAST_CONFIDENCE, 5) + 1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(4)
        proba = rng.dirichlet(np.ones(3), size=30)
        frame = Frame(tuple('abc'))
        np.testing.assert_allclose(
            entropy_batch(proba), [shannon_entropy(ProbabilityVector(frame, row)).value for row in proba], atol=1e-12,
        )
        np.testing.assert_allclose(
            least_confidence_batch(proba), [least_confidence(ProbabilityVector(frame, row)).value for row in proba],
        )


# ─── Клир: диссонанс и неспецифичность ──────────────────────────────────

class KlirTest(SimpleTestCase):

    def test_discord_examples(self):
        self.assertEqual(discord(vacuous(PETS)).value, 0.0)
        uniform = make_mass(AB, [({'a'}, 0.5), ({'b'}, 0.5)])
        self.assertEqual(discord(uniform).value, 1.0)
        self.assertAlmostEqual(discord(example3()).value, 0.2075, places=4)

    def test_nonspecificity_examples(self):
        self.assertEqual(nonspecificity(make_mass(AB, [({'a'}, 0.3), ({'b'}, 0.7)])).value, 0.0)
        self.assertEqual(nonspecificity(vacuous(Frame(tuple('abcd')))).value, 2.0)
        self.assertEqual(nonspecificity(example3()).value, 0.5)

    def test_klir_endpoints_and_example(self):
        m = example3()
        self.assertEqual(klir(m, 0.0).value, discord(m).value)
        self.assertEqual(klir(m, KlirParams(1.0)).value, nonspecificity(m).value)
        self.assertAlmostEqual(klir(m, 0.5).value, 0.3538, places=4)
        self.assertAlmostEqual(klir(m).value, 0.2 * 0.5 + 0.8 * discord(m).value, places=15)

    def test_lambda_range(self):
        with self.assertRaises(InvalidLambda):
            KlirParams(1.5)
        with self.assertRaises(InvalidLambda):
            klir(example3(), -0.1)

    def test_bayesian_discord_is_entropy(self):
        rng = np.random.default_rng(11)
        frame = Frame(tuple('abcd'))
        for _ in range(50):
            p = rng.dirichlet(np.ones(4))
            m = make_mass(frame, [((i,), v) for i, v in enumerate(p)], renormalize=True)
            self.assertAlmostEqual(discord(m).value, shannon_entropy(betp(m)).value, delta=1e-12)
            self.assertEqual(nonspecificity(m).value, 0.0)

    def test_affine_in_lambda(self):
        rng = np.random.default_rng(12)
        frame = Frame(tuple('abc'))
        for _ in range(20):
            m = random_mass(rng, frame)
            n_value, d_value = nonspecificity(m).value, discord(m).value
            for lam in np.linspace(0.0, 1.0, 11):
                self.assertAlmostEqual(klir(m, lam).value, lam * n_value + (1 - lam) * d_value, delta=1e-12)

    def test_nonspecificity_bound(self):
        rng = np.random.default_rng(13)
        frame = Frame(tuple('abcde'))
        for _ in range(100):
            value = nonspecificity(random_mass(rng, frame)).value
            self.assertLessEqual(value, math.log2(5) + 1e-12)


# ─── Эвиденциальная декомпозиция ────────────────────────────────────────

class EvidentialTest(SimpleTestCase):

    def test_examples(self):
        e, a = evidential_epistemic_aleatoric(categorical(AB, {'a'}))
        self.assertEqual((e.value, a.value), (0.0, 0.0))
        e, a = evidential_epistemic_aleatoric(vacuous(AB))
        self.assertEqual((e.value, a.value), (2.0, 0.0))
        e, a = evidential_epistemic_aleatoric(example3())
        self.assertEqual((e.value, a.value), (1.0, 0.0))
        self.assertEqual(evidential_total(example3()).value, 1.0)

    def test_two_class_closed_form(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            m = random_mass(rng, AB)
            e, a = evidential_epistemic_aleatoric(m)
            self.assertAlmostEqual(e.value, 2 * min(pl(m, {0}), pl(m, {1})), delta=1e-12)
            self.assertAlmostEqual(a.value, 2 * min(bel(m, {0}), bel(m, {1})), delta=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(22)
        frame = Frame(tuple('abcd'))
        for _ in range(30):
            m = random_mass(rng, frame)
            order = rng.permutation(4)
            permuted = m.permuted(order)
            for measure in (discord, nonspecificity, klir, evidential_total):
                self.assertAlmostEqual(measure(m).value, measure(permuted).value, delta=1e-12)
            p = betp(m)
            q = betp(permuted)
            self.assertAlmostEqual(shannon_entropy(p).value, shannon_entropy(q).value, delta=1e-12)
            self.assertAlmostEqual(least_confidence(p).value, least_confidence(q).value, delta=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(23)
        frame = Frame(tuple('abc'))
        ms = [random_mass(rng, frame) for _ in range(40)]
        dense = to_dense(ms)
        np.testing.assert_allclose(discord_batch(dense), [discord(m).value for m in ms], atol=1e-12)
        np.testing.assert_allclose(nonspecificity_batch(dense), [nonspecificity(m).value for m in ms], atol=1e-12)
        np.testing.assert_allclose(klir_batch(dense, 0.3), [klir(m, 0.3).value for m in ms], atol=1e-12)
        epistemic, aleatoric = evidential_batch(dense)
        expected = [evidential_epistemic_aleatoric(m) for m in ms]
        np.testing.assert_allclose(epistemic, [e.value for e, _ in expected], atol=1e-12)
        np.testing.assert_allclose(aleatoric, [a.value for _, a in expected], atol=1e-12)

    def test_score_batch_dispatch(self):
        dense = to_dense([example3()])
        self.assertAlmostEqual(score_batch(UncertaintyKind.KLIR, masses=dense, lam=0.5)[0], 0.3538, places=4)
        self.assertEqual(score_batch('evid_total', masses=dense)[0], 1.0)
        with self.assertRaises(UnknownMeasure):
            score_batch('variance', masses=dense)

    def test_score_rejects_negative(self):
        with self.assertRaises(ValueError):
            UncertaintyScore(-0.5, UncertaintyKind.KLIR)
        self.assertEqual(UncertaintyScore(-1e-15, UncertaintyKind.KLIR).value, 0.0)


# ─── Относительное правдоподобие ────────────────────────────────────────

class RelativeLikelihoodTest(SimpleTestCase):

    def test_unexplored_point(self):
        e, a = epistemic_binary_relative_likelihood(0, 0)
        self.assertEqual((e.value, a.value), (1.0, 0.0))
        e_batch, a_batch = relative_likelihood_batch([0.0], [0.0])
        self.assertEqual((e_batch[0], a_batch[0]), (1.0, 0.0))

    def test_one_sided_counts(self):
        e, a = epistemic_binary_relative_likelihood(3, 0)
        self.assertAlmostEqual(e.value, 0.093, delta=1e-3)
        self.assertEqual(a.value, 0.0)
        self.assertAlmostEqual(relative_likelihood_total(3, 0).value, e.value, places=15)

    def test_balanced_counts_monotone(self):
        previous = None
        for k in (1, 5, 20, 100):
            e, a = epistemic_binary_relative_likelihood(k, k)
            if previous is not None:
                self.assertLess(e.value, previous[0])
                self.assertGreater(a.value, previous[1])
            previous = (e.value, a.value)
        self.assertLess(previous[0], 0.2)
        self.assertGreater(previous[1], 0.8)

    def test_grid_agrees_with_root_oracle(self):
        rng = np.random.default_rng(31)
        resolution = 100_000
        for _ in range(100):
            p, n = rng.uniform(0, 20, size=2)
            pi_pos, pi_neg = plausibility_oracle(p, n), plausibility_oracle(n, p)
            e, a = epistemic_binary_relative_likelihood(p, n, resolution)
            self.assertAlmostEqual(e.value, min(pi_pos, pi_neg), delta=2 / resolution)
            self.assertAlmostEqual(a.value, 1 - max(pi_pos, pi_neg), delta=2 / resolution)
            self.assertLessEqual(e.value + a.value, 1.0 + 1e-12)

    def test_batch_agrees_with_root_oracle(self):
        rng = np.random.default_rng(32)
        p = rng.uniform(0, 30, size=200)
        n = rng.uniform(0, 30, size=200)
        p[:10] = 0.0
        epistemic, aleatoric = relative_likelihood_batch(p, n)
        for i in range(200):
            pi_pos, pi_neg = plausibility_oracle(p[i], n[i]), plausibility_oracle(n[i], p[i])
            self.assertAlmostEqual(epistemic[i], min(pi_pos, pi_neg), delta=1e-9)
            self.assertAlmostEqual(aleatoric[i], 1 - max(pi_pos, pi_neg), delta=1e-9)
        self.assertTrue(np.all(epistemic + aleatoric <= 1.0 + 1e-12))

    def test_validation(self):
        with self.assertRaises(BadResolution):
            epistemic_binary_relative_likelihood(1, 1, resolution=10)
        with self.assertRaises(BadCounts):
            epistemic_binary_relative_likelihood(-1, 1)
        with self.assertRaises(BadCounts):
            relative_likelihood_batch([1.0], [float('nan')])
