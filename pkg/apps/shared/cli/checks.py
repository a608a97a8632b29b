"""
Быстрый набор встроенных проверок для `selfcheck`: точные значения на эталонной функции масс,
свойства на случайных функциях масс из зафиксированного потока, нулевой случай
относительного правдоподобия.

Проверка — функция без аргументов, которая бросает AssertionError при нарушении.
"""
import itertools
import logging
import math

import numpy as np

from apps.lab.belief.core import Frame, bel, betp, dempster_combine, make_mass, members_of, pl
from apps.lab.belief.dense import betp_dense, to_dense
from apps.lab.uncertainty.core import (
    discord, evidential_epistemic_aleatoric, klir, nonspecificity, shannon_entropy,
)
from apps.lab.uncertainty.likelihood import epistemic_binary_relative_likelihood

logger = logging.getLogger(__name__)

SELFCHECK_SEED = 20230101
RANDOM_MASSES = 300
EXACT_TOLERANCE = 1e-12
ALGEBRA_TOLERANCE = 1e-9

CHECKS = []


def check(name):
    def register(func):
        CHECKS.append((name, func))
        return func
    return register


def _expect(condition, message):
    if not condition:
        raise AssertionError(message)


def _close(actual, expected, tolerance, what):
    _expect(abs(actual - expected) <= tolerance, f'{what}: {actual!r} вместо {expected!r} (допуск {tolerance:g})')


def reference_mass():
    frame = Frame(('Cat', 'Dog'))
    return make_mass(frame, [({'Cat'}, 0.5), ({'Cat', 'Dog'}, 0.5)])


def random_masses(count=RANDOM_MASSES, seed=SELFCHECK_SEED):
    """Функции масс с полным носителем (все непустые подмножества), M от 2 до 4."""
    rng = np.random.default_rng(seed)
    frames = {M: Frame(tuple(f'c{i}' for i in range(M))) for M in (2, 3, 4)}
    out = []
    for _ in range(count):
        frame = frames[int(rng.integers(2, 5))]
        weights = rng.dirichlet(np.ones((1 << frame.M) - 1))
        assignments = [(members_of(mask), w) for mask, w in zip(range(1, 1 << frame.M), weights)]
        out.append(make_mass(frame, assignments, renormalize=True))
    return out


# ────────────────────────────────────────────────────────────────────────────
# Точные значения
# ────────────────────────────────────────────────────────────────────────────

@check('BetP эталонной массы = (0.75, 0.25)')
def check_reference_betp():
    _expect(betp(reference_mass()).p == (0.75, 0.25), f'получено {betp(reference_mass()).p}')


@check('Discord эталонной массы = −0.5·log2(0.75)')
def check_reference_discord():
    _close(discord(reference_mass()).value, -0.5 * math.log2(0.75), EXACT_TOLERANCE, 'discord')


@check('Нонспецифичность эталонной массы = 0.5')
def check_reference_nonspecificity():
    _expect(nonspecificity(reference_mass()).value == 0.5, 'нонспецифичность ≠ 0.5')


@check('Эвиденциальные (U_e, U_a) эталонной массы = (1, 0)')
def check_reference_evidential():
    epistemic, aleatoric = evidential_epistemic_aleatoric(reference_mass())
    _close(epistemic.value, 1.0, EXACT_TOLERANCE, 'U_e')
    _close(aleatoric.value, 0.0, EXACT_TOLERANCE, 'U_a')


@check('Относительное правдоподобие при p = n = 0: (U_e, U_a) = (1, 0)')
def check_relative_likelihood_zero():
    epistemic, aleatoric = epistemic_binary_relative_likelihood(0, 0)
    _expect((epistemic.value, aleatoric.value) == (1.0, 0.0), f'получено ({epistemic.value}, {aleatoric.value})')


# ────────────────────────────────────────────────────────────────────────────
# Свойства на случайных массах
# ────────────────────────────────────────────────────────────────────────────

@check('Pl(A) = 1 − Bel(Ā) и Bel ≤ BetP ≤ Pl')
def check_bel_pl_duality():
    for m in random_masses():
        everything = set(range(m.frame.M))
        p = betp(m).p
        for size in range(1, m.frame.M):
            for subset in itertools.combinations(range(m.frame.M), size):
                complement = everything - set(subset)
                _close(pl(m, subset), 1.0 - bel(m, complement), EXACT_TOLERANCE, f'Pl{subset}')
        for i in range(m.frame.M):
            _expect(bel(m, {i}) - EXACT_TOLERANCE <= p[i] <= pl(m, {i}) + EXACT_TOLERANCE, f'BetP вне [Bel, Pl] для {i}')


@check('Правило Демпстера коммутативно и ассоциативно')
def check_dempster_algebra():
    masses = random_masses()
    by_frame = {}
    for m in masses:
        by_frame.setdefault(m.frame, []).append(m)
    for group in by_frame.values():
        for m1, m2, m3 in zip(group[0::3], group[1::3], group[2::3]):
            forward, backward = to_dense([dempster_combine(m1, m2), dempster_combine(m2, m1)])
            _expect(np.allclose(forward, backward, atol=ALGEBRA_TOLERANCE, rtol=0.0), 'нарушена коммутативность')
            left = dempster_combine(dempster_combine(m1, m2), m3)
            right = dempster_combine(m1, dempster_combine(m2, m3))
            left, right = to_dense([left, right])
            _expect(np.allclose(left, right, atol=ALGEBRA_TOLERANCE, rtol=0.0), 'нарушена ассоциативность')


@check('Discord байесовской массы = энтропия Шеннона')
def check_discord_is_entropy():
    rng = np.random.default_rng(SELFCHECK_SEED)
    frame = Frame(('a', 'b', 'c', 'd'))
    for _ in range(RANDOM_MASSES):
        p = rng.dirichlet(np.ones(frame.M))
        m = make_mass(frame, [((i,), v) for i, v in enumerate(p)], renormalize=True)
        _close(discord(m).value, shannon_entropy(betp(m)).value, ALGEBRA_TOLERANCE, 'discord')


@check('Неопределённость Клира аффинна по λ')
def check_klir_affine():
    for m in random_masses(count=100):
        n, d = nonspecificity(m).value, discord(m).value
        for lam in (0.0, 0.2, 0.5, 0.9, 1.0):
            _close(klir(m, lam).value, lam * n + (1.0 - lam) * d, EXACT_TOLERANCE, f'klir(λ={lam})')


@check('M = 2: U_e = 2·min(Pl₀, Pl₁)')
def check_binary_doubling():
    for m in random_masses():
        if m.frame.M != 2:
            continue
        epistemic, _ = evidential_epistemic_aleatoric(m)
        _close(epistemic.value, 2.0 * min(pl(m, {0}), pl(m, {1})), EXACT_TOLERANCE, 'U_e')


@check('Меры инвариантны к перестановке классов')
def check_permutation_invariance():
    rng = np.random.default_rng(SELFCHECK_SEED + 1)
    for m in random_masses(count=100):
        permuted = m.permuted(rng.permutation(m.frame.M).tolist())
        for measure in (discord, nonspecificity, klir):
            _close(measure(permuted).value, measure(m).value, EXACT_TOLERANCE, measure.__name__)
        for original, moved in zip(evidential_epistemic_aleatoric(m), evidential_epistemic_aleatoric(permuted)):
            _close(moved.value, original.value, EXACT_TOLERANCE, str(original.kind))


@check('Плотный BetP совпадает с разреженным')
def check_dense_betp():
    masses = [m for m in random_masses() if m.frame.M == 3]
    dense = betp_dense(to_dense(masses))
    sparse = np.array([betp(m).p for m in masses])
    _expect(np.allclose(dense, sparse, atol=EXACT_TOLERANCE, rtol=0.0), 'плотный и разреженный BetP расходятся')


def run_checks(checks=None):
    """[(имя, None | текст ошибки)] в порядке регистрации."""
    results = []
    for name, func in checks or CHECKS:
        try:
            func()
        except AssertionError as exc:
            logger.error('selfcheck: %s — %s', name, exc)
            results.append((name, str(exc) or 'нарушено'))
        else:
            results.append((name, None))
    return results
