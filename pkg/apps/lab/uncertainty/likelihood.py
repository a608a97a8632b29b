"""
Бинарная эпистемическая/алеаторная неопределённость через относительное правдоподобие.

Правдоподобие Бернулли L(θ) = θ^p (1-θ)^n, нормированное на максимум в θ̂ = p / (p + n).
Правдоподобность класса 1: π(1) = sup_θ min(L(θ)/L(θ̂), 2θ - 1), класса 0 — то же с 1 - 2θ.
U_e = min(π(1), π(0)), U_a = 1 - max(π(1), π(0)).
"""
import logging

import numpy as np
from scipy.special import xlogy

from .core import UncertaintyKind, UncertaintyScore
from .exceptions import BadCounts, BadResolution

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 100_000
MIN_RESOLUTION = 1000
BISECTION_STEPS = 60


def _log_likelihood(theta, p, n):
    # xlogy(0, 0) = 0, так что края сетки не дают nan
    return xlogy(p, theta) + xlogy(n, 1.0 - theta)


def _mle(p, n):
    total = p + n
    return np.where(total > 0, p / np.where(total > 0, total, 1.0), 0.5)


def _check_counts(*values):
    for value in values:
        value = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(value)) or np.any(value < 0):
            raise BadCounts(f'Получено {value!r}')


def epistemic_binary_relative_likelihood(p_pos, n_neg, resolution=DEFAULT_RESOLUTION):
    """
    Перебор по сетке θ из resolution + 1 узлов на [0, 1].
    Ошибка ограничена 2 / resolution (липшицева константа линейных членов).
    """
    _check_counts(p_pos, n_neg)
    if int(resolution) < MIN_RESOLUTION:
        raise BadResolution(f'resolution = {resolution}')
    p, n = float(p_pos), float(n_neg)
    theta = np.linspace(0.0, 1.0, int(resolution) + 1)
    with np.errstate(divide='ignore', invalid='ignore'):
        log_ratio = _log_likelihood(theta, p, n) - _log_likelihood(_mle(p, n), p, n)
        ratio = np.exp(np.minimum(log_ratio, 0.0))
    pi_pos = float(np.max(np.minimum(ratio, 2.0 * theta - 1.0)))
    pi_neg = float(np.max(np.minimum(ratio, 1.0 - 2.0 * theta)))
    return (
        UncertaintyScore(min(pi_pos, pi_neg), UncertaintyKind.RL_EPISTEMIC),
        UncertaintyScore(1.0 - max(pi_pos, pi_neg), UncertaintyKind.RL_ALEATORIC),
    )


def relative_likelihood_total(p_pos, n_neg, resolution=DEFAULT_RESOLUTION):
    epistemic, aleatoric = epistemic_binary_relative_likelihood(p_pos, n_neg, resolution)
    return UncertaintyScore(epistemic.value + aleatoric.value, UncertaintyKind.RL_TOTAL)


def _plausibility_batch(p, n, steps):
    """
    π(1) для векторов весов. На [max(θ̂, 1/2), 1] отношение правдоподобий убывает,
    а 2θ - 1 растёт, так что супремум минимума — в точке их пересечения: ищем её бисекцией.
    """
    with np.errstate(divide='ignore', invalid='ignore'):
        ll_hat = _log_likelihood(_mle(p, n), p, n)

        def ratio(theta):
            return np.exp(np.minimum(_log_likelihood(theta, p, n) - ll_hat, 0.0))

        lo = np.maximum(_mle(p, n), 0.5)
        hi = np.ones_like(lo)
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            above = ratio(mid) >= 2.0 * mid - 1.0
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        at_lo = np.minimum(ratio(lo), 2.0 * lo - 1.0)
        at_hi = np.minimum(ratio(hi), 2.0 * hi - 1.0)
    return np.maximum(at_lo, at_hi)


def relative_likelihood_batch(p_pos, n_neg, steps=BISECTION_STEPS):
    """
    Векторная версия для пулов и растров: (U_e, U_a) массивами.
    π(0)(p, n) = π(1)(n, p) по симметрии θ -> 1 - θ.
    """
    p = np.atleast_1d(np.asarray(p_pos, dtype=float))
    n = np.atleast_1d(np.asarray(n_neg, dtype=float))
    _check_counts(p, n)
    pi_pos = _plausibility_batch(p, n, steps)
    pi_neg = _plausibility_batch(n, p, steps)
    return np.minimum(pi_pos, pi_neg), 1.0 - np.maximum(pi_pos, pi_neg)
