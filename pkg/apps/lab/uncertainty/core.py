"""
Скалярные меры неопределённости на одной функции масс или одном распределении.

Все логарифмы по основанию 2 (результаты в битах).
"""
import math
from dataclasses import dataclass

import numpy as np
from django.db import models
from scipy.stats import entropy as scipy_entropy

from apps.lab.belief.core import bel, betp, members_of, pl

from .exceptions import InvalidLambda

DEFAULT_KLIR_LAMBDA = 0.2


class UncertaintyKind(models.TextChoices):
    ENTROPY = 'entropy', 'Энтропия Шеннона'
    LEAST_CONFIDENCE = 'least_confidence', 'Наименьшая уверенность'
    DISCORD = 'discord', 'Диссонанс'
    NONSPECIFICITY = 'nonspecificity', 'Неспецифичность'
    KLIR = 'klir', 'Неопределённость Клира'
    EVID_EPISTEMIC = 'evid_epistemic', 'Эвиденциальная эпистемическая'
    EVID_ALEATORIC = 'evid_aleatoric', 'Эвиденциальная алеаторная'
    EVID_TOTAL = 'evid_total', 'Эвиденциальная полная'
    RL_EPISTEMIC = 'rl_epistemic', 'Эпистемическая по относительному правдоподобию'
    RL_ALEATORIC = 'rl_aleatoric', 'Алеаторная по относительному правдоподобию'
    RL_TOTAL = 'rl_total', 'Полная по относительному правдоподобию'


@dataclass(frozen=True)
class UncertaintyScore:
    value: float
    kind: str

    def __post_init__(self):
        value = float(self.value)
        # шум округления вокруг нуля
        if -1e-12 < value < 0.0:
            value = 0.0
        if not value >= 0.0:
            raise ValueError(f'{self.kind}: отрицательная неопределённость {value!r}')
        object.__setattr__(self, 'value', value)

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class KlirParams:
    lam: float = DEFAULT_KLIR_LAMBDA

    def __post_init__(self):
        if not 0.0 <= float(self.lam) <= 1.0:
            raise InvalidLambda(f'λ = {self.lam!r}')


def _klir_params(params):
    if params is None:
        return KlirParams()
    if isinstance(params, KlirParams):
        return params
    return KlirParams(float(params))


def shannon_entropy(p):
    return UncertaintyScore(scipy_entropy(p.as_array(), base=2), UncertaintyKind.ENTROPY)


def least_confidence(p):
    return UncertaintyScore(1.0 - max(p.p), UncertaintyKind.LEAST_CONFIDENCE)


def discord(m):
    """D(m) = -Σ m(A) log2 BetP(A)."""
    p = betp(m).p
    terms = []
    for mask, value in m.focal.items():
        if mask == m.frame.omega:
            continue
        betp_a = math.fsum(p[i] for i in members_of(mask))
        terms.append(-value * math.log2(min(betp_a, 1.0)))
    return UncertaintyScore(math.fsum(terms), UncertaintyKind.DISCORD)


def nonspecificity(m):
    total = math.fsum(value * math.log2(len(members_of(mask))) for mask, value in m.focal.items())
    return UncertaintyScore(total, UncertaintyKind.NONSPECIFICITY)


def klir(m, params=None):
    lam = _klir_params(params).lam
    if lam == 0.0:
        return UncertaintyScore(discord(m).value, UncertaintyKind.KLIR)
    if lam == 1.0:
        return UncertaintyScore(nonspecificity(m).value, UncertaintyKind.KLIR)
    value = lam * nonspecificity(m).value + (1.0 - lam) * discord(m).value
    return UncertaintyScore(value, UncertaintyKind.KLIR)


def evidential_epistemic_aleatoric(m):
    """
    U_e = Σ_ω min(Pl(ω), 1 - Bel(ω)),  U_a = Σ_ω min(Bel(ω), 1 - Pl(ω)).

    Сырая сумма по классам, без деления на M.
    """
    epistemic, aleatoric = [], []
    for i in range(m.frame.M):
        belief, plausibility = bel(m, {i}), pl(m, {i})
        epistemic.append(min(plausibility, 1.0 - belief))
        aleatoric.append(min(belief, 1.0 - plausibility))
    return (
        UncertaintyScore(math.fsum(epistemic), UncertaintyKind.EVID_EPISTEMIC),
        UncertaintyScore(math.fsum(aleatoric), UncertaintyKind.EVID_ALEATORIC),
    )


def evidential_total(m):
    epistemic, aleatoric = evidential_epistemic_aleatoric(m)
    return UncertaintyScore(epistemic.value + aleatoric.value, UncertaintyKind.EVID_TOTAL)


def is_probabilistic(kind):
    return kind in (UncertaintyKind.ENTROPY, UncertaintyKind.LEAST_CONFIDENCE)


def max_value(kind, M):
    """Верхняя граница меры для фрейма размера M (для проверок и нормировки растров)."""
    bounds = {
        UncertaintyKind.ENTROPY: np.log2(M),
        UncertaintyKind.LEAST_CONFIDENCE: 1.0 - 1.0 / M,
        UncertaintyKind.NONSPECIFICITY: np.log2(M),
        UncertaintyKind.EVID_EPISTEMIC: float(M),
        UncertaintyKind.EVID_ALEATORIC: float(M),
        UncertaintyKind.RL_EPISTEMIC: 1.0,
        UncertaintyKind.RL_ALEATORIC: 1.0,
        UncertaintyKind.RL_TOTAL: 1.0,
    }
    return bounds.get(kind)
