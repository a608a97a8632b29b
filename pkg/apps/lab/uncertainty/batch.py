"""
Векторные версии мер: строки — точки пула или узлы растра.

masses — плотный массив (n, 2^M) из apps.lab.belief.dense либо список MassFunction
(большие фреймы, где 2^M столбцов не помещаются в память), proba — матрица (n, M).
"""
import numpy as np
from scipy.stats import entropy as scipy_entropy

from apps.lab.belief.dense import bel_pl_singletons_dense, betp_subsets_dense, subset_sizes

from .core import (
    DEFAULT_KLIR_LAMBDA,
    KlirParams,
    UncertaintyKind,
    discord,
    evidential_epistemic_aleatoric,
    klir,
    nonspecificity,
)
from .exceptions import UnknownMeasure
from .likelihood import relative_likelihood_batch


def entropy_batch(proba):
    proba = np.asarray(proba, dtype=float)
    return scipy_entropy(proba, base=2, axis=1)


def least_confidence_batch(proba):
    return 1.0 - np.asarray(proba, dtype=float).max(axis=1)


def discord_batch(masses):
    betp_a = np.clip(betp_subsets_dense(masses), 0.0, 1.0)
    positive = masses > 0.0
    logs = np.zeros_like(masses)
    np.log2(betp_a, out=logs, where=positive)
    return np.maximum(-(masses * logs).sum(axis=1), 0.0)


def nonspecificity_batch(masses):
    M = int(masses.shape[1]).bit_length() - 1
    sizes = subset_sizes(M).astype(float)
    sizes[0] = 1.0
    return masses @ np.log2(sizes)


def klir_batch(masses, lam=DEFAULT_KLIR_LAMBDA):
    lam = KlirParams(lam).lam
    if lam == 0.0:
        return discord_batch(masses)
    if lam == 1.0:
        return nonspecificity_batch(masses)
    return lam * nonspecificity_batch(masses) + (1.0 - lam) * discord_batch(masses)


def evidential_batch(masses):
    """(U_e, U_a) для каждой строки."""
    belief, plausibility = bel_pl_singletons_dense(masses)
    epistemic = np.minimum(plausibility, 1.0 - belief).sum(axis=1)
    aleatoric = np.minimum(belief, 1.0 - plausibility).sum(axis=1)
    return np.maximum(epistemic, 0.0), np.maximum(aleatoric, 0.0)


def score_batch(measure, *, masses=None, proba=None, counts=None, lam=DEFAULT_KLIR_LAMBDA):
    """
    Единая точка вычисления меры для пакета точек.

    counts — веса классов (n, 2) для мер относительного правдоподобия.
    """
    if masses is not None and not isinstance(masses, np.ndarray):
        return score_sparse(measure, masses, lam)
    if measure == UncertaintyKind.ENTROPY:
        return entropy_batch(proba)
    if measure == UncertaintyKind.LEAST_CONFIDENCE:
        return least_confidence_batch(proba)
    if measure == UncertaintyKind.DISCORD:
        return discord_batch(masses)
    if measure == UncertaintyKind.NONSPECIFICITY:
        return nonspecificity_batch(masses)
    if measure == UncertaintyKind.KLIR:
        return klir_batch(masses, lam)
    if measure in (UncertaintyKind.EVID_EPISTEMIC, UncertaintyKind.EVID_ALEATORIC, UncertaintyKind.EVID_TOTAL):
        epistemic, aleatoric = evidential_batch(masses)
        return _pick(measure, epistemic, aleatoric)
    if measure in (UncertaintyKind.RL_EPISTEMIC, UncertaintyKind.RL_ALEATORIC, UncertaintyKind.RL_TOTAL):
        counts = np.asarray(counts, dtype=float)
        epistemic, aleatoric = relative_likelihood_batch(counts[:, 1], counts[:, 0])
        return _pick(measure, epistemic, aleatoric)
    raise UnknownMeasure(f'Мера {measure!r} не поддерживается')


def _pick(measure, epistemic, aleatoric):
    if measure.endswith('_epistemic'):
        return epistemic
    if measure.endswith('_aleatoric'):
        return aleatoric
    return epistemic + aleatoric


def score_sparse(measure, masses, lam=DEFAULT_KLIR_LAMBDA):
    """Меры по списку разреженных функций масс: по одной точке, без матрицы 2^M."""
    if measure == UncertaintyKind.DISCORD:
        return np.array([discord(m).value for m in masses])
    if measure == UncertaintyKind.NONSPECIFICITY:
        return np.array([nonspecificity(m).value for m in masses])
    if measure == UncertaintyKind.KLIR:
        params = KlirParams(lam)
        return np.array([klir(m, params).value for m in masses])
    if measure in (UncertaintyKind.EVID_EPISTEMIC, UncertaintyKind.EVID_ALEATORIC, UncertaintyKind.EVID_TOTAL):
        pairs = [evidential_epistemic_aleatoric(m) for m in masses]
        epistemic = np.array([e.value for e, _ in pairs])
        aleatoric = np.array([a.value for _, a in pairs])
        return _pick(measure, epistemic, aleatoric)
    raise UnknownMeasure(f'Мера {measure!r} не определена для функций масс')
