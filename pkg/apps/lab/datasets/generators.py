"""
Синтетические двумерные датасеты для карт неопределённости.

line / sine / circle — два класса, разделённые границей с зазором SEPARATION_MARGIN.
two_blob_ignorance — два гауссовых облака; в верхней части второго облака метки
несут массу на всём фрейме (незнание).
three_class_imprecise — три облака; в зоне между классами 1 и 2 метки несут массу
на паре {1, 2} (неточность).
"""
import logging

import numpy as np
from django.db import models
from scipy.stats import ortho_group

from apps.lab.belief.core import Frame, categorical, make_mass
from apps.shared.config.exceptions import DegenerateInput

from .core import RichDataset

logger = logging.getLogger(__name__)

MIN_INSTANCES = 10
SEPARATION_MARGIN = 0.05
DEFAULT_IMPRECISE_FRACTION = 0.2
DEFAULT_PAIR_MASS = 0.5

BLOB_STD = 0.5
IGNORANCE_CENTER = np.array([1.0, 0.9])
THREE_CLASS_CENTERS = np.array([[-1.2, 0.0], [1.2, 0.0], [0.0, 1.8]])
IMPRECISE_PAIR = (1, 2)


class SyntheticKind(models.TextChoices):
    LINE = 'line', 'Линейная граница'
    SINE = 'sine', 'Синусоидальная граница'
    CIRCLE = 'circle', 'Круг'
    TWO_BLOB_IGNORANCE = 'two_blob_ignorance', 'Два облака с зоной незнания'
    THREE_CLASS_IMPRECISE = 'three_class_imprecise', 'Три класса с неточными метками'


def _signed_margin(kind, X):
    """Знаковое расстояние до границы: > 0 — класс 1."""
    if kind == SyntheticKind.LINE:
        return (X[:, 1] - 0.5 * X[:, 0] - 0.1) / np.sqrt(1.25)
    if kind == SyntheticKind.SINE:
        return X[:, 1] - 0.5 * np.sin(np.pi * X[:, 0])
    return 0.6 - np.hypot(X[:, 0], X[:, 1])


def _class_counts(n, M):
    counts = np.full(M, n // M)
    counts[:n % M] += 1
    return counts


def _flip(y, M, noise, rng):
    if noise <= 0:
        return y
    flips = rng.uniform(size=len(y)) < noise
    shifted = (y + rng.integers(1, M, size=len(y))) % M
    return np.where(flips, shifted, y)


def _separable(kind, n, rng):
    counts = _class_counts(n, 2)
    picked = [[], []]
    while len(picked[0]) < counts[0] or len(picked[1]) < counts[1]:
        X = rng.uniform(-1.0, 1.0, size=(4 * n, 2))
        margin = _signed_margin(kind, X)
        for x, value in zip(X, margin):
            if abs(value) < SEPARATION_MARGIN:
                continue
            label = int(value > 0)
            if len(picked[label]) < counts[label]:
                picked[label].append(x)
    X = np.vstack([np.array(picked[0]), np.array(picked[1])])
    y = np.repeat([0, 1], counts)
    return X, y


def _blobs(centers, n, rng):
    counts = _class_counts(n, len(centers))
    X = np.vstack([rng.normal(center, BLOB_STD, size=(count, 2)) for center, count in zip(centers, counts)])
    y = np.repeat(np.arange(len(centers)), counts)
    return X, y


def _nearest_among(X, candidates, point, k):
    if k > len(candidates):
        raise DegenerateInput(f'Нужно {k} неточных меток, а подходящих точек {len(candidates)}')
    distances = np.linalg.norm(X[candidates] - point, axis=1)
    return candidates[np.argsort(distances, kind='stable')[:k]]


def generate_synthetic(kind, n=200, noise=0.0, rng=0, imprecise_fraction=DEFAULT_IMPRECISE_FRACTION,
                       pair_mass=DEFAULT_PAIR_MASS):
    """
    Чистая функция от (kind, n, noise, seed): rng — сид или numpy Generator.
    noise — вероятность перевернуть истинную метку.
    """
    if kind not in SyntheticKind.values:
        raise DegenerateInput(f'Неизвестный генератор {kind!r}; доступны: {", ".join(SyntheticKind.values)}')
    if n < MIN_INSTANCES:
        raise DegenerateInput(f'n = {n}: нужно не меньше {MIN_INSTANCES} точек')
    if not 0.0 <= noise <= 1.0 or not 0.0 <= imprecise_fraction <= 1.0 or not 0.0 < pair_mass <= 1.0:
        raise DegenerateInput('noise и imprecise_fraction в [0, 1], pair_mass в (0, 1]')
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    if kind in (SyntheticKind.LINE, SyntheticKind.SINE, SyntheticKind.CIRCLE):
        X, y = _separable(kind, n, rng)
        frame = Frame(('0', '1'))
    elif kind == SyntheticKind.TWO_BLOB_IGNORANCE:
        X, y = _blobs(np.array([[-1.0, 0.0], [1.0, 0.0]]), n, rng)
        frame = Frame(('0', '1'))
    else:
        X, y = _blobs(THREE_CLASS_CENTERS, n, rng)
        frame = Frame(('0', '1', '2'))

    # зона неточности выбирается по меткам после шума: истинная метка всегда внутри пары
    y = _flip(y, frame.M, noise, rng)
    if kind in (SyntheticKind.LINE, SyntheticKind.SINE, SyntheticKind.CIRCLE):
        region, pair = np.array([], dtype=int), None
    elif kind == SyntheticKind.TWO_BLOB_IGNORANCE:
        k = int(round(imprecise_fraction * n))
        region, pair = _nearest_among(X, np.flatnonzero(y == 1), IGNORANCE_CENTER, k), (0, 1)
    else:
        k = int(round(imprecise_fraction * n))
        midpoint = THREE_CLASS_CENTERS[list(IMPRECISE_PAIR)].mean(axis=0)
        candidates = np.flatnonzero(np.isin(y, IMPRECISE_PAIR))
        region, pair = _nearest_among(X, candidates, midpoint, k), IMPRECISE_PAIR

    imprecise = set(region.tolist())
    rich = []
    for i, label in enumerate(y):
        if i in imprecise:
            assignments = [(pair, pair_mass)]
            if pair_mass < 1.0:
                assignments.append(({int(label)}, 1.0 - pair_mass))
            rich.append(make_mass(frame, assignments))
        else:
            rich.append(categorical(frame, {int(label)}))

    order = rng.permutation(len(y))
    dataset = RichDataset(
        name=f'synthetic:{kind}',
        features=X[order],
        true_labels=y[order],
        frame=frame,
        rich_labels=[rich[i] for i in order],
        feature_names=('x', 'y'),
        rich_source=pair is not None,
        meta={'kind': str(kind), 'n': n, 'noise': noise, 'imprecise_fraction': imprecise_fraction},
    )
    logger.debug('Сгенерирован %s: N=%d, неточных меток %d', dataset.name, dataset.N, len(imprecise))
    return dataset


def embed_surrogate(dataset, dimension, rng, name):
    """
    Поворот двумерного датасета в пространство большей размерности:
    к признакам добавляется слабый шум и применяется случайная ортогональная матрица.
    """
    extra = dimension - dataset.d
    padding = rng.normal(0.0, 0.05, size=(dataset.N, extra))
    rotation = ortho_group.rvs(dimension, random_state=rng)
    features = np.hstack([dataset.features, padding]) @ rotation
    return RichDataset(
        name=name,
        features=features,
        true_labels=dataset.true_labels,
        frame=dataset.frame,
        rich_labels=dataset.rich_labels,
        rich_source=True,
        surrogate=True,
        meta={**dataset.meta, 'surrogate_of': dataset.name, 'dimension': dimension},
    )
