"""
Эвиденциальный K-NN и взвешенный по расстоянию вероятностный K-NN.

Признаки стандартизуются (StandardScaler по обучающей выборке), расстояния евклидовы.
Соседи с равным расстоянием упорядочиваются по индексу обучающей точки.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.preprocessing import StandardScaler

from apps.lab.belief.core import Frame, ProbabilityVector, betp, combine_with_retry, discount, vacuous
from apps.lab.belief.dense import (
    DENSE_MAX_FRAME,
    betp_dense,
    conjunctive_dense,
    discount_dense,
    from_dense,
    normalize_dense,
    to_dense,
)
from apps.lab.belief.exceptions import FrameMismatch

from .exceptions import BadParameter, TooFewInstances

logger = logging.getLogger(__name__)

DEFAULT_K = 7
DEFAULT_ALPHA0 = 0.95
GAMMA_AUTO = 'auto'
# ограничение на размер стека (K, строки, 2^M) при пакетном предсказании
DENSE_CHUNK_CELLS = 1 << 22


def _as_matrix(features):
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    return X


def _fit_scaler(X, standardize):
    if not standardize:
        return None
    return StandardScaler().fit(X)


def auto_gamma(X):
    """
    γ = 1 / среднее квадратов попарных расстояний.
    Среднее по всем парам считается точно: Σ_{i<j} |xi - xj|² = N Σ |xi - x̄|².
    При нулевом среднем (все точки совпали или точка одна) γ = 1.
    """
    N = len(X)
    if N < 2:
        logger.debug('auto_gamma: меньше двух точек, γ = 1')
        return 1.0
    centered = X - X.mean(axis=0)
    mean_sq = 2.0 * float(np.sum(centered * centered)) / (N - 1)
    if not np.isfinite(mean_sq) or mean_sq <= 0.0:
        logger.warning('auto_gamma: вырожденные расстояния, γ = 1')
        return 1.0
    return 1.0 / mean_sq


class _NeighborSearch:
    """Общая часть обеих моделей: стандартизация и поиск K ближайших."""

    def transform(self, features):
        X = _as_matrix(features)
        if X.shape[1] != self.train_features.shape[1]:
            raise BadParameter(f'Ожидалось {self.train_features.shape[1]} признаков, получено {X.shape[1]}')
        return self.scaler.transform(X) if self.scaler is not None else X

    def neighbors(self, features):
        """Индексы (n, K) и квадраты расстояний (n, K) до K ближайших, по возрастанию."""
        distances = cdist(self.transform(features), self.train_features, 'sqeuclidean')
        order = np.argsort(distances, axis=1, kind='stable')[:, :self.K]
        return order, np.take_along_axis(distances, order, axis=1)


@dataclass(frozen=True, eq=False)
class EknnModel(_NeighborSearch):
    frame: Frame
    train_features: np.ndarray
    train_labels: tuple
    K: int = DEFAULT_K
    alpha0: float = DEFAULT_ALPHA0
    gamma: float = 1.0
    scaler: StandardScaler | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 1.0:
            raise BadParameter(f'alpha0 = {self.alpha0!r}, нужно 0 < alpha0 < 1')
        if not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise BadParameter(f'gamma = {self.gamma!r}, нужно gamma > 0')
        if not 1 <= self.K <= len(self.train_labels):
            raise TooFewInstances(f'K = {self.K}, обучающих точек {len(self.train_labels)}')

    @classmethod
    def fit(cls, features, rich_labels, K=DEFAULT_K, alpha0=DEFAULT_ALPHA0, gamma_mode=GAMMA_AUTO,
            standardize=True):
        """
        rich_labels — функции масс на общем фрейме. gamma_mode: 'auto' или положительное число.
        """
        labels = tuple(rich_labels)
        X = _as_matrix(features)
        if not labels or len(labels) != len(X):
            raise TooFewInstances(f'{len(X)} точек и {len(labels)} меток')
        if K > len(labels):
            raise TooFewInstances(f'K = {K}, обучающих точек {len(labels)}')
        frame = labels[0].frame
        for m in labels[1:]:
            if m.frame != frame:
                raise FrameMismatch(f'{m.frame.labels} != {frame.labels}')
        scaler = _fit_scaler(X, standardize)
        train = scaler.transform(X) if scaler is not None else X.copy()
        if gamma_mode == GAMMA_AUTO:
            gamma = auto_gamma(train)
        else:
            try:
                gamma = float(gamma_mode)
            except (TypeError, ValueError):
                raise BadParameter(f'gamma_mode = {gamma_mode!r}') from None
        return cls(frame=frame, train_features=train, train_labels=labels, K=int(K), alpha0=float(alpha0),
                   gamma=gamma, scaler=scaler)

    @cached_property
    def train_dense(self):
        return to_dense(self.train_labels) if self.frame.M <= DENSE_MAX_FRAME else None

    @cached_property
    def train_betp(self):
        return np.array([betp(m).p for m in self.train_labels])

    def neighbor_weights(self, sq_distances):
        return self.alpha0 * np.exp(-self.gamma * sq_distances)

    def predict_mass(self, x):
        """Свёртка по Демпстеру дисконтированных меток K ближайших соседей (разреженный путь)."""
        order, sq = self.neighbors(x)
        combined = vacuous(self.frame)
        for index, weight in zip(order[0], self.neighbor_weights(sq[0])):
            combined = combine_with_retry(combined, discount(self.train_labels[index], weight))
        return combined

    def predict_masses(self, features):
        """Плотный массив (n, 2^M) функций масс для пакета точек. Для мер по пулу: scoring_masses."""
        if self.train_dense is None:
            return to_dense(self.predict_mass_batch(features))
        X = _as_matrix(features)
        order, sq = self.neighbors(X)
        weights = self.neighbor_weights(sq)
        S = 1 << self.frame.M
        rows = max(1, DENSE_CHUNK_CELLS // (self.K * S))
        out = np.empty((len(X), S))
        for start in range(0, len(X), rows):
            stop = min(start + rows, len(X))
            # (n, K, S) -> (K, n, S)
            evidence = discount_dense(self.train_dense[order[start:stop]], weights[start:stop])
            masses, _, degenerate = normalize_dense(conjunctive_dense(np.swapaxes(evidence, 0, 1)))
            for row in np.flatnonzero(degenerate):
                logger.debug('Полный конфликт в пакете, строка %d пересчитана по одной', start + row)
                masses[row] = to_dense([self.predict_mass(X[start + row])])[0]
            out[start:stop] = masses
        return out

    def scoring_masses(self, features):
        """Плотный массив при M ≤ DENSE_MAX_FRAME, иначе список MassFunction: матрица n×2^M не строится."""
        if self.train_dense is None:
            return self.predict_mass_batch(features)
        return self.predict_masses(features)

    def predict_mass_batch(self, features):
        X = _as_matrix(features)
        if self.train_dense is None:
            return [self.predict_mass(x) for x in X]
        return [from_dense(self.frame, row) for row in self.predict_masses(X)]

    def predict_betp(self, features):
        if self.train_dense is None:
            return np.array([betp(m).p for m in self.predict_mass_batch(features)])
        return betp_dense(self.predict_masses(features))

    def predict(self, features):
        return np.argmax(self.predict_betp(features), axis=1)

    def class_weights(self, features):
        """
        Взвешенные счётчики классов среди K соседей: вес соседа alpha0·exp(-γd²),
        распределённый по классам по BetP его метки. Форма (n, M).
        """
        order, sq = self.neighbors(features)
        weights = self.neighbor_weights(sq)
        return np.einsum('nk,nkm->nm', weights, self.train_betp[order])


@dataclass(frozen=True, eq=False)
class PknnModel(_NeighborSearch):
    frame: Frame
    train_features: np.ndarray
    train_labels: np.ndarray
    K: int = DEFAULT_K
    scaler: StandardScaler | None = None

    def __post_init__(self):
        if not 1 <= self.K <= len(self.train_labels):
            raise TooFewInstances(f'K = {self.K}, обучающих точек {len(self.train_labels)}')

    @classmethod
    def fit(cls, features, labels, frame, K=DEFAULT_K, standardize=True):
        X = _as_matrix(features)
        y = np.asarray(labels, dtype=int)
        if len(y) != len(X) or len(y) == 0:
            raise TooFewInstances(f'{len(X)} точек и {len(y)} меток')
        if K > len(y):
            raise TooFewInstances(f'K = {K}, обучающих точек {len(y)}')
        if y.min() < 0 or y.max() >= frame.M:
            raise BadParameter(f'Метки вне фрейма размера {frame.M}')
        scaler = _fit_scaler(X, standardize)
        train = scaler.transform(X) if scaler is not None else X.copy()
        return cls(frame=frame, train_features=train, train_labels=y, K=int(K), scaler=scaler)

    def predict_proba(self, features):
        """
        p(ω) ∝ Σ 1/d по соседям класса ω. Если среди соседей есть точки на нулевом
        расстоянии, вероятность делится поровну между их классами.
        """
        order, sq = self.neighbors(features)
        classes = self.train_labels[order]
        n = len(order)
        proba = np.zeros((n, self.frame.M))
        exact = sq == 0.0
        with np.errstate(divide='ignore'):
            weights = np.where(exact, 0.0, 1.0 / np.sqrt(sq))
        rows = np.repeat(np.arange(n), self.K)
        np.add.at(proba, (rows, classes.ravel()), weights.ravel())

        for row in np.flatnonzero(exact.any(axis=1)):
            hit = np.unique(classes[row][exact[row]])
            proba[row] = 0.0
            proba[row, hit] = 1.0 / len(hit)
        return proba / proba.sum(axis=1, keepdims=True)

    def predict(self, features):
        return np.argmax(self.predict_proba(features), axis=1)


def eknn_fit(features, rich_labels, K=DEFAULT_K, alpha0=DEFAULT_ALPHA0, gamma_mode=GAMMA_AUTO, standardize=True):
    return EknnModel.fit(features, rich_labels, K=K, alpha0=alpha0, gamma_mode=gamma_mode, standardize=standardize)


def eknn_predict_mass(model, x):
    return model.predict_mass(x)


def pknn_fit(features, labels, frame, K=DEFAULT_K, standardize=True):
    return PknnModel.fit(features, labels, frame, K=K, standardize=standardize)


def pknn_predict_proba(model, x):
    return ProbabilityVector(model.frame, model.predict_proba(x)[0])
