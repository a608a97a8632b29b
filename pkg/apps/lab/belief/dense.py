"""
Плотное пакетное представление: массив (n, 2^M), столбец s — масса подмножества с маской s.

Используется моделью и циклом активного обучения, где нужно комбинировать свидетельства
сотен точек сразу. Конъюнктивное правило считается через функцию общности q:
q = zeta(m) по надмножествам, q_{1∩2} = q_1 * q_2, обратно — преобразование Мёбиуса.
"""
import logging
import math
from functools import lru_cache

import numpy as np

from .core import CONFLICT_TOLERANCE, MassFunction
from .exceptions import FrameMismatch, TotalConflict

logger = logging.getLogger(__name__)

DENSE_MAX_FRAME = 12
PRUNE_BELOW = 1e-15
DRIFT_TOLERANCE = 1e-12


@lru_cache(maxsize=None)
def membership(M):
    """Булева матрица (2^M, M): membership[s, i] — входит ли класс i в подмножество s."""
    masks = np.arange(1 << M)[:, None]
    return ((masks >> np.arange(M)[None, :]) & 1).astype(bool)


@lru_cache(maxsize=None)
def subset_sizes(M):
    return membership(M).sum(axis=1)


@lru_cache(maxsize=None)
def _bit_pairs(M):
    """Для каждого бита: маски без него и те же маски с ним."""
    masks = np.arange(1 << M)
    pairs = []
    for i in range(M):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        pairs.append((without, without | bit))
    return tuple(pairs)


def to_dense(ms):
    ms = list(ms)
    frame = ms[0].frame
    out = np.zeros((len(ms), 1 << frame.M))
    for row, m in enumerate(ms):
        if m.frame != frame:
            raise FrameMismatch(f'{m.frame.labels} != {frame.labels}')
        for mask, value in m.focal.items():
            out[row, mask] = value
    return out


def from_dense(frame, row):
    """Разреженная функция масс из строки плотного массива (шум округления отбрасывается)."""
    row = np.asarray(row, dtype=float)
    keep = np.flatnonzero(row[1:] > PRUNE_BELOW) + 1
    focal = {int(s): float(row[s]) for s in keep}
    total = math.fsum(focal.values())
    if abs(total - 1.0) > DRIFT_TOLERANCE:
        focal = {mask: value / total for mask, value in focal.items()}
    return MassFunction(frame, focal)


def commonality(m):
    """q(A) = сумма m(B) по всем B ⊇ A, по последней оси."""
    q = np.array(m, dtype=float, copy=True)
    M = int(q.shape[-1]).bit_length() - 1
    for without, with_bit in _bit_pairs(M):
        q[..., without] += q[..., with_bit]
    return q


def from_commonality(q):
    m = np.array(q, dtype=float, copy=True)
    M = int(m.shape[-1]).bit_length() - 1
    for without, with_bit in _bit_pairs(M):
        m[..., without] -= m[..., with_bit]
    return m


def conjunctive_dense(stack):
    """
    Ненормированная конъюнктивная комбинация K свидетельств для n точек.
    stack: (K, n, 2^M). Возвращает (n, 2^M), столбец 0 — масса конфликта.
    """
    q = np.prod(commonality(stack), axis=0)
    m = from_commonality(q)
    m[m < 0.0] = 0.0
    return m


def normalize_dense(m):
    """
    Нормировка Демпстера. Возвращает (массы, конфликт, маска строк с полным конфликтом).
    Строки с полным конфликтом остаются нулевыми: их обрабатывает вызывающий.
    """
    m = np.array(m, dtype=float, copy=True)
    m[:, 0] = 0.0
    m[m < PRUNE_BELOW] = 0.0
    totals = m.sum(axis=1)
    degenerate = totals <= CONFLICT_TOLERANCE
    safe = np.where(degenerate, 1.0, totals)
    m /= safe[:, None]
    m[degenerate] = 0.0
    return m, 1.0 - totals, degenerate


def dempster_combine_dense(stack):
    m, conflict, degenerate = normalize_dense(conjunctive_dense(stack))
    if degenerate.any():
        raise TotalConflict(f'Полный конфликт в {int(degenerate.sum())} строках')
    return m


def discount_dense(m, alpha):
    """alpha — скаляр или массив формы m.shape[:-1]."""
    alpha = np.asarray(alpha, dtype=float)[..., None]
    out = alpha * m
    out[..., -1] += 1.0 - alpha[..., 0]
    return out


def betp_dense(m):
    M = int(m.shape[-1]).bit_length() - 1
    sizes = subset_sizes(M).astype(float)
    sizes[0] = 1.0
    return (m / sizes) @ membership(M).astype(float)


def bel_pl_singletons_dense(m):
    """(Bel({ω_i}), Pl({ω_i})) для всех классов, формы (n, M)."""
    M = int(m.shape[-1]).bit_length() - 1
    singletons = 1 << np.arange(M)
    belief = m[:, singletons]
    plausibility = m @ membership(M).astype(float)
    return belief, plausibility


def betp_subsets_dense(m):
    """BetP(A) для всех подмножеств A: (n, 2^M)."""
    M = int(m.shape[-1]).bit_length() - 1
    return betp_dense(m) @ membership(M).T.astype(float)
