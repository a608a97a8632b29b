"""
Алгебра функций масс на конечном фрейме.

Подмножества фрейма храним битовыми масками: бит i установлен, если класс i входит
в подмножество. Снаружи подмножества передаются итерируемыми объектами из индексов
классов или меток (`{0}`, `('Cat', 'Dog')`), маски — внутренняя деталь.
"""
import logging
import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .exceptions import (
    BadDiscount,
    BadFrame,
    BadSubset,
    EmptyFocal,
    EmptyList,
    FrameMismatch,
    NegativeMass,
    SumNotOne,
    TotalConflict,
)

logger = logging.getLogger(__name__)

MAX_FRAME_SIZE = 20
SUM_TOLERANCE = 1e-9
CONFLICT_TOLERANCE = 1e-12
INGEST_TOLERANCE = 0.01


def popcount(mask):
    return bin(mask).count('1')


def members_of(mask):
    """Индексы классов, входящих в маску, по возрастанию."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class Frame:
    labels: tuple

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, 'labels', labels)
        if not 2 <= len(labels) <= MAX_FRAME_SIZE:
            raise BadFrame(f'Фрейм из {len(labels)} меток: допустимо от 2 до {MAX_FRAME_SIZE}')
        if any(not label for label in labels):
            raise BadFrame('Пустая метка класса во фрейме')
        if len(set(labels)) != len(labels):
            raise BadFrame(f'Метки фрейма повторяются: {labels}')

    @property
    def M(self):
        return len(self.labels)

    @property
    def omega(self):
        """Маска всего фрейма."""
        return (1 << self.M) - 1

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise BadSubset(f'Метки {label!r} нет во фрейме {self.labels}') from None

    def mask(self, subset):
        """Маска подмножества, заданного индексами и/или метками классов."""
        if isinstance(subset, (str, int)):
            raise BadSubset(f'Подмножество задаётся коллекцией, а не скаляром: {subset!r}')
        mask = 0
        for member in subset:
            if isinstance(member, (int, np.integer)) and not isinstance(member, bool):
                if not 0 <= member < self.M:
                    raise BadSubset(f'Индекс {member} вне фрейма размера {self.M}')
                mask |= 1 << int(member)
            else:
                mask |= 1 << self.index(member)
        return mask

    def subset_labels(self, mask):
        return tuple(self.labels[i] for i in members_of(mask))


class MassFunction:
    """
    Нормированная функция масс: фокальные элементы (маски) -> масса > 0, сумма = 1.

    Объект неизменяем. Конструктор доверяет входу и нужен для внутренних путей,
    где нормировка уже выполнена; снаружи используйте make_mass.
    """
    __slots__ = ('frame', '_focal')

    def __init__(self, frame, focal):
        object.__setattr__(self, 'frame', frame)
        object.__setattr__(self, '_focal', dict(sorted(focal.items())))

    def __setattr__(self, name, value):
        raise AttributeError('MassFunction неизменяема')

    def __getstate__(self):
        return {'frame': self.frame, 'focal': self._focal}

    def __setstate__(self, state):
        object.__setattr__(self, 'frame', state['frame'])
        object.__setattr__(self, '_focal', state['focal'])

    @property
    def focal(self):
        return MappingProxyType(self._focal)

    def mass(self, subset):
        return self._focal.get(self.frame.mask(subset), 0.0)

    def items(self):
        """(кортеж индексов, масса) в каноническом порядке масок."""
        return [(members_of(mask), value) for mask, value in self._focal.items()]

    @property
    def is_bayesian(self):
        return all(popcount(mask) == 1 for mask in self._focal)

    @property
    def is_vacuous(self):
        return list(self._focal) == [self.frame.omega]

    def permuted(self, order):
        """Та же функция масс на фрейме с классами в порядке `order` (новый индекс -> старый)."""
        order = list(order)
        if sorted(order) != list(range(self.frame.M)):
            raise BadSubset(f'{order} не является перестановкой индексов фрейма')
        frame = Frame(tuple(self.frame.labels[i] for i in order))
        new_position = {old: new for new, old in enumerate(order)}
        focal = {}
        for mask, value in self._focal.items():
            new_mask = 0
            for old in members_of(mask):
                new_mask |= 1 << new_position[old]
            focal[new_mask] = value
        return MassFunction(frame, focal)

    def __eq__(self, other):
        if not isinstance(other, MassFunction):
            return NotImplemented
        return self.frame == other.frame and self._focal == other._focal

    def __hash__(self):
        return hash((self.frame, tuple(self._focal.items())))

    def __repr__(self):
        parts = ', '.join(
            f"{{{','.join(self.frame.subset_labels(mask))}}}: {value:.6g}"
            for mask, value in self._focal.items()
        )
        return f'MassFunction({parts})'


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    frame: Frame
    p: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.p)
        object.__setattr__(self, 'p', values)
        if len(values) != self.frame.M:
            raise FrameMismatch(f'Вектор длины {len(values)} для фрейма размера {self.frame.M}')
        if any(v < -SUM_TOLERANCE or v > 1 + SUM_TOLERANCE for v in values):
            raise SumNotOne(f'Вероятности вне [0, 1]: {values}')
        total = math.fsum(values)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise SumNotOne(f'Сумма вероятностей {total!r} != 1')

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self.frame.index(key)
        return self.p[key]

    def as_array(self):
        return np.asarray(self.p, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityVector):
            return NotImplemented
        return self.frame == other.frame and self.p == other.p

    def __hash__(self):
        return hash((self.frame, self.p))


def _normalized(frame, focal, *, renormalize=False, tolerance=INGEST_TOLERANCE):
    focal = {mask: value for mask, value in focal.items() if value > 0.0}
    total = math.fsum(focal.values())
    deviation = abs(total - 1.0)
    if deviation > SUM_TOLERANCE and not (renormalize and deviation <= tolerance):
        raise SumNotOne(f'Сумма масс {total!r} отличается от 1 больше допуска')
    if total != 1.0:
        focal = {mask: value / total for mask, value in focal.items()}
    return MassFunction(frame, focal)


def make_mass(frame, assignments, *, renormalize=False, tolerance=INGEST_TOLERANCE):
    """
    Строит функцию масс из пар (подмножество, масса).

    Повторные подмножества суммируются, нулевые массы отбрасываются.
    С renormalize=True сумма, отличающаяся от 1 не больше чем на `tolerance`,
    перенормируется (для шумных размеченных файлов); иначе допуск 1e-9.
    """
    accumulated = {}
    for subset, value in assignments:
        value = float(value)
        if not math.isfinite(value) or value < 0.0:
            raise NegativeMass(f'Масса {value!r} для подмножества {subset!r}')
        mask = frame.mask(subset)
        if mask == 0:
            if value > 0.0:
                raise EmptyFocal(f'Пустому множеству назначена масса {value!r}')
            continue
        accumulated[mask] = accumulated.get(mask, 0.0) + value
    return _normalized(frame, accumulated, renormalize=renormalize, tolerance=tolerance)


def vacuous(frame):
    return MassFunction(frame, {frame.omega: 1.0})


def categorical(frame, subset):
    mask = frame.mask(subset)
    if mask == 0:
        raise EmptyFocal('Категориальная масса на пустом множестве')
    return MassFunction(frame, {mask: 1.0})


def betp(m):
    """Пигнистическое преобразование: масса фокального элемента делится поровну между его классами."""
    p = [0.0] * m.frame.M
    for mask, value in m.focal.items():
        members = members_of(mask)
        share = value / len(members)
        for i in members:
            p[i] += share
    return ProbabilityVector(m.frame, p)


def _subset_mask(m, subset):
    mask = m.frame.mask(subset)
    if mask == 0:
        raise EmptyFocal('Пустое подмножество')
    return mask


def betp_subset(m, subset):
    mask = _subset_mask(m, subset)
    if mask == m.frame.omega:
        return 1.0
    p = betp(m).p
    return math.fsum(p[i] for i in members_of(mask))


def bel(m, subset):
    mask = _subset_mask(m, subset)
    return math.fsum(value for focal, value in m.focal.items() if focal & ~mask == 0)


def pl(m, subset):
    mask = _subset_mask(m, subset)
    return math.fsum(value for focal, value in m.focal.items() if focal & mask)


def _check_same_frame(ms):
    frame = ms[0].frame
    for m in ms[1:]:
        if m.frame != frame:
            raise FrameMismatch(f'{m.frame.labels} != {frame.labels}')
    return frame


def mean_combine(ms):
    ms = list(ms)
    if not ms:
        raise EmptyList()
    frame = _check_same_frame(ms)
    if all(m == ms[0] for m in ms[1:]):
        return ms[0]
    masks = sorted({mask for m in ms for mask in m.focal})
    n = len(ms)
    focal = {mask: math.fsum(m.focal.get(mask, 0.0) for m in ms) / n for mask in masks}
    return _normalized(frame, focal)


def dempster_combine(m1, m2):
    """
    Правило Демпстера: конъюнктивная сумма с нормировкой на 1 - κ,
    где κ — масса, попавшая на пустое множество.
    """
    frame = _check_same_frame([m1, m2])
    products = {}
    conflict = 0.0
    for b, mb in m1.focal.items():
        for c, mc in m2.focal.items():
            intersection = b & c
            if intersection:
                products[intersection] = products.get(intersection, 0.0) + mb * mc
            else:
                conflict += mb * mc
    if conflict >= 1.0 - CONFLICT_TOLERANCE or not products:
        raise TotalConflict(f'κ = {conflict!r}')
    total = math.fsum(products.values())
    return MassFunction(frame, {mask: value / total for mask, value in products.items() if value > 0.0})


def discount(m, alpha):
    """Классическое дисконтирование: доля 1 - alpha массы уходит на весь фрейм."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise BadDiscount(f'alpha = {alpha!r}')
    if alpha == 1.0:
        return m
    omega = m.frame.omega
    focal = {mask: alpha * value for mask, value in m.focal.items() if mask != omega}
    focal = {mask: value for mask, value in focal.items() if value > 0.0}
    focal[omega] = 1.0 - alpha * (1.0 - m.focal.get(omega, 0.0))
    return MassFunction(m.frame, focal)


def combine_with_retry(m1, m2, retry_alpha=1.0 - 1e-6):
    """
    Демпстер с одной повторной попыткой при полном конфликте:
    обе массы слегка дисконтируются, чтобы у них появилась общая часть.
    """
    try:
        return dempster_combine(m1, m2)
    except TotalConflict:
        logger.debug('Полный конфликт, повтор с дисконтированием %.8f', retry_alpha)
        return dempster_combine(discount(m1, retry_alpha), discount(m2, retry_alpha))
