"""
Датасеты с богатыми метками: структура в памяти, CSV-формат, грамматика меток.

CSV: строка заголовка, столбцы признаков, столбец `label`, необязательный `rich_label`.
Богатая метка пишется в ячейку как `0:0.5;0|1:0.5` — подмножество (индексы классов
через `|`), двоеточие, масса; элементы разделены `;`.
"""
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import entropy as scipy_entropy

from apps.lab.belief.core import Frame, categorical, make_mass, members_of
from apps.lab.belief.exceptions import EvidenceError, SumNotOne

from .exceptions import DatasetError, ParseError, UnknownClass

logger = logging.getLogger(__name__)

MASS_DIGITS = 9
_ELEMENT = re.compile(r'^\s*(\d+(?:\s*\|\s*\d+)*)\s*:\s*([0-9]*\.?[0-9]+(?:[eE][-+]?\d+)?)\s*$')


@dataclass(frozen=True)
class CsvSchema:
    label_column: str = 'label'
    rich_label_column: str = 'rich_label'
    # порядок классов во фрейме; None: отсортированные метки из файла
    classes: tuple | None = None


@dataclass(frozen=True, eq=False)
class RichDataset:
    name: str
    features: np.ndarray
    true_labels: np.ndarray
    frame: Frame
    rich_labels: tuple
    feature_names: tuple = ()
    # метки из источника действительно богатые (а не синтезированы из чётких)
    rich_source: bool = False
    surrogate: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.true_labels, dtype=int)
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'true_labels', labels)
        object.__setattr__(self, 'rich_labels', tuple(self.rich_labels))
        if features.ndim != 2:
            raise DatasetError(f'{self.name}: матрица признаков должна быть двумерной')
        if not self.feature_names:
            object.__setattr__(self, 'feature_names', tuple(f'x{i}' for i in range(features.shape[1])))
        if len(self.feature_names) != features.shape[1]:
            raise DatasetError(f'{self.name}: {len(self.feature_names)} имён на {features.shape[1]} признаков')
        if not (len(features) == len(labels) == len(self.rich_labels)):
            raise DatasetError(
                f'{self.name}: N признаков {len(features)}, меток {len(labels)}, богатых меток {len(self.rich_labels)}'
            )
        if len(labels) and (labels.min() < 0 or labels.max() >= self.frame.M):
            raise DatasetError(f'{self.name}: истинные метки вне [0, {self.frame.M})')
        if any(m.frame != self.frame for m in self.rich_labels):
            raise DatasetError(f'{self.name}: богатая метка на чужом фрейме')
        if not np.all(np.isfinite(features)):
            raise DatasetError(f'{self.name}: в признаках есть nan/inf')

    @property
    def N(self):
        return len(self.true_labels)

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def M(self):
        return self.frame.M

    def crisp_masses(self):
        return tuple(categorical(self.frame, {int(c)}) for c in self.true_labels)


def _classes_in_order(values):
    unique = sorted(set(values))
    numeric = pd.to_numeric(pd.Series(unique), errors='coerce')
    if not numeric.isna().any():
        unique = [label for _, label in sorted(zip(numeric, unique))]
    return tuple(unique)


def parse_rich_label(frame, text, *, line=None):
    """Разбор богатой метки из текста ячейки; сумма масс перенормируется в пределах 0.01."""
    if text is None or not str(text).strip():
        raise ParseError('пустая богатая метка', line=line)
    assignments = []
    for element in str(text).split(';'):
        match = _ELEMENT.match(element)
        if match is None:
            raise ParseError(f'элемент {element!r} не соответствует формату "i|j:масса"', line=line)
        members = tuple(int(token) for token in match.group(1).split('|'))
        assignments.append((members, float(match.group(2))))
    try:
        return make_mass(frame, assignments, renormalize=True)
    except SumNotOne as exc:
        if line is None:
            raise
        raise SumNotOne(f'строка {line}: {exc}') from exc
    except EvidenceError as exc:
        raise ParseError(f'{text!r}: {exc}', line=line) from exc


def serialize_rich_label(m):
    """
    Массы округляются до 9 знаков так, чтобы десятичная сумма была ровно 1
    (недостающие единицы младшего разряда достаются элементам с наибольшим остатком).
    Тогда повторный разбор не перенормирует метку и запись устойчива.
    """
    scale = 10 ** MASS_DIGITS
    masks = list(m.focal)
    exact = [m.focal[mask] * scale for mask in masks]
    units = [int(np.floor(value)) for value in exact]
    shortfall = scale - sum(units)
    by_remainder = sorted(range(len(masks)), key=lambda i: (units[i] - exact[i], i))
    for i in by_remainder[:max(shortfall, 0)]:
        units[i] += 1
    return ';'.join(
        f"{'|'.join(str(i) for i in members_of(mask))}:{u // scale}.{u % scale:0{MASS_DIGITS}d}"
        for mask, u in zip(masks, units)
        if u > 0
    )


def load_csv(path, schema=None, name=None):
    schema = schema or CsvSchema()
    path = Path(path)
    try:
        table = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParseError(f'{path.name}: {exc}') from exc
    if schema.label_column not in table.columns:
        raise ParseError(f'{path.name}: нет столбца {schema.label_column!r}', line=1)

    has_rich = schema.rich_label_column in table.columns
    feature_columns = [c for c in table.columns if c not in (schema.label_column, schema.rich_label_column)]
    if not feature_columns:
        raise ParseError(f'{path.name}: нет столбцов признаков', line=1)

    features = np.empty((len(table), len(feature_columns)))
    for j, column in enumerate(feature_columns):
        values = pd.to_numeric(table[column].str.strip(), errors='coerce').to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if len(bad):
            row = int(bad[0])
            raise ParseError(f'признак {column!r}: нечисловое значение {table[column].iloc[row]!r}', line=row + 2)
        features[:, j] = values

    raw_labels = table[schema.label_column].str.strip().tolist()
    for row, label in enumerate(raw_labels):
        if not label:
            raise ParseError('пустая метка класса', line=row + 2)
    classes = tuple(schema.classes) if schema.classes else _classes_in_order(raw_labels)
    frame = Frame(classes)
    index = {label: i for i, label in enumerate(frame.labels)}
    true_labels = []
    for row, label in enumerate(raw_labels):
        if label not in index:
            raise UnknownClass(f'строка {row + 2}: класс {label!r} не входит в {frame.labels}')
        true_labels.append(index[label])

    if has_rich:
        rich = tuple(
            parse_rich_label(frame, text, line=row + 2)
            for row, text in enumerate(table[schema.rich_label_column].tolist())
        )
    else:
        rich = tuple(categorical(frame, {i}) for i in true_labels)

    dataset = RichDataset(
        name=name or path.stem,
        features=features,
        true_labels=np.asarray(true_labels),
        frame=frame,
        rich_labels=rich,
        feature_names=tuple(feature_columns),
        rich_source=has_rich,
    )
    logger.debug('Загружен %s: N=%d d=%d M=%d', dataset.name, dataset.N, dataset.d, dataset.M)
    return dataset


def save_csv(dataset, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    table['label'] = [dataset.frame.labels[c] for c in dataset.true_labels]
    table['rich_label'] = [serialize_rich_label(m) for m in dataset.rich_labels]
    table.to_csv(path, index=False, lineterminator='\n', float_format='%.17g')
    return path


def describe_dataset(dataset):
    """Число наблюдений, классов, признаков и нормированная энтропия распределения классов."""
    counts = np.bincount(dataset.true_labels, minlength=dataset.M)
    balance = float(scipy_entropy(counts, base=2) / np.log2(dataset.M)) if counts.sum() else 0.0
    return {
        'name': dataset.name,
        'observations': dataset.N,
        'classes': dataset.M,
        'features': dataset.d,
        'class_counts': counts.tolist(),
        'class_entropy': round(balance, 4),
        'rich_labels': dataset.rich_source,
        'imprecise_labels': sum(1 for m in dataset.rich_labels if not m.is_bayesian),
        'surrogate': dataset.surrogate,
    }
