"""
Статистическое сравнение стратегий по AUAC.

- t-тест лучшей стратегии против второй в каждом датасете (парный по номеру повтора
  или для независимых выборок);
- тест Фридмана по матрице «датасеты × стратегии»;
- попарный Уилкоксон с поправкой Холма, средние ранги и клики для диаграммы
  критической разности.

Во всех матрицах больший AUAC лучше, ранг 1 — лучшая стратегия.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd
import pingouin as pg
from django.db import models
from scipy import stats

from apps.shared.config.exceptions import DegenerateInput, SchemaError

from .exceptions import ZeroVariance

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
# до стольких ненулевых разностей без совпадений Уилкоксон считается по точному распределению
EXACT_WILCOXON_LIMIT = 25


class TTestKind(models.TextChoices):
    PAIRED = 'paired', 'Парный t-тест'
    INDEPENDENT = 'independent', 't-тест для независимых выборок'


class WilcoxonSides(models.TextChoices):
    TWO_SIDED = 'two-sided', 'Двусторонний'
    # альтернатива: стратегия с лучшим средним рангом даёт больший AUAC
    ONE_SIDED = 'one-sided', 'Односторонний'


class StatResult(NamedTuple):
    statistic: float
    p_value: float


# ────────────────────────────────────────────────────────────────────────────
# Тесты на двух выборках
# ────────────────────────────────────────────────────────────────────────────

def _sample(values, name):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise DegenerateInput(f'{name}: ожидался одномерный вектор')
    if not np.all(np.isfinite(values)):
        raise DegenerateInput(f'{name}: в выборке есть nan/inf')
    return values


def _paired_samples(a, b):
    a, b = _sample(a, 'a'), _sample(b, 'b')
    if a.size != b.size:
        raise DegenerateInput(f'Парные выборки разной длины: {a.size} и {b.size}')
    if a.size < 2:
        raise DegenerateInput('Нужно хотя бы два парных наблюдения')
    return a, b


def paired_t_test(a, b):
    """
    Парный t-тест на разностях a − b, двусторонний p по распределению Стьюдента с n − 1
    степенями свободы. Совпадающие выборки дают (0, 1); постоянная ненулевая разность —
    ZeroVariance.
    """
    a, b = _paired_samples(a, b)
    diff = a - b
    if np.ptp(diff) == 0.0:
        if diff[0] == 0.0:
            return StatResult(0.0, 1.0)
        raise ZeroVariance(f'Все разности равны {diff[0]:g}')
    result = stats.ttest_rel(a, b)
    return StatResult(float(result.statistic), float(result.pvalue))


def independent_t_test(a, b):
    """t-тест Стьюдента для независимых выборок с объединённой дисперсией."""
    a, b = _sample(a, 'a'), _sample(b, 'b')
    if a.size < 2 or b.size < 2:
        raise DegenerateInput('В каждой выборке нужно хотя бы два наблюдения')
    if np.ptp(a) == 0.0 and np.ptp(b) == 0.0:
        if a[0] == b[0]:
            return StatResult(0.0, 1.0)
        raise ZeroVariance(f'Обе выборки постоянны: {a[0]:g} и {b[0]:g}')
    result = stats.ttest_ind(a, b, equal_var=True)
    return StatResult(float(result.statistic), float(result.pvalue))


def wilcoxon_signed_rank(a, b, alternative='two-sided'):
    """
    Знаково-ранговый тест Уилкоксона для разностей a − b. Нулевые разности отбрасываются;
    точное распределение при ≤ 25 ненулевых разностях без совпадений модулей,
    иначе нормальное приближение с поправкой на совпадения.

    alternative: 'two-sided', 'greater' (a больше b) или 'less'.
    """
    if alternative not in ('two-sided', 'greater', 'less'):
        raise DegenerateInput(f'Неизвестная альтернатива: {alternative}')
    a, b = _paired_samples(a, b)
    diff = a - b
    nonzero = diff[diff != 0.0]
    if nonzero.size == 0:
        return StatResult(0.0, 1.0)
    magnitudes = np.abs(nonzero)
    exact = nonzero.size <= EXACT_WILCOXON_LIMIT and np.unique(magnitudes).size == magnitudes.size
    result = stats.wilcoxon(nonzero, alternative=alternative, method='exact' if exact else 'asymptotic')
    return StatResult(float(result.statistic), min(1.0, float(result.pvalue)))


def holm_adjust(p_values):
    """Поправка Холма (step-down); скорректированные p монотонны и не меньше исходных."""
    p_values = np.asarray(p_values, dtype=float)
    if p_values.size == 0:
        return p_values
    if not np.all(np.isfinite(p_values)) or np.any((p_values < 0.0) | (p_values > 1.0)):
        raise DegenerateInput('p-значения должны лежать в [0, 1]')
    _, adjusted = pg.multicomp(p_values, method='holm')
    return np.asarray(adjusted, dtype=float)


# ────────────────────────────────────────────────────────────────────────────
# Матрица «датасеты × стратегии»
# ────────────────────────────────────────────────────────────────────────────

def _score_matrix(scores):
    matrix = np.asarray(scores, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2 or matrix.shape[1] < 2:
        raise DegenerateInput(f'Нужна матрица минимум 2 × 2 (датасеты × стратегии), получено {matrix.shape}')
    if not np.all(np.isfinite(matrix)):
        raise DegenerateInput('В матрице оценок есть nan/inf')
    return matrix


def rank_rows(scores):
    """Ранги внутри каждого датасета: 1 — наибольший AUAC, совпадения получают средний ранг."""
    return stats.rankdata(-_score_matrix(scores), axis=1)


def average_ranks(scores):
    return rank_rows(scores).mean(axis=0)


def friedman_test(scores):
    """
    Статистика Фридмана с поправкой на совпадения рангов, p по χ² с k − 1 степенями свободы.
    Если все строки полностью состоят из совпадений, статистика 0 и p = 1.
    """
    ranks = rank_rows(scores)
    n, k = ranks.shape
    rank_sums = ranks.sum(axis=0)
    spread = float(np.sum((rank_sums - n * (k + 1) / 2.0) ** 2))
    ties = 0.0
    for row in ranks:
        _, counts = np.unique(row, return_counts=True)
        ties += float(np.sum(counts ** 3 - counts))
    denominator = n * k * (k + 1) - ties / (k - 1)
    if denominator <= 0.0 or spread == 0.0:
        return StatResult(0.0, 1.0)
    statistic = 12.0 * spread / denominator
    return StatResult(statistic, float(stats.chi2.sf(statistic, k - 1)))


@dataclass(frozen=True)
class PairComparison:
    first: str
    second: str
    statistic: float
    p_value: float
    p_adjusted: float
    rejected: bool


@dataclass(frozen=True)
class CDResult:
    strategies: tuple
    average_ranks: tuple
    pairs: tuple
    cliques: tuple
    alpha: float = DEFAULT_ALPHA
    n_datasets: int = 0
    friedman: StatResult | None = None
    sides: str = WilcoxonSides.TWO_SIDED

    def rank_of(self, strategy):
        return self.average_ranks[self.strategies.index(strategy)]

    @property
    def ordered(self):
        """(стратегия, средний ранг) от лучшей к худшей."""
        order = sorted(range(len(self.strategies)), key=lambda j: (self.average_ranks[j], j))
        return [(self.strategies[j], self.average_ranks[j]) for j in order]

    def pair(self, first, second):
        for item in self.pairs:
            if {item.first, item.second} == {first, second}:
                return item
        raise KeyError((first, second))


def _cliques(order, rejected):
    """Максимальные отрезки соседних по рангу стратегий, внутри которых нет отвергнутых пар."""
    runs = []
    for start in range(len(order)):
        end = start
        while end + 1 < len(order) and all(
            frozenset((order[i], order[end + 1])) not in rejected for i in range(start, end + 1)
        ):
            end += 1
        run = tuple(order[start:end + 1])
        if not runs or not set(run) <= set(runs[-1]):
            runs.append(run)
    return tuple(runs)


def wilcoxon_holm_cd(scores, strategies=None, alpha=DEFAULT_ALPHA, sides=WilcoxonSides.TWO_SIDED):
    """
    Данные для диаграммы критической разности: средние ранги, попарные тесты Уилкоксона
    по датасетам с поправкой Холма и клики неразличимых стратегий.

    sides='one-sided' проверяет в каждой паре, что стратегия с лучшим средним рангом
    (при равенстве рангов — левая по столбцам) даёт больший AUAC.
    """
    matrix = _score_matrix(scores)
    if not 0.0 < alpha < 1.0:
        raise DegenerateInput(f'alpha = {alpha}, нужно 0 < alpha < 1')
    if sides not in WilcoxonSides.values:
        raise DegenerateInput(f'sides = {sides}, допустимо: {", ".join(WilcoxonSides.values)}')
    if strategies is None:
        if isinstance(scores, pd.DataFrame):
            strategies = [str(column) for column in scores.columns]
        else:
            strategies = [f's{j}' for j in range(matrix.shape[1])]
    strategies = tuple(strategies)
    if len(strategies) != matrix.shape[1] or len(set(strategies)) != len(strategies):
        raise DegenerateInput('Имена стратегий должны быть уникальны и соответствовать столбцам')

    ranks = tuple(float(r) for r in average_ranks(matrix))
    combos = list(itertools.combinations(range(len(strategies)), 2))

    def alternative(i, j):
        if sides == WilcoxonSides.TWO_SIDED:
            return 'two-sided'
        return 'greater' if ranks[i] <= ranks[j] else 'less'

    raw = [wilcoxon_signed_rank(matrix[:, i], matrix[:, j], alternative(i, j)) for i, j in combos]
    adjusted = holm_adjust([r.p_value for r in raw])
    pairs = tuple(
        PairComparison(
            first=strategies[i], second=strategies[j],
            statistic=r.statistic, p_value=r.p_value,
            p_adjusted=float(p), rejected=bool(p < alpha),
        )
        for (i, j), r, p in zip(combos, raw, adjusted)
    )
    rejected = {frozenset((p.first, p.second)) for p in pairs if p.rejected}

    order = [strategies[j] for j in sorted(range(len(strategies)), key=lambda j: (ranks[j], j))]
    result = CDResult(
        strategies=strategies,
        average_ranks=ranks,
        pairs=pairs,
        cliques=_cliques(order, rejected),
        alpha=alpha,
        n_datasets=matrix.shape[0],
        friedman=friedman_test(matrix),
        sides=str(sides),
    )
    logger.info('CD: %d датасетов, ранги %s, клик %d',
                result.n_datasets, ', '.join(f'{s}={r:.2f}' for s, r in result.ordered), len(result.cliques))
    return result


# ────────────────────────────────────────────────────────────────────────────
# Таблица сравнения из файлов серий
# ────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BestVsSecond:
    best: str
    second: str
    test: StatResult | None


@dataclass
class ComparisonTable:
    """
    Средний AUAC по датасетам и стратегиям, векторы AUAC по повторам,
    победитель строки и t-тест лучшей стратегии против второй.
    """
    datasets: list
    strategies: list
    mean_auac: pd.DataFrame
    samples: dict
    comparisons: dict
    t_test: str = TTestKind.PAIRED
    full_accuracy: pd.DataFrame | None = None
    cost_reduction: pd.DataFrame = field(default_factory=pd.DataFrame)
    mean_curves: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def winners(self):
        return {dataset: item.best for dataset, item in self.comparisons.items()}

    @classmethod
    def from_series(cls, series, strategies=None, t_test=TTestKind.PAIRED):
        """series — содержимое файлов series/*.json (см. load_series)."""
        if t_test not in TTestKind.values:
            raise SchemaError(f't_test = {t_test!r}; доступны: {", ".join(TTestKind.values)}', path='.t_test')
        cells = {}
        for item in series:
            key = (item['dataset'], item['strategy'])
            if key in cells:
                raise SchemaError(f'Серия {key[0]} / {key[1]} встречается дважды', path='.results')
            cells[key] = item
        if not cells:
            raise DegenerateInput('Нет серий для сравнения')

        available = list(dict.fromkeys(strategy for _, strategy in cells))
        if strategies:
            missing = [s for s in strategies if s not in available]
            if missing:
                raise SchemaError(f'Нет результатов для стратегий: {", ".join(missing)}', path='.strategies')
            chosen = list(dict.fromkeys(strategies))
        else:
            chosen = available
        if len(chosen) < 2:
            raise DegenerateInput('Для сравнения нужны хотя бы две стратегии')

        def usable(dataset, strategy):
            item = cells.get((dataset, strategy))
            return item is not None and item['summary'].get('mean_auac') is not None

        all_datasets = list(dict.fromkeys(dataset for dataset, _ in cells))
        datasets = [d for d in all_datasets if all(usable(d, s) for s in chosen)]
        skipped = [d for d in all_datasets if d not in datasets]
        if skipped:
            logger.warning('Неполные строки исключены из сравнения: %s', ', '.join(skipped))
        if not datasets:
            raise DegenerateInput('Ни для одного датасета нет результатов всех выбранных стратегий')

        samples = {
            (d, s): {
                rep['repetition']: rep['auac']
                for rep in cells[(d, s)]['repetitions']
                if rep.get('error') is None and rep.get('auac') is not None
            }
            for d in datasets for s in chosen
        }
        mean_auac = pd.DataFrame(
            [[cells[(d, s)]['summary']['mean_auac'] for s in chosen] for d in datasets],
            index=pd.Index(datasets, name='dataset'), columns=chosen, dtype=float,
        )
        full_accuracy = pd.DataFrame(
            [[cells[(d, s)]['summary'].get('mean_full_accuracy') for s in chosen] for d in datasets],
            index=pd.Index(datasets, name='dataset'), columns=chosen, dtype=float,
        )
        comparisons = {d: cls._best_vs_second(d, mean_auac.loc[d], samples, chosen, t_test) for d in datasets}

        reductions, curves = [], []
        for d in datasets:
            for s in chosen:
                item = cells[(d, s)]
                for threshold, value in sorted(item['summary'].get('cost_reduction', {}).items()):
                    reductions.append((d, s, float(threshold), value))
                for step, (count, accuracy) in enumerate(zip(item['labeled_counts'], item['mean_curve'])):
                    curves.append((d, s, step, count, accuracy))

        return cls(
            datasets=datasets,
            strategies=chosen,
            mean_auac=mean_auac,
            samples=samples,
            comparisons=comparisons,
            t_test=t_test,
            full_accuracy=full_accuracy,
            cost_reduction=pd.DataFrame(reductions, columns=['dataset', 'strategy', 'threshold', 'reduction']),
            mean_curves=pd.DataFrame(
                curves, columns=['dataset', 'strategy', 'step', 'labeled_count', 'mean_accuracy']),
        )

    @staticmethod
    def _best_vs_second(dataset, row, samples, strategies, t_test):
        # ничья по среднему -> раньше в списке стратегий
        order = sorted(range(len(strategies)), key=lambda j: (-row.iloc[j], j))
        best, second = strategies[order[0]], strategies[order[1]]
        a, b = samples[(dataset, best)], samples[(dataset, second)]
        if t_test == TTestKind.PAIRED:
            common = sorted(set(a) & set(b))
            x, y = [a[r] for r in common], [b[r] for r in common]
        else:
            x, y = [a[r] for r in sorted(a)], [b[r] for r in sorted(b)]
        test = paired_t_test if t_test == TTestKind.PAIRED else independent_t_test
        try:
            outcome = test(x, y)
        except (DegenerateInput, ZeroVariance) as exc:
            logger.warning('%s: t-тест %s против %s не выполнен: %s', dataset, best, second, exc)
            outcome = None
        return BestVsSecond(best=best, second=second, test=outcome)
