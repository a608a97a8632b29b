"""
Файлы отчёта сравнения стратегий.

  report.md / report.html — таблица среднего AUAC (жирным — лучшая стратегия в строке)
                            с t-тестом лучшей против второй, Фридман, Уилкоксон–Холм, клики,
                            сокращение стоимости разметки
  table.csv               — та же таблица
  mean_curves.csv         — средние кривые точности
  cost_reduction.csv      — доля пула, которую можно не размечать
  cd.csv                  — средний ранг и позиция каждой стратегии
  cd_cliques.csv          — клики (полосы диаграммы критической разности)
  cd_pairs.csv            — попарные тесты Уилкоксона с поправкой Холма
"""
import logging
from pathlib import Path

import markdown
import pandas as pd

from apps.shared.config.utils import write_frame

from .core import TTestKind
from .exceptions import EmptyCliques

logger = logging.getLogger(__name__)

DASH = '—'


def _number(value, digits=2):
    return DASH if value is None or pd.isna(value) else f'{value:.{digits}f}'


def _check_cd(cd):
    if not cd.cliques:
        raise EmptyCliques()


def cd_frames(cd):
    _check_cd(cd)
    positions = {strategy: position for position, (strategy, _) in enumerate(cd.ordered, start=1)}
    ranks = pd.DataFrame(
        [(s, cd.rank_of(s), positions[s]) for s in cd.strategies],
        columns=['strategy', 'average_rank', 'position'],
    )
    cliques = pd.DataFrame(
        [
            (number, ';'.join(clique), min(cd.rank_of(s) for s in clique), max(cd.rank_of(s) for s in clique))
            for number, clique in enumerate(cd.cliques, start=1)
        ],
        columns=['clique', 'strategies', 'rank_low', 'rank_high'],
    )
    pairs = pd.DataFrame(
        [(p.first, p.second, p.statistic, p.p_value, p.p_adjusted, p.rejected) for p in cd.pairs],
        columns=['first', 'second', 'statistic', 'p_value', 'p_holm', 'rejected'],
    )
    return {'cd.csv': ranks, 'cd_cliques.csv': cliques, 'cd_pairs.csv': pairs}


def render_cd(cd, output):
    """Только данные диаграммы критической разности."""
    frames = cd_frames(cd)
    output = Path(output)
    return [write_frame(output / name, frame) for name, frame in frames.items()]


def table_frame(table):
    rows = []
    for dataset in table.datasets:
        comparison = table.comparisons[dataset]
        test = comparison.test
        rows.append({
            'dataset': dataset,
            **{s: float(table.mean_auac.loc[dataset, s]) for s in table.strategies},
            'winner': comparison.best,
            'second': comparison.second,
            't_statistic': test.statistic if test else None,
            'p_value': test.p_value if test else None,
        })
    return pd.DataFrame(rows, columns=['dataset', *table.strategies, 'winner', 'second', 't_statistic', 'p_value'])


def _cd_section(table, cd):
    """Строка средних рангов, Фридман, попарные сравнения и клики."""
    best_rank = min(cd.average_ranks)
    rank_cells = [
        f'**{cd.rank_of(s):.2f}**' if cd.rank_of(s) == best_rank else f'{cd.rank_of(s):.2f}'
        for s in table.strategies
    ]
    lines = ['| Средний ранг | ' + ' | '.join(rank_cells) + ' | | |']

    lines += ['', '## Тест Фридмана', '']
    if cd.friedman is not None:
        lines.append(f'χ² = {cd.friedman.statistic:.4f}, p = {cd.friedman.p_value:.4g} '
                     f'(стратегий {len(cd.strategies)}, датасетов {cd.n_datasets})')

    lines += [
        '', f'## Попарные сравнения: Уилкоксон ({cd.sides}), поправка Холма, α = {cd.alpha:g}', '',
        '| A | B | W | p | p (Холм) | различие |',
        '|---|---|---:|---:|---:|---|',
    ]
    for pair in cd.pairs:
        lines.append(f'| {pair.first} | {pair.second} | {pair.statistic:g} | {pair.p_value:.4g} | '
                     f'{pair.p_adjusted:.4g} | {"да" if pair.rejected else "нет"} |')

    lines += ['', '## Клики неразличимых стратегий', '']
    lines += [f'{number}. ' + ', '.join(clique) for number, clique in enumerate(cd.cliques, start=1)]
    return lines


def render_markdown(table, cd=None):
    """cd=None (меньше двух датасетов): только таблица и сокращение стоимости разметки."""
    test_name = TTestKind(table.t_test).label
    lines = [
        '# Сравнение стратегий активного обучения',
        '',
        f'Средний AUAC по повторам, жирным — лучшая стратегия в строке. '
        f't и p — {test_name.lower()} лучшей стратегии против второй.',
        '',
        '| Датасет | ' + ' | '.join(table.strategies) + ' | t | p |',
        '|---|' + '---:|' * (len(table.strategies) + 2),
    ]
    for dataset in table.datasets:
        comparison = table.comparisons[dataset]
        cells = []
        for strategy in table.strategies:
            value = _number(table.mean_auac.loc[dataset, strategy])
            cells.append(f'**{value}**' if strategy == comparison.best else value)
        test = comparison.test
        lines.append(
            f'| {dataset} | ' + ' | '.join(cells)
            + f' | {_number(test.statistic if test else None)} | {_number(test.p_value if test else None, 4)} |'
        )
    if cd is not None:
        lines += _cd_section(table, cd)

    if not table.cost_reduction.empty:
        thresholds = sorted(table.cost_reduction['threshold'].unique())
        lines += [
            '', '## Сокращение стоимости разметки', '',
            'Доля пула, которую можно не размечать, чтобы достичь заданной доли точности модели на всём пуле.',
            '',
            '| Датасет | Стратегия | ' + ' | '.join(f'{t:.0%}' for t in thresholds) + ' |',
            '|---|---|' + '---:|' * len(thresholds),
        ]
        lookup = {
            (row.dataset, row.strategy, row.threshold): row.reduction
            for row in table.cost_reduction.itertuples(index=False)
        }
        for dataset in table.datasets:
            for strategy in table.strategies:
                values = [lookup.get((dataset, strategy, t)) for t in thresholds]
                lines.append(f'| {dataset} | {strategy} | '
                             + ' | '.join(DASH if v is None or pd.isna(v) else f'{v:.1%}' for v in values) + ' |')
    return '\n'.join(lines) + '\n'


def render_report(table, cd, output):
    """
    Пишет все файлы отчёта. Пустой список клик — ошибка до записи чего-либо.
    cd=None (один датасет): без файлов и раздела диаграммы критической разности.
    """
    frames = cd_frames(cd) if cd is not None else {}
    output = Path(output)
    output.mkdir(parents=True, exist_ok=True)

    text = render_markdown(table, cd)
    written = [output / 'report.md', output / 'report.html']
    written[0].write_text(text, encoding='utf-8')
    body = markdown.markdown(text, extensions=['tables'])
    written[1].write_text(
        '<!DOCTYPE html>\n<html lang="ru">\n<head><meta charset="utf-8"><title>Сравнение стратегий</title></head>\n'
        f'<body>\n{body}\n</body>\n</html>\n',
        encoding='utf-8',
    )
    written.append(write_frame(output / 'table.csv', table_frame(table)))
    written.append(write_frame(output / 'mean_curves.csv', table.mean_curves))
    written.append(write_frame(output / 'cost_reduction.csv', table.cost_reduction))
    written += [write_frame(output / name, frame) for name, frame in frames.items()]
    logger.info('Отчёт: %d файлов в %s', len(written), output)
    return written
