"""
Тесты статистического сравнения: t-тесты, Фридман, Уилкоксон–Холм, клики, отчёт и команды.

Запуск:
    python manage.py test apps.lab.stats --verbosity=2
"""
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.lab.active.experiments import series_slug
from apps.shared.config.exceptions import DegenerateInput, SchemaError
from apps.shared.config.utils import write_json

from .core import (
    CDResult, ComparisonTable, average_ranks, friedman_test, holm_adjust, independent_t_test,
    paired_t_test, rank_rows, wilcoxon_holm_cd, wilcoxon_signed_rank,
)
from .exceptions import EmptyCliques, ZeroVariance
from .report import render_report

STRATEGIES = ['klir(0.2)', 'least_confidence', 'random']


def make_series(dataset, strategy, auacs, failed=()):
    repetitions = []
    for r, auac in enumerate(auacs):
        error = 'ValueError: boom' if r in failed else None
        repetitions.append({
            'repetition': r, 'curve': [] if error else [auac / 100.0], 'labeled_counts': [] if error else [2],
            'queries': [], 'auac': None if error else auac, 'full_accuracy': None if error else 0.9,
            'pool_size': 10, 'test_size': 5, 'error': error,
        })
    ok = [a for r, a in enumerate(auacs) if r not in failed]
    return {
        'dataset': dataset,
        'strategy': strategy,
        'pool_size': 10,
        'mean_curve': [0.5, 0.7],
        'labeled_counts': [2, 3],
        'summary': {
            'repetitions': len(auacs), 'failed': len(failed),
            'mean_auac': float(np.mean(ok)) if ok else None, 'std_auac': None,
            'mean_full_accuracy': 0.9, 'cost_reduction': {'0.98': 0.5, '0.99': None},
        },
        'repetitions': repetitions,
    }


def benchmark_shaped_series(n_datasets=15, seed=0):
    """klir лучшая в 10 датасетах из 15, вторая в остальных; random всегда последняя."""
    rng = np.random.default_rng(seed)
    series = []
    for i in range(n_datasets):
        dataset = f'd{i:02d}'
        base = 70.0 + i
        klir_first = i < 10
        means = {
            'klir(0.2)': base + (3.0 if klir_first else 1.0),
            'least_confidence': base + (1.0 if klir_first else 3.0),
            'random': base - 2.0,
        }
        for strategy in STRATEGIES:
            series.append(make_series(dataset, strategy, means[strategy] + rng.normal(0.0, 0.5, size=5)))
    return series


def write_results(directory, series):
    for item in series:
        write_json(Path(directory) / 'series' / f'{series_slug(item["dataset"], item["strategy"])}.json', item)


# ────────────────────────────────────────────────────────────────────────────
# t-тесты
# ────────────────────────────────────────────────────────────────────────────

class TTestTest(SimpleTestCase):

    def test_known_differences(self):
        t, p = paired_t_test([1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0])
        self.assertAlmostEqual(t, math.sqrt(15.0), places=10)
        self.assertAlmostEqual(p, 0.03046, delta=1e-4)

    def test_identical_samples(self):
        self.assertEqual(tuple(paired_t_test([80.0, 81.0, 79.5], [80.0, 81.0, 79.5])), (0.0, 1.0))

    def test_antisymmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, b = rng.normal(size=12), rng.normal(size=12)
            forward, backward = paired_t_test(a, b), paired_t_test(b, a)
            self.assertEqual(forward.statistic, -backward.statistic)
            self.assertAlmostEqual(forward.p_value, backward.p_value, places=14)
            self.assertTrue(0.0 <= forward.p_value <= 1.0)

    def test_invalid_input(self):
        with self.assertRaises(DegenerateInput):
            paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0])
        with self.assertRaises(DegenerateInput):
            paired_t_test([1.0], [2.0])
        with self.assertRaises(ZeroVariance):
            paired_t_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])

    def test_independent(self):
        t, p = independent_t_test([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        self.assertAlmostEqual(t, -3.0 / math.sqrt(2.0 / 3.0), places=10)
        self.assertAlmostEqual(p, 0.0213, delta=1e-3)
        self.assertEqual(tuple(independent_t_test([5.0, 5.0], [5.0, 5.0, 5.0])), (0.0, 1.0))


# ────────────────────────────────────────────────────────────────────────────
# Ранги, Фридман, Уилкоксон, Холм
# ────────────────────────────────────────────────────────────────────────────

class RankTest(SimpleTestCase):

    def test_ranks_sum(self):
        rng = np.random.default_rng(2)
        scores = np.round(rng.normal(size=(15, 4)), 1)
        ranks = rank_rows(scores)
        self.assertAlmostEqual(ranks.sum(), 15 * 4 * 5 / 2, places=9)
        self.assertTrue(np.all((ranks >= 1) & (ranks <= 4)))

    def test_best_gets_rank_one(self):
        np.testing.assert_array_equal(average_ranks([[3.0, 2.0, 1.0], [9.0, 8.0, 8.0]]), [1.0, 2.25, 2.75])


class FriedmanTest(SimpleTestCase):

    def test_unanimous(self):
        scores = np.tile([3.0, 2.0, 1.0], (15, 1)) + np.arange(15)[:, None]
        statistic, p = friedman_test(scores)
        self.assertEqual(statistic, 30.0)
        self.assertAlmostEqual(p, math.exp(-15.0), places=12)

    def test_all_tied(self):
        self.assertEqual(tuple(friedman_test(np.ones((6, 3)))), (0.0, 1.0))

    def test_minimal(self):
        statistic, p = friedman_test([[1.0, 2.0], [3.0, 1.0]])
        self.assertTrue(math.isfinite(statistic))
        self.assertTrue(0.0 <= p <= 1.0)

    def test_rank_based(self):
        rng = np.random.default_rng(3)
        scores = rng.normal(size=(10, 4))
        transformed = np.exp(scores) * np.arange(1, 11)[:, None] + 5.0
        self.assertEqual(friedman_test(scores), friedman_test(transformed))

    def test_degenerate(self):
        with self.assertRaises(DegenerateInput):
            friedman_test([[1.0, 2.0, 3.0]])
        with self.assertRaises(DegenerateInput):
            friedman_test([[1.0, float('nan')], [1.0, 2.0]])


class WilcoxonHolmTest(SimpleTestCase):

    def test_domination_is_exact(self):
        b = np.linspace(60.0, 90.0, 15)
        a = b + 1.0 + 0.1 * np.arange(15)
        statistic, p = wilcoxon_signed_rank(a, b)
        self.assertEqual(statistic, 0.0)
        self.assertAlmostEqual(p, 2.0 / 2 ** 15, places=12)

    def test_one_sided(self):
        b = np.linspace(60.0, 90.0, 15)
        a = b + 1.0 + 0.1 * np.arange(15)
        self.assertAlmostEqual(wilcoxon_signed_rank(a, b, 'greater').p_value, 1.0 / 2 ** 15, places=12)
        self.assertAlmostEqual(wilcoxon_signed_rank(a, b, 'less').p_value, 1.0, places=12)
        with self.assertRaises(DegenerateInput):
            wilcoxon_signed_rank(a, b, 'sideways')

    def test_no_differences(self):
        self.assertEqual(tuple(wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])), (0.0, 1.0))

    def test_holm_example(self):
        np.testing.assert_allclose(holm_adjust([0.01, 0.04, 0.03]), [0.03, 0.06, 0.06], rtol=1e-12)

    def test_holm_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            raw = rng.uniform(size=rng.integers(1, 12))
            adjusted = holm_adjust(raw)
            order = np.argsort(raw, kind='stable')
            self.assertTrue(np.all(np.diff(adjusted[order]) >= 0.0))
            self.assertTrue(np.all(adjusted >= raw - 1e-15))
            self.assertTrue(np.all(adjusted <= 1.0))


class CriticalDifferenceTest(SimpleTestCase):

    def test_domination_splits_every_pair(self):
        base = np.linspace(60.0, 90.0, 15)[:, None]
        scores = base + np.array([2.0, 1.0, 0.0]) + 0.01 * np.arange(15)[:, None] * np.array([2.0, 1.0, 0.0])
        cd = wilcoxon_holm_cd(scores, strategies=['A', 'B', 'C'])
        self.assertTrue(cd.pair('A', 'B').rejected)
        self.assertEqual(cd.average_ranks, (1.0, 2.0, 3.0))
        self.assertEqual(cd.cliques, (('A',), ('B',), ('C',)))

    def test_one_sided_halves_p_values(self):
        base = np.linspace(60.0, 90.0, 15)[:, None]
        scores = base + np.array([0.0, 2.0, 1.0]) + 0.01 * np.arange(15)[:, None] * np.array([0.0, 2.0, 1.0])
        two = wilcoxon_holm_cd(scores, strategies=['C', 'A', 'B'])
        one = wilcoxon_holm_cd(scores, strategies=['C', 'A', 'B'], sides='one-sided')
        self.assertEqual(one.sides, 'one-sided')
        for first, second in (('A', 'B'), ('A', 'C'), ('B', 'C')):
            self.assertAlmostEqual(one.pair(first, second).p_adjusted,
                                   two.pair(first, second).p_adjusted / 2.0, places=12)
        with self.assertRaises(DegenerateInput):
            wilcoxon_holm_cd(scores, sides='both')

    def test_identical_strategies(self):
        scores = np.tile(np.linspace(60.0, 90.0, 15)[:, None], (1, 3))
        cd = wilcoxon_holm_cd(scores, strategies=['x', 'y', 'z'])
        self.assertEqual(cd.cliques, (('x', 'y', 'z'),))
        self.assertEqual(cd.average_ranks, (2.0, 2.0, 2.0))

    def test_leading_strategy_ranks_and_clique_consistency(self):
        table = ComparisonTable.from_series(benchmark_shaped_series(), strategies=STRATEGIES)
        cd = wilcoxon_holm_cd(table.mean_auac)
        self.assertAlmostEqual(cd.rank_of('klir(0.2)'), 4.0 / 3.0, places=12)
        self.assertEqual(cd.ordered[0][0], 'klir(0.2)')
        self.assertLess(cd.friedman.p_value, 0.05)
        for clique in cd.cliques:
            for first, second in [(a, b) for i, a in enumerate(clique) for b in clique[i + 1:]]:
                self.assertGreaterEqual(cd.pair(first, second).p_adjusted, cd.alpha)


# ────────────────────────────────────────────────────────────────────────────
# Таблица сравнения и отчёт
# ────────────────────────────────────────────────────────────────────────────

class ComparisonTableTest(SimpleTestCase):

    def test_best_vs_second(self):
        series = [make_series('iris', 'klir(0.2)', [81.0, 82.0, 83.0, 84.0]),
                  make_series('iris', 'random', [80.0, 80.0, 80.0, 80.0])]
        table = ComparisonTable.from_series(series)
        self.assertEqual(table.winners, {'iris': 'klir(0.2)'})
        comparison = table.comparisons['iris']
        self.assertEqual(comparison.second, 'random')
        self.assertAlmostEqual(comparison.test.statistic, math.sqrt(15.0), places=10)

    def test_tie_goes_to_first_strategy(self):
        series = [make_series('iris', 'a', [80.0, 81.0]), make_series('iris', 'b', [81.0, 80.0])]
        self.assertEqual(ComparisonTable.from_series(series).winners['iris'], 'a')

    def test_failed_repetitions_are_left_out(self):
        series = [make_series('iris', 'a', [81.0, 82.0, 0.0], failed=[2]), make_series('iris', 'b', [80.0, 80.5, 80.0])]
        table = ComparisonTable.from_series(series)
        self.assertEqual(table.samples[('iris', 'a')], {0: 81.0, 1: 82.0})

    def test_incomplete_rows_are_dropped(self):
        series = [make_series('iris', 'a', [80.0, 81.0]), make_series('iris', 'b', [79.0, 80.0]),
                  make_series('wine', 'a', [90.0, 91.0])]
        self.assertEqual(ComparisonTable.from_series(series).datasets, ['iris'])

    def test_schema_errors(self):
        series = [make_series('iris', 'a', [80.0, 81.0]), make_series('iris', 'b', [79.0, 80.0])]
        with self.assertRaises(SchemaError) as ctx:
            ComparisonTable.from_series(series + [series[0]])
        self.assertEqual(ctx.exception.path, '.results')
        with self.assertRaises(SchemaError) as ctx:
            ComparisonTable.from_series(series, strategies=['a', 'klir(0.2)'])
        self.assertEqual(ctx.exception.path, '.strategies')
        with self.assertRaises(DegenerateInput):
            ComparisonTable.from_series(series, strategies=['a'])


class RenderReportTest(SimpleTestCase):

    def test_winner_is_bold(self):
        series = [make_series('iris', 'a', [81.0, 82.0, 83.0]), make_series('iris', 'b', [80.0, 80.5, 80.2]),
                  make_series('wine', 'a', [90.0, 91.0, 92.0]), make_series('wine', 'b', [93.0, 94.0, 95.0])]
        table = ComparisonTable.from_series(series)
        cd = wilcoxon_holm_cd(table.mean_auac)
        with tempfile.TemporaryDirectory() as tmp:
            render_report(table, cd, tmp)
            text = (Path(tmp) / 'report.md').read_text(encoding='utf-8')
            self.assertIn('| iris | **82.00** | 80.23 |', text)
            self.assertIn('| wine | 91.00 | **94.00** |', text)
            self.assertIn('<table>', (Path(tmp) / 'report.html').read_text(encoding='utf-8'))

    def test_fifteen_by_three_shape(self):
        table = ComparisonTable.from_series(benchmark_shaped_series(), strategies=STRATEGIES)
        cd = wilcoxon_holm_cd(table.mean_auac)
        with tempfile.TemporaryDirectory() as tmp:
            written = render_report(table, cd, tmp)
            names = {path.name for path in written}
            self.assertEqual(names, {'report.md', 'report.html', 'table.csv', 'mean_curves.csv',
                                     'cost_reduction.csv', 'cd.csv', 'cd_cliques.csv', 'cd_pairs.csv'})
            table_lines = (Path(tmp) / 'table.csv').read_text().splitlines()
            cd_lines = (Path(tmp) / 'cd.csv').read_text().splitlines()
            self.assertEqual(len(table_lines), 1 + 15)
            self.assertEqual(len(cd_lines), 1 + 3)
            self.assertEqual(table_lines[0], 'dataset,klir(0.2),least_confidence,random,winner,second,t_statistic,p_value')

    def test_empty_cliques_write_nothing(self):
        table = ComparisonTable.from_series(benchmark_shaped_series(n_datasets=3), strategies=STRATEGIES)
        cd = CDResult(strategies=tuple(STRATEGIES), average_ranks=(1.0, 2.0, 3.0), pairs=(), cliques=())
        with tempfile.TemporaryDirectory() as tmp:
            output = Path(tmp) / 'report'
            with self.assertRaises(EmptyCliques):
                render_report(table, cd, output)
            self.assertFalse(output.exists())


class ReportCommandTest(SimpleTestCase):

    def test_report_and_cd(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_results(tmp, benchmark_shaped_series())
            out = StringIO()
            call_command('report', results=[tmp], output=str(Path(tmp) / 'rep'), t_test='independent', stdout=out)
            self.assertIn('klir(0.2): средний ранг 1.33', out.getvalue())
            self.assertTrue((Path(tmp) / 'rep' / 'report.md').exists())

            call_command('cd', results=[tmp], stdout=StringIO())
            ranks = (Path(tmp) / 'report' / 'cd.csv').read_text().splitlines()
            self.assertEqual(ranks[0], 'strategy,average_rank,position')
            self.assertFalse((Path(tmp) / 'report' / 'report.md').exists())

    def test_single_dataset_two_strategies(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_results(tmp, [make_series('iris', 'a', [81.0, 82.0, 83.0]),
                                make_series('iris', 'b', [80.0, 80.5, 80.2])])
            out = StringIO()
            call_command('report', results=[tmp], stdout=out)
            report = Path(tmp) / 'report'
            text = (report / 'report.md').read_text(encoding='utf-8')
            self.assertIn('| iris | **82.00** | 80.23 |', text)
            self.assertNotIn('Фридмана', text)
            self.assertTrue((report / 'table.csv').exists())
            self.assertTrue((report / 'cost_reduction.csv').exists())
            self.assertFalse((report / 'cd.csv').exists())
            self.assertIn('Один датасет', out.getvalue())

            with self.assertRaises(CommandError) as ctx:
                call_command('cd', results=[tmp], stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_series_exit_2(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                call_command('report', results=[tmp], stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_strategy_subset(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_results(tmp, benchmark_shaped_series(n_datasets=4))
            call_command('cd', results=[tmp], strategies=['random', 'klir(0.2)'], stdout=StringIO())
            ranks = (Path(tmp) / 'report' / 'cd.csv').read_text().splitlines()
        self.assertEqual([line.split(',')[0] for line in ranks[1:]], ['random', 'klir(0.2)'])
