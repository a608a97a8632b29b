"""
Тесты активного обучения: стратегии, оракул, протокол повторов, схема конфигурации, al_run.

Запуск:
    python manage.py test apps.lab.active --verbosity=2

Воспроизведение на полных датасетах UCI и профиль experiments/ci.json (минуты на датасет)
включаются переменной EVIDAL_BENCHMARK_TESTS=1 и требуют заранее выполненного `fetch`.
"""
import json
import math
import os
import tempfile
from io import StringIO
from pathlib import Path
from unittest import skipUnless
from unittest.mock import patch

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from sklearn.model_selection import train_test_split

from apps.lab.belief.core import Frame, categorical, make_mass
from apps.lab.classifiers.core import EknnModel
from apps.lab.datasets.core import RichDataset
from apps.lab.datasets.exceptions import DatasetNotFetched
from apps.lab.datasets.generators import generate_synthetic
from apps.lab.datasets.services import DatasetService
from apps.lab.stats.core import wilcoxon_holm_cd
from apps.lab.uncertainty.exceptions import InvalidLambda
from apps.shared.config.exceptions import DegenerateInput, SchemaError
from apps.shared.config.utils import derive_seed, rng_stream

from .core import ActiveLearningService, ALConfig, QueryStrategy, StrategyKind, run_active_learning
from .exceptions import AlreadyLabeled, BadConfig, EmptyCurve, EmptyPool, InvalidStrategy, NoRichLabel
from .experiments import ExperimentService, load_experiment_spec, spec_from_payload
from .models import ExperimentRun, SeriesSummary
from .tasks import run_repetition_task


AB = Frame(('a', 'b'))
ABC = Frame(('a', 'b', 'c'))
KLIR = QueryStrategy('klir')


def blobs(n=60, seed=1):
    return generate_synthetic('two_blob_ignorance', n=n, rng=seed)


def write_config(directory, payload):
    path = Path(directory) / 'cfg.json'
    path.write_text(json.dumps(payload), encoding='utf-8')
    return path


# ────────────────────────────────────────────────────────────────────────────
# Стратегии и конфигурация
# ────────────────────────────────────────────────────────────────────────────

class StrategyTest(SimpleTestCase):

    def test_labels(self):
        self.assertEqual(KLIR.label, 'klir(0.2)')
        self.assertEqual(QueryStrategy('klir', 0.35).label, 'klir(0.35)')
        self.assertEqual(QueryStrategy('random').label, 'random')

    def test_lambda_only_for_klir(self):
        with self.assertRaises(InvalidStrategy):
            QueryStrategy('entropy', 0.2)
        with self.assertRaises(InvalidLambda):
            QueryStrategy('klir', 1.5)
        with self.assertRaises(InvalidStrategy):
            QueryStrategy('committee')

    def test_config_ranges(self):
        for bad in ({'budget_fraction': 0.0}, {'budget_fraction': 1.2}, {'repetitions': 0},
                    {'initial_labeled': 0}, {'test_fraction': 1.0}, {'gamma_mode': -1.0},
                    {'oracle_mode': 'noisy'}):
            with self.subTest(bad=bad), self.assertRaises(BadConfig):
                ALConfig(strategy=KLIR, **bad)

    def test_config_dict_round_trip(self):
        config = ALConfig(strategy=QueryStrategy('klir', 0.4), repetitions=3, gamma_mode=0.5, oracle_mode='rich')
        self.assertEqual(ALConfig.from_dict(json.loads(json.dumps(config.to_dict()))), config)


# ────────────────────────────────────────────────────────────────────────────
# Запрос, оракул, AUAC
# ────────────────────────────────────────────────────────────────────────────

class SelectQueryTest(SimpleTestCase):

    def test_argmax_and_ties(self):
        rng = np.random.default_rng(0)
        pool = np.zeros((3, 2))
        with patch.object(ActiveLearningService, 'pool_scores', return_value=np.array([0.1, 0.9, 0.4])):
            self.assertEqual(ActiveLearningService.select_query(KLIR, None, pool, rng), 1)
        with patch.object(ActiveLearningService, 'pool_scores', return_value=np.full(3, 0.7)):
            self.assertEqual(ActiveLearningService.select_query(KLIR, None, pool, rng), 0)

    def test_random_is_reproducible(self):
        pool = np.zeros((50, 2))
        random = QueryStrategy('random')
        first_rng, second_rng = np.random.default_rng(5), np.random.default_rng(5)
        first = [ActiveLearningService.select_query(random, None, pool, first_rng) for _ in range(10)]
        second = [ActiveLearningService.select_query(random, None, pool, second_rng) for _ in range(10)]
        self.assertEqual(first, second)

    def test_batch_breaks_near_ties_like_single_query(self):
        rng = np.random.default_rng(0)
        scores = np.array([0.5, 0.9, 0.9 + 1e-13, 0.7, 0.9 - 1e-13])
        with patch.object(ActiveLearningService, 'pool_scores', return_value=scores):
            self.assertEqual(ActiveLearningService.select_query(KLIR, None, np.zeros((5, 2)), rng), 1)
            batch = ActiveLearningService.select_batch(KLIR, None, np.zeros((5, 2)), rng, 4)
        self.assertEqual(batch, [1, 2, 4, 3])

    def test_empty_pool(self):
        with self.assertRaises(EmptyPool):
            ActiveLearningService.select_query(KLIR, None, np.zeros((0, 2)), np.random.default_rng(0))

    def test_duplicates_are_queried_in_pool_order(self):
        model = EknnModel.fit([[0.0, 0.0], [1.0, 1.0]], [categorical(AB, {0}), categorical(AB, {1})], K=2)
        pool_ids = list(range(10, 15))
        features = np.tile([0.3, 0.6], (5, 1))
        queried = []
        rng = np.random.default_rng(0)
        while pool_ids:
            position = ActiveLearningService.select_query(KLIR, model, features[:len(pool_ids)], rng)
            queried.append(pool_ids.pop(position))
        self.assertEqual(queried, [10, 11, 12, 13, 14])
        batch = ActiveLearningService.select_batch(KLIR, model, features, rng, 3)
        self.assertEqual(batch, [0, 1, 2])


class OracleTest(SimpleTestCase):

    def setUp(self):
        self.rich = RichDataset(
            name='rich', features=np.zeros((3, 1)), true_labels=[2, 0, 1], frame=ABC,
            rich_labels=[categorical(ABC, {2}), make_mass(ABC, [({0}, 0.7), ({0, 1, 2}, 0.3)]),
                         categorical(ABC, {1})],
            rich_source=True,
        )
        self.crisp = RichDataset(name='crisp', features=np.zeros((2, 1)), true_labels=[0, 1], frame=AB,
                                 rich_labels=[categorical(AB, {0}), categorical(AB, {1})])

    def test_crisp(self):
        self.assertEqual(ActiveLearningService.oracle_reveal(self.rich, 0, 'crisp'), categorical(ABC, {2}))

    def test_rich_replays_stored_label(self):
        self.assertEqual(ActiveLearningService.oracle_reveal(self.rich, 1, 'rich'), self.rich.rich_labels[1])

    def test_rich_on_crisp_dataset(self):
        with self.assertRaises(NoRichLabel):
            ActiveLearningService.oracle_reveal(self.crisp, 0, 'rich')

    def test_already_labeled(self):
        with self.assertRaises(AlreadyLabeled):
            ActiveLearningService.oracle_reveal(self.crisp, 1, 'crisp', labeled=[1])


class AuacTest(SimpleTestCase):

    def test_values(self):
        self.assertAlmostEqual(ActiveLearningService.auac([0.8] * 10), 80.0, places=10)
        self.assertAlmostEqual(ActiveLearningService.auac([0.9]), 90.0, places=10)
        ramp = np.linspace(0.0, 1.0, 201)
        self.assertAlmostEqual(ActiveLearningService.auac(ramp), 50.0, delta=0.5 * 100 / 200)

    def test_empty(self):
        with self.assertRaises(EmptyCurve):
            ActiveLearningService.auac([])

    def test_cost_reduction(self):
        curve, counts = [0.5, 0.8, 0.9, 0.95], [2, 3, 4, 5]
        self.assertAlmostEqual(
            ActiveLearningService.labeling_cost_reduction(curve, 0.95, 0.9, 10, counts), 0.6, places=12)
        self.assertIsNone(ActiveLearningService.labeling_cost_reduction(curve, 1.0, 0.99, 10, counts))


# ────────────────────────────────────────────────────────────────────────────
# Протокол повторов
# ────────────────────────────────────────────────────────────────────────────

class RunActiveLearningTest(SimpleTestCase):

    def test_curve_shape_and_trace(self):
        dataset = blobs()
        config = ALConfig(strategy=KLIR, repetitions=2, seed=3)
        run = run_active_learning(dataset, config)
        self.assertEqual(run.failed, [])
        for rep in run.repetitions:
            self.assertEqual(rep.pool_size, 42)
            self.assertEqual(len(rep.curve), math.ceil(0.6 * 42) - 2 + 1)
            self.assertEqual(rep.labeled_counts, list(range(2, 27)))
            self.assertEqual(len(set(rep.queries)), len(rep.queries))
            self.assertTrue(all(0.0 <= a <= 1.0 for a in rep.curve))
            self.assertAlmostEqual(rep.auac, 100 * np.mean(rep.curve), places=10)

            rng = rng_stream(3, rep.repetition)
            _, test = train_test_split(np.arange(dataset.N), test_size=0.3, stratify=dataset.true_labels,
                                       random_state=derive_seed(rng))
            self.assertFalse(set(rep.queries) & set(test.tolist()))

    def test_budget_equal_to_initial_coverage(self):
        run = run_active_learning(blobs(), ALConfig(strategy=KLIR, repetitions=1, budget_fraction=0.04))
        self.assertEqual(len(run.repetitions[0].curve), 1)
        self.assertEqual(run.repetitions[0].queries, [])

    def test_same_seed_same_result(self):
        config = ALConfig(strategy=QueryStrategy('random'), repetitions=3, seed=9)
        first = [r.to_dict(with_timing=False) for r in run_active_learning(blobs(), config).repetitions]
        second = [r.to_dict(with_timing=False) for r in run_active_learning(blobs(), config).repetitions]
        self.assertEqual(first, second)

    def test_parallel_matches_serial(self):
        config = ALConfig(strategy=KLIR, repetitions=4, seed=2, budget_fraction=0.3)
        serial = run_active_learning(blobs(), config, parallelism=1)
        parallel = run_active_learning(blobs(), config, parallelism=2)
        self.assertEqual([r.to_dict(with_timing=False) for r in serial.repetitions],
                         [r.to_dict(with_timing=False) for r in parallel.repetitions])

    def test_worker_task_matches_local(self):
        config = ALConfig(strategy=KLIR, repetitions=2, seed=4, budget_fraction=0.15)
        payload = run_repetition_task('synthetic:line', config.to_dict(), 1)
        payload.pop('wall_clock')
        local = ActiveLearningService.run_repetition(DatasetService.load_dataset('synthetic:line'), config, 1)
        self.assertEqual(payload, local.to_dict(with_timing=False))

    def test_every_strategy_runs(self):
        dataset = blobs()
        for strategy in (QueryStrategy('random'), QueryStrategy('entropy'), QueryStrategy('least_confidence'),
                         QueryStrategy('evid_epistemic'), QueryStrategy('rl_epistemic'), QueryStrategy('klir', 0.5)):
            with self.subTest(strategy=strategy.label):
                run = run_active_learning(dataset, ALConfig(strategy=strategy, repetitions=1, budget_fraction=0.3))
                self.assertEqual(run.failed, [])
        betp_run = run_active_learning(dataset, ALConfig(strategy=QueryStrategy('entropy'), repetitions=1,
                                                         budget_fraction=0.3, probability_source='betp'))
        self.assertEqual(betp_run.failed, [])

    def test_rich_oracle(self):
        run = run_active_learning(blobs(), ALConfig(strategy=KLIR, repetitions=1, oracle_mode='rich',
                                                    budget_fraction=0.3))
        self.assertEqual(run.failed, [])

    def test_batch_size(self):
        run = run_active_learning(blobs(), ALConfig(strategy=KLIR, repetitions=1, batch_size=5))
        rep = run.repetitions[0]
        self.assertEqual(rep.labeled_counts, [2, 7, 12, 17, 22, 26])
        self.assertEqual(len(rep.queries), 24)

    def test_failed_repetition_is_recorded(self):
        rng = np.random.default_rng(0)
        lopsided = RichDataset(name='lopsided', features=rng.normal(size=(21, 2)), true_labels=[0] * 20 + [1],
                               frame=AB, rich_labels=[categorical(AB, {0})] * 20 + [categorical(AB, {1})])
        with self.assertLogs('apps.lab.active.core', level='ERROR') as logs:
            run = run_active_learning(lopsided, ALConfig(strategy=KLIR, repetitions=2))
        self.assertEqual(len(run.failed), 2)
        self.assertTrue(all(record.exc_info for record in logs.records if record.levelname == 'ERROR'))
        self.assertIn('Traceback', logs.output[0])
        self.assertTrue(run.failed[0].error.startswith('ValueError'))
        self.assertIsNone(run.summary()['mean_auac'])

    def test_validation_before_repetitions(self):
        three = generate_synthetic('three_class_imprecise', n=60, rng=0)
        with self.assertRaises(DegenerateInput):
            run_active_learning(three, ALConfig(strategy=QueryStrategy('rl_epistemic'), repetitions=1))
        crisp = generate_synthetic('line', n=60, rng=0)
        with self.assertRaises(NoRichLabel):
            run_active_learning(crisp, ALConfig(strategy=KLIR, repetitions=1, oracle_mode='rich'))


# ────────────────────────────────────────────────────────────────────────────
# Схема конфигурации
# ────────────────────────────────────────────────────────────────────────────

class ExperimentSpecTest(SimpleTestCase):

    def test_minimal_spec_gets_defaults(self):
        spec = spec_from_payload({'datasets': ['iris'], 'strategies': ['klir']})
        self.assertEqual(spec.strategies, [QueryStrategy('klir', 0.2)])
        config = spec.al_config(spec.strategies[0])
        self.assertEqual((config.K, config.budget_fraction, config.repetitions), (7, 0.6, 100))
        self.assertEqual(config.gamma_mode, 'auto')

    def test_lambda_out_of_range(self):
        with self.assertRaises(SchemaError) as ctx:
            spec_from_payload({'datasets': ['iris'], 'strategies': [{'kind': 'klir', 'klir_lambda': 1.5}]})
        self.assertEqual(ctx.exception.path, '.strategies[0].klir_lambda')

    def test_error_paths(self):
        cases = [
            ({'datasets': [], 'strategies': ['random']}, '.datasets'),
            ({'datasets': ['iris'], 'strategies': ['random', {'kind': 'entropy', 'klir_lambda': 0.1}]},
             '.strategies[1].klir_lambda'),
            ({'datasets': ['iris'], 'strategies': ['random'], 'budget': 0.5}, '.budget'),
            ({'datasets': ['iris'], 'strategies': ['random'], 'config': {'gamma_mode': '-1'}}, '.config.gamma_mode'),
            ({'datasets': ['iris'], 'strategies': ['qbc']}, '.strategies[0].kind'),
            ({'datasets': ['iris'], 'strategies': ['klir', 'klir(0.2)']}, '.strategies'),
        ]
        for payload, path in cases:
            with self.subTest(path=path), self.assertRaises(SchemaError) as ctx:
                spec_from_payload(payload)
            self.assertEqual(ctx.exception.path, path)

    def test_shorthand_and_lambda_sweep(self):
        spec = spec_from_payload({'datasets': ['iris'],
                                  'strategies': ['klir(0.2)', 'klir(0.3)', {'kind': 'klir', 'klir_lambda': 0.5}]})
        self.assertEqual([s.label for s in spec.strategies], ['klir(0.2)', 'klir(0.3)', 'klir(0.5)'])

    def test_full_table_is_planned(self):
        names = ['banknote', 'qsar', 'blood', 'breast_cancer', 'ionosphere', 'heart', 'liver', 'sonar',
                 'parkinsons', 'seeds', 'iris', 'wine', 'glass', 'ecoli', 'dog2']
        spec = spec_from_payload({'datasets': names, 'strategies': ['random', 'least_confidence', 'klir']})
        self.assertEqual(len(spec.planned_series), 45)

    def test_broken_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cfg.json'
            path.write_text('{"datasets": [', encoding='utf-8')
            with self.assertRaises(SchemaError) as ctx:
                load_experiment_spec(path)
        self.assertEqual(ctx.exception.path, '.')

    def test_overrides(self):
        spec = spec_from_payload({'datasets': ['iris', 'wine'], 'strategies': ['random'], 'seed': 1})
        spec = ExperimentService.apply_overrides(spec, seed=42, repetitions=20, datasets=['wine'])
        self.assertEqual((spec.seed, spec.datasets, spec.config['repetitions']), (42, ['wine'], 20))
        with self.assertRaises(SchemaError):
            ExperimentService.apply_overrides(spec, datasets=['sonar'])


# ────────────────────────────────────────────────────────────────────────────
# Команда al_run и учёт запусков
# ────────────────────────────────────────────────────────────────────────────

class AlRunCommandTest(TestCase):

    CONFIG = {
        'datasets': ['synthetic:two_blob_ignorance'],
        'strategies': ['random', 'klir'],
        'config': {'repetitions': 8, 'budget_fraction': 0.2},
        'seed': 42,
    }

    def _run(self, tmp, name, **options):
        output = Path(tmp) / name
        call_command('al_run', config=str(write_config(tmp, self.CONFIG)), output=str(output), stdout=StringIO(),
                     **options)
        return output

    def test_byte_identical_results(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = self._run(tmp, 'a', parallelism=1)
            second = self._run(tmp, 'b', parallelism=8)
            files = sorted(p.relative_to(first) for p in first.rglob('*') if p.is_file())
            self.assertIn(Path('timings.csv'), files)
            for relative in files:
                if relative.name == 'timings.csv':
                    continue
                with self.subTest(file=str(relative)):
                    self.assertEqual((first / relative).read_bytes(), (second / relative).read_bytes())

            run = json.loads((first / 'run.json').read_text())
            self.assertEqual(len(run['series']), 2)
            self.assertEqual(run['resolved_config']['klir(0.2)']['seed'], 42)
            self.assertIn('version', run)
            series = json.loads((first / 'series' / 'synthetic_two_blob_ignorance__klir_0.2.json').read_text())
            self.assertEqual(len(series['repetitions']), 8)
            self.assertNotIn('wall_clock', series['repetitions'][0])

        record = ExperimentRun.objects.order_by('created_at').first()
        self.assertEqual(record.status, ExperimentRun.Status.DONE)
        self.assertEqual(SeriesSummary.objects.filter(run=record).count(), 2)

    def test_schema_error_exits_with_2(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, {'datasets': ['iris'], 'strategies': [{'kind': 'klir', 'klir_lambda': 1.5}]})
            with self.assertRaises(CommandError) as ctx:
                call_command('al_run', config=str(path), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('.strategies[0].klir_lambda', str(ctx.exception))


class MigrationTest(TestCase):

    def test_models_match_migrations(self):
        call_command('makemigrations', 'active', check=True, dry_run=True, stdout=StringIO())

    def test_tables_exist(self):
        run = ExperimentRun.objects.create(spec={}, version='0', output_dir='results')
        SeriesSummary.objects.create(run=run, dataset='iris', strategy='random', repetitions=1)
        self.assertEqual(run.series.count(), 1)


# ────────────────────────────────────────────────────────────────────────────
# Полный бенчмарк UCI (долго, только по запросу)
# ────────────────────────────────────────────────────────────────────────────

@skipUnless(os.getenv('EVIDAL_BENCHMARK_TESTS') == '1', 'EVIDAL_BENCHMARK_TESTS=1 не задана')
class BenchmarkScaleTest(SimpleTestCase):

    def _mean_auac(self, dataset, strategy):
        config = ALConfig(strategy=strategy, repetitions=100, seed=0)
        run = run_active_learning(dataset, config, parallelism=ActiveLearningService.default_parallelism(100))
        return run.summary()['mean_auac']

    def _load(self, name):
        try:
            return DatasetService.load_dataset(name)
        except DatasetNotFetched:
            self.skipTest(f'{name} не скачан')

    def test_ionosphere_ordering(self):
        dataset = self._load('ionosphere')
        self.assertEqual((dataset.N, dataset.d, dataset.M), (351, 34, 2))
        klir = self._mean_auac(dataset, KLIR)
        uncertainty = self._mean_auac(dataset, QueryStrategy(StrategyKind.LEAST_CONFIDENCE))
        random = self._mean_auac(dataset, QueryStrategy(StrategyKind.RANDOM))
        self.assertAlmostEqual(random, 75.77, delta=3.0)
        self.assertGreater(klir, uncertainty)
        self.assertGreater(uncertainty, random)
        self.assertGreaterEqual(klir - random, 3.0)

    def test_parkinsons_and_breast_cancer(self):
        for name in ('parkinsons', 'breast_cancer'):
            with self.subTest(dataset=name):
                dataset = self._load(name)
                klir = self._mean_auac(dataset, KLIR)
                uncertainty = self._mean_auac(dataset, QueryStrategy(StrategyKind.LEAST_CONFIDENCE))
                self.assertGreaterEqual(klir, uncertainty - 0.5)

    def test_ci_profile_ranks(self):
        spec = load_experiment_spec(Path(settings.BASE_DIR) / 'experiments' / 'ci.json')
        self.assertEqual((len(spec.datasets), spec.config['repetitions']), (5, 20))
        parallelism = ActiveLearningService.default_parallelism(20)
        scores = pd.DataFrame(
            [
                {
                    strategy.label: run_active_learning(
                        self._load(name), spec.al_config(strategy), parallelism=parallelism,
                    ).summary()['mean_auac']
                    for strategy in spec.strategies
                }
                for name in spec.datasets
            ],
            index=spec.datasets,
        )
        cd = wilcoxon_holm_cd(scores)
        self.assertLessEqual(cd.rank_of('klir(0.2)'), cd.rank_of('least_confidence'))
