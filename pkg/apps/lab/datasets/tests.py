"""
Тесты датасетов: CSV и богатые метки, генераторы, реестр и fetch, карты неопределённости.

Запуск:
    python manage.py test apps.lab.datasets --verbosity=2

Сеть не нужна: requests.get подменяется через unittest.mock.
"""
import json
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest.mock import MagicMock, patch

import numpy as np
import pandas as pd
import requests
from django.core.management import call_command
from django.test import SimpleTestCase, override_settings
from sklearn.linear_model import Perceptron

from apps.lab.belief.core import Frame, categorical, make_mass
from apps.lab.belief.exceptions import SumNotOne
from apps.lab.classifiers.core import EknnModel, PknnModel
from apps.lab.uncertainty.exceptions import UnknownMeasure
from apps.shared.config.exceptions import DegenerateInput

from .core import CsvSchema, describe_dataset, load_csv, parse_rich_label, save_csv, serialize_rich_label
from .exceptions import ChecksumMismatch, DatasetNotFetched, ParseError, UnknownClass, UnknownDataset
from .generators import SEPARATION_MARGIN, SyntheticKind, generate_synthetic
from .landscape import Bounds, LandscapeRaster, landscape, write_raster_csv, write_raster_pgm
from .services import DatasetService


FIXTURES = Path(__file__).resolve().parent / 'fixtures'
AB = Frame(('a', 'b'))
ABC = Frame(('a', 'b', 'c'))


def crisp_labels(frame, classes):
    return [categorical(frame, {int(c)}) for c in classes]


# ────────────────────────────────────────────────────────────────────────────
# CSV и грамматика богатых меток
# ────────────────────────────────────────────────────────────────────────────

class CsvTest(SimpleTestCase):

    def test_load_small_file(self):
        dataset = load_csv(FIXTURES / 'toy_crisp.csv')
        self.assertEqual((dataset.N, dataset.M, dataset.d), (3, 2, 2))
        self.assertEqual(dataset.frame.labels, ('a', 'b'))
        self.assertEqual(dataset.true_labels.tolist(), [0, 1, 0])
        self.assertFalse(dataset.rich_source)
        self.assertEqual(dataset.rich_labels[1], categorical(dataset.frame, {1}))

    def test_non_numeric_feature_reports_line(self):
        with self.assertRaises(ParseError) as ctx:
            load_csv(FIXTURES / 'bad_feature.csv')
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn('строка 3', str(ctx.exception))

    def test_unknown_class(self):
        with self.assertRaises(UnknownClass):
            load_csv(FIXTURES / 'toy_crisp.csv', schema=CsvSchema(classes=('a',)))

    def test_missing_label_column(self):
        with self.assertRaises(ParseError):
            load_csv(FIXTURES / 'toy_crisp.csv', schema=CsvSchema(label_column='target'))

    def test_rich_file(self):
        dataset = load_csv(FIXTURES / 'toy_rich.csv')
        self.assertTrue(dataset.rich_source)
        self.assertEqual(dataset.M, 3)
        second = dataset.rich_labels[1]
        self.assertEqual(second.mass({0}), 0.5)
        self.assertEqual(second.mass({0, 1}), 0.5)
        self.assertEqual(describe_dataset(dataset)['imprecise_labels'], 3)

    def test_describe(self):
        info = describe_dataset(load_csv(FIXTURES / 'toy_crisp.csv'))
        self.assertEqual(info['observations'], 3)
        self.assertEqual(info['classes'], 2)
        self.assertEqual(info['features'], 2)
        self.assertEqual(info['class_counts'], [2, 1])
        self.assertAlmostEqual(info['class_entropy'], 0.9183, places=4)


class RichLabelTest(SimpleTestCase):

    def test_categorical(self):
        self.assertEqual(parse_rich_label(AB, '0:1'), categorical(AB, {0}))

    def test_average_mass_shape(self):
        m = parse_rich_label(AB, '0:0.5;0|1:0.5')
        self.assertEqual(m, make_mass(AB, [({0}, 0.5), ({0, 1}, 0.5)]))

    def test_sum_beyond_tolerance(self):
        with self.assertRaises(SumNotOne):
            parse_rich_label(AB, '0:0.6;1:0.6')

    def test_small_drift_is_renormalized(self):
        m = parse_rich_label(AB, '0:0.502;1:0.502')
        self.assertAlmostEqual(m.mass({0}), 0.5, places=12)

    def test_grammar_errors(self):
        for text in ('', 'a:1', '0-1:1', '0:', '0:1;;'):
            with self.subTest(text=text), self.assertRaises(ParseError):
                parse_rich_label(AB, text)

    def test_index_outside_frame(self):
        with self.assertRaises(ParseError):
            parse_rich_label(AB, '0|2:1')

    def test_serialized_decimals_sum_to_one(self):
        m = make_mass(ABC, [({0}, 1 / 3), ({1}, 1 / 3), ({0, 1, 2}, 1 / 3)])
        text = serialize_rich_label(m)
        units = [int(part.split(':')[1].replace('.', '')) for part in text.split(';')]
        self.assertEqual(sum(units), 10 ** 9)
        self.assertEqual(serialize_rich_label(parse_rich_label(ABC, text)), text)

    def test_sum_error_in_file_names_the_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad_sum.csv'
            path.write_text('x0,label,rich_label\n0.0,0,0:1\n1.0,1,0:0.6;1:0.6\n', encoding='utf-8')
            with self.assertRaises(SumNotOne) as ctx:
                load_csv(path)
        self.assertIn('строка 3', str(ctx.exception))

    def test_file_round_trip_is_stable(self):
        dataset = generate_synthetic('three_class_imprecise', n=60, rng=3)
        with tempfile.TemporaryDirectory() as tmp:
            first = save_csv(dataset, Path(tmp) / 'first.csv')
            loaded = load_csv(first)
            second = save_csv(loaded, Path(tmp) / 'second.csv')
            self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertEqual(loaded.rich_labels, dataset.rich_labels)
        np.testing.assert_array_equal(loaded.features, dataset.features)


# ────────────────────────────────────────────────────────────────────────────
# Синтетические генераторы
# ────────────────────────────────────────────────────────────────────────────

class GeneratorTest(SimpleTestCase):

    def test_line_is_linearly_separable(self):
        dataset = generate_synthetic('line', n=200, rng=0)
        clf = Perceptron(tol=None, max_iter=5000, random_state=0).fit(dataset.features, dataset.true_labels)
        self.assertEqual(clf.score(dataset.features, dataset.true_labels), 1.0)

    def test_separable_kinds_keep_margin(self):
        from .generators import _signed_margin

        for kind in (SyntheticKind.LINE, SyntheticKind.SINE, SyntheticKind.CIRCLE):
            with self.subTest(kind=kind):
                dataset = generate_synthetic(kind, n=120, rng=1)
                margin = _signed_margin(kind, dataset.features)
                self.assertTrue(np.all(np.abs(margin) >= SEPARATION_MARGIN))
                np.testing.assert_array_equal(margin > 0, dataset.true_labels == 1)
                self.assertEqual(np.bincount(dataset.true_labels).tolist(), [60, 60])

    def test_exact_imprecise_fraction(self):
        dataset = generate_synthetic('three_class_imprecise', n=200, rng=0)
        imprecise = [m for m in dataset.rich_labels if not m.is_bayesian]
        self.assertEqual(len(imprecise), 40)
        for m in imprecise:
            self.assertEqual(m.mass({1, 2}), 0.5)

    def test_noisy_label_stays_inside_its_imprecise_pair(self):
        dataset = generate_synthetic('three_class_imprecise', n=200, noise=0.3, rng=0)
        labels = [int(label) for label, m in zip(dataset.true_labels, dataset.rich_labels) if not m.is_bayesian]
        self.assertEqual(len(labels), 40)
        self.assertTrue(set(labels) <= {1, 2})

    def test_ignorance_region_uses_whole_frame(self):
        dataset = generate_synthetic('two_blob_ignorance', n=100, rng=0, imprecise_fraction=0.1)
        imprecise = [m for m in dataset.rich_labels if not m.is_bayesian]
        self.assertEqual(len(imprecise), 10)
        self.assertTrue(all(m.mass({0, 1}) == 0.5 for m in imprecise))

    def test_same_seed_same_dataset(self):
        for kind in SyntheticKind.values:
            with self.subTest(kind=kind):
                first = generate_synthetic(kind, n=50, noise=0.1, rng=11)
                second = generate_synthetic(kind, n=50, noise=0.1, rng=11)
                np.testing.assert_array_equal(first.features, second.features)
                np.testing.assert_array_equal(first.true_labels, second.true_labels)
                self.assertEqual(first.rich_labels, second.rich_labels)

    def test_rejects_small_n(self):
        with self.assertRaises(DegenerateInput):
            generate_synthetic('line', n=5)

    def test_unknown_kind(self):
        with self.assertRaises(DegenerateInput):
            generate_synthetic('spiral')


# ────────────────────────────────────────────────────────────────────────────
# Реестр и fetch (сеть подменена)
# ────────────────────────────────────────────────────────────────────────────

RAW_TOY = b'1.0,0.5,g\n0.0,0.2,b\n1.5,0.7,g\n'
RAW_HEART = b'1,2,0\n3,?,2\n4,5,1\n6,7,3\n'


def _response(content):
    response = MagicMock()
    response.content = content
    response.raise_for_status.return_value = None
    return response


class RegistryTest(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.cache = self.tmp / 'cache'
        self.manifest = self.tmp / 'manifest.json'
        self.manifest.write_text(json.dumps({'datasets': [
            {'name': 'toy', 'title': 'Toy', 'url': 'https://example.invalid/toy.data', 'label_column': -1,
             'expected': {'n': 3, 'M': 2, 'd': 2}},
            {'name': 'heart_toy', 'title': 'Heart toy', 'url': 'https://example.invalid/heart.data',
             'na_values': ['?'], 'label_binarize': True},
            {'name': 'pinned', 'title': 'Pinned', 'url': 'https://example.invalid/pinned.data',
             'sha256': '0' * 64},
            {'name': 'local', 'title': 'Local', 'local_only': True},
        ]}), encoding='utf-8')
        self.settings_override = override_settings(EVIDAL_DATA_DIR=str(self.cache))
        self.settings_override.enable()

    def tearDown(self):
        self.settings_override.disable()
        self._tmp.cleanup()

    @patch('apps.lab.datasets.services.requests.get')
    def test_fetch_normalizes_and_pins(self, get):
        get.return_value = _response(RAW_TOY)
        [report] = DatasetService.fetch(['toy'], manifest=self.manifest)
        self.assertEqual(report.status, 'downloaded')
        self.assertEqual(report.shape, (3, 2, 2))
        pinned = json.loads((self.cache / 'checksums.json').read_text())
        self.assertEqual(pinned['toy'], report.sha256)

        dataset = DatasetService.load_dataset('toy', manifest=self.manifest)
        self.assertEqual(dataset.frame.labels, ('b', 'g'))
        self.assertEqual(dataset.true_labels.tolist(), [1, 0, 1])

    @patch('apps.lab.datasets.services.requests.get')
    def test_second_fetch_stays_offline(self, get):
        get.return_value = _response(RAW_TOY)
        DatasetService.fetch(['toy'], manifest=self.manifest)
        get.reset_mock()
        [report] = DatasetService.fetch(['toy'], manifest=self.manifest)
        self.assertEqual(report.status, 'cached')
        get.assert_not_called()

    @patch('apps.lab.datasets.services.requests.get')
    def test_tampered_cache_is_rejected(self, get):
        get.return_value = _response(RAW_TOY)
        DatasetService.fetch(['toy'], manifest=self.manifest)
        (self.cache / 'raw' / 'toy' / 'toy.data').write_bytes(RAW_TOY + b'9,9,g\n')
        with self.assertRaises(ChecksumMismatch):
            DatasetService.fetch(['toy'], manifest=self.manifest)

    @patch('apps.lab.datasets.services.requests.get')
    def test_manifest_checksum_enforced(self, get):
        get.return_value = _response(RAW_TOY)
        with self.assertRaises(ChecksumMismatch):
            DatasetService.fetch(['pinned'], manifest=self.manifest)
        self.assertFalse((self.cache / 'raw' / 'pinned').exists())

    @patch('apps.lab.datasets.services.requests.get')
    def test_missing_values_and_binarized_labels(self, get):
        get.return_value = _response(RAW_HEART)
        [report] = DatasetService.fetch(['heart_toy'], manifest=self.manifest)
        table = pd.read_csv(report.path, dtype=str)
        self.assertEqual(table['label'].tolist(), ['0', '1', '1'])
        self.assertEqual(report.shape, (3, 2, 2))

    @patch('apps.lab.datasets.services.requests.get')
    def test_network_failure_is_reported(self, get):
        get.side_effect = requests.ConnectionError('нет сети')
        [report] = DatasetService.fetch(['toy'], manifest=self.manifest)
        self.assertEqual(report.status, 'failed')

    def test_local_only_is_skipped(self):
        [report] = DatasetService.fetch(['local'], manifest=self.manifest)
        self.assertEqual(report.status, 'skipped')

    def test_not_fetched(self):
        with self.assertRaises(DatasetNotFetched):
            DatasetService.load_dataset('toy', manifest=self.manifest)

    def test_unknown_names(self):
        with self.assertRaises(UnknownDataset):
            DatasetService.load_dataset('nope', manifest=self.manifest)
        with self.assertRaises(UnknownDataset):
            DatasetService.fetch(['nope'], manifest=self.manifest)

    def test_synthetic_and_csv_names(self):
        self.assertEqual(DatasetService.load_dataset('synthetic:circle').N, 200)
        self.assertEqual(DatasetService.load_dataset(str(FIXTURES / 'toy_crisp.csv')).N, 3)

    def test_dog2_surrogate(self):
        dataset = DatasetService.load_dataset('dog2')
        self.assertEqual((dataset.N, dataset.d, dataset.M), (200, 42, 2))
        self.assertTrue(dataset.surrogate)
        self.assertTrue(dataset.rich_source)

    def test_shipped_manifest_is_complete(self):
        entries = DatasetService.load_manifest()
        self.assertEqual(len(entries), 15)
        self.assertEqual(entries['ionosphere'].expected, {'n': 351, 'M': 2, 'd': 34})
        self.assertTrue(entries['dog2'].local_only)

    @patch('apps.lab.datasets.services.requests.get')
    def test_fetch_command(self, get):
        get.return_value = _response(RAW_TOY)
        out = StringIO()
        call_command('fetch', datasets=['toy', 'local'], manifest=str(self.manifest), stdout=out)
        self.assertIn('toy', out.getvalue())
        self.assertTrue((self.cache / 'toy.csv').exists())


# ────────────────────────────────────────────────────────────────────────────
# Карты неопределённости
# ────────────────────────────────────────────────────────────────────────────

class LandscapeTest(SimpleTestCase):

    def test_vacuous_limit(self):
        rng = np.random.default_rng(0)
        model = EknnModel.fit(rng.uniform(size=(20, 2)), crisp_labels(ABC, rng.integers(0, 3, 20)), K=7,
                              gamma_mode=1e6, standardize=False)
        raster = landscape(model, Bounds(3.0, 5.0, 3.0, 5.0), 6, 'nonspecificity')
        np.testing.assert_allclose(raster.grid, math.log2(3), atol=1e-6)

    def test_klir_lambda_zero_equals_discord(self):
        dataset = generate_synthetic('three_class_imprecise', n=90, rng=4)
        model = EknnModel.fit(dataset.features, dataset.rich_labels, K=7)
        bounds = Bounds.around(dataset.features)
        klir = landscape(model, bounds, 25, 'klir', klir_lambda=0.0)
        discord = landscape(model, bounds, 25, 'discord')
        self.assertTrue(np.array_equal(klir.grid, discord.grid))

    def test_symmetric_training_set(self):
        model = EknnModel.fit([[-1.0, 0.0], [1.0, 0.0]], crisp_labels(AB, [0, 1]), K=2, gamma_mode=1.0,
                              standardize=False)
        bounds = Bounds(-2.0, 2.0, -1.5, 1.5)
        for measure in ('klir', 'nonspecificity', 'evid_epistemic', 'evid_total', 'rl_epistemic', 'entropy'):
            with self.subTest(measure=measure):
                grid = landscape(model, bounds, 21, measure).grid
                np.testing.assert_allclose(grid, grid[:, ::-1], atol=1e-9)

    def test_grid_orientation(self):
        model = EknnModel.fit([[0.0, 0.0], [3.0, 3.0]], crisp_labels(AB, [0, 1]), K=1, gamma_mode=1.0,
                              standardize=False)
        raster = landscape(model, Bounds(0.0, 3.0, 0.0, 3.0), 4, 'nonspecificity')
        self.assertAlmostEqual(raster.grid[0, 0], 1.0 - 0.95, places=12)
        self.assertAlmostEqual(raster.grid[3, 3], 1.0 - 0.95, places=12)
        self.assertEqual(raster.xs[-1], 3.0)

    def test_pknn_only_probabilistic(self):
        model = PknnModel.fit([[0.0, 0.0], [1.0, 1.0]], [0, 1], AB, K=2)
        raster = landscape(model, Bounds(0.0, 1.0, 0.0, 1.0), 3, 'least_confidence')
        self.assertTrue(np.all(raster.grid <= 0.5 + 1e-12))
        with self.assertRaises(UnknownMeasure):
            landscape(model, Bounds(0.0, 1.0, 0.0, 1.0), 3, 'klir')

    def test_invalid_requests(self):
        dataset = generate_synthetic('three_class_imprecise', n=30, rng=0)
        model = EknnModel.fit(dataset.features, dataset.rich_labels, K=3)
        bounds = Bounds.around(dataset.features)
        with self.assertRaises(DegenerateInput):
            landscape(model, bounds, 1, 'klir')
        with self.assertRaises(DegenerateInput):
            landscape(model, bounds, 5, 'rl_epistemic')
        with self.assertRaises(UnknownMeasure):
            landscape(model, bounds, 5, 'variance')
        with self.assertRaises(DegenerateInput):
            Bounds.parse('1,0,0,1')

    def test_pgm_and_csv_output(self):
        grid = np.arange(9.0).reshape(3, 3)
        raster = LandscapeRaster(Bounds(0.0, 1.0, 0.0, 1.0), 3, grid, 'nonspecificity')
        with tempfile.TemporaryDirectory() as tmp:
            raw = write_raster_pgm(raster, Path(tmp) / 'r.pgm').read_bytes()
            header = b'P5\n3 3\n65535\n'
            self.assertTrue(raw.startswith(header))
            pixels = np.frombuffer(raw[len(header):], dtype='>u2').reshape(3, 3)
            np.testing.assert_array_equal(pixels, np.flipud(np.rint(grid / 8.0 * 65535)))

            table = pd.read_csv(write_raster_csv(raster, Path(tmp) / 'r.csv'), index_col=0)
            self.assertEqual(table.shape, (3, 3))
            np.testing.assert_array_equal(table.to_numpy(), grid)

    def test_constant_raster_is_black(self):
        raster = LandscapeRaster(Bounds(0.0, 1.0, 0.0, 1.0), 2, np.full((2, 2), 0.7), 'klir')
        with tempfile.TemporaryDirectory() as tmp:
            raw = write_raster_pgm(raster, Path(tmp) / 'c.pgm').read_bytes()
        self.assertEqual(raw[-8:], bytes(8))

    def test_landscape_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            call_command('landscape', kind='three_class_imprecise', measure='klir', klir_lambda=0.2,
                         resolution=12, output=tmp, stdout=StringIO())
            for name in ('raster.csv', 'raster.pgm', 'points.csv', 'landscape.json'):
                self.assertTrue((Path(tmp) / name).exists(), name)
            meta = json.loads((Path(tmp) / 'landscape.json').read_text())
            self.assertEqual(meta['klir_lambda'], 0.2)
