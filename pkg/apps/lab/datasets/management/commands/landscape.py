"""
Карта неопределённости для двумерного датасета.

Использование:
  python manage.py landscape --kind three_class_imprecise --measure klir --lambda 0.2
  python manage.py landscape --kind two_blob_ignorance --measure evid_epistemic --resolution 200
  python manage.py landscape --dataset data/my2d.csv --measure nonspecificity --bounds=-3,3,-3,3

В каталог --output пишутся raster.csv, raster.pgm (если не задан --no-pgm),
points.csv (обучающая выборка с богатыми метками) и landscape.json.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from apps.lab.classifiers.core import DEFAULT_ALPHA0, DEFAULT_K, GAMMA_AUTO, EknnModel, PknnModel
from apps.lab.datasets.core import save_csv
from apps.lab.datasets.generators import SyntheticKind, generate_synthetic
from apps.lab.datasets.landscape import Bounds, landscape, write_raster_csv, write_raster_pgm
from apps.lab.datasets.services import DatasetService
from apps.lab.uncertainty.core import UncertaintyKind, is_probabilistic
from apps.shared.config.mixins import ValidationExitMixin
from apps.shared.config.utils import describe_version, write_json


class Command(ValidationExitMixin, BaseCommand):
    help = 'Строит растр меры неопределённости (CSV + 16-битный PGM) по обученному K-NN'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument('--kind', choices=SyntheticKind.values, help='Синтетический генератор')
        source.add_argument('--dataset', help='Имя из реестра или путь к CSV с двумя признаками')
        parser.add_argument('--n', type=int, default=200)
        parser.add_argument('--noise', type=float, default=0.0)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--measure', choices=UncertaintyKind.values, default=UncertaintyKind.KLIR)
        parser.add_argument('--lambda', dest='klir_lambda', type=float, default=None)
        parser.add_argument('--resolution', type=int, default=100)
        parser.add_argument('--bounds', help='x_min,x_max,y_min,y_max (по умолчанию охват данных +10%%)')
        parser.add_argument('--gamma', default=GAMMA_AUTO, help="'auto' или положительное число")
        parser.add_argument('--K', type=int, default=DEFAULT_K)
        parser.add_argument('--alpha0', type=float, default=DEFAULT_ALPHA0)
        parser.add_argument('--output', help='Каталог результатов')
        parser.add_argument('--no-pgm', action='store_true', dest='no_pgm')

    def handle_validated(self, *args, **options):
        if options.get('dataset'):
            dataset = DatasetService.load_dataset(options['dataset'])
        else:
            dataset = generate_synthetic(
                options.get('kind') or SyntheticKind.LINE,
                n=options['n'],
                noise=options['noise'],
                rng=options['seed'],
            )
        measure = options['measure']
        K = min(options['K'], dataset.N)
        if is_probabilistic(measure):
            model = PknnModel.fit(dataset.features, dataset.true_labels, dataset.frame, K=K)
        else:
            model = EknnModel.fit(dataset.features, dataset.rich_labels, K=K, alpha0=options['alpha0'],
                                  gamma_mode=options['gamma'])

        bounds = Bounds.parse(options['bounds']) if options.get('bounds') else Bounds.around(dataset.features)
        raster = landscape(model, bounds, options['resolution'], measure, options.get('klir_lambda'))

        slug = dataset.name.replace(':', '_').replace('/', '_')
        output = Path(options.get('output') or Path(settings.EVIDAL_RESULTS_DIR) / 'landscape' / f'{slug}_{measure}')
        written = [write_raster_csv(raster, output / 'raster.csv')]
        if not options.get('no_pgm'):
            written.append(write_raster_pgm(raster, output / 'raster.pgm'))
        written.append(save_csv(dataset, output / 'points.csv'))
        written.append(write_json(output / 'landscape.json', {
            'dataset': dataset.name,
            'measure': raster.measure,
            'klir_lambda': raster.klir_lambda,
            'resolution': raster.resolution,
            'bounds': bounds.as_list(),
            'model': type(model).__name__,
            'K': K,
            'gamma': getattr(model, 'gamma', None),
            'version': describe_version(),
        }))

        for path in written:
            self.stdout.write(f'  {path}')
        self.stdout.write(self.style.SUCCESS(
            f'✓ {dataset.name}: {raster.measure} {raster.resolution}×{raster.resolution}, '
            f'от {raster.grid.min():.4f} до {raster.grid.max():.4f}'
        ))
