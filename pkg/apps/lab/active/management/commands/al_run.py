"""
Запуск эксперимента активного обучения по JSON-конфигурации (схема — docs/config.md).

Использование:
  python manage.py al_run --config experiments/benchmark.json
  python manage.py al_run --config cfg.json --seed 42 --parallelism 8 --output results/run42
  python manage.py al_run --config cfg.json --repetitions 20 --datasets iris wine   # сокращённый профиль
  python manage.py al_run --config cfg.json --dispatch celery                       # повторы на воркерах

С одинаковым сидом файлы результатов (кроме timings.csv) совпадают побайтово
при любом --parallelism и --dispatch.
"""
from django.core.management.base import BaseCommand

from apps.lab.active.experiments import DISPATCH_MODES, ExperimentService, load_experiment_spec
from apps.shared.config.mixins import ValidationExitMixin


class Command(ValidationExitMixin, BaseCommand):
    help = 'Запускает серии активного обучения (датасет × стратегия) и пишет JSON/CSV результаты'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Путь к JSON-конфигурации эксперимента')
        parser.add_argument('--seed', type=int, help='Главный сид (перекрывает seed из файла)')
        parser.add_argument('--parallelism', type=int, help='Число процессов (по умолчанию — ядра, не больше повторов)')
        parser.add_argument('--output', help='Каталог результатов')
        parser.add_argument('--dispatch', choices=DISPATCH_MODES, help='local или celery (по умолчанию EVIDAL_DISPATCH)')
        parser.add_argument('--repetitions', type=int, help='Число повторов (перекрывает config.repetitions)')
        parser.add_argument('--datasets', nargs='+', help='Подмножество датасетов из конфигурации')

    def handle_validated(self, *args, **options):
        spec = load_experiment_spec(options['config'])
        spec = ExperimentService.apply_overrides(
            spec,
            seed=options.get('seed'),
            repetitions=options.get('repetitions'),
            datasets=options.get('datasets'),
            output=options.get('output'),
            parallelism=options.get('parallelism'),
        )
        planned = spec.planned_series
        self.stdout.write(f'Серий: {len(planned)} ({len(spec.datasets)} датасетов × {len(spec.strategies)} стратегий)')

        output = ExperimentService.run(spec, dispatch=options.get('dispatch'))

        self.stdout.write(self.style.SUCCESS(f'✓ Результаты записаны в {output}'))
