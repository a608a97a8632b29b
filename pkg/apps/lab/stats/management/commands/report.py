"""
Сводный отчёт по результатам al_run: таблица AUAC, t-тесты, Фридман, Уилкоксон–Холм, клики.

Использование:
  python manage.py report --results results/run42
  python manage.py report --results results/uci results/dog2 --output results/report --alpha 0.05
  python manage.py report --results results/run42 --t-test independent --strategies random least_confidence 'klir(0.2)'
"""
from pathlib import Path

from django.core.management.base import BaseCommand

from apps.lab.active.experiments import load_series
from apps.lab.stats.core import DEFAULT_ALPHA, ComparisonTable, TTestKind, WilcoxonSides, wilcoxon_holm_cd
from apps.lab.stats.report import render_report
from apps.shared.config.mixins import ValidationExitMixin


def add_comparison_arguments(parser):
    parser.add_argument('--results', nargs='+', required=True, help='Каталоги результатов al_run')
    parser.add_argument('--output', help='Каталог отчёта (по умолчанию <первый каталог>/report)')
    parser.add_argument('--alpha', type=float, default=DEFAULT_ALPHA, help='Уровень значимости для Уилкоксона–Холма')
    parser.add_argument('--sides', choices=WilcoxonSides.values, default=WilcoxonSides.TWO_SIDED,
                        help='two-sided или one-sided (лучшая по рангу стратегия сильнее)')
    parser.add_argument('--t-test', dest='t_test', choices=TTestKind.values, default=TTestKind.PAIRED,
                        help='paired (по номеру повтора) или independent')
    parser.add_argument('--strategies', nargs='+', help='Подмножество и порядок стратегий (метки, например klir(0.2))')


def build_comparison(options):
    table = ComparisonTable.from_series(
        load_series(options['results']),
        strategies=options.get('strategies'),
        t_test=options.get('t_test') or TTestKind.PAIRED,
    )
    cd = None
    # ранги и Фридман осмысленны от двух датасетов
    if len(table.datasets) >= 2:
        cd = wilcoxon_holm_cd(
            table.mean_auac,
            alpha=options.get('alpha', DEFAULT_ALPHA),
            sides=options.get('sides') or WilcoxonSides.TWO_SIDED,
        )
    output = Path(options.get('output') or Path(options['results'][0]) / 'report')
    return table, cd, output


class Command(ValidationExitMixin, BaseCommand):
    help = 'Строит Markdown/HTML/CSV отчёт сравнения стратегий по файлам серий'

    def add_arguments(self, parser):
        add_comparison_arguments(parser)

    def handle_validated(self, *args, **options):
        table, cd, output = build_comparison(options)
        self.stdout.write(f'Датасетов: {len(table.datasets)}, стратегий: {len(table.strategies)}')

        written = render_report(table, cd, output)

        if cd is None:
            self.stdout.write(self.style.WARNING('Один датасет: ранги, Фридман и клики не строятся'))
        else:
            for strategy, rank in cd.ordered:
                self.stdout.write(f'  {strategy}: средний ранг {rank:.2f}')
            friedman = cd.friedman
            line = f'Фридман: χ² = {friedman.statistic:.3f}, p = {friedman.p_value:.4g}'
            style = self.style.SUCCESS if friedman.p_value < cd.alpha else self.style.WARNING
            self.stdout.write(style(line))
        self.stdout.write(self.style.SUCCESS(f'✓ Записано файлов: {len(written)} в {output}'))
