"""
Данные диаграммы критической разности (средние ранги, клики, попарные p) без полного отчёта.

Использование:
  python manage.py cd --results results/run42
  python manage.py cd --results results/run42 --alpha 0.1 --output results/cd
"""
from django.core.management.base import BaseCommand

from apps.lab.stats.management.commands.report import add_comparison_arguments, build_comparison
from apps.lab.stats.report import render_cd
from apps.shared.config.exceptions import DegenerateInput
from apps.shared.config.mixins import ValidationExitMixin


class Command(ValidationExitMixin, BaseCommand):
    help = 'Пишет cd.csv, cd_cliques.csv и cd_pairs.csv для диаграммы критической разности'

    def add_arguments(self, parser):
        add_comparison_arguments(parser)

    def handle_validated(self, *args, **options):
        table, cd, output = build_comparison(options)
        if cd is None:
            raise DegenerateInput(f'Для диаграммы критической разности нужно ≥ 2 датасетов, есть {len(table.datasets)}')
        written = render_cd(cd, output)

        for number, clique in enumerate(cd.cliques, start=1):
            ranks = ', '.join(f'{s} ({cd.rank_of(s):.2f})' for s in clique)
            self.stdout.write(f'  клика {number}: {ranks}')
        rejected = [p for p in cd.pairs if p.rejected]
        self.stdout.write(f'Различий при α = {cd.alpha:g}: {len(rejected)} из {len(cd.pairs)}')
        self.stdout.write(self.style.SUCCESS(f'✓ Записано файлов: {len(written)} в {output}'))
