"""
Встроенные проверки инвариантов (секунды): точные значения, свойства на случайных массах,
нулевой случай относительного правдоподобия.

Использование:
  python manage.py selfcheck
  python -m apps.shared.cli selfcheck
"""
from django.core.management.base import BaseCommand, CommandError

from apps.shared.cli.checks import run_checks
from apps.shared.config.mixins import ValidationExitMixin


class Command(ValidationExitMixin, BaseCommand):
    help = 'Запускает встроенный набор проверок инвариантов; код 1 при любом нарушении'

    def handle_validated(self, *args, **options):
        failures = 0
        for name, error in run_checks():
            if error is None:
                self.stdout.write(f'  ✓ {name}')
            else:
                failures += 1
                self.stdout.write(self.style.ERROR(f'  ✗ {name}: {error}'))

        if failures:
            raise CommandError(f'Нарушено проверок: {failures}', returncode=1)
        self.stdout.write(self.style.SUCCESS('✓ Все проверки пройдены'))
