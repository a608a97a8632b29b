"""
Скачивание датасетов UCI по манифесту и проверка контрольных сумм.

Использование:
  python manage.py fetch                              # все датасеты манифеста
  python manage.py fetch --datasets iris wine
  python manage.py fetch --datasets ionosphere --force
  python manage.py fetch --manifest my_manifest.json

Повторный запуск без --force не обращается к сети, если файлы в кэше
совпадают по SHA-256 с закреплёнными суммами.
"""
from django.core.management.base import BaseCommand, CommandError

from apps.lab.datasets.services import DatasetService
from apps.shared.config.mixins import ValidationExitMixin


class Command(ValidationExitMixin, BaseCommand):
    help = 'Скачивает датасеты по манифесту, сверяет SHA-256 и пишет нормализованные CSV'

    def add_arguments(self, parser):
        parser.add_argument('--datasets', nargs='+', help='Имена из манифеста (по умолчанию все)')
        parser.add_argument('--force', action='store_true', help='Скачать заново даже при наличии кэша')
        parser.add_argument('--manifest', help='Путь к манифесту (по умолчанию встроенный)')

    def handle_validated(self, *args, **options):
        reports = DatasetService.fetch(
            names=options.get('datasets'),
            force=options.get('force', False),
            manifest=options.get('manifest'),
        )
        failed = 0
        for report in reports:
            if report.status == 'failed':
                failed += 1
                self.stderr.write(self.style.ERROR(f'✗ {report.name}: {report.message}'))
            elif report.status == 'skipped':
                self.stdout.write(self.style.WARNING(f'– {report.name}: пропущен ({report.message})'))
            else:
                n, M, d = report.shape
                self.stdout.write(self.style.SUCCESS(
                    f'✓ {report.name}: {report.status}, N={n} M={M} d={d}, sha256 {report.sha256[:12]}…'
                ))
        if failed:
            raise CommandError(f'Не скачано датасетов: {failed}', returncode=1)
        self.stdout.write(self.style.SUCCESS(f'\nГотово: {len(reports)} записей манифеста'))
