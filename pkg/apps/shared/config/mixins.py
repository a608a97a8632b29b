import logging

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

logger = logging.getLogger(__name__)


class ValidationExitMixin:
    """
    Общий обработчик ошибок для management-команд лаборатории.

    Наследники реализуют `handle_validated` вместо `handle`.
    - ValidationError (и все доменные ошибки) -> CommandError с кодом 2
    - любое другое исключение -> CommandError с кодом 1, трейсбек уходит в лог
    """

    def handle(self, *args, **options):
        try:
            return self.handle_validated(*args, **options)
        except CommandError:
            raise
        except ValidationError as exc:
            raise CommandError(f'Ошибка входных данных: {"; ".join(exc.messages)}', returncode=2) from exc
        except Exception as exc:
            logger.exception('Команда %s упала', self.__class__.__module__)
            raise CommandError(f'Сбой выполнения: {exc}', returncode=1) from exc

    def handle_validated(self, *args, **options):
        raise NotImplementedError
