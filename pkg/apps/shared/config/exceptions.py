from django.core.exceptions import ValidationError


class LabError(ValidationError):
    """
    Базовая доменная ошибка. Это ValidationError с кодом:
    команды переводят её в код выхода 2, а сериализаторы — в ошибку поля.
    """
    default_message = 'Некорректные входные данные'
    default_code = 'invalid'

    def __init__(self, message=None, code=None, params=None):
        super().__init__(message or self.default_message, code=code or self.default_code, params=params)

    def __str__(self):
        return '; '.join(self.messages)


class DegenerateInput(LabError):
    default_message = 'Вырожденные входные данные'
    default_code = 'degenerate_input'


class SchemaError(LabError):
    """Ошибка схемы конфигурации. `path` — JSON-путь до поля, например `.strategies[0].klir_lambda`."""
    default_message = 'Конфигурация не прошла проверку схемы'
    default_code = 'schema_error'

    def __init__(self, message=None, path='.', code=None, params=None):
        self.path = path
        super().__init__(message, code=code, params=params)
