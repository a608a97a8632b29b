from apps.shared.config.exceptions import LabError


class EmptyPool(LabError):
    default_message = 'Пул неразмеченных точек пуст'
    default_code = 'empty_pool'


class AlreadyLabeled(LabError):
    default_message = 'Точка уже размечена'
    default_code = 'already_labeled'


class NoRichLabel(LabError):
    default_message = 'В датасете нет богатых меток'
    default_code = 'no_rich_label'


class EmptyCurve(LabError):
    default_message = 'Кривая точности пуста'
    default_code = 'empty_curve'


class InvalidStrategy(LabError):
    default_message = 'Некорректная стратегия запроса'
    default_code = 'invalid_strategy'


class BadConfig(LabError):
    default_message = 'Некорректная конфигурация эксперимента'
    default_code = 'bad_config'
