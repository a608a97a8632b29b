from apps.shared.config.exceptions import LabError


class ZeroVariance(LabError):
    default_message = 'Разности постоянны и не равны нулю: t-статистика не определена'
    default_code = 'zero_variance'


class EmptyCliques(LabError):
    default_message = 'Нет клик для диаграммы критической разности'
    default_code = 'empty_cliques'
