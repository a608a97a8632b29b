from apps.shared.config.exceptions import LabError


class InvalidLambda(LabError):
    default_message = 'λ должна лежать в [0, 1]'
    default_code = 'bad_lambda'


class BadResolution(LabError):
    default_message = 'Разрешение сетки должно быть не меньше 1000'
    default_code = 'bad_resolution'


class BadCounts(LabError):
    default_message = 'Веса классов должны быть неотрицательными и конечными'
    default_code = 'bad_counts'


class UnknownMeasure(LabError):
    default_message = 'Неизвестная мера неопределённости'
    default_code = 'unknown_measure'
