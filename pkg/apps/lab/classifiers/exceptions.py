from apps.shared.config.exceptions import LabError


class TooFewInstances(LabError):
    default_message = 'Обучающих точек меньше, чем соседей K'
    default_code = 'too_few_instances'


class BadParameter(LabError):
    default_message = 'Недопустимый параметр модели'
    default_code = 'bad_parameter'
