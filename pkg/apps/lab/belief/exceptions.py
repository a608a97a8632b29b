from apps.shared.config.exceptions import LabError


class EvidenceError(LabError):
    default_message = 'Некорректная функция масс'
    default_code = 'evidence_error'


class BadFrame(EvidenceError):
    default_message = 'Фрейм должен содержать от 2 до 20 уникальных непустых меток'
    default_code = 'bad_frame'


class SumNotOne(EvidenceError):
    default_message = 'Сумма масс должна быть равна 1'
    default_code = 'sum_not_one'


class NegativeMass(EvidenceError):
    default_message = 'Масса не может быть отрицательной'
    default_code = 'negative_mass'


class EmptyFocal(EvidenceError):
    default_message = 'Пустое множество не может нести массу'
    default_code = 'empty_focal'


class BadSubset(EvidenceError):
    default_message = 'Подмножество ссылается на индекс вне фрейма'
    default_code = 'bad_subset'


class FrameMismatch(EvidenceError):
    default_message = 'Функции масс определены на разных фреймах'
    default_code = 'frame_mismatch'


class EmptyList(EvidenceError):
    default_message = 'Нужна хотя бы одна функция масс'
    default_code = 'empty_list'


class TotalConflict(EvidenceError):
    default_message = 'Полный конфликт: правило Демпстера не определено'
    default_code = 'total_conflict'


class BadDiscount(EvidenceError):
    default_message = 'Коэффициент дисконтирования должен лежать в [0, 1]'
    default_code = 'bad_discount'
