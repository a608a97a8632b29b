from apps.shared.config.exceptions import LabError


class ParseError(LabError):
    default_message = 'Файл не разбирается'
    default_code = 'parse_error'

    def __init__(self, message=None, line=None, code=None, params=None):
        self.line = line
        if line is not None:
            message = f'строка {line}: {message or self.default_message}'
        super().__init__(message, code=code, params=params)


class UnknownClass(LabError):
    default_message = 'Метка класса не входит во фрейм'
    default_code = 'unknown_class'


class DatasetError(LabError):
    default_message = 'Датасет несогласован'
    default_code = 'dataset_error'


class DatasetNotFetched(LabError):
    default_message = 'Датасет не скачан: выполните fetch'
    default_code = 'dataset_not_fetched'


class ChecksumMismatch(LabError):
    default_message = 'Контрольная сумма файла не совпала'
    default_code = 'checksum_mismatch'


class UnknownDataset(LabError):
    default_message = 'Датасет не найден в манифесте'
    default_code = 'unknown_dataset'
