import re

from rest_framework import serializers

from apps.lab.classifiers.core import DEFAULT_ALPHA0, DEFAULT_K, GAMMA_AUTO
from apps.lab.uncertainty.core import DEFAULT_KLIR_LAMBDA

from .core import OracleMode, ProbabilitySource, StrategyKind

_KLIR_SHORTHAND = re.compile(r'^klir\(\s*([^)]+?)\s*\)$')


class StrictFieldsMixin:
    """Неизвестные ключи — ошибка (опечатка в конфиге не должна молча превращаться в значение по умолчанию)."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Неизвестное поле.'] for key in unknown})
        return super().to_internal_value(data)


class StrategySerializer(StrictFieldsMixin, serializers.Serializer):
    """
    Стратегия задаётся объектом `{"kind": "klir", "klir_lambda": 0.3}`
    или строкой: `"random"`, `"klir"`, `"klir(0.3)"`.
    """
    kind = serializers.ChoiceField(choices=StrategyKind.choices)
    klir_lambda = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)

    def to_internal_value(self, data):
        if isinstance(data, str):
            match = _KLIR_SHORTHAND.match(data.strip())
            data = {'kind': 'klir', 'klir_lambda': match.group(1)} if match else {'kind': data.strip()}
        return super().to_internal_value(data)

    def validate(self, attrs):
        if attrs['kind'] == StrategyKind.KLIR:
            if attrs.get('klir_lambda') is None:
                attrs['klir_lambda'] = DEFAULT_KLIR_LAMBDA
        elif attrs.get('klir_lambda') is not None:
            raise serializers.ValidationError({'klir_lambda': ['Задаётся только для стратегии klir.']})
        else:
            attrs.pop('klir_lambda', None)
        return attrs


class ALConfigSerializer(StrictFieldsMixin, serializers.Serializer):
    budget_fraction = serializers.FloatField(default=0.6, max_value=1.0)
    repetitions = serializers.IntegerField(default=100, min_value=1)
    K = serializers.IntegerField(default=DEFAULT_K, min_value=1)
    alpha0 = serializers.FloatField(default=DEFAULT_ALPHA0)
    gamma_mode = serializers.CharField(default=GAMMA_AUTO)
    test_fraction = serializers.FloatField(default=0.3)
    initial_labeled = serializers.IntegerField(default=None, allow_null=True, min_value=1)
    batch_size = serializers.IntegerField(default=1, min_value=1)
    oracle_mode = serializers.ChoiceField(choices=OracleMode.choices, default=OracleMode.CRISP)
    probability_source = serializers.ChoiceField(choices=ProbabilitySource.choices, default=ProbabilitySource.PKNN)

    def validate_budget_fraction(self, value):
        if value <= 0.0:
            raise serializers.ValidationError('Нужно 0 < budget_fraction ≤ 1.')
        return value

    def validate_alpha0(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError('Нужно 0 < alpha0 < 1.')
        return value

    def validate_test_fraction(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError('Нужно 0 < test_fraction < 1.')
        return value

    def validate_gamma_mode(self, value):
        if value == GAMMA_AUTO:
            return value
        try:
            gamma = float(value)
        except ValueError:
            raise serializers.ValidationError('Ожидалось "auto" или положительное число.') from None
        if not gamma > 0.0 or gamma == float('inf'):
            raise serializers.ValidationError('Ожидалось "auto" или положительное число.')
        return gamma


class ExperimentSpecSerializer(StrictFieldsMixin, serializers.Serializer):
    datasets = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    strategies = serializers.ListField(child=StrategySerializer(), allow_empty=False)
    config = ALConfigSerializer(required=False)
    output = serializers.CharField(required=False, allow_null=True, default=None)
    seed = serializers.IntegerField(default=0)
    parallelism = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)

    def to_internal_value(self, data):
        if isinstance(data, dict) and 'config' not in data:
            data = {**data, 'config': {}}
        return super().to_internal_value(data)

    def validate_datasets(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError('Датасеты повторяются.')
        return value

    def validate_strategies(self, value):
        labels = [
            f"klir({item['klir_lambda']:g})" if item['kind'] == StrategyKind.KLIR else item['kind']
            for item in value
        ]
        if len(set(labels)) != len(labels):
            raise serializers.ValidationError('Стратегии повторяются.')
        return value


def flatten_errors(errors, path=''):
    """
    Ошибки DRF -> список (JSON-путь, сообщение), например
    ('.strategies[0].klir_lambda', 'Убедитесь, что значение меньше или равно 1.0.').
    """
    flat = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            if isinstance(key, int):
                child = f'{path}[{key}]'
            elif key == 'non_field_errors':
                child = path
            else:
                child = f'{path}.{key}'
            flat.extend(flatten_errors(value, child))
    elif isinstance(errors, list):
        for position, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                flat.extend(flatten_errors(value, f'{path}[{position}]'))
            else:
                flat.append((path or '.', str(value)))
    else:
        flat.append((path or '.', str(errors)))
    return flat
