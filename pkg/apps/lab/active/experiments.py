"""
Эксперимент: набор серий (датасет × стратегия), запись результатов и учёт запусков в БД.

Каталог результатов:
  run.json                          — разрешённая конфигурация, версия, сводка по сериям
  series/<датасет>__<стратегия>.json — кривые, запросы и AUAC каждого повтора
  curves.csv                        — dataset, strategy, repetition, step, labeled_count, accuracy
  timings.csv                       — время повторов (вне контракта побайтовой воспроизводимости)
"""
import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import pandas as pd
from django.conf import settings
from django.db import DatabaseError

from apps.lab.datasets.services import DatasetService
from apps.shared.config.exceptions import SchemaError
from apps.shared.config.utils import describe_version, read_json, write_frame, write_json

from .core import ActiveLearningService, ALConfig, QueryStrategy
from .serializers import ExperimentSpecSerializer, flatten_errors

logger = logging.getLogger(__name__)

COST_THRESHOLDS = (0.98, 0.99)
DISPATCH_MODES = ('local', 'celery')


@dataclass
class ExperimentSpec:
    datasets: list
    strategies: list
    config: dict = field(default_factory=dict)
    output: Path | None = None
    seed: int = 0
    parallelism: int | None = None

    @property
    def planned_series(self):
        return [(dataset, strategy) for dataset in self.datasets for strategy in self.strategies]

    def al_config(self, strategy):
        return ALConfig(strategy=strategy, seed=self.seed, **self.config)

    def to_dict(self):
        return {
            'datasets': list(self.datasets),
            'strategies': [s.to_dict() for s in self.strategies],
            'config': dict(self.config),
            'seed': self.seed,
        }


def load_experiment_spec(path):
    """JSON-файл -> ExperimentSpec с заполненными значениями по умолчанию."""
    try:
        payload = json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as exc:
        raise SchemaError(f'Не удалось прочитать {path}: {exc}', path='.') from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f'{path}: некорректный JSON ({exc.msg}, строка {exc.lineno})', path='.') from exc
    return spec_from_payload(payload)


def spec_from_payload(payload):
    serializer = ExperimentSpecSerializer(data=payload)
    if not serializer.is_valid():
        problems = flatten_errors(serializer.errors)
        first_path = problems[0][0]
        message = '; '.join(f'{where}: {what}' for where, what in problems)
        raise SchemaError(message, path=first_path)
    data = serializer.validated_data
    return ExperimentSpec(
        datasets=list(data['datasets']),
        strategies=[QueryStrategy(**dict(item)) for item in data['strategies']],
        config=dict(data['config']),
        output=Path(data['output']) if data.get('output') else None,
        seed=data['seed'],
        parallelism=data.get('parallelism'),
    )


def series_slug(dataset, label):
    clean = re.sub(r'[^\w.\-]+', '_', f'{dataset}__{label}').strip('_')
    return clean


class ExperimentService:

    @staticmethod
    def apply_overrides(spec, seed=None, repetitions=None, datasets=None, output=None, parallelism=None):
        """Флаги командной строки поверх файла конфигурации."""
        if datasets:
            missing = [name for name in datasets if name not in spec.datasets]
            if missing:
                raise SchemaError(f'Нет в конфигурации: {", ".join(missing)}', path='.datasets')
            spec = replace(spec, datasets=[name for name in spec.datasets if name in datasets])
        if repetitions is not None:
            if repetitions < 1:
                raise SchemaError('repetitions ≥ 1', path='.config.repetitions')
            spec = replace(spec, config={**spec.config, 'repetitions': repetitions})
        if seed is not None:
            spec = replace(spec, seed=seed)
        if output is not None:
            spec = replace(spec, output=Path(output))
        if parallelism is not None:
            spec = replace(spec, parallelism=parallelism)
        return spec

    @classmethod
    def run(cls, spec, dispatch=None):
        dispatch = dispatch or settings.EVIDAL_DISPATCH
        if dispatch not in DISPATCH_MODES:
            raise SchemaError(f'dispatch = {dispatch!r}; доступны: {", ".join(DISPATCH_MODES)}', path='.dispatch')
        output = Path(spec.output or Path(settings.EVIDAL_RESULTS_DIR) / 'al_run')
        repetitions = spec.config.get('repetitions', ALConfig.__dataclass_fields__['repetitions'].default)
        parallelism = spec.parallelism or ActiveLearningService.default_parallelism(repetitions)
        version = describe_version()

        # конфигурации проверяются до запуска: ошибка схемы не должна всплыть на середине
        configs = {strategy: spec.al_config(strategy) for strategy in spec.strategies}
        record = cls._record_start(spec, output, version)

        curves, timings, series = [], [], []
        try:
            for dataset_name in spec.datasets:
                dataset = DatasetService.load_dataset(dataset_name)
                for strategy in spec.strategies:
                    run = ActiveLearningService.run_active_learning(
                        dataset, configs[strategy], parallelism=parallelism, dispatch=dispatch
                    )
                    entry = cls._write_series(output, run, version)
                    series.append(entry)
                    cls._collect_rows(run, curves, timings)
                    cls._record_series(record, run)
                    logger.info('%s / %s: средний AUAC %s', run.dataset, run.strategy_label,
                                entry['summary']['mean_auac'])
        except Exception as exc:
            cls._record_finish(record, 'failed', len(series), str(exc))
            raise

        write_frame(output / 'curves.csv', pd.DataFrame(
            curves, columns=['dataset', 'strategy', 'repetition', 'step', 'labeled_count', 'accuracy']))
        write_frame(output / 'timings.csv', pd.DataFrame(
            timings, columns=['dataset', 'strategy', 'repetition', 'wall_clock']))
        write_json(output / 'run.json', {
            'version': version,
            'spec': spec.to_dict(),
            'resolved_config': {s.label: configs[s].to_dict() for s in spec.strategies},
            'series': series,
        })
        cls._record_finish(record, 'done', len(series))
        return output

    @staticmethod
    def _write_series(output, run, version):
        mean_curve, labeled_counts = run.mean_curve()
        summary = run.summary()
        full = summary['mean_full_accuracy']
        summary['cost_reduction'] = {
            f'{threshold:g}': (
                ActiveLearningService.labeling_cost_reduction(mean_curve, full, threshold, run.pool_size,
                                                              labeled_counts)
                if mean_curve and full else None
            )
            for threshold in COST_THRESHOLDS
        }
        relative = Path('series') / f'{series_slug(run.dataset, run.strategy_label)}.json'
        write_json(output / relative, {
            'dataset': run.dataset,
            'strategy': run.strategy_label,
            'config': run.config.to_dict(),
            'version': version,
            'pool_size': run.pool_size,
            'mean_curve': mean_curve,
            'labeled_counts': labeled_counts,
            'summary': summary,
            'repetitions': [r.to_dict(with_timing=False) for r in run.repetitions],
        })
        return {'dataset': run.dataset, 'strategy': run.strategy_label, 'file': relative.as_posix(),
                'summary': summary}

    @staticmethod
    def _collect_rows(run, curves, timings):
        for r in run.repetitions:
            timings.append((run.dataset, run.strategy_label, r.repetition, r.wall_clock))
            for step, (count, accuracy) in enumerate(zip(r.labeled_counts, r.curve)):
                curves.append((run.dataset, run.strategy_label, r.repetition, step, count, accuracy))

    # ── Учёт в БД: необязателен, файлы результатов первичны ─────────────

    @staticmethod
    def _record_start(spec, output, version):
        from .models import ExperimentRun

        try:
            return ExperimentRun.objects.create(spec=spec.to_dict(), version=version, output_dir=str(output))
        except DatabaseError as exc:
            logger.warning('Запуск не записан в БД: %s', exc)
            return None

    @staticmethod
    def _record_series(record, run):
        from .models import SeriesSummary

        if record is None:
            return
        try:
            SeriesSummary.objects.create(run=record, dataset=run.dataset, strategy=run.strategy_label,
                                         **run.summary())
        except DatabaseError as exc:
            logger.warning('Серия %s / %s не записана в БД: %s', run.dataset, run.strategy_label, exc)

    @staticmethod
    def _record_finish(record, status, series_count, error=''):
        if record is None:
            return
        record.status = status
        record.series_count = series_count
        record.error = error
        try:
            record.save(update_fields=['status', 'series_count', 'error', 'updated_at'])
        except DatabaseError as exc:
            logger.warning('Статус запуска не записан в БД: %s', exc)


def load_series(results_dirs):
    """Все series/*.json из каталогов результатов, в порядке имён файлов."""
    loaded = []
    for directory in results_dirs:
        files = sorted((Path(directory) / 'series').glob('*.json'))
        if not files:
            raise SchemaError(f'В {directory} нет файлов series/*.json', path='.results')
        loaded.extend(read_json(path) for path in files)
    return loaded
