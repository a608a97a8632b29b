import functools
import json
import logging
import math
import subprocess
from pathlib import Path

import numpy as np
from django.conf import settings

logger = logging.getLogger(__name__)

PACKAGE_VERSION = '0.4.0'


@functools.lru_cache(maxsize=1)
def describe_version():
    """
    Строка версии в стиле `git describe --tags --always --dirty`.
    Вне git-репозитория (или без git) — версия пакета.
    """
    try:
        completed = subprocess.run(
            ['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=settings.BASE_DIR,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
    except (OSError, subprocess.SubprocessError):
        return f'v{PACKAGE_VERSION}'
    described = completed.stdout.strip()
    return described or f'v{PACKAGE_VERSION}'


def rng_stream(seed, index):
    """Независимый поток случайных чисел для повтора `index` эксперимента с сидом `seed`."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def derive_seed(rng):
    """Целочисленный сид для библиотек, которые не принимают Generator (sklearn)."""
    return int(rng.integers(0, 2**31 - 1))


def to_builtin(value):
    """Рекурсивно приводит numpy-типы к встроенным, чтобы json.dumps их принял."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def dump_json(payload):
    return json.dumps(to_builtin(payload), indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def write_json(path, payload):
    """Детерминированная запись JSON: сортированные ключи, фиксированный отступ."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(payload), encoding='utf-8')
    logger.debug('wrote %s', path)
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding='utf-8'))


def write_frame(path, frame):
    """CSV из pandas DataFrame без индекса и с \\n в конце строк (одинаково на всех ОС)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator='\n')
    logger.debug('wrote %s (%d rows)', path, len(frame))
    return path
