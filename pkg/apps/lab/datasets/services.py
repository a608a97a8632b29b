# apps/lab/datasets/services.py
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import requests
from django.conf import settings

from apps.shared.config.utils import read_json, write_frame, write_json

from .core import load_csv
from .exceptions import ChecksumMismatch, DatasetNotFetched, ParseError, UnknownDataset
from .generators import embed_surrogate, generate_synthetic

logger = logging.getLogger(__name__)

SYNTHETIC_PREFIX = 'synthetic:'
DOG2 = 'dog2'
DOG2_DIMENSION = 42
DOG2_SIZE = 200
CHECKSUMS_FILE = 'checksums.json'


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    title: str
    url: str | None = None
    filename: str | None = None
    sha256: str | None = None
    sep: str = ','
    header: bool = False
    label_column: int | str = -1
    drop_columns: tuple = ()
    na_values: tuple = ()
    # метка = 1, если исходное числовое значение > 0 (многоуровневый диагноз -> бинарный)
    label_binarize: bool = False
    local_only: bool = False
    expected: dict = field(default_factory=dict)
    note: str = ''

    @classmethod
    def from_dict(cls, payload):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ParseError(f'Манифест, запись {payload.get("name")!r}: неизвестные поля {sorted(unknown)}')
        data = dict(payload)
        data['drop_columns'] = tuple(data.get('drop_columns', ()))
        data['na_values'] = tuple(data.get('na_values', ()))
        return cls(**data)


@dataclass
class FetchReport:
    name: str
    status: str
    sha256: str | None = None
    path: Path | None = None
    shape: tuple | None = None
    message: str = ''


class DatasetService:
    """Реестр датасетов: манифест, кэш скачанных файлов, синтетика и суррогат Dog-2."""

    @staticmethod
    def cache_dir():
        return Path(settings.EVIDAL_DATA_DIR)

    @staticmethod
    def load_manifest(path=None):
        path = Path(path or settings.EVIDAL_MANIFEST)
        try:
            payload = json.loads(path.read_text(encoding='utf-8'))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f'Манифест {path}: {exc}') from exc
        entries = [ManifestEntry.from_dict(item) for item in payload.get('datasets', [])]
        return {entry.name: entry for entry in entries}

    # ── Загрузка ────────────────────────────────────────────────────────

    @classmethod
    def load_dataset(cls, name, manifest=None):
        """
        Имена: `synthetic:<kind>`, `dog2`, имя из манифеста (нужен fetch)
        или путь к CSV-файлу.
        """
        if name.startswith(SYNTHETIC_PREFIX):
            return generate_synthetic(name[len(SYNTHETIC_PREFIX):], n=200, noise=0.0, rng=0)
        if name == DOG2:
            return cls._load_dog2()
        entries = cls.load_manifest(manifest)
        if name in entries:
            path = cls.cache_dir() / f'{name}.csv'
            if not path.exists():
                raise DatasetNotFetched(f'{name}: нет {path}, выполните `fetch --datasets {name}`')
            return load_csv(path, name=name)
        path = Path(name)
        if path.suffix == '.csv' and path.exists():
            return load_csv(path)
        raise UnknownDataset(f'{name!r}: нет в манифесте и это не путь к CSV')

    @classmethod
    def _load_dog2(cls):
        path = cls.cache_dir() / f'{DOG2}.csv'
        if path.exists():
            return load_csv(path, name=DOG2)
        logger.warning('Файл Dog-2 не найден (%s), используется синтетический суррогат', path)
        base = generate_synthetic('two_blob_ignorance', n=DOG2_SIZE, noise=0.0, rng=0)
        return embed_surrogate(base, DOG2_DIMENSION, np.random.default_rng(DOG2_DIMENSION), name=DOG2)

    # ── Скачивание ──────────────────────────────────────────────────────

    @staticmethod
    def _sha256(path):
        digest = hashlib.sha256()
        with open(path, 'rb') as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b''):
                digest.update(chunk)
        return digest.hexdigest()

    @classmethod
    def _pinned(cls):
        path = cls.cache_dir() / CHECKSUMS_FILE
        return read_json(path) if path.exists() else {}

    @classmethod
    def _pin(cls, name, sha):
        pinned = cls._pinned()
        pinned[name] = sha
        write_json(cls.cache_dir() / CHECKSUMS_FILE, pinned)

    @classmethod
    def fetch(cls, names=None, force=False, manifest=None):
        """
        Скачивает сырые файлы, сверяет SHA-256 и пишет нормализованный CSV.
        Повторный запуск без --force сети не трогает: файл уже в кэше и сумма совпадает.
        """
        entries = cls.load_manifest(manifest)
        if names:
            missing = [n for n in names if n not in entries]
            if missing:
                raise UnknownDataset(f'Нет в манифесте: {", ".join(missing)}')
            entries = {n: entries[n] for n in names}
        reports = []
        for entry in entries.values():
            try:
                reports.append(cls._fetch_one(entry, force))
            except requests.RequestException as exc:
                logger.error('Не удалось скачать %s: %s', entry.name, exc)
                reports.append(FetchReport(entry.name, 'failed', message=str(exc)))
        return reports

    @classmethod
    def _fetch_one(cls, entry, force):
        if entry.local_only or not entry.url:
            return FetchReport(entry.name, 'skipped', message=entry.note or 'файл распространяется отдельно')

        raw_path = cls.cache_dir() / 'raw' / entry.name / (entry.filename or entry.url.rsplit('/', 1)[-1])
        out_path = cls.cache_dir() / f'{entry.name}.csv'
        expected = entry.sha256 or cls._pinned().get(entry.name)

        if raw_path.exists() and not force:
            sha = cls._sha256(raw_path)
            if expected and sha != expected:
                raise ChecksumMismatch(f'{entry.name}: {sha} != {expected} (файл в кэше изменён, используйте --force)')
            status = 'cached'
        else:
            logger.info('Скачиваю %s из %s', entry.name, entry.url)
            response = requests.get(entry.url, timeout=settings.EVIDAL_FETCH_TIMEOUT)
            response.raise_for_status()
            sha = hashlib.sha256(response.content).hexdigest()
            if expected and sha != expected:
                raise ChecksumMismatch(f'{entry.name}: скачан {sha}, ожидался {expected}')
            raw_path.parent.mkdir(parents=True, exist_ok=True)
            raw_path.write_bytes(response.content)
            status = 'downloaded'
        if not expected:
            cls._pin(entry.name, sha)

        if status == 'downloaded' or not out_path.exists():
            table = cls.normalize_raw(entry, raw_path)
            write_frame(out_path, table)
        shape = cls._check_shape(entry, out_path)
        return FetchReport(entry.name, status, sha256=sha, path=out_path, shape=shape)

    @staticmethod
    def _column(table, ref):
        if isinstance(ref, int):
            return table.columns[ref]
        if ref not in table.columns:
            raise ParseError(f'Столбца {ref!r} нет среди {list(table.columns)}')
        return ref

    @classmethod
    def normalize_raw(cls, entry, raw_path):
        """Сырой файл UCI -> таблица `признаки..., label` по правилам записи манифеста."""
        whitespace = entry.sep == 'whitespace'
        table = pd.read_csv(
            raw_path,
            sep=r'\s+' if whitespace else entry.sep,
            header=0 if entry.header else None,
            na_values=list(entry.na_values) or None,
            skipinitialspace=True,
        )
        before = len(table)
        table = table.dropna(axis=0, how='any')
        if len(table) < before:
            logger.info('%s: отброшено %d строк с пропусками', entry.name, before - len(table))

        label_column = cls._column(table, entry.label_column)
        dropped = {cls._column(table, ref) for ref in entry.drop_columns}
        feature_columns = [c for c in table.columns if c != label_column and c not in dropped]

        features = table[feature_columns].apply(pd.to_numeric, errors='coerce')
        if features.isna().any().any():
            bad_row = int(np.flatnonzero(features.isna().any(axis=1).to_numpy())[0])
            raise ParseError(f'{entry.name}: нечисловой признак в строке данных {bad_row + 1}')
        features.columns = [str(c).strip() for c in feature_columns] if entry.header else [
            f'x{i}' for i in range(len(feature_columns))
        ]

        labels = table[label_column].astype(str).str.strip()
        if entry.label_binarize:
            labels = (pd.to_numeric(labels) > 0).astype(int).astype(str)
        normalized = features.reset_index(drop=True)
        normalized['label'] = labels.reset_index(drop=True)
        return normalized

    @staticmethod
    def _check_shape(entry, path):
        dataset = load_csv(path, name=entry.name)
        shape = (dataset.N, dataset.M, dataset.d)
        expected = tuple(entry.expected.get(k) for k in ('n', 'M', 'd')) if entry.expected else None
        if expected and shape != expected:
            logger.warning('%s: получено N/M/d = %s, в описании датасета %s. %s',
                           entry.name, shape, expected, entry.note)
        return shape
