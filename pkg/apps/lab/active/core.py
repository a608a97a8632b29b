"""
Пул-ориентированное активное обучение: стартовая разметка, запрос, ответ оракула,
переобучение, оценка на отложенной выборке.

Каждый повтор получает свой поток случайных чисел из (seed, номер повтора), поэтому
повторы независимы и результат не зависит от порядка и способа их выполнения.
"""
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from django.db import models
from sklearn.model_selection import train_test_split

from apps.lab.belief.core import betp, categorical
from apps.lab.classifiers.core import DEFAULT_ALPHA0, DEFAULT_K, GAMMA_AUTO, EknnModel, PknnModel
from apps.lab.uncertainty.batch import score_batch
from apps.lab.uncertainty.core import DEFAULT_KLIR_LAMBDA, KlirParams
from apps.shared.config.exceptions import DegenerateInput
from apps.shared.config.utils import derive_seed, rng_stream

from .exceptions import AlreadyLabeled, BadConfig, EmptyCurve, EmptyPool, InvalidStrategy, NoRichLabel

logger = logging.getLogger(__name__)

# значения в пределах этого допуска от максимума считаются равными (ничья -> меньший индекс)
TIE_TOLERANCE = 1e-12


class StrategyKind(models.TextChoices):
    RANDOM = 'random', 'Случайный выбор'
    ENTROPY = 'entropy', 'Энтропия'
    LEAST_CONFIDENCE = 'least_confidence', 'Наименьшая уверенность'
    KLIR = 'klir', 'Неопределённость Клира'
    EVID_EPISTEMIC = 'evid_epistemic', 'Эвиденциальная эпистемическая'
    RL_EPISTEMIC = 'rl_epistemic', 'Эпистемическая по относительному правдоподобию'


class OracleMode(models.TextChoices):
    CRISP = 'crisp', 'Чёткая метка'
    RICH = 'rich', 'Богатая метка'


class ProbabilitySource(models.TextChoices):
    PKNN = 'pknn', 'Вероятностный K-NN'
    BETP = 'betp', 'BetP эвиденциального K-NN'


PROBABILISTIC_STRATEGIES = (StrategyKind.ENTROPY, StrategyKind.LEAST_CONFIDENCE)


@dataclass(frozen=True)
class QueryStrategy:
    kind: str
    klir_lambda: float | None = None

    def __post_init__(self):
        if self.kind not in StrategyKind.values:
            raise InvalidStrategy(f'{self.kind!r}; доступны: {", ".join(StrategyKind.values)}')
        object.__setattr__(self, 'kind', StrategyKind(self.kind))
        if self.kind == StrategyKind.KLIR:
            lam = DEFAULT_KLIR_LAMBDA if self.klir_lambda is None else self.klir_lambda
            object.__setattr__(self, 'klir_lambda', KlirParams(float(lam)).lam)
        elif self.klir_lambda is not None:
            raise InvalidStrategy(f'klir_lambda задаётся только для klir, а стратегия {self.kind.value}')

    @property
    def label(self):
        if self.kind == StrategyKind.KLIR:
            return f'klir({self.klir_lambda:g})'
        return self.kind.value

    def to_dict(self):
        payload = {'kind': self.kind.value}
        if self.klir_lambda is not None:
            payload['klir_lambda'] = self.klir_lambda
        return payload


@dataclass(frozen=True)
class ALConfig:
    strategy: QueryStrategy
    budget_fraction: float = 0.6
    repetitions: int = 100
    seed: int = 0
    K: int = DEFAULT_K
    alpha0: float = DEFAULT_ALPHA0
    gamma_mode: str | float = GAMMA_AUTO
    test_fraction: float = 0.3
    # None: по одной точке на класс
    initial_labeled: int | None = None
    batch_size: int = 1
    oracle_mode: str = OracleMode.CRISP
    probability_source: str = ProbabilitySource.PKNN

    def __post_init__(self):
        if not 0.0 < self.budget_fraction <= 1.0:
            raise BadConfig(f'budget_fraction = {self.budget_fraction}, нужно 0 < b ≤ 1')
        if self.repetitions < 1:
            raise BadConfig(f'repetitions = {self.repetitions}, нужно ≥ 1')
        if not 0.0 < self.test_fraction < 1.0:
            raise BadConfig(f'test_fraction = {self.test_fraction}, нужно 0 < t < 1')
        if self.initial_labeled is not None and self.initial_labeled < 1:
            raise BadConfig(f'initial_labeled = {self.initial_labeled}, нужно ≥ 1')
        if self.batch_size < 1 or self.K < 1:
            raise BadConfig('batch_size и K должны быть ≥ 1')
        if self.gamma_mode != GAMMA_AUTO:
            try:
                gamma = float(self.gamma_mode)
            except (TypeError, ValueError):
                raise BadConfig(f'gamma_mode = {self.gamma_mode!r}, нужно "auto" или число > 0') from None
            if not (math.isfinite(gamma) and gamma > 0.0):
                raise BadConfig(f'gamma_mode = {self.gamma_mode!r}, нужно "auto" или число > 0')
        if self.oracle_mode not in OracleMode.values:
            raise BadConfig(f'oracle_mode = {self.oracle_mode!r}')
        if self.probability_source not in ProbabilitySource.values:
            raise BadConfig(f'probability_source = {self.probability_source!r}')

    def to_dict(self):
        payload = asdict(self)
        payload['strategy'] = self.strategy.to_dict()
        payload['oracle_mode'] = str(self.oracle_mode)
        payload['probability_source'] = str(self.probability_source)
        return payload

    @classmethod
    def from_dict(cls, payload):
        data = dict(payload)
        data['strategy'] = QueryStrategy(**data['strategy'])
        return cls(**data)


@dataclass
class RepetitionResult:
    repetition: int
    curve: list = field(default_factory=list)
    labeled_counts: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    auac: float | None = None
    full_accuracy: float | None = None
    pool_size: int = 0
    test_size: int = 0
    wall_clock: float = 0.0
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    def to_dict(self, with_timing=True):
        payload = asdict(self)
        if not with_timing:
            payload.pop('wall_clock')
        return payload

    @classmethod
    def from_dict(cls, payload):
        return cls(**payload)


@dataclass
class ALRunResult:
    dataset: str
    config: ALConfig
    repetitions: list

    @property
    def strategy_label(self):
        return self.config.strategy.label

    @property
    def succeeded(self):
        return [r for r in self.repetitions if r.ok]

    @property
    def failed(self):
        return [r for r in self.repetitions if not r.ok]

    @property
    def auacs(self):
        return [r.auac for r in self.succeeded]

    @property
    def pool_size(self):
        return self.succeeded[0].pool_size if self.succeeded else 0

    def mean_curve(self):
        curves = [r.curve for r in self.succeeded]
        if not curves:
            return [], []
        return np.mean(np.array(curves), axis=0).tolist(), list(self.succeeded[0].labeled_counts)

    def summary(self):
        auacs = np.array(self.auacs)
        full = [r.full_accuracy for r in self.succeeded]
        return {
            'repetitions': len(self.repetitions),
            'failed': len(self.failed),
            'mean_auac': float(auacs.mean()) if len(auacs) else None,
            'std_auac': float(auacs.std(ddof=1)) if len(auacs) > 1 else None,
            'mean_full_accuracy': float(np.mean(full)) if full else None,
        }


class ActiveLearningService:

    # ── Запрос и оракул ─────────────────────────────────────────────────

    @staticmethod
    def pool_scores(strategy, model, pool_features, proba_model=None):
        """
        Оценки неопределённости для точек пула. Для entropy/least_confidence
        вероятности берутся у proba_model (PkNN), а без него — BetP эвиденциальной модели.
        """
        kind = strategy.kind
        if kind in PROBABILISTIC_STRATEGIES:
            proba = proba_model.predict_proba(pool_features) if proba_model is not None \
                else model.predict_betp(pool_features)
            return score_batch(kind, proba=proba)
        if kind == StrategyKind.RL_EPISTEMIC:
            if model.frame.M != 2:
                raise DegenerateInput('rl_epistemic определена только для двух классов')
            return score_batch(kind, counts=model.class_weights(pool_features))
        return score_batch(kind, masses=model.scoring_masses(pool_features), lam=strategy.klir_lambda)

    @staticmethod
    def _argmax_first(scores):
        scores = np.asarray(scores, dtype=float)
        return int(np.flatnonzero(scores >= scores.max() - TIE_TOLERANCE)[0])

    @classmethod
    def select_query(cls, strategy, model, pool_features, rng, proba_model=None):
        """Позиция в пуле: случайная для random, иначе первый максимум оценки."""
        pool_features = np.asarray(pool_features, dtype=float)
        if len(pool_features) == 0:
            raise EmptyPool()
        if strategy.kind == StrategyKind.RANDOM:
            return int(rng.integers(len(pool_features)))
        return cls._argmax_first(cls.pool_scores(strategy, model, pool_features, proba_model))

    @classmethod
    def select_batch(cls, strategy, model, pool_features, rng, size, proba_model=None):
        pool_features = np.asarray(pool_features, dtype=float)
        if len(pool_features) == 0:
            raise EmptyPool()
        size = min(int(size), len(pool_features))
        if size == 1:
            return [cls.select_query(strategy, model, pool_features, rng, proba_model)]
        if strategy.kind == StrategyKind.RANDOM:
            return sorted(rng.choice(len(pool_features), size=size, replace=False).tolist())
        # тот же разрыв совпадений, что у select_query: допуск, затем меньшая позиция
        scores = np.array(cls.pool_scores(strategy, model, pool_features, proba_model), dtype=float)
        chosen = []
        for _ in range(size):
            position = cls._argmax_first(scores)
            chosen.append(position)
            scores[position] = -np.inf
        return chosen

    @staticmethod
    def oracle_reveal(dataset, index, mode=OracleMode.CRISP, labeled=()):
        if index in labeled:
            raise AlreadyLabeled(f'Точка {index} уже размечена')
        if mode == OracleMode.RICH:
            if not dataset.rich_source:
                raise NoRichLabel(f'{dataset.name}: оракул rich требует столбец богатых меток')
            return dataset.rich_labels[index]
        return categorical(dataset.frame, {int(dataset.true_labels[index])})

    @staticmethod
    def auac(curve):
        """Площадь под кривой точности: средняя точность × 100."""
        if len(curve) == 0:
            raise EmptyCurve()
        return 100.0 * math.fsum(curve) / len(curve)

    @staticmethod
    def labeling_cost_reduction(mean_curve, full_accuracy, threshold, pool_size, labeled_counts):
        """
        Доля пула, которую можно не размечать: первая точка кривой, где достигнуто
        threshold · full_accuracy. None, если порог не достигнут.
        """
        target = threshold * full_accuracy
        for accuracy, count in zip(mean_curve, labeled_counts):
            if accuracy >= target - TIE_TOLERANCE:
                return 1.0 - count / pool_size
        return None

    # ── Один повтор ─────────────────────────────────────────────────────

    @staticmethod
    def _fit(dataset, config, positions, labels):
        K = min(config.K, len(positions))
        return EknnModel.fit(dataset.features[positions], labels, K=K, alpha0=config.alpha0,
                             gamma_mode=config.gamma_mode)

    @staticmethod
    def _fit_proba(dataset, config, positions, labels):
        if config.strategy.kind not in PROBABILISTIC_STRATEGIES or config.probability_source != ProbabilitySource.PKNN:
            return None
        crisp = [int(np.argmax(betp(m).as_array())) for m in labels]
        return PknnModel.fit(dataset.features[positions], crisp, dataset.frame, K=min(config.K, len(positions)))

    @staticmethod
    def _initial_positions(dataset, pool, config, rng):
        """По одной случайной точке на класс (в случайном порядке классов), затем добор случайными."""
        wanted = config.initial_labeled or dataset.M
        chosen = []
        for c in rng.permutation(dataset.M):
            if len(chosen) >= wanted:
                break
            members = pool[dataset.true_labels[pool] == c]
            if len(members):
                chosen.append(int(rng.choice(members)))
        rest = np.setdiff1d(pool, chosen)
        extra = wanted - len(chosen)
        if extra > 0:
            chosen.extend(int(i) for i in rng.choice(rest, size=min(extra, len(rest)), replace=False))
        return chosen

    @classmethod
    def run_repetition(cls, dataset, config, repetition):
        started = time.perf_counter()
        result = RepetitionResult(repetition=repetition)
        try:
            cls._run_repetition(dataset, config, repetition, result)
        except Exception as exc:
            logger.exception('%s / %s, повтор %d: %s', dataset.name, config.strategy.label, repetition, exc)
            result.error = f'{type(exc).__name__}: {exc}'
            result.curve, result.labeled_counts, result.queries, result.auac = [], [], [], None
        result.wall_clock = time.perf_counter() - started
        return result

    @classmethod
    def _run_repetition(cls, dataset, config, repetition, result):
        rng = rng_stream(config.seed, repetition)

        # 1. Стратифицированное разбиение на пул и отложенную выборку
        pool, test = train_test_split(
            np.arange(dataset.N),
            test_size=config.test_fraction,
            stratify=dataset.true_labels,
            random_state=derive_seed(rng),
        )
        pool, test = np.sort(pool), np.sort(test)
        result.pool_size, result.test_size = len(pool), len(test)
        X_test, y_test = dataset.features[test], dataset.true_labels[test]

        # 2. Стартовая разметка
        labeled = []
        labels = []
        for index in cls._initial_positions(dataset, pool, config, rng):
            labels.append(cls.oracle_reveal(dataset, index, config.oracle_mode, labeled))
            labeled.append(index)
        budget = max(math.ceil(config.budget_fraction * len(pool)), len(labeled))
        unlabeled = np.setdiff1d(pool, labeled)

        # 3. Цикл: обучение -> точность -> запрос -> ответ оракула
        while True:
            model = cls._fit(dataset, config, labeled, labels)
            result.curve.append(float(np.mean(model.predict(X_test) == y_test)))
            result.labeled_counts.append(len(labeled))
            if len(labeled) >= budget or len(unlabeled) == 0:
                break
            size = min(config.batch_size, budget - len(labeled))
            proba_model = cls._fit_proba(dataset, config, labeled, labels)
            picks = cls.select_batch(config.strategy, model, dataset.features[unlabeled], rng, size, proba_model)
            for index in unlabeled[picks]:
                labels.append(cls.oracle_reveal(dataset, int(index), config.oracle_mode, labeled))
                labeled.append(int(index))
                result.queries.append(int(index))
            unlabeled = np.delete(unlabeled, picks)

        # 4. Эталон: модель на всём пуле
        full_labels = [cls.oracle_reveal(dataset, int(i), config.oracle_mode) for i in pool]
        full_model = cls._fit(dataset, config, pool, full_labels)
        result.full_accuracy = float(np.mean(full_model.predict(X_test) == y_test))
        result.auac = cls.auac(result.curve)

    # ── Серия повторов ──────────────────────────────────────────────────

    @staticmethod
    def default_parallelism(repetitions):
        return max(1, min(os.cpu_count() or 1, repetitions))

    @classmethod
    def run_active_learning(cls, dataset, config, parallelism=1, dispatch='local'):
        """
        Все повторы серии. dispatch: 'local' — пул процессов billiard (или текущий процесс
        при parallelism = 1), 'celery' — задачи run_repetition_task на воркерах.
        Результаты упорядочены по номеру повтора.
        """
        if config.strategy.kind == StrategyKind.RL_EPISTEMIC and dataset.M != 2:
            raise DegenerateInput(f'{dataset.name}: rl_epistemic определена только для двух классов')
        if config.oracle_mode == OracleMode.RICH and not dataset.rich_source:
            raise NoRichLabel(f'{dataset.name}: оракул rich требует столбец богатых меток')
        repetitions = range(config.repetitions)
        logger.info('%s / %s: %d повторов, dispatch=%s, процессов %d',
                    dataset.name, config.strategy.label, config.repetitions, dispatch, parallelism)

        if dispatch == 'celery':
            results = cls._run_celery(dataset, config)
        elif parallelism > 1 and config.repetitions > 1:
            from billiard import Pool

            with Pool(processes=min(parallelism, config.repetitions)) as pool:
                results = pool.starmap(cls.run_repetition, [(dataset, config, r) for r in repetitions])
        else:
            results = [cls.run_repetition(dataset, config, r) for r in repetitions]

        results = sorted(results, key=lambda r: r.repetition)
        run = ALRunResult(dataset=dataset.name, config=config, repetitions=results)
        if run.failed:
            logger.warning('%s / %s: упало повторов %d из %d',
                           dataset.name, config.strategy.label, len(run.failed), len(results))
        return run

    @staticmethod
    def _run_celery(dataset, config):
        from celery import group

        from .tasks import run_repetition_task

        job = group(run_repetition_task.s(dataset.name, config.to_dict(), r) for r in range(config.repetitions))
        return [RepetitionResult.from_dict(payload) for payload in job.apply_async().get()]


def run_active_learning(dataset, config, parallelism=1, dispatch='local'):
    return ActiveLearningService.run_active_learning(dataset, config, parallelism=parallelism, dispatch=dispatch)
