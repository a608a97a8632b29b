"""
Карты неопределённости: мера считается в узлах регулярной сетки R×R над плоскостью признаков.

grid[i, j] — значение в точке (xs[j], ys[i]); строки идут снизу вверх по y.
На диск пишется CSV (индекс — y, столбцы — x) и 16-битный PGM, где верхняя строка
соответствует максимальному y.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from PIL import Image

from apps.lab.classifiers.core import PknnModel
from apps.lab.uncertainty.batch import score_batch
from apps.lab.uncertainty.core import DEFAULT_KLIR_LAMBDA, UncertaintyKind, UncertaintyScore, is_probabilistic
from apps.lab.uncertainty.exceptions import UnknownMeasure
from apps.shared.config.exceptions import DegenerateInput

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 2
PGM_MAX = 65535
BOUNDS_PADDING = 0.1
RELATIVE_LIKELIHOOD = (UncertaintyKind.RL_EPISTEMIC, UncertaintyKind.RL_ALEATORIC, UncertaintyKind.RL_TOTAL)


@dataclass(frozen=True)
class Bounds:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        values = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(np.isfinite(values)) or self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise DegenerateInput(f'Границы {values}: нужно x_min < x_max и y_min < y_max')

    @classmethod
    def parse(cls, text):
        """`x_min,x_max,y_min,y_max`"""
        try:
            values = [float(token) for token in text.split(',')]
        except ValueError:
            raise DegenerateInput(f'Границы {text!r}: ожидались четыре числа через запятую') from None
        if len(values) != 4:
            raise DegenerateInput(f'Границы {text!r}: ожидались четыре числа через запятую')
        return cls(*values)

    @classmethod
    def around(cls, features, padding=BOUNDS_PADDING):
        X = np.asarray(features, dtype=float)
        low, high = X.min(axis=0), X.max(axis=0)
        span = np.where(high > low, high - low, 1.0)
        low, high = low - padding * span, high + padding * span
        return cls(float(low[0]), float(high[0]), float(low[1]), float(high[1]))

    def as_list(self):
        return [self.x_min, self.x_max, self.y_min, self.y_max]


@dataclass(frozen=True, eq=False)
class LandscapeRaster:
    bounds: Bounds
    resolution: int
    grid: np.ndarray
    measure: str
    klir_lambda: float | None = None

    def __post_init__(self):
        if self.grid.shape != (self.resolution, self.resolution):
            raise DegenerateInput(f'Растр {self.grid.shape} при разрешении {self.resolution}')
        if not np.all(np.isfinite(self.grid)) or np.any(self.grid < 0.0):
            raise DegenerateInput(f'{self.measure}: в растре есть отрицательные или нечисловые значения')

    @property
    def xs(self):
        return np.linspace(self.bounds.x_min, self.bounds.x_max, self.resolution)

    @property
    def ys(self):
        return np.linspace(self.bounds.y_min, self.bounds.y_max, self.resolution)

    def score(self, i, j):
        return UncertaintyScore(self.grid[i, j], self.measure)

    def to_frame(self):
        frame = pd.DataFrame(self.grid, index=self.ys, columns=self.xs)
        frame.index.name = 'y'
        return frame


def grid_points(bounds, resolution):
    xs = np.linspace(bounds.x_min, bounds.x_max, resolution)
    ys = np.linspace(bounds.y_min, bounds.y_max, resolution)
    XX, YY = np.meshgrid(xs, ys)
    return np.column_stack([XX.ravel(), YY.ravel()])


def _resolve_measure(measure):
    try:
        return UncertaintyKind(measure)
    except ValueError:
        raise UnknownMeasure(f'{measure!r}; доступны: {", ".join(UncertaintyKind.values)}') from None


def landscape(model, bounds, resolution, measure, klir_lambda=None):
    """
    PknnModel годится только для вероятностных мер. EknnModel: вероятностные меры
    считаются на BetP, меры относительного правдоподобия — на взвешенных счётчиках
    классов соседей (только M = 2), остальные — на предсказанных функциях масс.
    """
    measure = _resolve_measure(measure)
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION:
        raise DegenerateInput(f'resolution = {resolution}, нужно не меньше {MIN_RESOLUTION}')
    if model.train_features.shape[1] != 2:
        raise DegenerateInput(f'Карта строится на плоскости, а признаков {model.train_features.shape[1]}')
    lam = DEFAULT_KLIR_LAMBDA if klir_lambda is None else float(klir_lambda)
    points = grid_points(bounds, resolution)

    if isinstance(model, PknnModel):
        if not is_probabilistic(measure):
            raise UnknownMeasure(f'{measure}: вероятностный K-NN не выдаёт функций масс')
        values = score_batch(measure, proba=model.predict_proba(points))
    elif is_probabilistic(measure):
        values = score_batch(measure, proba=model.predict_betp(points))
    elif measure in RELATIVE_LIKELIHOOD:
        if model.frame.M != 2:
            raise DegenerateInput(f'{measure}: относительное правдоподобие определено только для двух классов')
        values = score_batch(measure, counts=model.class_weights(points))
    else:
        values = score_batch(measure, masses=model.scoring_masses(points), lam=lam)

    grid = np.asarray(values, dtype=float).reshape(resolution, resolution)
    grid = np.where((grid < 0.0) & (grid > -1e-12), 0.0, grid)
    logger.info('Карта %s %d×%d: min %.4g, max %.4g', measure.value, resolution, resolution, grid.min(), grid.max())
    return LandscapeRaster(
        bounds=bounds,
        resolution=resolution,
        grid=grid,
        measure=measure.value,
        klir_lambda=lam if measure == UncertaintyKind.KLIR else None,
    )


def write_raster_csv(raster, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raster.to_frame().to_csv(path, lineterminator='\n', float_format='%.17g')
    return path


def write_raster_pgm(raster, path):
    """PGM P5, 16 бит: значение растянуто на [0, 65535] по собственным min/max растра."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    low, high = float(raster.grid.min()), float(raster.grid.max())
    if high > low:
        scaled = np.rint((raster.grid - low) / (high - low) * PGM_MAX)
    else:
        scaled = np.zeros_like(raster.grid)
    pixels = np.flipud(scaled).astype('<u2')
    Image.fromarray(pixels).save(path, format='PPM')
    return path
