"""Counterfactual bias subtraction and the grid search for its coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from faithrel.calibrate import DEFAULT_EPS, fit_threshold
from faithrel.core import InvalidInputError, check_categorical
from faithrel.metrics import METRICS

REFERENCE_BETAS = (-0.4, 0.6)
DEFAULT_BOUNDS = (-1.0, 1.0)
DEFAULT_STEP = 0.1


@dataclass(frozen=True)
class BiasCoefficients:
    beta1: float = 0.0
    beta2: float = 0.0
    a: float = DEFAULT_BOUNDS[0]
    b: float = DEFAULT_BOUNDS[1]

    def __post_init__(self):
        if self.a > self.b:
            raise InvalidInputError("search bounds are reversed")
        if not (self.a <= self.beta1 <= self.b and self.a <= self.beta2 <= self.b):
            raise InvalidInputError("coefficients fall outside the search bounds")


@dataclass(frozen=True)
class PredictionTriple:
    """Full-context, trigger-only and empty-input predictions (rows or vectors)."""

    y_full: np.ndarray
    y_trigger: np.ndarray
    y_empty: np.ndarray

    def __post_init__(self):
        for name in ("y_full", "y_trigger", "y_empty"):
            object.__setattr__(self, name, check_categorical(getattr(self, name), atol=1e-6))
        if not (self.y_full.shape == self.y_trigger.shape == self.y_empty.shape):
            raise InvalidInputError("prediction views differ in shape")

    def __len__(self):
        return 1 if self.y_full.ndim == 1 else self.y_full.shape[0]

    def take(self, idx) -> "PredictionTriple":
        return PredictionTriple(self.y_full[idx], self.y_trigger[idx], self.y_empty[idx])


def debias(triple: PredictionTriple, betas: BiasCoefficients) -> np.ndarray:
    """``y - beta1 * y_trigger - beta2 * y_empty``, unclipped."""
    return triple.y_full - betas.beta1 * triple.y_trigger - betas.beta2 * triple.y_empty


def beta_grid(a: float, b: float, step: float) -> np.ndarray:
    if step <= 0:
        raise InvalidInputError("grid step must be positive")
    if a > b:
        raise InvalidInputError("search bounds are reversed")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return np.round(a + step * np.arange(n), 10)


@dataclass(frozen=True)
class BetaSearchResult:
    betas: BiasCoefficients
    score: float
    grid: tuple[tuple[float, float, float], ...]  # (beta1, beta2, score) for every point


def select_best(grid: Sequence[tuple[float, float, float]]) -> tuple[float, float, float]:
    """Highest score; ties by smallest norm, then lexicographically."""
    best = max(s for _, _, s in grid)
    tied = [g for g in grid if g[2] == best]
    return min(tied, key=lambda g: (g[0] * g[0] + g[1] * g[1], g[0], g[1]))


def search_betas(
    dev: PredictionTriple,
    gold: Sequence[str],
    labels: Sequence[str],
    metric: str | Callable = "macro-f1",
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    step: float = DEFAULT_STEP,
    temperature: float = 1.0,
    tau: float | None = None,
    pre_abstention: bool = False,
    eps: float = DEFAULT_EPS,
) -> BetaSearchResult:
    """Exhaustive grid search for the bias coefficients on a labelled dev set.

    Every grid point runs the downstream pipeline (normalize, inverse softmax,
    temperature, abstention) and is scored with ``metric``. With ``tau=None``
    the abstention threshold is refitted on the dev set at each grid point;
    ``pre_abstention=True`` scores plain argmax decisions instead.
    """
    from faithrel.pipeline import run_pipeline

    gold = list(gold)
    if len(gold) == 0 or len(dev) == 0:
        raise InvalidInputError("beta search needs a non-empty dev set")
    if len(gold) != len(dev):
        raise InvalidInputError("gold labels and predictions differ in length")
    score_fn = METRICS[metric] if isinstance(metric, str) else metric
    values = beta_grid(bounds[0], bounds[1], step)
    never = math.inf

    grid = []
    for b1 in values:
        for b2 in values:
            betas = BiasCoefficients(float(b1), float(b2), bounds[0], bounds[1])
            if pre_abstention:
                t = never
            elif tau is None:
                y_hat = run_pipeline(dev, betas, temperature, never, labels, eps).y_hat
                t = fit_threshold(y_hat, gold, labels) if any(g == "Vague" for g in gold) else never
            else:
                t = tau
            out = run_pipeline(dev, betas, temperature, t, labels, eps)
            grid.append((float(b1), float(b2), float(score_fn(gold, out.decisions, labels))))
    b1, b2, score = select_best(grid)
    return BetaSearchResult(BiasCoefficients(b1, b2, bounds[0], bounds[1]), score, tuple(grid))
