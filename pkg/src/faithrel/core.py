"""Shared label vocabulary and the vector primitives used everywhere else.

All vector functions accept a 1-D array of length K or a 2-D array of shape
(n, K); reductions are taken along the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

VAGUE = "Vague"
DEFAULT_LABELS = ("Before", "After", "Simultaneous")


class InvalidInputError(ValueError):
    """Raised when a vector violates the numeric contract of an operation."""


@dataclass(frozen=True)
class LabelSet:
    """Ordered in-distribution relation vocabulary.

    ``Vague`` is never a member: it is the abstention outcome.
    """

    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise InvalidInputError("a label set needs at least two labels")
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"duplicate labels in {labels}")
        if VAGUE in labels:
            raise InvalidInputError("Vague is the abstention outcome, not a class")

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def with_vague(self) -> tuple[str, ...]:
        return self.labels + (VAGUE,)


def _as_finite(z) -> np.ndarray:
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise InvalidInputError("expected a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("logits must be finite")
    return arr


def logsumexp(z) -> np.ndarray | float:
    z = _as_finite(z)
    m = np.max(z, axis=-1, keepdims=True)
    out = np.log(np.sum(np.exp(z - m), axis=-1, keepdims=True)) + m
    out = np.squeeze(out, axis=-1)
    return float(out) if out.ndim == 0 else out


def softmax(z) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    z = _as_finite(z)
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def check_categorical(y, atol: float = 1e-9) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 0 or y.shape[-1] == 0:
        raise InvalidInputError("expected a non-empty probability vector")
    if not np.all(np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    if not np.allclose(np.sum(y, axis=-1), 1.0, rtol=0, atol=atol):
        raise InvalidInputError("probabilities must sum to 1")
    return y


def entropy(y) -> np.ndarray | float:
    """Shannon entropy in nats, with 0 ln 0 taken as 0."""
    y = check_categorical(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0)), 0.0)
    h = -np.sum(terms, axis=-1)
    # rounding can push a near-uniform vector a hair past ln K
    h = np.clip(h, 0.0, np.log(y.shape[-1]))
    return float(h) if np.ndim(h) == 0 else h


def inverse_softmax(y) -> np.ndarray:
    """Canonical logits ``ln y`` of a strictly interior distribution."""
    y = check_categorical(y)
    if np.any(y <= 0) or np.any(y >= 1):
        raise InvalidInputError(
            "inverse softmax needs every probability strictly inside (0, 1); normalize first"
        )
    return np.log(y)


def argmax(y: Sequence[float]) -> int:
    return int(np.argmax(np.asarray(y)))
