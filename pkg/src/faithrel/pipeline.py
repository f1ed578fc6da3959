"""End-to-end inference: model views -> debias -> normalize -> temperature -> abstain."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from faithrel.calibrate import DEFAULT_EPS, apply_temperature, decide, normalize
from faithrel.core import entropy, inverse_softmax, softmax
from faithrel.counterfactual import BiasCoefficients, PredictionTriple, debias
from faithrel.model import ModelParams, forward
from faithrel.preprocess import derive_views, extract_features, to_matrix
from faithrel.records import CorpusRecord


@dataclass(frozen=True)
class PipelineOutput:
    y_debiased: np.ndarray
    z_prime: np.ndarray
    y_hat: np.ndarray
    entropy: np.ndarray
    decisions: list[str]
    confidence: np.ndarray


def run_pipeline(triple: PredictionTriple, betas: BiasCoefficients, temperature: float,
                 tau: float, labels: Sequence[str], eps: float = DEFAULT_EPS) -> PipelineOutput:
    y_prime = np.atleast_2d(debias(triple, betas))
    z_prime = inverse_softmax(normalize(y_prime, eps))
    y_hat = apply_temperature(z_prime, temperature)
    return PipelineOutput(
        y_debiased=y_prime,
        z_prime=z_prime,
        y_hat=y_hat,
        entropy=np.atleast_1d(entropy(y_hat)),
        decisions=decide(y_hat, tau, labels),
        confidence=np.max(y_hat, axis=1),
    )


@dataclass(frozen=True)
class FeaturizedSet:
    full: object  # scipy sparse matrices
    trigger_only: object
    empty: object
    gold: list[str]


def featurize(records: Sequence[CorpusRecord]) -> FeaturizedSet:
    views = [derive_views(extract_features(r.raw_pair())) for r in records]
    return FeaturizedSet(
        to_matrix([v[0] for v in views]),
        to_matrix([v[1] for v in views]),
        to_matrix([v[2] for v in views]),
        [r.label for r in records],
    )


def gold_indices(gold: Sequence[str], labels: Sequence[str]) -> np.ndarray:
    """Class index per record, -1 for Vague."""
    index = {lab: i for i, lab in enumerate(labels)}
    return np.array([index.get(g, -1) for g in gold], dtype=np.int64)


def predict_views(params: ModelParams, data: FeaturizedSet) -> PredictionTriple:
    return PredictionTriple(
        softmax(forward(params, data.full)),
        softmax(forward(params, data.trigger_only)),
        softmax(forward(params, data.empty)),
    )
