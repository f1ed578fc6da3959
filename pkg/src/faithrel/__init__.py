"""Temporal-relation extraction over classifier logits.

Dirichlet-prior training, counterfactual debiasing, temperature scaling,
entropy-based abstention and timeline construction, runnable end to end
with a toy hashed-feature classifier on synthetic corpora.
"""

from faithrel.core import (
    VAGUE,
    InvalidInputError,
    LabelSet,
    entropy,
    inverse_softmax,
    logsumexp,
    softmax,
)

__all__ = [
    "VAGUE",
    "InvalidInputError",
    "LabelSet",
    "entropy",
    "inverse_softmax",
    "logsumexp",
    "softmax",
]

__version__ = "0.1.0"
