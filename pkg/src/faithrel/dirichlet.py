"""Dirichlet-prior objective over classifier logits.

The model output ``z`` is read as the Dirichlet ``Dir(exp(z))``. The per-example
loss is ``KL[Dir(exp(z)) || Dir(target)]``: a sharp target for labelled
in-distribution pairs and the flat all-ones Dirichlet for Vague pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from faithrel.core import InvalidInputError
from faithrel.special import digamma, gammaln, trigamma

LOGIT_CLAMP = 30.0
DEFAULT_ALPHA0_SHARP = 100.0
DEFAULT_EPS_SMOOTH = 0.01


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if alpha.ndim != 1 or alpha.size < 2:
            raise InvalidInputError("concentrations must be a vector of length >= 2")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
            raise InvalidInputError("concentrations must be positive and finite")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @property
    def alpha0(self) -> float:
        return float(np.sum(self.alpha))

    @property
    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha0

    def __eq__(self, other):
        return isinstance(other, DirichletParams) and np.array_equal(self.alpha, other.alpha)

    def __hash__(self):
        return hash(self.alpha.tobytes())


@dataclass(frozen=True)
class DirichletTargets:
    """One sharp target per gold label plus the flat OOD target."""

    alpha_sharp_per_class: tuple[DirichletParams, ...]
    alpha_flat: DirichletParams

    @classmethod
    def build(cls, k: int, alpha0_sharp: float = DEFAULT_ALPHA0_SHARP,
              eps_smooth: float = DEFAULT_EPS_SMOOTH) -> "DirichletTargets":
        if k < 2:
            raise InvalidInputError("need at least two classes")
        if not alpha0_sharp > k:
            raise InvalidInputError("alpha0_sharp must exceed the number of classes")
        if not 0 < eps_smooth < 1.0 / k:
            raise InvalidInputError("eps_smooth must lie in (0, 1/K)")
        sharp = []
        for c in range(k):
            alpha = np.full(k, eps_smooth * alpha0_sharp)
            alpha[c] = (1.0 - (k - 1) * eps_smooth) * alpha0_sharp
            sharp.append(DirichletParams(alpha))
        return cls(tuple(sharp), DirichletParams(np.ones(k)))

    @property
    def k(self) -> int:
        return self.alpha_flat.alpha.size

    def matrix(self, gold: np.ndarray) -> np.ndarray:
        """Target concentrations per row; ``gold == -1`` marks an OOD row."""
        gold = np.asarray(gold, dtype=np.int64)
        table = np.vstack([t.alpha for t in self.alpha_sharp_per_class] + [self.alpha_flat.alpha])
        return table[np.where(gold < 0, self.k, gold)]


def _alpha_of(a) -> np.ndarray:
    if isinstance(a, DirichletParams):
        return a.alpha
    return DirichletParams(a).alpha


def dirichlet_log_density(y, alpha):
    """``ln Dir(y; alpha)`` for strictly interior points of the simplex (one or a batch of rows)."""
    alpha = _alpha_of(alpha)
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != alpha.size:
        raise InvalidInputError("y and alpha must have the same length")
    if np.any(y <= 0) or np.any(y >= 1) or np.any(np.abs(np.sum(y, axis=-1) - 1.0) > 1e-9):
        raise InvalidInputError("density is only defined for interior points of the simplex")
    out = gammaln(np.sum(alpha)) - np.sum(gammaln(alpha)) + np.sum((alpha - 1.0) * np.log(y), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p0 = np.sum(p, axis=-1)
    q0 = np.sum(q, axis=-1)
    return (
        gammaln(p0)
        - np.sum(gammaln(p), axis=-1)
        - gammaln(q0)
        + np.sum(gammaln(q), axis=-1)
        + np.sum((p - q) * (digamma(p) - np.asarray(digamma(p0))[..., None]), axis=-1)
    )


def kl_dirichlet(p, q) -> float:
    """Closed-form ``KL[Dir(p) || Dir(q)]``."""
    p = _alpha_of(p)
    q = _alpha_of(q)
    if p.shape != q.shape:
        raise InvalidInputError("concentration vectors differ in length")
    return max(float(_kl_rows(p, q)), 0.0)


class LossResult(NamedTuple):
    loss: float | np.ndarray
    grad: np.ndarray
    clamped: bool | np.ndarray


def batch_loss_and_grad(z: np.ndarray, target_alpha: np.ndarray) -> LossResult:
    """Row-wise KL loss and its gradient with respect to the logits.

    With ``a = exp(z)`` the gradient is
    ``a_j * [(a_j - q_j) psi1(a_j) - (a0 - q0) psi1(a0)]``. Logits outside
    ``[-LOGIT_CLAMP, LOGIT_CLAMP]`` are clamped first and get zero gradient.
    """
    z = np.asarray(z, dtype=np.float64)
    q = np.asarray(target_alpha, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite")
    if z.shape != q.shape:
        raise InvalidInputError("logits and targets differ in shape")
    inside = np.abs(z) <= LOGIT_CLAMP
    zc = np.clip(z, -LOGIT_CLAMP, LOGIT_CLAMP)
    a = np.exp(zc)
    a0 = np.sum(a, axis=-1)
    q0 = np.sum(q, axis=-1)
    loss = _kl_rows(a, q)
    d_alpha = (a - q) * trigamma(a) - ((a0 - q0) * trigamma(a0))[..., None]
    grad = np.where(inside, a * d_alpha, 0.0)
    return LossResult(loss, grad, ~np.all(inside, axis=-1))


def loss_and_grad(z, target) -> LossResult:
    """Single-example loss, gradient and whether any logit was clamped."""
    q = _alpha_of(target)
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise InvalidInputError("expected one logit vector")
    res = batch_loss_and_grad(z[None, :], q[None, :])
    return LossResult(float(res.loss[0]), res.grad[0], bool(res.clamped[0]))
