"""Linear prior network over hashed features, trained on the Dirichlet objective."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from faithrel.dirichlet import (
    DEFAULT_ALPHA0_SHARP,
    DEFAULT_EPS_SMOOTH,
    DirichletTargets,
    batch_loss_and_grad,
)
from faithrel.preprocess import BUCKETS, NAMESPACES

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "faithrel-prior-net/1"


@dataclass(frozen=True)
class TrainConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    learning_rate: float = 0.005
    epochs: int = 30
    batch_size: int = 32
    alpha0_sharp: float = DEFAULT_ALPHA0_SHARP
    eps_smooth: float = DEFAULT_EPS_SMOOTH
    momentum: float = 0.0
    init_scale: float = 0.01
    grad_clip: float = 100.0
    seed: int = 0

    def validate(self, k: int) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.alpha0_sharp > k:
            raise ValueError("alpha0_sharp must exceed K")
        if not 0 < self.eps_smooth < 1.0 / k:
            raise ValueError("eps_smooth must lie in (0, 1/K)")
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs and batch_size must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class ModelParams:
    W: np.ndarray
    seed: int
    config: TrainConfig = field(default_factory=TrainConfig)
    history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, n_features: int, k: int, seed: int, scale: float = 0.01) -> "ModelParams":
        rng = np.random.default_rng(seed)
        return cls(scale * rng.standard_normal((n_features, k)), seed)

    def save(self, path: str | Path, labels: tuple[str, ...] = ()) -> None:
        body = {
            "format": CHECKPOINT_FORMAT,
            "k": self.k,
            "labels": list(labels),
            "namespaces": list(NAMESPACES),
            "buckets_per_namespace": BUCKETS,
            "n_features": self.W.shape[0],
            "seed": self.seed,
            "config": asdict(self.config),
            "history": [float(f"{v:.9g}") for v in self.history],
            "W": [float(f"{v:.9g}") for v in self.W.ravel(order="C")],
        }
        Path(path).write_text(json.dumps(body, separators=(",", ":")) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        body = json.loads(Path(path).read_text(encoding="utf-8"))
        if body.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a prior-net checkpoint")
        W = np.asarray(body["W"], dtype=np.float64).reshape(body["n_features"], body["k"])
        return cls(W, int(body["seed"]), TrainConfig(**body["config"]), list(body.get("history", [])))


def forward(params: ModelParams, features) -> np.ndarray:
    """Logits ``X @ W`` for a sparse or dense feature matrix (or one row)."""
    if sparse.issparse(features):
        X = features
    else:
        X = np.asarray(features, dtype=np.float64)
    if X.shape[-1] != params.W.shape[0]:
        raise ValueError("feature width does not match the model")
    return np.asarray(X @ params.W)


def objective(params: ModelParams, X, gold: np.ndarray, targets: DirichletTargets,
              lambda1: float, lambda2: float) -> float:
    """``lambda1 * mean ID KL + lambda2 * mean OOD KL`` over the whole set."""
    gold = np.asarray(gold)
    res = batch_loss_and_grad(forward(params, X), targets.matrix(gold))
    total = 0.0
    id_mask = gold >= 0
    if id_mask.any():
        total += lambda1 * float(np.mean(res.loss[id_mask]))
    if (~id_mask).any() and lambda2 > 0:
        total += lambda2 * float(np.mean(res.loss[~id_mask]))
    return total


def train(X, gold, k: int, config: TrainConfig | None = None) -> ModelParams:
    """Mini-batch gradient descent on the weighted Dirichlet objective.

    ``gold`` holds class indices, with -1 for Vague (OOD) rows. Per-row weights
    ``lambda1 / n_id`` and ``lambda2 / n_ood`` make each mini-batch gradient an
    unbiased estimate of the full-set objective.
    """
    config = config or TrainConfig()
    config.validate(k)
    gold = np.asarray(gold, dtype=np.int64)
    n = gold.size
    if n == 0:
        raise ValueError("empty training set")
    X = sparse.csr_matrix(X)
    targets = DirichletTargets.build(k, config.alpha0_sharp, config.eps_smooth)

    id_mask = gold >= 0
    n_id, n_ood = int(id_mask.sum()), int((~id_mask).sum())
    lambda2 = config.lambda2
    if n_ood == 0 and lambda2 > 0:
        warnings.warn("no OOD (Vague) examples: the OOD loss term is skipped", stacklevel=2)
        lambda2 = 0.0
    weights = np.zeros(n)
    if n_id:
        weights[id_mask] = config.lambda1 / n_id
    if n_ood:
        weights[~id_mask] = lambda2 / n_ood
    keep = weights > 0
    target_alpha = targets.matrix(gold)

    params = ModelParams.init(X.shape[1], k, config.seed, config.init_scale)
    params.config = config
    rng = np.random.default_rng(config.seed + 1)
    velocity = np.zeros_like(params.W)
    order_pool = np.flatnonzero(keep)
    for epoch in range(config.epochs):
        order = rng.permutation(order_pool)
        for start in range(0, order.size, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb = X[idx]
            res = batch_loss_and_grad(np.asarray(Xb @ params.W), target_alpha[idx])
            scale = (weights[idx] * (order.size / idx.size))[:, None]
            grad_w = np.asarray(Xb.T @ (res.grad * scale))
            norm = np.linalg.norm(grad_w)
            if norm > config.grad_clip:
                grad_w *= config.grad_clip / norm
            velocity = config.momentum * velocity - config.learning_rate * grad_w
            params.W += velocity
        loss = objective(params, X, gold, targets, config.lambda1, lambda2)
        params.history.append(loss)
        log.debug("epoch %d loss %.6f", epoch, loss)
    return params
