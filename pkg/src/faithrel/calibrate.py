"""Renormalisation, temperature scaling, calibration error and abstention."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from faithrel.core import VAGUE, InvalidInputError, check_categorical, entropy, softmax

DEFAULT_EPS = 1e-6
T_BOUNDS = (0.05, 20.0)
T_TOL = 1e-4
# high entropy means uncertain: abstain when entropy >= tau
ABSTAIN_AT_OR_ABOVE = True


@dataclass(frozen=True)
class CalibrationConfig:
    eps: float = DEFAULT_EPS
    temperature: float = 1.0
    entropy_threshold: float | None = None
    ece_bins: int = 10

    def __post_init__(self):
        if not 0 < self.eps <= 1e-3:
            raise InvalidInputError("eps must lie in (0, 1e-3]")
        if not self.temperature > 0:
            raise InvalidInputError("temperature must be positive")
        if self.ece_bins < 1:
            raise InvalidInputError("need at least one ECE bin")


def normalize(y_prime, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Clip into ``[eps, 1 - eps]`` and rescale to sum to one.

    Negative entries become ``eps`` and entries above one become ``1 - eps``.
    Positive entries below ``eps`` are raised to it as well: without that, a
    saturated softmax row such as (1, 1e-30, 1e-30) rescales back to an exact
    1.0 and has no inverse softmax.
    """
    y = np.asarray(y_prime, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("debiased scores must be finite")
    y = np.clip(y, eps, 1.0 - eps)
    return y / np.sum(y, axis=-1, keepdims=True)


def apply_temperature(z_prime, T: float) -> np.ndarray:
    if not T > 0:
        raise InvalidInputError("temperature must be positive")
    return softmax(np.asarray(z_prime, dtype=np.float64) / T)


def nll(logits: np.ndarray, gold: np.ndarray, T: float = 1.0) -> float:
    """Summed negative log-likelihood of the gold classes at temperature T."""
    z = np.asarray(logits, dtype=np.float64) / T
    m = np.max(z, axis=1, keepdims=True)
    lse = np.log(np.sum(np.exp(z - m), axis=1)) + m[:, 0]
    return float(np.sum(lse - z[np.arange(len(gold)), gold]))


def golden_section_min(f, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def fit_temperature(dev_logits, dev_labels, bounds=T_BOUNDS, tol: float = T_TOL) -> float:
    """Temperature minimising dev NLL, by golden-section search on ln T.

    The search result is compared against T = 1 and both bounds, and the best
    of those is returned, so NLL(T*) <= NLL(1) always holds.
    """
    z = np.asarray(dev_logits, dtype=np.float64)
    gold = np.asarray(dev_labels, dtype=np.int64)
    if z.ndim != 2 or z.shape[0] == 0:
        raise InvalidInputError("temperature fitting needs a non-empty dev set")
    if gold.shape != (z.shape[0],) or np.any(gold < 0) or np.any(gold >= z.shape[1]):
        raise InvalidInputError("dev labels must be in-distribution class indices")
    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    s = golden_section_min(lambda u: nll(z, gold, math.exp(u)), lo, hi, tol)
    candidates = [math.exp(s), 1.0, bounds[0], bounds[1]]
    scores = [nll(z, gold, t) for t in candidates]
    return candidates[int(np.argmin(scores))]


@dataclass(frozen=True)
class ReliabilityBin:
    lo: float
    hi: float
    count: int
    mean_conf: float
    mean_acc: float


@dataclass(frozen=True)
class ReliabilityReport:
    bins: tuple[ReliabilityBin, ...]
    ece: float
    nll: float
    n: int = field(default=0)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "count", "mean_conf", "mean_acc"])
            for b in self.bins:
                w.writerow([f"{b.lo:.9g}", f"{b.hi:.9g}", b.count, f"{b.mean_conf:.9g}", f"{b.mean_acc:.9g}"])
            w.writerow(["ECE", f"{self.ece:.9g}", "NLL", f"{self.nll:.9g}", ""])


def ece(probs, gold, n_bins: int = 10) -> ReliabilityReport:
    """Expected calibration error over equal-width bins ``((m-1)/M, m/M]``.

    ``nll`` in the report is the mean negative log-likelihood of the gold
    class, floored at 1e-12 probability.
    """
    p = check_categorical(np.atleast_2d(np.asarray(probs, dtype=np.float64)), atol=1e-6)
    gold = np.asarray(gold, dtype=np.int64)
    if p.shape[0] == 0:
        raise InvalidInputError("no predictions")
    if n_bins < 1:
        raise InvalidInputError("need at least one bin")
    n = p.shape[0]
    conf = np.max(p, axis=1)
    correct = (np.argmax(p, axis=1) == gold).astype(np.float64)
    edges = np.arange(n_bins + 1) / n_bins
    which = np.clip(np.searchsorted(edges, conf, side="left") - 1, 0, n_bins - 1)
    bins, total = [], 0.0
    for m in range(n_bins):
        sel = which == m
        cnt = int(sel.sum())
        if cnt:
            mc, ma = float(np.mean(conf[sel])), float(np.mean(correct[sel]))
            total += cnt / n * abs(ma - mc)
        else:
            mc = ma = 0.0
        bins.append(ReliabilityBin(float(edges[m]), float(edges[m + 1]), cnt, mc, ma))
    gold_p = np.maximum(p[np.arange(n), gold], 1e-12)
    return ReliabilityReport(tuple(bins), float(total), float(-np.mean(np.log(gold_p))), n)


def _abstains(h: float, tau: float) -> bool:
    return h >= tau if ABSTAIN_AT_OR_ABOVE else h <= tau


def abstain(y_hat, tau: float, labels: Sequence[str]) -> str:
    """``VAGUE`` when the entropy reaches ``tau``, otherwise the argmax label."""
    if _abstains(entropy(y_hat), tau):
        return VAGUE
    return labels[int(np.argmax(y_hat))]


def decide(y_hat: np.ndarray, tau: float, labels: Sequence[str]) -> list[str]:
    """Vectorised :func:`abstain` over rows."""
    y_hat = np.atleast_2d(y_hat)
    h = np.atleast_1d(entropy(y_hat))
    arg = np.argmax(y_hat, axis=1)
    return [VAGUE if _abstains(hh, tau) else labels[a] for hh, a in zip(h, arg)]


def threshold_candidates(entropies: np.ndarray, k: int) -> np.ndarray:
    return np.unique(np.concatenate([np.asarray(entropies, dtype=np.float64), [0.0, math.log(k)]]))


def threshold_scores(entropies, pred_correct, gold_vague, candidates) -> np.ndarray:
    """(K+1)-way micro-F1 (= accuracy) of every candidate threshold.

    ``pred_correct[i]``: the argmax decision of row i is right;
    ``gold_vague[i]``: row i is gold Vague (right exactly when abstained).
    """
    assert ABSTAIN_AT_OR_ABOVE, "threshold scan assumes high-entropy abstention"
    h = np.asarray(entropies, dtype=np.float64)
    order = np.argsort(h, kind="stable")
    hs = h[order]
    pc = np.concatenate([[0], np.cumsum(np.asarray(pred_correct, dtype=np.int64)[order])])
    gv = np.concatenate([[0], np.cumsum(np.asarray(gold_vague, dtype=np.int64)[order])])
    below = np.searchsorted(hs, candidates, side="left")  # rows with h < tau are predicted
    correct = pc[below] + (gv[-1] - gv[below])
    return correct / h.size


def fit_threshold(y_hat, gold: Sequence[str], labels: Sequence[str]) -> float:
    """Entropy threshold maximising (K+1)-way micro-F1 on a dev set; ties go low."""
    y_hat = np.atleast_2d(np.asarray(y_hat, dtype=np.float64))
    k = len(labels)
    gold = list(gold)
    if not gold:
        raise InvalidInputError("threshold fitting needs a non-empty dev set")
    gold_vague = np.array([g == VAGUE for g in gold])
    if not gold_vague.any():
        warnings.warn("dev set has no Vague pairs: the model will never abstain", stacklevel=2)
        return math.log(k)
    h = np.atleast_1d(entropy(y_hat))
    arg = np.argmax(y_hat, axis=1)
    pred_correct = np.array([labels[a] == g for a, g in zip(arg, gold)])
    cands = threshold_candidates(h, k)
    scores = threshold_scores(h, pred_correct, gold_vague, cands)
    return float(cands[int(np.argmax(scores))])
