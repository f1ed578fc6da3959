"""F1 scores over relation decisions.

Two views are reported. In the K-way view Vague is not a class: abstentions
are simply not predictions, and a prediction on a gold-Vague pair is a false
positive. In the (K+1)-way view Vague is one more class.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from faithrel.core import VAGUE


def confusion(gold: Sequence[str], pred: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    """Counts for ``classes + (VAGUE,)``; rows gold, columns predicted."""
    names = list(classes) + ([VAGUE] if VAGUE not in classes else [])
    index = {c: i for i, c in enumerate(names)}
    m = np.zeros((len(names), len(names)), dtype=np.int64)
    for g, p in zip(gold, pred, strict=True):
        if g not in index or p not in index:
            raise ValueError(f"label outside {names}: {g if g not in index else p!r}")
        m[index[g], index[p]] += 1
    return m


def _prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def f1_scores(gold: Sequence[str], pred: Sequence[str], labels: Sequence[str],
              include_vague: bool = False) -> dict[str, float]:
    """Micro and macro F1 over ``labels`` (plus Vague when ``include_vague``)."""
    m = confusion(gold, pred, labels)
    k = len(labels)
    scored = range(k + 1) if include_vague else range(k)
    tp = np.array([m[c, c] for c in scored])
    fp = np.array([m[:, c].sum() - m[c, c] for c in scored])
    fn = np.array([m[c, :].sum() - m[c, c] for c in scored])
    micro = _prf(tp.sum(), fp.sum(), fn.sum())
    macro = float(np.mean([_prf(a, b, c) for a, b, c in zip(tp, fp, fn)]))
    return {"micro_f1": float(micro), "macro_f1": macro}


def macro_f1(gold, pred, labels) -> float:
    return f1_scores(gold, pred, labels)["macro_f1"]


def micro_f1(gold, pred, labels) -> float:
    return f1_scores(gold, pred, labels)["micro_f1"]


METRICS = {"macro-f1": macro_f1, "micro-f1": micro_f1}
