"""Context windows, event/tense markers and hashed namespace features.

Event one is enclosed as ``@ * <tense> * <trigger> @`` and event two as
``# ∧ <tense> ∧ <trigger> #``. Features are hashed bags of tokens, one block
of ``BUCKETS`` columns per namespace, so that counterfactual views are
produced by zeroing whole namespaces.
"""

from __future__ import annotations

import zlib
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse

E1_MARK, E1_TENSE = "@", "*"
E2_MARK, E2_TENSE = "#", "∧"
MARKER_TOKENS = frozenset({E1_MARK, E1_TENSE, E2_MARK, E2_TENSE})

NAMESPACES = ("context", "trigger1", "trigger2", "tense", "bias")
BUCKETS = 1024
N_FEATURES = BUCKETS * len(NAMESPACES)
BIAS_TOKEN = "<bias>"

FeatureMap = dict[str, Counter]


class MarkerCollisionError(ValueError):
    pass


@dataclass(frozen=True)
class RawPair:
    doc_id: str
    sentences: tuple[tuple[str, ...], ...]
    e1_pos: tuple[int, int]
    e2_pos: tuple[int, int]
    tense1: str = ""
    tense2: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        object.__setattr__(self, "e1_pos", tuple(self.e1_pos))
        object.__setattr__(self, "e2_pos", tuple(self.e2_pos))
        for s, t in (self.e1_pos, self.e2_pos):
            if not (0 <= s < len(self.sentences) and 0 <= t < len(self.sentences[s])):
                raise ValueError(f"event position {(s, t)} out of range")
        if self.e1_pos >= self.e2_pos:
            raise ValueError("e1 must precede e2 in narrative order")

    @property
    def trigger1(self) -> str:
        s, t = self.e1_pos
        return self.sentences[s][t]

    @property
    def trigger2(self) -> str:
        s, t = self.e2_pos
        return self.sentences[s][t]


@dataclass(frozen=True)
class Window:
    """Contiguous sentence span plus the triggers' flat token offsets."""

    first_sentence: int
    sentences: tuple[tuple[str, ...], ...]
    e1_offset: int
    e2_offset: int

    @property
    def tokens(self) -> list[str]:
        return [tok for s in self.sentences for tok in s]


@dataclass(frozen=True)
class MarkedContext:
    tokens: tuple[str, ...]


def select_context(pair: RawPair) -> Window:
    """Sentence before e1 through the sentence after e2, clipped to the document."""
    lo = max(pair.e1_pos[0] - 1, 0)
    hi = min(pair.e2_pos[0] + 1, len(pair.sentences) - 1)
    sentences = pair.sentences[lo : hi + 1]

    def offset(pos):
        s, t = pos
        return sum(len(x) for x in pair.sentences[lo:s]) + t

    return Window(lo, sentences, offset(pair.e1_pos), offset(pair.e2_pos))


def _tense_tokens(tense: str) -> list[str]:
    return tense.split()


def affix_markers(window: Window, pair: RawPair) -> MarkedContext:
    tokens = window.tokens
    n = len(tokens)
    if not (0 <= window.e1_offset < window.e2_offset < n):
        raise AssertionError("both triggers must fall inside the window")
    if tokens[window.e1_offset] != pair.trigger1 or tokens[window.e2_offset] != pair.trigger2:
        raise AssertionError("window offsets do not point at the pair's triggers")
    for tok in tokens + _tense_tokens(pair.tense1) + _tense_tokens(pair.tense2):
        if tok in MARKER_TOKENS:
            raise MarkerCollisionError(f"corpus token {tok!r} collides with a marker")

    out: list[str] = []
    for i, tok in enumerate(tokens):
        if i == window.e1_offset:
            out += [E1_MARK, E1_TENSE, *_tense_tokens(pair.tense1), E1_TENSE, tok, E1_MARK]
        elif i == window.e2_offset:
            out += [E2_MARK, E2_TENSE, *_tense_tokens(pair.tense2), E2_TENSE, tok, E2_MARK]
        else:
            out.append(tok)
    return MarkedContext(tuple(out))


def parse_marked(marked: MarkedContext) -> dict[str, list[str]]:
    """Split a marked context back into its parts.

    Returns ``context`` (the window with triggers removed), ``window`` (the
    original window), ``trigger1``/``trigger2`` and ``tense1``/``tense2``.
    """
    toks = list(marked.tokens)
    parts = {"context": [], "window": [], "trigger1": [], "trigger2": [], "tense1": [], "tense2": []}
    i = 0
    while i < len(toks):
        tok = toks[i]
        if tok in (E1_MARK, E2_MARK):
            which, delim = ("1", E1_TENSE) if tok == E1_MARK else ("2", E2_TENSE)
            if toks[i + 1] != delim:
                raise ValueError("malformed marker span")
            j = toks.index(delim, i + 2)
            parts["tense" + which] = toks[i + 2 : j]
            trigger = toks[j + 1]
            if toks[j + 2] != tok:
                raise ValueError("malformed marker span")
            parts["trigger" + which] = [trigger]
            parts["window"].append(trigger)
            i = j + 3
        else:
            parts["context"].append(tok)
            parts["window"].append(tok)
            i += 1
    return parts


def strip_markers(marked: MarkedContext) -> list[str]:
    return parse_marked(marked)["window"]


def _bucket(namespace: str, token: str) -> int:
    return zlib.crc32(f"{namespace}\x1f{token}".encode("utf-8")) % BUCKETS


def extract_features(pair: RawPair) -> FeatureMap:
    parts = parse_marked(affix_markers(select_context(pair), pair))
    tense = ["1=" + " ".join(parts["tense1"]), "2=" + " ".join(parts["tense2"])]
    raw = {
        "context": parts["context"],
        "trigger1": parts["trigger1"],
        "trigger2": parts["trigger2"],
        "tense": tense,
        "bias": [BIAS_TOKEN],
    }
    return {ns: Counter(_bucket(ns, t) for t in raw[ns]) for ns in NAMESPACES}


TRIGGER_ONLY_NAMESPACES = ("trigger1", "trigger2", "tense", "bias")


def derive_views(features: FeatureMap) -> tuple[FeatureMap, FeatureMap, FeatureMap]:
    """Full, trigger-only (context zeroed) and empty (bias only) views."""
    full = {ns: Counter(features.get(ns, {})) for ns in NAMESPACES}
    trigger_only = {ns: (Counter(full[ns]) if ns in TRIGGER_ONLY_NAMESPACES else Counter()) for ns in NAMESPACES}
    empty = {ns: Counter() for ns in NAMESPACES}
    empty["bias"] = Counter({_bucket("bias", BIAS_TOKEN): 1})
    return full, trigger_only, empty


def to_matrix(feature_maps: list[FeatureMap]) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for r, fmap in enumerate(feature_maps):
        for n_idx, ns in enumerate(NAMESPACES):
            for bucket, count in sorted(fmap.get(ns, {}).items()):
                if count:
                    rows.append(r)
                    cols.append(n_idx * BUCKETS + bucket)
                    vals.append(float(count))
    return sparse.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(feature_maps), N_FEATURES),
    )
