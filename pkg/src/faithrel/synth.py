"""Synthetic temporal-relation corpora with controllable shortcuts.

Every document has ``EVENTS_PER_DOC`` events with hidden integer times; each
narratively ordered event pair becomes one record whose label follows from
the two times. The true signal is a single cue word placed in the context
between the two events. Two shortcuts can be planted on top of it:

* trigger bias: with probability ``trigger_bias_strength`` an event's trigger
  is drawn from the pool matching its time rank, so trigger pairs predict the
  label. The anti-bias test split draws from the reversed rank instead.
* label skew: with probability ``label_skew`` a document's times follow the
  narrative order, which makes every pair in it ``Before``.

Vague records carry cue words of two or more different relations.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from itertools import combinations

import numpy as np

from faithrel.core import DEFAULT_LABELS, VAGUE
from faithrel.records import CorpusRecord

EVENTS_PER_DOC = 4

CUES = {
    "Before": (
        "earlier", "previously", "beforehand", "prior", "formerly", "first", "ahead", "already",
        "preceding", "initially", "originally", "once", "until", "pending", "yet", "preliminary",
        "advance", "preparatory", "erstwhile", "sooner", "foregoing", "heretofore", "hitherto", "precursor",
    ),
    "After": (
        "later", "afterwards", "subsequently", "thereafter", "following", "eventually", "next", "since",
        "then", "finally", "ensuing", "succeeding", "afterward", "thereupon", "consequently", "post",
        "belatedly", "ultimately", "lastly", "henceforth", "resulting", "followup", "aftermath", "successor",
    ),
    "Simultaneous": (
        "meanwhile", "simultaneously", "concurrently", "while", "during", "together", "amid", "alongside",
        "throughout", "coinciding", "synchronously", "jointly", "parallel", "whilst", "contemporaneously",
        "amidst", "coincident", "concomitant", "mid", "midway", "overlapping", "tandem", "likewise", "samewhile",
    ),
}

TRIGGER_POOLS = (
    ("planned", "announced", "prepared", "proposed"),
    ("began", "launched", "opened", "started"),
    ("continued", "expanded", "reviewed", "tested"),
    ("ended", "closed", "concluded", "finished"),
)

TENSES = (
    "Past Simple",
    "Present Simple",
    "Present Perfect Simple",
    "Past Perfect Simple",
    "Future Simple",
    "Past Continuous",
)

FILLER = tuple(
    """the a of to in and for on with by officials report city group said its
    at from as was were has have that this an it their new two people local
    state county office team members spokesman statement plan program market
    company board police court school river road bridge village region crowd
    press family staff week day month year morning evening night hour public
    private national federal small large major minor final initial central
    northern southern western eastern several many few most some other such
    about over under near across around against among between into onto upon
    told asked noted added stated reported confirmed denied claimed argued
    water power money trade policy budget season election council agency
    """.split()
)


@dataclass(frozen=True)
class GenConfig:
    n_train: int = 6000
    n_dev: int = 1200
    n_test: int = 1200
    trigger_bias_strength: float = 0.5
    label_skew: float = 0.3
    vague_fraction: float = 1.0 / 6.0
    anti_bias_test: bool = False
    # None: bias-free dev when the test split is anti-biased, else the train strength
    dev_trigger_bias: float | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("n_train", "n_dev", "n_test"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("trigger_bias_strength", "label_skew", "vague_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.dev_trigger_bias is not None and not 0.0 <= self.dev_trigger_bias <= 1.0:
            raise ValueError("dev_trigger_bias must lie in [0, 1]")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def split_bias(self, split: str) -> tuple[float, bool]:
        """Trigger-bias strength and whether the rank pools are reversed."""
        if split == "dev":
            if self.dev_trigger_bias is not None:
                return self.dev_trigger_bias, False
            return (0.0 if self.anti_bias_test else self.trigger_bias_strength), False
        if split == "test":
            return self.trigger_bias_strength, self.anti_bias_test
        return self.trigger_bias_strength, False


SPLITS = ("train", "dev", "test")


def relation(t1: int, t2: int) -> str:
    if t1 < t2:
        return "Before"
    if t1 > t2:
        return "After"
    return "Simultaneous"


def dense_rank(times: np.ndarray) -> np.ndarray:
    distinct = np.unique(times)
    return np.searchsorted(distinct, times)


def _filler(rng, lo=4, hi=9) -> list[str]:
    return [FILLER[i] for i in rng.integers(0, len(FILLER), size=rng.integers(lo, hi + 1))]


def _sentence_with(rng, token: str) -> tuple[list[str], int]:
    words = _filler(rng)
    at = int(rng.integers(0, len(words) + 1))
    words.insert(at, token)
    return words, at


def _build_record(rng, rid, doc_id, i, j, trig, tense, label, cue_labels) -> CorpusRecord:
    sentences: list[list[str]] = []
    for _ in range(int(rng.integers(0, 3))):  # leading sentences, usually outside the window
        sentences.append(_filler(rng))
    s1, t1 = _sentence_with(rng, trig[i])
    e1_pos = (len(sentences), t1)
    sentences.append(s1)
    for _ in range(int(rng.integers(0, 2))):
        sentences.append(_filler(rng))
    cue_sentence = _filler(rng, 3, 7)
    for lab in cue_labels:
        cue = CUES[lab][int(rng.integers(0, len(CUES[lab])))]
        cue_sentence.insert(int(rng.integers(0, len(cue_sentence) + 1)), cue)
    sentences.append(cue_sentence)
    s2, t2 = _sentence_with(rng, trig[j])
    e2_pos = (len(sentences), t2)
    sentences.append(s2)
    for _ in range(int(rng.integers(0, 3))):
        sentences.append(_filler(rng))
    return CorpusRecord(
        id=rid,
        doc_id=doc_id,
        e1=trig[i],
        e2=trig[j],
        narrative_idx1=i,
        narrative_idx2=j,
        tense1=tense[i],
        tense2=tense[j],
        sentences=tuple(tuple(s) for s in sentences),
        e1_pos=e1_pos,
        e2_pos=e2_pos,
        label=label,
    )


def generate_split(config: GenConfig, split: str, labels=DEFAULT_LABELS):
    """Return ``(records, gold_timelines)`` for one split."""
    if tuple(labels) != DEFAULT_LABELS:
        raise ValueError("the generator's cue lexicon covers Before/After/Simultaneous only")
    n = {"train": config.n_train, "dev": config.n_dev, "test": config.n_test}[split]
    rng = np.random.default_rng([config.seed, SPLITS.index(split)])
    strength, reverse = config.split_bias(split)

    pairs_per_doc = EVENTS_PER_DOC * (EVENTS_PER_DOC - 1) // 2
    n_docs = -(-n // pairs_per_doc)
    n_vague = int(round(config.vague_fraction * n))
    vague_ids = set(rng.permutation(n)[:n_vague].tolist())

    records: list[CorpusRecord] = []
    timelines: list[dict] = []
    for d in range(n_docs):
        doc_id = f"{split}-d{d:05d}"
        if rng.random() < config.label_skew:
            times = np.arange(EVENTS_PER_DOC)
        else:
            times = rng.integers(0, EVENTS_PER_DOC, size=EVENTS_PER_DOC)
        ranks = dense_rank(times)
        trig, tense = [], []
        for e in range(EVENTS_PER_DOC):
            if rng.random() < strength:
                pool = EVENTS_PER_DOC - 1 - ranks[e] if reverse else ranks[e]
            else:
                pool = int(rng.integers(0, len(TRIGGER_POOLS)))
            words = TRIGGER_POOLS[pool]
            trig.append(words[int(rng.integers(0, len(words)))])
            tense.append(TENSES[int(rng.integers(0, len(TENSES)))])

        used: set[int] = set()
        for i, j in combinations(range(EVENTS_PER_DOC), 2):
            idx = len(records)
            if idx >= n:
                break
            true = relation(int(times[i]), int(times[j]))
            if idx in vague_ids:
                n_cues = int(rng.integers(2, len(labels) + 1))
                pick = rng.choice(len(labels), size=n_cues, replace=False)
                cue_labels = [labels[int(p)] for p in sorted(pick)]
                label = VAGUE
            else:
                cue_labels = [true]
                label = true
            rid = f"{doc_id}-p{i}{j}"
            records.append(_build_record(rng, rid, doc_id, i, j, trig, tense, label, cue_labels))
            used.update((i, j))
        order = sorted(used, key=lambda e: (int(times[e]), e))
        timelines.append({"doc_id": doc_id, "timeline": [f"e{e}" for e in order]})
    return records, timelines


def generate(config: GenConfig):
    """All three splits: ``{split: (records, gold_timelines)}``."""
    return {split: generate_split(config, split) for split in SPLITS}


def cue_classifier(record: CorpusRecord) -> str:
    """Reads only the planted cue words; the generator's self-check oracle."""
    win_tokens = {tok for s in record.sentences for tok in s}
    hits = [lab for lab, words in CUES.items() if win_tokens.intersection(words)]
    return hits[0] if len(hits) == 1 else VAGUE
