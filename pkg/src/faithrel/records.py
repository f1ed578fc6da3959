"""JSONL record types shared by the generator, the pipeline and the CLI.

Floats are written at 9 significant digits so artifacts diff cleanly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, TypeVar

from faithrel.core import DEFAULT_LABELS, VAGUE
from faithrel.preprocess import RawPair

FLOAT_DIGITS = 9

T = TypeVar("T")


class RecordError(ValueError):
    pass


def round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.{FLOAT_DIGITS}g}")
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return round_floats(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(round_floats(obj), ensure_ascii=False, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    doc_id: str
    e1: str
    e2: str
    narrative_idx1: int
    narrative_idx2: int
    tense1: str
    tense2: str
    sentences: tuple[tuple[str, ...], ...]
    e1_pos: tuple[int, int]
    e2_pos: tuple[int, int]
    label: str

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        object.__setattr__(self, "e1_pos", tuple(self.e1_pos))
        object.__setattr__(self, "e2_pos", tuple(self.e2_pos))

    @property
    def event1(self) -> str:
        return f"e{self.narrative_idx1}"

    @property
    def event2(self) -> str:
        return f"e{self.narrative_idx2}"

    def raw_pair(self) -> RawPair:
        return RawPair(self.doc_id, self.sentences, self.e1_pos, self.e2_pos, self.tense1, self.tense2)

    def validate(self, labels: Iterable[str] = DEFAULT_LABELS) -> "CorpusRecord":
        if self.label not in tuple(labels) + (VAGUE,):
            raise RecordError(f"record {self.id}: unknown label {self.label!r}")
        pair = self.raw_pair()
        if pair.trigger1 != self.e1 or pair.trigger2 != self.e2:
            raise RecordError(f"record {self.id}: trigger positions do not match e1/e2")
        return self


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    doc_id: str
    event1: str
    event2: str
    gold: str
    y_full: tuple[float, ...]
    y_trigger: tuple[float, ...]
    y_empty: tuple[float, ...]
    y_debiased: tuple[float, ...]
    y_hat: tuple[float, ...]
    entropy: float
    decision: str
    confidence: float

    def __post_init__(self):
        for name in ("y_full", "y_trigger", "y_empty", "y_debiased", "y_hat"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = len(self.y_full)
        if any(len(getattr(self, n)) != k for n in ("y_trigger", "y_empty", "y_debiased", "y_hat")):
            raise RecordError(f"prediction {self.id}: vectors differ in length")


def to_json_line(record) -> str:
    return dumps(asdict(record))


def from_dict(cls: type[T], data: dict) -> T:
    names = {f.name for f in fields(cls)}
    missing = names - data.keys()
    if missing:
        raise RecordError(f"{cls.__name__}: missing fields {sorted(missing)}")
    return cls(**{k: data[k] for k in names})


def write_jsonl(path: str | Path, records: Iterable) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write((to_json_line(r) if hasattr(r, "__dataclass_fields__") else dumps(r)) + "\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"{path}:{lineno}: {exc}") from exc


def read_jsonl(path: str | Path, cls: type[T]) -> list[T]:
    return [from_dict(cls, d) for d in iter_jsonl(path)]
