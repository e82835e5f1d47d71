"""Pivot-keyed suffix memory.

Each entry points at a span of an original recording by utterance id and
time; no audio is ever read or stored here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .errors import InconsistentInputs, StrError

_FLOAT_BYTES = 8
_INT_BYTES = 8


@dataclass(frozen=True)
class SuffixEntry:
    utterance_id: str
    pivot_index: int
    text_suffix: Tuple[str, ...]
    t_start: float
    t_end: float
    speaker: str = ""

    def to_json(self) -> dict:
        return {
            "utt": self.utterance_id,
            "pivot_index": self.pivot_index,
            "suffix": list(self.text_suffix),
            "t0": self.t_start,
            "t1": self.t_end,
            "speaker": self.speaker,
        }

    @classmethod
    def from_json(cls, obj) -> "SuffixEntry":
        return cls(obj["utt"], int(obj["pivot_index"]), tuple(obj["suffix"]),
                   float(obj["t0"]), float(obj["t1"]), obj.get("speaker", ""))


@dataclass
class SuffixMemory:
    table: Dict[str, List[SuffixEntry]] = field(default_factory=dict)
    build_config: dict = field(default_factory=dict)

    def lookup(self, pivot_surface: str) -> List[SuffixEntry]:
        return list(self.table.get(pivot_surface, ()))

    def __eq__(self, other):
        if not isinstance(other, SuffixMemory):
            return NotImplemented
        return self.table == other.table


def build_memory(corpus, alignments, pivots, build_config=None) -> SuffixMemory:
    """Index every (verb, following tokens) pair of the corpus.

    ``alignments`` holds only validated alignments; ``pivots`` maps
    utterance ids to their pivot lists. Utterances are visited in corpus
    order, so entry lists are too.
    """
    table: Dict[str, List[SuffixEntry]] = {}
    known = {u.id for u in corpus}
    stray = set(pivots) - known
    if stray:
        raise InconsistentInputs(f"pivots for utterances not in the corpus: {sorted(stray)[:5]}")
    for utt in corpus:
        points = pivots.get(utt.id)
        if not points:
            continue
        ali = alignments.get(utt.id)
        if ali is None:
            raise InconsistentInputs(f"{utt.id}: has pivots but no validated alignment")
        tokens = ali.tokens
        words = utt.transcript
        if len(tokens) != len(words):
            raise InconsistentInputs(f"{utt.id}: alignment has {len(tokens)} tokens, transcript {len(words)}")
        for p in points:
            if p.pivot_index + 1 >= len(tokens):
                continue
            entry = SuffixEntry(
                utterance_id=utt.id,
                pivot_index=p.pivot_index,
                text_suffix=tuple(words[p.pivot_index + 1:]),
                t_start=tokens[p.pivot_index + 1].t_start,
                t_end=tokens[-1].t_end,
                speaker=utt.speaker,
            )
            table.setdefault(p.pivot_surface, []).append(entry)
    return SuffixMemory(table, dict(build_config or {}))


def lookup(memory: SuffixMemory, pivot_surface: str) -> List[SuffixEntry]:
    return memory.lookup(pivot_surface)


def _entry_bytes(e: SuffixEntry) -> int:
    n = len(e.utterance_id.encode()) + len(e.speaker.encode())
    n += sum(len(t.encode()) for t in e.text_suffix)
    return n + 2 * _FLOAT_BYTES + _INT_BYTES


def memory_stats(memory: SuffixMemory) -> dict:
    """Key/entry counts and the size of the reference metadata in bytes."""
    n_entries = sum(len(v) for v in memory.table.values())
    size = sum(len(k.encode()) + sum(_entry_bytes(e) for e in v) for k, v in memory.table.items())
    return {"n_keys": len(memory.table), "n_entries": n_entries, "bytes_estimate": size}


def dumps_memory(memory: SuffixMemory) -> str:
    lines = [
        json.dumps({"pivot": k, "entries": [e.to_json() for e in v]}, ensure_ascii=False)
        for k, v in memory.table.items()
    ]
    return "".join(line + "\n" for line in lines)


def save_memory(memory: SuffixMemory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_memory(memory))


def load_memory(path) -> SuffixMemory:
    table = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                table[obj["pivot"]] = [SuffixEntry.from_json(e) for e in obj["entries"]]
            except (ValueError, KeyError, TypeError) as exc:
                raise StrError(f"{path}:{lineno}: bad memory record ({exc})") from exc
    return SuffixMemory(table)
