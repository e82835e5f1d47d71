"""Pivot selection, suffix sampling and recombination over a corpus."""
from __future__ import annotations

import hashlib
import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .alignment import DiscardReason
from .errors import InconsistentInputs, MalformedStats
from .memory import SuffixEntry, SuffixMemory
from .tagging import PivotPoint


@dataclass(frozen=True)
class Segment:
    utt: str
    t0: float
    t1: float


@dataclass(frozen=True)
class AugmentedExample:
    id: str
    segments: Tuple[Segment, ...]
    transcript: Tuple[str, ...]
    provenance: dict = field(hash=False)
    translation: Optional[str] = None

    @property
    def src_text(self) -> str:
        return " ".join(self.transcript)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "segments": [{"utt": s.utt, "t0": s.t0, "t1": s.t1} for s in self.segments],
            "src_text": self.src_text,
            "tgt_text": self.translation,
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_json(cls, obj) -> "AugmentedExample":
        return cls(
            id=obj["id"],
            segments=tuple(Segment(s["utt"], float(s["t0"]), float(s["t1"])) for s in obj["segments"]),
            transcript=tuple(obj["src_text"].split()),
            provenance=dict(obj["provenance"]),
            translation=obj.get("tgt_text"),
        )


@dataclass
class RunStats:
    """Per-reason accounting.

    Utterance level: ``total`` equals ``emitted`` plus every discard and
    skip counter. Example level: ``examples`` were generated, the first
    ``kept`` survived the fraction cut, and once translation has run,
    ``kept == translated + skipped_translation``.
    """

    total: int = 0
    discarded_no_alignment: int = 0
    discarded_count_mismatch: int = 0
    skipped_tag_mismatch: int = 0
    skipped_no_pivot: int = 0
    skipped_no_candidate: int = 0
    emitted: int = 0
    examples: int = 0
    kept: int = 0
    translated: int = 0
    skipped_translation: int = 0

    UTTERANCE_BUCKETS = (
        "discarded_no_alignment",
        "discarded_count_mismatch",
        "skipped_tag_mismatch",
        "skipped_no_pivot",
        "skipped_no_candidate",
    )

    def accounted(self) -> int:
        return self.emitted + sum(getattr(self, k) for k in self.UTTERANCE_BUCKETS)

    def check(self) -> None:
        if self.accounted() != self.total:
            raise AssertionError(f"accounting identity broken: {self.accounted()} != {self.total}")
        if self.translated or self.skipped_translation:
            if self.translated + self.skipped_translation != self.kept:
                raise AssertionError("translated + skipped_translation != kept")

    @property
    def discarded(self) -> int:
        return self.discarded_no_alignment + self.discarded_count_mismatch

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj) -> "RunStats":
        if not isinstance(obj, dict):
            raise MalformedStats("stats must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise MalformedStats(f"unknown stats fields {sorted(unknown)}")
        values = {}
        for k, v in obj.items():
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise MalformedStats(f"{k}: expected a non-negative integer, got {v!r}")
            values[k] = v
        return cls(**values)

    def __add__(self, other: "RunStats") -> "RunStats":
        return RunStats(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})


def utterance_seed(seed: int, utterance_id: str) -> int:
    """Stable 64-bit seed for one utterance, independent of processing order."""
    digest = hashlib.blake2b(f"{seed}\x00{utterance_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def utterance_rng(seed: int, utterance_id: str) -> random.Random:
    return random.Random(utterance_seed(seed, utterance_id))


def choose_pivot(pivots: Sequence[PivotPoint], rng: random.Random) -> PivotPoint:
    return pivots[rng.randrange(len(pivots))]


def sample_suffix(memory: SuffixMemory, pivot: PivotPoint, original_suffix, rng: random.Random,
                  allow_identical_suffix=False) -> Optional[SuffixEntry]:
    """Uniform draw among entries for the pivot surface.

    Entries from the target utterance itself are never candidates, nor are
    suffixes textually equal to the original one unless explicitly allowed.
    """
    original = tuple(original_suffix)
    candidates = [
        e for e in memory.lookup(pivot.pivot_surface)
        if e.utterance_id != pivot.utterance_id
        and (allow_identical_suffix or e.text_suffix != original)
    ]
    if not candidates:
        return None
    return candidates[rng.randrange(len(candidates))]


def recombine(utt_a, alignment_a, pivot: PivotPoint, entry: SuffixEntry, k: int = 0) -> AugmentedExample:
    """Prefix and pivot of A (text and audio) followed by the suffix of B."""
    words = utt_a.transcript
    transcript = tuple(words[: pivot.pivot_index + 1]) + tuple(entry.text_suffix)
    pivot_end = alignment_a.tokens[pivot.pivot_index].t_end
    return AugmentedExample(
        id=f"{utt_a.id}-str-{k}",
        segments=(Segment(utt_a.id, 0.0, pivot_end), Segment(entry.utterance_id, entry.t_start, entry.t_end)),
        transcript=transcript,
        provenance={
            "src_a": utt_a.id,
            "src_b": entry.utterance_id,
            "pivot": pivot.pivot_surface,
            "pivot_index": pivot.pivot_index,
            "src_b_pivot_index": entry.pivot_index,
        },
    )


def keep_count(n: int, fraction: float) -> int:
    """``ceil(fraction * n)`` without float noise (1/3 of 255 is 85)."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    return math.ceil(Fraction(fraction).limit_denominator(10**6) * n)


def _augment_one(utt, verdict, points, memory, seed, per_utterance, allow_identical):
    if verdict is None or not verdict.keep:
        reason = verdict.reason if verdict is not None else DiscardReason.NO_ALIGNMENT
        if reason is DiscardReason.COUNT_MISMATCH:
            return "discarded_count_mismatch", []
        return "discarded_no_alignment", []
    if points is None:
        return "skipped_tag_mismatch", []
    if not points:
        return "skipped_no_pivot", []
    rng = utterance_rng(seed, utt.id)
    words = utt.transcript
    out = []
    seen = set()
    for _ in range(per_utterance):
        pivot = choose_pivot(points, rng)
        entry = sample_suffix(memory, pivot, words[pivot.pivot_index + 1:], rng, allow_identical)
        if entry is None:
            continue
        key = (pivot.pivot_index, entry.utterance_id, entry.pivot_index)
        if key in seen:
            continue
        seen.add(key)
        out.append(recombine(utt, verdict.alignment, pivot, entry, k=len(out)))
    if not out:
        return "skipped_no_candidate", []
    return "emitted", out


def augment_corpus(corpus, memory: SuffixMemory, verdicts: Dict, pivots: Dict[str, List[PivotPoint]],
                   seed: int = 0, fraction: float = 1.0, per_utterance: int = 1,
                   allow_identical_suffix: bool = False, workers: int = 1):
    """Generate augmented examples for a whole corpus.

    ``verdicts`` maps every utterance id to its alignment verdict; ``pivots``
    holds pivot lists for utterances whose tags matched their transcript
    (absent ids count as tag mismatches). Output is in manifest order and
    does not depend on ``workers``.
    """
    ids = [u.id for u in corpus]
    id_set = set(ids)
    missing = id_set - set(verdicts)
    if missing:
        raise InconsistentInputs(f"no alignment verdict for {sorted(missing)[:5]}")
    stray = (set(verdicts) | set(pivots)) - id_set
    if stray:
        raise InconsistentInputs(f"inputs reference utterances outside the corpus: {sorted(stray)[:5]}")
    if per_utterance < 1:
        raise ValueError("per_utterance must be >= 1")
    keep_count(0, fraction)

    def work(utt):
        return _augment_one(utt, verdicts[utt.id], pivots.get(utt.id), memory, seed,
                            per_utterance, allow_identical_suffix)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, corpus.utterances))
    else:
        results = [work(u) for u in corpus.utterances]

    stats = RunStats(total=len(ids))
    examples = []
    for bucket, produced in results:
        setattr(stats, bucket, getattr(stats, bucket) + 1)
        examples.extend(produced)
    stats.examples = len(examples)
    examples = examples[: keep_count(len(examples), fraction)]
    stats.kept = len(examples)
    return examples, stats


def dumps_compositions(examples) -> str:
    return "".join(json.dumps(e.to_json(), ensure_ascii=False) + "\n" for e in examples)


def save_compositions(examples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_compositions(examples))


def load_compositions(path) -> List[AugmentedExample]:
    with open(path, encoding="utf-8") as f:
        return [AugmentedExample.from_json(json.loads(line)) for line in f if line.strip()]
