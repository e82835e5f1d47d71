"""CoNLL-U ingest and verb pivot detection."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from .errors import MalformedRow, MissingSentId

PIVOT_UPOS = "VERB"


@dataclass(frozen=True)
class TaggedSentence:
    utterance_id: str
    tokens: Tuple[Tuple[str, str], ...]  # (form, upos)

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class PivotPoint:
    utterance_id: str
    pivot_index: int
    pivot_surface: str
    length: int

    @property
    def prefix_range(self) -> range:
        return range(0, self.pivot_index)

    @property
    def suffix_range(self) -> range:
        return range(self.pivot_index + 1, self.length)


def parse_conllu(path) -> List[TaggedSentence]:
    """Read ID, FORM and UPOS from a CoNLL-U file.

    Each block must carry ``# sent_id = <utterance id>``. Multiword ranges
    (``3-4``) and empty nodes (``3.1``) are skipped.
    """
    sentences = []
    sent_id = None
    rows: List[Tuple[str, str]] = []
    start_line = None

    def flush():
        nonlocal sent_id, rows, start_line
        if rows or sent_id is not None:
            if sent_id is None:
                raise MissingSentId(f"{path}:{start_line}: sentence block without '# sent_id'")
            sentences.append(TaggedSentence(sent_id, tuple(rows)))
        sent_id, rows, start_line = None, [], None

    with open(Path(path), encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                flush()
                continue
            if start_line is None:
                start_line = lineno
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep and key.strip() == "sent_id":
                    sent_id = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) < 4:
                raise MalformedRow(f"{path}:{lineno}: expected 10 tab-separated columns, got {len(cols)}")
            tid = cols[0]
            if "-" in tid or "." in tid:
                continue
            if not tid.isdigit():
                raise MalformedRow(f"{path}:{lineno}: bad token id {tid!r}")
            rows.append((cols[1], cols[3]))
        flush()
    return sentences


def find_pivots(sentence: TaggedSentence) -> List[PivotPoint]:
    """Every VERB that has at least one token after it, in position order."""
    n = len(sentence.tokens)
    return [
        PivotPoint(sentence.utterance_id, i, form, n)
        for i, (form, upos) in enumerate(sentence.tokens)
        if upos == PIVOT_UPOS and i < n - 1
    ]


def pivots_for_corpus(corpus, sentences: List[TaggedSentence]):
    """Match tagged sentences to utterances by id and position.

    Returns ``(pivots, mismatched)``: ``pivots`` maps every utterance whose
    tag count equals its transcript length to its pivots (possibly empty),
    with surfaces taken from the normalized transcript; ``mismatched`` lists
    the ids that were untagged or had a different token count.
    """
    tagged: Dict[str, TaggedSentence] = {s.utterance_id: s for s in sentences}
    pivots = {}
    mismatched = []
    for utt in corpus:
        sent = tagged.get(utt.id)
        words = utt.transcript
        if sent is None or len(sent) != len(words):
            mismatched.append(utt.id)
            continue
        merged = TaggedSentence(utt.id, tuple((w, upos) for w, (_, upos) in zip(words, sent.tokens)))
        pivots[utt.id] = find_pivots(merged)
    return pivots, mismatched
