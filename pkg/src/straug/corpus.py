"""Speech-translation TSV manifests.

A manifest is UTF-8 text with a fixed header::

    id  audio  n_frames  src_text  tgt_text  speaker

``n_frames`` (audio sample count) and ``tgt_text`` may be empty on any row.
Transcripts are stored raw and normalized on demand.
"""
from __future__ import annotations

import os
import unicodedata
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, List, Optional

from .errors import DuplicateId, EmptyManifest, ManifestError, MissingColumn, WriteError

COLUMNS = ("id", "audio", "n_frames", "src_text", "tgt_text", "speaker")
HEADER = "\t".join(COLUMNS)


def normalize_transcript(text: str) -> List[str]:
    """Lowercase, delete every Unicode punctuation character, split on whitespace.

    >>> normalize_transcript("Two children are playing, on a statue.")
    ['two', 'children', 'are', 'playing', 'on', 'a', 'statue']
    """
    kept = "".join(
        ch for ch in text.lower() if not unicodedata.category(ch).startswith("P")
    )
    return kept.split()


@dataclass(frozen=True)
class Utterance:
    id: str
    audio: str
    src_text: str
    speaker: str = ""
    tgt_text: Optional[str] = None
    n_frames: Optional[int] = None

    @cached_property
    def transcript(self) -> List[str]:
        return normalize_transcript(self.src_text)


@dataclass(frozen=True)
class Corpus:
    utterances: List[Utterance]
    source_language: str = "en"
    target_language: str = "de"
    root: Optional[Path] = field(default=None, compare=False)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    def __len__(self) -> int:
        return len(self.utterances)

    @cached_property
    def by_id(self):
        return {u.id: u for u in self.utterances}

    def audio_path(self, utt: Utterance) -> Path:
        """Resolve ``utt.audio`` relative to the manifest directory."""
        p = Path(utt.audio)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p


def parse_manifest(path, source_language="en", target_language="de") -> Corpus:
    path = Path(path)
    with open(path, encoding="utf-8", newline="\n") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyManifest(f"{path}: no header")
    if lines[0].rstrip("\r") != HEADER:
        raise ManifestError(f"{path}:1: bad header {lines[0]!r}, expected {HEADER!r}")

    utterances = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        fields = line.split("\t")
        if len(fields) != len(COLUMNS):
            raise MissingColumn(path, lineno, len(fields), len(COLUMNS))
        uid, audio, n_frames, src, tgt, spk = fields
        if not uid:
            raise ManifestError(f"{path}:{lineno}: empty id")
        if uid in seen:
            raise DuplicateId(f"{path}:{lineno}: duplicate id {uid!r}")
        seen.add(uid)
        try:
            nf = int(n_frames) if n_frames else None
        except ValueError:
            raise ManifestError(f"{path}:{lineno}: n_frames {n_frames!r} is not an integer")
        utterances.append(
            Utterance(id=uid, audio=audio, src_text=src, speaker=spk,
                      tgt_text=tgt or None, n_frames=nf)
        )
    if not utterances:
        raise EmptyManifest(f"{path}: header only")
    return Corpus(utterances, source_language, target_language, root=path.parent)


def _check_field(value: str, column: str, uid: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise WriteError(f"utterance {uid!r}: {column} contains a tab or newline")
    return value


def write_manifest(corpus: Corpus, path) -> None:
    """Write ``corpus`` in the same TSV schema :func:`parse_manifest` reads."""
    if not corpus.utterances:
        raise WriteError("refusing to write an empty manifest")
    rows = [HEADER]
    for u in corpus.utterances:
        values = (
            u.id,
            u.audio,
            "" if u.n_frames is None else str(u.n_frames),
            u.src_text,
            u.tgt_text or "",
            u.speaker,
        )
        rows.append("\t".join(_check_field(v, c, u.id) for v, c in zip(values, COLUMNS)))
    # build the whole payload first so a WriteError never leaves a partial file
    data = "\n".join(rows) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(data)
    os.replace(tmp, path)
