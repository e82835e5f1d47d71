"""Word-level forced alignments: TextGrid and CTM readers, quality filter."""
from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import (
    MalformedLine,
    MalformedTextGrid,
    MissingTier,
    NegativeDuration,
    NonMonotonicIntervals,
)

log = logging.getLogger(__name__)

UNKNOWN_MARKERS = ("<unk>", "spn")


@dataclass(frozen=True)
class AlignedToken:
    index: int
    surface: str
    t_start: float
    t_end: float


@dataclass(frozen=True)
class UtteranceAlignment:
    utterance_id: str
    tokens: tuple
    has_unknown: bool = False

    def __len__(self):
        return len(self.tokens)


class DiscardReason(str, enum.Enum):
    NO_ALIGNMENT = "NoAlignment"
    COUNT_MISMATCH = "CountMismatch"


@dataclass(frozen=True)
class Verdict:
    """Outcome of :func:`validate_alignment`: exactly one of the fields is set."""

    alignment: Optional[UtteranceAlignment] = None
    reason: Optional[DiscardReason] = None

    @property
    def keep(self) -> bool:
        return self.alignment is not None


def _is_unknown(surface: str, markers: Iterable[str]) -> bool:
    return surface.strip().lower() in {m.lower() for m in markers}


def _check_order(utt_id: str, tokens: Sequence[AlignedToken]) -> None:
    for prev, cur in zip(tokens, tokens[1:]):
        if cur.t_start < prev.t_end:
            raise NonMonotonicIntervals(
                f"{utt_id}: interval {cur.surface!r} starts at {cur.t_start} "
                f"before {prev.surface!r} ends at {prev.t_end}"
            )


# ---------------------------------------------------------------------------
# TextGrid

# Both the long ("xmin = 0") and the short textual layouts reduce to the same
# stream of strings, numbers and <exists> flags once labels and [n] indices
# are dropped.
_TG_TOKEN = re.compile(
    r'"(?P<str>(?:[^"]|"")*)"'
    r"|(?P<idx>\[[^\]\n]*\])"
    r"|(?P<flag><exists>|<absent>)"
    r"|(?<![\w.])(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(?![\w.])"
)


def _decode(raw: bytes) -> str:
    if raw.startswith(b"\xff\xfe") or raw.startswith(b"\xfe\xff"):
        return raw.decode("utf-16")
    if raw.startswith(b"\xef\xbb\xbf"):
        return raw[3:].decode("utf-8")
    return raw.decode("utf-8")


class _TokenStream:
    def __init__(self, text: str, path):
        self.path = path
        self.text = text
        self.items = []
        for m in _TG_TOKEN.finditer(text):
            if m.group("idx") is not None:
                continue
            if m.group("str") is not None:
                kind, value = "str", m.group("str").replace('""', '"')
            elif m.group("flag") is not None:
                kind, value = "flag", m.group("flag")
            else:
                kind, value = "num", m.group("num")
            self.items.append((kind, value, m.start()))
        self.pos = 0

    def lineno(self, offset=None):
        if offset is None:
            offset = self.items[self.pos][2] if self.pos < len(self.items) else len(self.text)
        return self.text.count("\n", 0, offset) + 1

    def fail(self, message):
        raise MalformedTextGrid(message, self.path, self.lineno())

    def next(self, kind):
        if self.pos >= len(self.items):
            self.fail(f"unexpected end of file, expected {kind}")
        k, v, _ = self.items[self.pos]
        if k != kind:
            self.fail(f"expected {kind}, found {v!r}")
        self.pos += 1
        return v

    def number(self) -> float:
        return float(self.next("num"))

    def count(self) -> int:
        v = self.number()
        if v != int(v) or v < 0:
            self.fail(f"bad count {v}")
        return int(v)


def read_textgrid_tiers(path) -> Dict[str, list]:
    """Return ``{tier_name: [(xmin, xmax, text, lineno), ...]}`` for interval tiers."""
    ts = _TokenStream(_decode(Path(path).read_bytes()), path)
    if ts.next("str") != "ooTextFile":
        ts.pos -= 1
        ts.fail("not a Praat text file")
    if ts.next("str") != "TextGrid":
        ts.pos -= 1
        ts.fail("object class is not TextGrid")
    ts.number()
    ts.number()
    if ts.next("flag") != "<exists>":
        return {}
    n_tiers = ts.count()
    tiers = {}
    for _ in range(n_tiers):
        cls = ts.next("str")
        name = ts.next("str")
        ts.number()
        ts.number()
        n = ts.count()
        if cls == "IntervalTier":
            intervals = []
            for _ in range(n):
                lineno = ts.lineno()
                x0 = ts.number()
                x1 = ts.number()
                intervals.append((x0, x1, ts.next("str"), lineno))
            tiers.setdefault(name, intervals)
        elif cls == "TextTier":
            for _ in range(n):
                ts.number()
                ts.next("str")
        else:
            ts.pos -= 3
            ts.fail(f"unknown tier class {cls!r}")
    return tiers


def parse_textgrid(path, tier_name="words", utterance_id=None,
                   unknown_markers=UNKNOWN_MARKERS) -> UtteranceAlignment:
    """Read the word tier of a Praat TextGrid.

    Silence (empty-text intervals) is skipped. The utterance id defaults to
    the file stem.
    """
    path = Path(path)
    utt_id = utterance_id if utterance_id is not None else path.stem
    tiers = read_textgrid_tiers(path)
    if tier_name not in tiers:
        raise MissingTier(f"{path}: no interval tier named {tier_name!r}")
    tokens = []
    prev_end = None
    for x0, x1, text, lineno in tiers[tier_name]:
        if x1 < x0:
            raise MalformedTextGrid(f"interval ends before it starts ({x0} > {x1})", path, lineno)
        if x1 == x0:
            log.warning("%s:%d: zero-length interval %r", path, lineno, text)
            raise MalformedTextGrid(f"zero-length interval {text!r} at {x0}", path, lineno)
        if prev_end is not None and x0 < prev_end:
            raise NonMonotonicIntervals(f"{path}:{lineno}: interval at {x0} overlaps previous ending at {prev_end}")
        prev_end = x1
        surface = text.strip()
        if not surface:
            continue
        tokens.append(AlignedToken(len(tokens), surface, x0, x1))
    return UtteranceAlignment(
        utt_id, tuple(tokens), any(_is_unknown(t.surface, unknown_markers) for t in tokens)
    )


def load_textgrid_dir(directory, utterance_ids, tier_name="words",
                      unknown_markers=UNKNOWN_MARKERS) -> Dict[str, UtteranceAlignment]:
    """Load ``<id>.TextGrid`` for every id that has one; missing files are absent keys."""
    directory = Path(directory)
    out = {}
    for uid in utterance_ids:
        for suffix in (".TextGrid", ".textgrid"):
            p = directory / f"{uid}{suffix}"
            if p.exists():
                out[uid] = parse_textgrid(p, tier_name, uid, unknown_markers)
                break
    return out


# ---------------------------------------------------------------------------
# CTM

def parse_ctm(path, unknown_markers=UNKNOWN_MARKERS) -> Dict[str, UtteranceAlignment]:
    """Parse ``utt channel begin duration word [confidence]`` lines."""
    rows: Dict[str, list] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith(";;"):
                continue
            parts = line.split()
            if len(parts) not in (5, 6):
                raise MalformedLine(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            utt, _channel, begin, dur, word = parts[:5]
            try:
                t0 = float(begin)
                d = float(dur)
            except ValueError:
                raise MalformedLine(f"{path}:{lineno}: non-numeric time field")
            if d < 0:
                raise NegativeDuration(f"{path}:{lineno}: duration {d}")
            if d == 0 or t0 < 0:
                raise MalformedLine(f"{path}:{lineno}: empty or negative interval")
            rows.setdefault(utt, []).append((t0, t0 + d, word))

    out = {}
    for utt, items in rows.items():
        items.sort(key=lambda r: r[0])
        tokens = tuple(AlignedToken(i, w, t0, t1) for i, (t0, t1, w) in enumerate(items))
        _check_order(utt, tokens)
        out[utt] = UtteranceAlignment(
            utt, tokens, any(_is_unknown(t.surface, unknown_markers) for t in tokens)
        )
    return out


# ---------------------------------------------------------------------------
# filtering

def validate_alignment(utt, alignment: Optional[UtteranceAlignment]) -> Verdict:
    """Keep alignments whose token count matches the normalized transcript.

    Unknown-token alignments are kept when the count matches, because a
    forced alignment is strictly parallel to its input; surfaces are then
    replaced positionally by the transcript tokens.
    """
    transcript = utt.transcript
    if alignment is None or not alignment.tokens:
        return Verdict(reason=DiscardReason.NO_ALIGNMENT)
    if len(alignment.tokens) != len(transcript):
        return Verdict(reason=DiscardReason.COUNT_MISMATCH)
    tokens = tuple(replace(t, surface=w) for t, w in zip(alignment.tokens, transcript))
    return Verdict(alignment=UtteranceAlignment(utt.id, tokens, alignment.has_unknown))


def validate_corpus(corpus, alignments: Dict[str, UtteranceAlignment]) -> Dict[str, Verdict]:
    return {u.id: validate_alignment(u, alignments.get(u.id)) for u in corpus}
