"""Batched translation through a pluggable backend.

Backends: a remote HTTP service speaking ``POST /translate``, a TSV lookup
table, or an identity echo for dry runs.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import requests

from .corpus import normalize_transcript
from .errors import BackendUnavailable, LengthMismatch, MissingTranslation, StrError, TranslationError

log = logging.getLogger(__name__)

ENDPOINT_ENV = "STR_MT_ENDPOINT"


@dataclass(frozen=True)
class TranslationRequest:
    texts: tuple
    source_lang: str = "en"
    target_lang: str = "de"

    def __post_init__(self):
        if not self.texts:
            raise ValueError("translation request without texts")
        if any(not t for t in self.texts):
            raise ValueError("translation request contains an empty text")


def chunked(items: Sequence, size: int) -> List[Sequence]:
    if size < 1:
        raise ValueError("chunk size must be >= 1")
    return [items[i:i + size] for i in range(0, len(items), size)]


class IdentityBackend:
    name = "identity"
    max_batch = 1 << 30

    def translate_chunk(self, texts, source_lang, target_lang):
        return list(texts)


class FileTableBackend:
    """Exact lookup on the normalized source side of a ``source\\ttarget`` TSV."""

    name = "file"
    max_batch = 1 << 30

    def __init__(self, path):
        self.path = path
        self.table: Dict[str, str] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise StrError(f"{path}:{lineno}: expected source<TAB>target")
                self.table.setdefault(self.key(parts[0]), parts[1])

    @staticmethod
    def key(text: str) -> str:
        return " ".join(normalize_transcript(text))

    def translate_chunk(self, texts, source_lang, target_lang):
        out = []
        for t in texts:
            hit = self.table.get(self.key(t))
            if hit is None:
                raise MissingTranslation(t)
            out.append(hit)
        return out


class HttpBackend:
    name = "http"

    def __init__(self, endpoint: Optional[str] = None, timeout: float = 30.0, max_batch: int = 64,
                 retries: int = 3, backoff: float = 0.5, max_inflight: int = 4, session=None):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise StrError(f"no MT endpoint given and ${ENDPOINT_ENV} is unset")
        endpoint = endpoint.rstrip("/")
        if not endpoint.endswith("/translate"):
            endpoint += "/translate"
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_batch = max_batch
        self.retries = retries
        self.backoff = backoff
        self.max_inflight = max_inflight
        self.session = session or requests.Session()

    def translate_chunk(self, texts, source_lang, target_lang):
        payload = {"src": source_lang, "tgt": target_lang, "texts": list(texts)}
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise BackendUnavailable(f"{self.endpoint}: HTTP {resp.status_code}")
            try:
                out = resp.json()["translations"]
            except (ValueError, KeyError, TypeError) as exc:
                last = f"bad response body ({exc})"
                continue
            if not isinstance(out, list) or len(out) != len(texts):
                raise LengthMismatch(
                    f"{self.endpoint}: sent {len(texts)} texts, got {len(out) if isinstance(out, list) else out!r}"
                )
            return [str(t) for t in out]
        raise BackendUnavailable(f"{self.endpoint}: gave up after {self.retries + 1} attempts ({last})")


def make_backend(kind: str, endpoint=None, table=None, **http_options):
    if kind == "identity":
        return IdentityBackend()
    if kind == "file":
        if table is None:
            raise StrError("the file backend needs a translation table")
        return FileTableBackend(table)
    if kind == "http":
        return HttpBackend(endpoint, **http_options)
    raise StrError(f"unknown backend {kind!r}")


def _run_chunks(backend, chunks, source_lang, target_lang):
    """Translate every chunk; each result is a list of strings or the raised error."""
    def one(chunk):
        try:
            return backend.translate_chunk(chunk, source_lang, target_lang)
        except TranslationError as exc:
            return exc

    inflight = getattr(backend, "max_inflight", 1)
    if inflight > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=inflight) as pool:
            return list(pool.map(one, chunks))
    return [one(c) for c in chunks]


def translate_batch(backend, request: TranslationRequest) -> List[str]:
    """Translate ``request.texts`` preserving order; the first chunk error is raised."""
    chunks = chunked(list(request.texts), backend.max_batch)
    out = []
    for result in _run_chunks(backend, chunks, request.source_lang, request.target_lang):
        if isinstance(result, Exception):
            raise result
        out.extend(result)
    return out


def fill_translations(examples, backend, source_lang="en", target_lang="de", stats=None):
    """Attach translations; examples that cannot be translated are dropped.

    A chunk failing on a missing table entry is retried item by item so only
    the missing texts are lost. ``stats.translated`` and
    ``stats.skipped_translation`` are incremented when ``stats`` is given.
    """
    examples = list(examples)
    texts = [e.src_text for e in examples]
    chunks = chunked(list(range(len(examples))), backend.max_batch) if examples else []
    translations: List[Optional[str]] = [None] * len(examples)
    results = _run_chunks(backend, [[texts[i] for i in c] for c in chunks], source_lang, target_lang)
    for idx, result in zip(chunks, results):
        if isinstance(result, MissingTranslation) and len(idx) > 1:
            for i in idx:
                try:
                    translations[i] = backend.translate_chunk([texts[i]], source_lang, target_lang)[0]
                except TranslationError as exc:
                    log.warning("%s: %s", examples[i].id, exc)
        elif isinstance(result, Exception):
            log.warning("dropping %d examples: %s", len(idx), result)
        else:
            for i, t in zip(idx, result):
                translations[i] = t
    out = [replace(e, translation=t) for e, t in zip(examples, translations) if t is not None]
    if stats is not None:
        stats.translated += len(out)
        stats.skipped_translation += len(examples) - len(out)
    return out
