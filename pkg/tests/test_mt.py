import random

import pytest

from straug.augment import AugmentedExample, RunStats, Segment
from straug.errors import BackendUnavailable, LengthMismatch, MissingTranslation
from straug.mt import (
    FileTableBackend,
    HttpBackend,
    IdentityBackend,
    TranslationRequest,
    chunked,
    fill_translations,
    make_backend,
    translate_batch,
)

AUG = "two children are playing volleyball in a park"
DE = "Zwei Kinder spielen Volleyball in einem Park"


def _examples(texts):
    return [AugmentedExample(f"e{i}", (Segment("a", 0.0, 1.0),), tuple(t.split()), {}) for i, t in enumerate(texts)]


def test_identity():
    assert translate_batch(IdentityBackend(), TranslationRequest((AUG,))) == [AUG]


def test_request_validation():
    with pytest.raises(ValueError):
        TranslationRequest(())
    with pytest.raises(ValueError):
        TranslationRequest(("a", ""))


def test_file_table(tmp_path):
    (tmp_path / "t.tsv").write_text(f"Two children are playing volleyball in a park.\t{DE}\n")
    backend = FileTableBackend(tmp_path / "t.tsv")
    assert translate_batch(backend, TranslationRequest((AUG,))) == [DE]
    with pytest.raises(MissingTranslation) as err:
        translate_batch(backend, TranslationRequest(("unknown text",)))
    assert err.value.text == "unknown text"


def test_http_round_trip(mt_server):
    backend = HttpBackend(mt_server.url, max_batch=2, backoff=0)
    texts = tuple(f"text {i}" for i in range(5))
    assert translate_batch(backend, TranslationRequest(texts, "en", "de")) == [f"<de>{t}" for t in texts]
    assert sorted(len(b["texts"]) for b in mt_server.batches) == [1, 2, 2]
    assert all(b["src"] == "en" and b["tgt"] == "de" for b in mt_server.batches)


def test_http_length_mismatch(mt_server):
    mt_server.drop_one = True
    backend = HttpBackend(mt_server.url, max_batch=3, backoff=0)
    with pytest.raises(LengthMismatch):
        translate_batch(backend, TranslationRequest(("a", "b", "c")))


def test_http_recovers_within_retries(mt_server):
    mt_server.fail_first = 3
    backend = HttpBackend(mt_server.url, retries=3, backoff=0)
    assert translate_batch(backend, TranslationRequest(("a",))) == ["<de>a"]
    assert mt_server.calls == 4


def test_http_gives_up(mt_server):
    mt_server.fail_rate = 1.0
    backend = HttpBackend(mt_server.url, retries=3, backoff=0)
    with pytest.raises(BackendUnavailable):
        translate_batch(backend, TranslationRequest(("a",)))
    assert mt_server.calls == 4


def test_http_endpoint_from_env(monkeypatch, mt_server):
    monkeypatch.setenv("STR_MT_ENDPOINT", mt_server.url)
    backend = make_backend("http", backoff=0)
    assert backend.endpoint == mt_server.url + "/translate"
    assert translate_batch(backend, TranslationRequest(("x",))) == ["<de>x"]


def test_fill_identity():
    out = fill_translations(_examples(["a b", "c d"]), IdentityBackend())
    assert [e.translation for e in out] == ["a b", "c d"]


def test_fill_file_table_missing_one(tmp_path):
    (tmp_path / "t.tsv").write_text("a b\tA B\ne f\tE F\n")
    stats = RunStats(kept=3)
    out = fill_translations(_examples(["a b", "c d", "e f"]), FileTableBackend(tmp_path / "t.tsv"), stats=stats)
    assert [(e.id, e.translation) for e in out] == [("e0", "A B"), ("e2", "E F")]
    assert (stats.translated, stats.skipped_translation) == (2, 1)
    stats.check()


def test_chunking_arithmetic(mt_server):
    assert len(chunked(list(range(1000)), 64)) == -(-1000 // 64) == 16
    texts = [f"t {i}" for i in range(1000)]
    out = fill_translations(_examples(texts), HttpBackend(mt_server.url, max_batch=64, backoff=0))
    assert len(mt_server.batches) == 16
    assert [e.translation for e in out] == [f"<de>{t}" for t in texts]


def test_random_chunk_sizes_preserve_order(mt_server):
    rng = random.Random(0)
    for _ in range(10):
        texts = tuple(f"s{i}" for i in range(rng.randint(1, 60)))
        backend = HttpBackend(mt_server.url, max_batch=rng.randint(1, 20), max_inflight=rng.randint(1, 6), backoff=0)
        assert translate_batch(backend, TranslationRequest(texts)) == [f"<de>{t}" for t in texts]


def test_flaky_server_drops_are_counted(mt_server):
    mt_server.fail_rate = 0.3
    mt_server.rng = random.Random(7)
    texts = [f"t {i}" for i in range(200)]
    stats = RunStats(kept=200)
    out = fill_translations(_examples(texts), HttpBackend(mt_server.url, max_batch=8, retries=3, backoff=0), stats=stats)
    stats.check()
    assert stats.translated == len(out)
    assert [e.translation for e in out] == [f"<de>{e.src_text}" for e in out]
    ids = [int(e.id[1:]) for e in out]
    assert ids == sorted(ids)


def test_idempotent_with_file_table(tmp_path):
    (tmp_path / "t.tsv").write_text("a b\tA B\n")
    backend = FileTableBackend(tmp_path / "t.tsv")
    once = fill_translations(_examples(["a b"]), backend)
    assert fill_translations(once, backend) == once
