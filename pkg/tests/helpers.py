"""Fixture writers shared by the test modules."""
import wave
from pathlib import Path

import numpy as np

SR = 16000


def ramp(n, start=0, step=7):
    """Distinctive int16 ramp so every sample position is recognisable."""
    return ((np.arange(n, dtype=np.int64) * step + start) % 65536 - 32768).astype(np.int16)


def write_pcm(path, samples, sr=SR, channels=1, sampwidth=2):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(sampwidth)
        w.setframerate(sr)
        w.writeframes(np.asarray(samples).astype("<i2").tobytes())


def textgrid_long(intervals, tier="words", xmax=None):
    xmax = xmax if xmax is not None else (intervals[-1][2] if intervals else 1.0)
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0 ",
        f"xmax = {xmax} ",
        "tiers? <exists> ",
        "size = 2 ",
        "item []: ",
        "    item [1]:",
        '        class = "IntervalTier" ',
        f'        name = "{tier}" ',
        "        xmin = 0 ",
        f"        xmax = {xmax} ",
        f"        intervals: size = {len(intervals)} ",
    ]
    for i, (text, x0, x1) in enumerate(intervals, start=1):
        lines += [
            f"        intervals [{i}]:",
            f"            xmin = {x0!r} ",
            f"            xmax = {x1!r} ",
            '            text = "{}" '.format(text.replace('"', '""')),
        ]
    lines += [
        "    item [2]:",
        '        class = "IntervalTier" ',
        '        name = "phones" ',
        "        xmin = 0 ",
        f"        xmax = {xmax} ",
        "        intervals: size = 1 ",
        "        intervals [1]:",
        "            xmin = 0 ",
        f"            xmax = {xmax} ",
        '            text = "" ',
    ]
    return "\n".join(lines) + "\n"


def textgrid_short(intervals, tier="words", xmax=None):
    xmax = xmax if xmax is not None else (intervals[-1][2] if intervals else 1.0)
    lines = ['File type = "ooTextFile"', 'Object class = "TextGrid"', "", "0", str(xmax),
             "<exists>", "1", '"IntervalTier"', f'"{tier}"', "0", str(xmax), str(len(intervals))]
    for text, x0, x1 in intervals:
        lines += [repr(x0), repr(x1), f'"{text}"']
    return "\n".join(lines) + "\n"


def word_times(n_words, lead=0.1, dur=0.3, gap=0.05):
    """Aligned intervals for ``n_words`` consecutive words."""
    out = []
    t = lead
    for _ in range(n_words):
        out.append((round(t, 4), round(t + dur, 4)))
        t += dur + gap
    return out


def conllu_block(uid, forms, upos):
    rows = [f"# sent_id = {uid}", f"# text = {' '.join(forms)}"]
    for i, (f, u) in enumerate(zip(forms, upos), start=1):
        rows.append(f"{i}\t{f}\t{f}\t{u}\t_\t_\t0\tdep\t_\t_")
    return "\n".join(rows) + "\n\n"


def write_corpus(root, utts, sr=SR, stub_audio=False, ctm=False):
    """Write manifest, audio, TextGrids (or one CTM) and CoNLL-U for ``utts``.

    Each item of ``utts`` is a dict with ``id``, ``text``, ``upos`` and
    optional ``speaker``, ``times``, ``align`` (False to omit the alignment
    file, or a list of words overriding the aligned surfaces) and
    ``tagged`` (False to omit the CoNLL-U block). Returns a dict of paths
    and the per-utterance word times.
    """
    root = Path(root)
    (root / "wav").mkdir(parents=True, exist_ok=True)
    (root / "ali").mkdir(exist_ok=True)
    manifest = ["id\taudio\tn_frames\tsrc_text\ttgt_text\tspeaker"]
    conllu = []
    ctm_lines = []
    times = {}
    for k, u in enumerate(utts):
        words = u["text"].split()
        aligned = u.get("align", words)
        wt = u.get("times") or word_times(len(aligned) if aligned else len(words))
        times[u["id"]] = wt
        n = int(round((wt[-1][1] + 0.2) * sr))
        wav_path = root / "wav" / f"{u['id']}.wav"
        if stub_audio:
            write_stub(wav_path, n, sr)
        else:
            write_pcm(wav_path, ramp(n, start=1000 * k, step=3 + k), sr)
        manifest.append(f"{u['id']}\twav/{u['id']}.wav\t{n}\t{u['text']}\t{u.get('tgt', '')}\t{u.get('speaker', 'spk' + str(k))}")
        if aligned:
            if ctm:
                for w, (t0, t1) in zip(aligned, wt):
                    ctm_lines.append(f"{u['id']} 1 {t0!r} {round(t1 - t0, 4)!r} {w}")
            else:
                ivs = [("", 0.0, wt[0][0])]
                prev = wt[0][0]
                for w, (t0, t1) in zip(aligned, wt):
                    if t0 > prev:
                        ivs.append(("", prev, t0))
                    ivs.append((w, t0, t1))
                    prev = t1
                ivs.append(("", prev, round(prev + 0.2, 4)))
                (root / "ali" / f"{u['id']}.TextGrid").write_text(textgrid_long(ivs))
        if u.get("tagged", True):
            conllu.append(conllu_block(u["id"], words, u["upos"]))
    (root / "manifest.tsv").write_text("\n".join(manifest) + "\n")
    (root / "tags.conllu").write_text("".join(conllu))
    ali = root / "ali"
    if ctm:
        ali = root / "ali.ctm"
        ali.write_text("\n".join(ctm_lines) + ("\n" if ctm_lines else ""))
    return {"root": root, "manifest": root / "manifest.tsv", "alignments": ali,
            "conllu": root / "tags.conllu", "times": times}


def write_stub(path, n_samples, sr=SR):
    """A WAV whose header claims ``n_samples`` but whose payload is one byte."""
    import struct

    data_len = 2 * n_samples
    header = b"RIFF" + struct.pack("<I", 36 + data_len) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sr, 2 * sr, 2, 16)
    header += b"data" + struct.pack("<I", data_len)
    Path(path).write_bytes(header + b"\x00")
