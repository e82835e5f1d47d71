"""Command-line entry point: ``straug <command> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Options may also come from a TOML file given with ``--config``; keys are
the long option names with dashes or underscores, command-line flags win.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import MalformedStats, StrError

log = logging.getLogger("straug")

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class UsageError(Exception):
    pass


def _common(p, *names):
    if "manifest" in names:
        p.add_argument("--manifest", type=Path, required=True, help="TSV corpus manifest")
    if "alignments" in names:
        p.add_argument("--alignments", type=Path, required=True,
                       help="directory of <id>.TextGrid files or a CTM file")
        p.add_argument("--tier", default="words", help="TextGrid word tier name")
    if "conllu" in names:
        p.add_argument("--conllu", type=Path, required=True, help="POS tags, one block per utterance")
    if "langs" in names:
        p.add_argument("--src-lang", default="en")
        p.add_argument("--tgt-lang", default="de")
    if "backend" in names:
        p.add_argument("--backend", choices=("http", "file", "identity"))
        p.add_argument("--endpoint", help="MT service URL (default: $STR_MT_ENDPOINT)")
        p.add_argument("--table", type=Path, help="source<TAB>target TSV for the file backend")
        p.add_argument("--max-batch", type=int, default=64)
        p.add_argument("--retries", type=int, default=3)
        p.add_argument("--backoff", type=float, default=0.5, help="first retry delay in seconds")
        p.add_argument("--timeout", type=float, default=30.0)
        p.add_argument("--max-inflight", type=int, default=4)
    if "stats" in names:
        p.add_argument("--stats", default="-", help="where to write the stats JSON ('-' = stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="straug", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="TOML file with option defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-memory", help="index verb suffixes of a corpus")
    _common(p, "manifest", "alignments", "conllu", "langs", "stats")
    p.add_argument("--out", type=Path, required=True, help="memory JSONL to write")
    p.set_defaults(func=cmd_build_memory)

    p = sub.add_parser("augment", help="sample and recombine new examples")
    _common(p, "manifest", "alignments", "conllu", "langs", "backend", "stats")
    p.add_argument("--memory", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="composition JSONL to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-utterance", type=int, default=1)
    p.add_argument("--allow-identical-suffix", action="store_true")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("translate", help="fill translations of a composition file")
    _common(p, "langs", "backend", "stats")
    p.add_argument("--input", type=Path, required=True, help="composition JSONL")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--stats-in", type=Path, help="stats of the augment run to extend")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("materialize", help="render compositions to WAV files")
    _common(p, "manifest")
    p.add_argument("--input", type=Path, required=True, help="composition JSONL")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--junction-silence-ms", type=float, default=0.0)
    p.set_defaults(func=cmd_materialize)

    p = sub.add_parser("featurize", help="80-dim log-Mel features for every manifest row")
    _common(p, "manifest")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--no-cmvn", action="store_true")
    p.add_argument("--preemphasis", type=float, default=0.0)
    p.add_argument("--dither", type=float, default=0.0)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("stats", help="merge stats files into one report")
    p.add_argument("files", nargs="+", type=Path)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="report alignment and tagging filters")
    _common(p, "manifest", "alignments", "stats")
    p.add_argument("--conllu", type=Path)
    p.set_defaults(func=cmd_validate)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    return None


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return None
    if not known.config.is_file():
        raise UsageError(f"config file {known.config} not found")
    with open(known.config, "rb") as f:
        cfg = tomllib.load(f)
    command = next((a for a in rest if not a.startswith("-")), None)
    section = cfg.get(command, {}) if command else {}
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    flat.update(section)
    defaults = {k.replace("-", "_"): v for k, v in flat.items()}
    sp = _subparser(parser, command) if command else None
    if sp is not None:
        path_opts = {a.dest for a in sp._actions if a.type is Path}
        for k in list(defaults):
            if k in path_opts:
                defaults[k] = Path(defaults[k])
        for a in sp._actions:
            if a.dest in defaults:
                a.required = False
        sp.set_defaults(**defaults)
    return cfg


def _check_paths(args, *names):
    for name in names:
        value = getattr(args, name, None)
        if value is not None and not Path(value).exists():
            raise UsageError(f"--{name.replace('_', '-')} {value}: no such file or directory")


def _emit_stats(args, obj) -> None:
    text = json.dumps(obj, sort_keys=True) + "\n"
    if args.stats == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(args.stats).write_text(text, encoding="utf-8")


def _backend(args):
    from .mt import make_backend

    if args.backend == "file" and args.table is None:
        raise UsageError("--backend file requires --table")
    if args.backend == "file":
        _check_paths(args, "table")
    if args.backend != "http":
        return make_backend(args.backend, table=args.table)
    return make_backend("http", endpoint=args.endpoint, timeout=args.timeout,
                        max_batch=args.max_batch, retries=args.retries,
                        backoff=args.backoff, max_inflight=args.max_inflight)


def cmd_build_memory(args) -> int:
    from .memory import save_memory
    from .pipeline import build_from, build_report, prepare

    _check_paths(args, "manifest", "alignments", "conllu")
    prep = prepare(args.manifest, args.alignments, args.conllu, args.src_lang, args.tgt_lang, args.tier)
    memory = build_from(prep)
    save_memory(memory, args.out)
    _emit_stats(args, build_report(prep, memory))
    return 0


def cmd_augment(args) -> int:
    from .augment import augment_corpus, save_compositions
    from .memory import load_memory
    from .mt import fill_translations
    from .pipeline import prepare

    _check_paths(args, "manifest", "alignments", "conllu", "memory")
    if not 0 < args.fraction <= 1:
        raise UsageError(f"--fraction must be in (0, 1], got {args.fraction}")
    if args.per_utterance < 1 or args.workers < 1:
        raise UsageError("--per-utterance and --workers must be >= 1")
    backend = _backend(args) if args.backend else None
    prep = prepare(args.manifest, args.alignments, args.conllu, args.src_lang, args.tgt_lang, args.tier)
    memory = load_memory(args.memory)
    examples, stats = augment_corpus(
        prep.corpus, memory, prep.verdicts, prep.pivots, seed=args.seed, fraction=args.fraction,
        per_utterance=args.per_utterance, allow_identical_suffix=args.allow_identical_suffix,
        workers=args.workers,
    )
    if backend is not None:
        examples = fill_translations(examples, backend, args.src_lang, args.tgt_lang, stats)
    stats.check()
    save_compositions(examples, args.out)
    _emit_stats(args, stats.to_json())
    return 0


def _read_stats(path):
    from .augment import RunStats

    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        raise MalformedStats(f"{path}: empty stats file")
    try:
        obj = json.loads(text)
    except ValueError as exc:
        raise MalformedStats(f"{path}: not JSON ({exc})") from exc
    try:
        return RunStats.from_json(obj)
    except MalformedStats as exc:
        raise MalformedStats(f"{path}: {exc}") from exc


def cmd_translate(args) -> int:
    from .augment import RunStats, load_compositions, save_compositions
    from .mt import fill_translations

    _check_paths(args, "input", "stats_in")
    if args.backend is None:
        raise UsageError("translate needs --backend")
    backend = _backend(args)
    stats = _read_stats(args.stats_in) if args.stats_in else None
    examples = load_compositions(args.input)
    if stats is None:
        stats = RunStats(kept=len(examples))
    examples = fill_translations(examples, backend, args.src_lang, args.tgt_lang, stats)
    save_compositions(examples, args.out)
    _emit_stats(args, stats.to_json())
    return 0


def cmd_materialize(args) -> int:
    from .audio import materialize, output_path, write_wav
    from .augment import load_compositions
    from .corpus import Corpus, Utterance, parse_manifest, write_manifest

    _check_paths(args, "manifest", "input")
    corpus = parse_manifest(args.manifest)
    examples = load_compositions(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    cache = {}
    rows = []
    for ex in examples:
        wav = materialize(ex, corpus, args.junction_silence_ms, cache)
        path = output_path(args.out, ex)
        write_wav(path, wav)
        speakers = []
        for seg in ex.segments:
            spk = corpus.by_id[seg.utt].speaker
            if spk not in speakers:
                speakers.append(spk)
        rows.append(Utterance(id=ex.id, audio=path.name, src_text=ex.src_text,
                              speaker="+".join(speakers), tgt_text=ex.translation,
                              n_frames=len(wav)))
    if rows:
        write_manifest(Corpus(rows), args.out / "manifest.tsv")
    log.info("materialized %d examples into %s", len(rows), args.out)
    return 0


def cmd_featurize(args) -> int:
    from .audio import read_wav
    from .corpus import parse_manifest
    from .features import FeatureConfig, cmvn, logmel, write_features

    _check_paths(args, "manifest")
    corpus = parse_manifest(args.manifest)
    config = FeatureConfig(preemphasis=args.preemphasis, dither=args.dither)
    args.out.mkdir(parents=True, exist_ok=True)
    index = ["id\tpath\tn_frames"]
    for utt in corpus:
        feats = logmel(read_wav(corpus.audio_path(utt)), config)
        if not args.no_cmvn:
            feats = cmvn(feats)
        path = args.out / f"{utt.id}.lmel"
        write_features(path, feats)
        index.append(f"{utt.id}\t{path.name}\t{feats.shape[0]}")
    (args.out / "index.tsv").write_text("\n".join(index) + "\n", encoding="utf-8")
    return 0


def stats_report(stats_list) -> dict:
    from .augment import RunStats

    merged = RunStats()
    for s in stats_list:
        merged = merged + s
    total = merged.total

    def pct(n):
        return round(100.0 * n / total, 2) if total else 0.0

    report = {"files": len(stats_list), "counts": merged.to_json()}
    report["percent"] = {k: pct(getattr(merged, k)) for k in (*RunStats.UTTERANCE_BUCKETS, "emitted")}
    report["discard_rate"] = pct(merged.discarded)
    report["identity_holds"] = merged.accounted() == merged.total
    report["counts_line"] = f"baseline {total} | STR +{merged.kept}"
    return report


def cmd_stats(args) -> int:
    for f in args.files:
        if not f.exists():
            raise UsageError(f"{f}: no such file")
    report = stats_report([_read_stats(f) for f in args.files])
    sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")
    return 0


def cmd_validate(args) -> int:
    from .alignment import validate_corpus
    from .corpus import parse_manifest
    from .pipeline import Prepared, load_alignments, screening_counts
    from .tagging import parse_conllu, pivots_for_corpus

    _check_paths(args, "manifest", "alignments", "conllu")
    corpus = parse_manifest(args.manifest)
    verdicts = validate_corpus(corpus, load_alignments(args.alignments, corpus, args.tier))
    pivots, mismatched = None, []
    if args.conllu is not None:
        pivots, mismatched = pivots_for_corpus(corpus, parse_conllu(args.conllu))
    counts = screening_counts(Prepared(corpus, verdicts, pivots, mismatched))
    counts["discard_rate"] = round(
        100.0 * (counts["discarded_no_alignment"] + counts["discarded_count_mismatch"]) / counts["total"], 2
    )
    _emit_stats(args, counts)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (UsageError, tomllib.TOMLDecodeError) as exc:
        print(f"straug: error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    if args.verbose:
        settings = {k: str(v) for k, v in sorted(vars(args).items()) if k != "func"}
        log.info("settings %s", json.dumps(settings, sort_keys=True))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"straug: error: {exc}", file=sys.stderr)
        return 2
    except (StrError, OSError) as exc:
        print(f"straug: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
