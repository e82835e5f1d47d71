"""Glue between the file formats and the in-memory stages."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

from .alignment import DiscardReason, UtteranceAlignment, Verdict, load_textgrid_dir, parse_ctm, validate_corpus
from .corpus import Corpus, parse_manifest
from .memory import SuffixMemory, build_memory, memory_stats
from .tagging import PivotPoint, parse_conllu, pivots_for_corpus


@dataclass
class Prepared:
    corpus: Corpus
    verdicts: Dict[str, Verdict]
    pivots: Dict[str, List[PivotPoint]]
    tag_mismatched: List[str]

    @property
    def alignments(self) -> Dict[str, UtteranceAlignment]:
        return {k: v.alignment for k, v in self.verdicts.items() if v.keep}

    def indexable_pivots(self) -> Dict[str, List[PivotPoint]]:
        """Pivots of utterances that also passed alignment validation."""
        return {k: v for k, v in self.pivots.items() if self.verdicts[k].keep}


def load_alignments(path, corpus: Corpus, tier: str = "words") -> Dict[str, UtteranceAlignment]:
    path = Path(path)
    if path.is_dir():
        return load_textgrid_dir(path, [u.id for u in corpus], tier)
    return parse_ctm(path)


def prepare(manifest, alignments, conllu, source_language="en", target_language="de",
            tier="words") -> Prepared:
    corpus = parse_manifest(manifest, source_language, target_language)
    verdicts = validate_corpus(corpus, load_alignments(alignments, corpus, tier))
    pivots, mismatched = pivots_for_corpus(corpus, parse_conllu(conllu))
    return Prepared(corpus, verdicts, pivots, mismatched)


def screening_counts(prep: Prepared) -> dict:
    """Per-reason counts of the input filters, in the order they are applied.

    With ``prep.pivots`` set to None the tagging filters are not evaluated.
    """
    counts = {
        "total": len(prep.corpus),
        "discarded_no_alignment": 0,
        "discarded_count_mismatch": 0,
        "skipped_tag_mismatch": 0,
        "skipped_no_pivot": 0,
        "indexed": 0,
    }
    for utt in prep.corpus:
        v = prep.verdicts[utt.id]
        if not v.keep:
            key = ("discarded_count_mismatch" if v.reason is DiscardReason.COUNT_MISMATCH
                   else "discarded_no_alignment")
        elif prep.pivots is None:
            key = "indexed"
        elif utt.id not in prep.pivots:
            key = "skipped_tag_mismatch"
        elif not prep.pivots[utt.id]:
            key = "skipped_no_pivot"
        else:
            key = "indexed"
        counts[key] += 1
    return counts


def build_from(prep: Prepared) -> SuffixMemory:
    return build_memory(prep.corpus, prep.alignments, prep.indexable_pivots())


def build_report(prep: Prepared, memory: SuffixMemory) -> dict:
    report = screening_counts(prep)
    report.update(memory_stats(memory))
    return report
