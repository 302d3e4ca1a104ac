"""chrF and corpus BLEU with multiple references per segment."""

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

CHRF_ORDER = 6
CHRF_BETA = 2.0
BLEU_ORDER = 4

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class ScoredSegment:
    hypothesis: str
    references: tuple

    def __post_init__(self):
        refs = tuple(self.references)
        if not refs:
            raise ValueError("a segment needs at least one reference")
        object.__setattr__(self, "references", refs)


def _char_ngrams(text, n):
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def chrf_statistics(hypothesis, reference, order=CHRF_ORDER):
    """Per-order ``[hyp_count, ref_count, matches]`` triples, whitespace removed."""
    hyp = _WS.sub("", hypothesis)
    ref = _WS.sub("", reference)
    stats = []
    for n in range(1, order + 1):
        h, r = _char_ngrams(hyp, n), _char_ngrams(ref, n)
        stats.append([sum(h.values()), sum(r.values()), sum((h & r).values())])
    return stats


def _f_score(stats, beta):
    precision = recall = 0.0
    effective = 0
    for hyp_count, ref_count, matches in stats:
        if hyp_count > 0 and ref_count > 0:
            precision += matches / hyp_count
            recall += matches / ref_count
            effective += 1
    if effective == 0:
        return 0.0
    precision /= effective
    recall /= effective
    if precision + recall == 0:
        return 0.0
    b2 = beta**2
    return (1 + b2) * precision * recall / (b2 * precision + recall)


def _best_reference_stats(seg, char_n, beta):
    best, best_f = None, -1.0
    for ref in seg.references:
        stats = chrf_statistics(seg.hypothesis, ref, char_n)
        f = _f_score(stats, beta)
        if f > best_f:
            best, best_f = stats, f
    return best, best_f


def chrf(
    segments: Sequence[ScoredSegment],
    char_n: int = CHRF_ORDER,
    beta: float = CHRF_BETA,
    aggregate: str = "sentence",
) -> float:
    """chrF on a 0-100 scale (chrF2 with the defaults).

    Each segment is scored against its best reference by sentence-level
    F-score (first reference wins ties).

    ``aggregate="sentence"`` averages the per-segment scores, which makes the
    score non-decreasing when references are added. ``aggregate="corpus"``
    instead sums the best-reference n-gram statistics over the corpus before
    computing one F-score, as SacreBLEU does; adding a reference can then
    lower the score by changing which statistics a segment contributes.
    """
    if not segments:
        raise ValueError("cannot score an empty corpus")
    if aggregate == "sentence":
        scores = [_best_reference_stats(seg, char_n, beta)[1] for seg in segments]
        return 100.0 * math.fsum(scores) / len(scores)
    if aggregate != "corpus":
        raise ValueError(f"aggregate must be 'sentence' or 'corpus', got {aggregate!r}")
    totals = [[0, 0, 0] for _ in range(char_n)]
    for seg in segments:
        best, _ = _best_reference_stats(seg, char_n, beta)
        for tot, row in zip(totals, best):
            for i in range(3):
                tot[i] += row[i]
    return 100.0 * _f_score(totals, beta)


def tokenize(text):
    return unicodedata.normalize("NFC", text).split()


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(segments: Sequence[ScoredSegment], max_n: int = BLEU_ORDER) -> float:
    """Unsmoothed corpus BLEU on a 0-100 scale.

    Counts are clipped by the per-n-gram maximum over references; the
    brevity penalty uses, per segment, the reference length closest to the
    hypothesis length (shorter on ties). Case-sensitive whitespace tokens.
    """
    if not segments:
        raise ValueError("cannot score an empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for seg in segments:
        hyp = tokenize(seg.hypothesis)
        refs = [tokenize(r) for r in seg.references]
        hyp_len += len(hyp)
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            h = _ngrams(hyp, n)
            clip = Counter()
            for r in refs:
                clip |= _ngrams(r, n)
            matches[n - 1] += sum(min(c, clip[g]) for g, c in h.items())
            totals[n - 1] += sum(h.values())
    if any(m == 0 for m in matches) or any(t == 0 for t in totals):
        return 0.0
    log_precision = math.fsum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return min(100.0, 100.0 * bp * math.exp(log_precision))
