"""Corpus-level BLEU with brevity penalty, single reference.

Counts are pooled over the whole corpus (not averaged per sentence):
modified n-gram precision with per-sentence clipping for n = 1..4,
geometric mean, and BP = min(1, exp(1 - ref_len/hyp_len)).  A zero
precision yields BLEU 0 with the offending order recorded; no smoothing
is applied.
"""
import math
from collections import Counter
from dataclasses import dataclass

MAX_ORDER = 4


@dataclass
class BleuReport:
    bleu: float  # percent
    precisions: list
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    zero_ngram_order: int = None

    def summary(self):
        p = " ".join(f"p{i + 1}={v:.4f}" for i, v in enumerate(self.precisions))
        return (f"BLEU = {self.bleu:.2f} ({p}) BP = {self.brevity_penalty:.4f} "
                f"hyp_len = {self.hyp_length} ref_len = {self.ref_length}")


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hyp_lines, ref_lines):
    if len(hyp_lines) != len(ref_lines):
        raise ValueError(
            f"hypothesis/reference line counts differ: {len(hyp_lines)} vs {len(ref_lines)}"
        )
    if not hyp_lines:
        raise ValueError("empty corpus")
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyp_lines, ref_lines):
        hyp_toks = hyp.split()
        ref_toks = ref.split()
        hyp_len += len(hyp_toks)
        ref_len += len(ref_toks)
        for n in range(1, MAX_ORDER + 1):
            hyp_counts = _ngrams(hyp_toks, n)
            ref_counts = _ngrams(ref_toks, n)
            totals[n - 1] += sum(hyp_counts.values())
            matches[n - 1] += sum(
                min(cnt, ref_counts[gram]) for gram, cnt in hyp_counts.items()
            )
    if hyp_len == 0:
        return BleuReport(0.0, [0.0] * MAX_ORDER, 0.0, 0, ref_len, 1)
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    zero_order = None
    for n, p in enumerate(precisions, start=1):
        if p == 0.0:
            zero_order = n
            break
    if zero_order is not None:
        return BleuReport(0.0, precisions, bp, hyp_len, ref_len, zero_order)
    score = bp * math.exp(sum(math.log(p) for p in precisions) / MAX_ORDER)
    return BleuReport(100.0 * score, precisions, bp, hyp_len, ref_len)
