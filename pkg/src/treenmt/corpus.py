"""Parallel corpus loading, the training filters, and the length statistics
used by beam search.

File formats (all UTF-8, line aligned):
  source / target   one tokenized sentence per line, single-space separated
  trees             one S-expression or NOPARSE per line
  length model      rows "src_len tgt_len probability"
"""
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import trees as treelib

MAX_TARGET_LEN = 100  # generation cap; also the smoothing support of the length model


@dataclass
class SentencePair:
    src_ids: list
    tgt_ids: list
    tree: object = None  # Leaf/Internal, or None when no parse is available

    @property
    def src_len(self):
        """Token count excluding eos."""
        return len(self.src_ids) - 1

    @property
    def tgt_len(self):
        return len(self.tgt_ids) - 1


@dataclass
class CorpusStats:
    pairs: int = 0
    parse_failures: int = 0
    failure_reasons: list = field(default_factory=list)


def read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def load_pairs(
    src_lines,
    tgt_lines,
    src_vocab,
    tgt_vocab,
    tree_lines=None,
    binarize=False,
    reverse_source=False,
):
    """Assemble SentencePairs from aligned text (and optional tree) lines.

    A tree is attached only when it parses and its leaves reproduce the
    source tokens exactly; anything else is recorded as a parse failure and
    the pair falls back to sequential encoding.  reverse_source flips the
    source token order and drops all trees (they no longer match).
    """
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"source/target line counts differ: {len(src_lines)} vs {len(tgt_lines)}"
        )
    if tree_lines is not None and len(tree_lines) != len(src_lines):
        raise ValueError(
            f"tree/source line counts differ: {len(tree_lines)} vs {len(src_lines)}"
        )
    stats = CorpusStats()
    pairs = []
    for row, (src, tgt) in enumerate(zip(src_lines, tgt_lines)):
        src_toks = src.split()
        tgt_toks = tgt.split()
        tree = None
        if reverse_source:
            src_toks = src_toks[::-1]
        elif tree_lines is not None:
            parsed = treelib.parse_tree(tree_lines[row], binarize=binarize)
            if treelib.is_tree(parsed):
                if treelib.leaf_tokens(parsed) == src_toks:
                    tree = parsed
                else:
                    stats.parse_failures += 1
                    stats.failure_reasons.append((row, "leaves do not match source tokens"))
            else:
                stats.parse_failures += 1
                stats.failure_reasons.append((row, parsed.reason))
        pairs.append(
            SentencePair(src_vocab.encode(src_toks), tgt_vocab.encode(tgt_toks), tree)
        )
        stats.pairs += 1
    return pairs, stats


def filter_pairs(pairs, max_len=50, drop_unparsed=True):
    """Training filter: drop pairs longer than max_len on either side and,
    when drop_unparsed is set (training mode), pairs without a source tree.
    Evaluation keeps unparsed pairs and decodes them via the fallback path."""
    kept = []
    for pair in pairs:
        if pair.src_len > max_len or pair.tgt_len > max_len:
            continue
        if drop_unparsed and pair.tree is None:
            continue
        kept.append(pair)
    return kept


class LengthModel:
    """Conditional target-length distribution p(len(y) | len(x)).

    Rows are add-one smoothed over target lengths 1..100 and renormalized;
    a source length never seen in training gets a uniform row.  Lengths
    count tokens excluding eos.
    """

    def __init__(self, rows):
        self.rows = {}
        for src_len, probs in rows.items():
            probs = np.asarray(probs, dtype=np.float64)
            if probs.shape != (MAX_TARGET_LEN,):
                raise ValueError(f"length-model row for {src_len} has shape {probs.shape}")
            self.rows[int(src_len)] = probs / probs.sum()

    def row(self, src_len):
        probs = self.rows.get(src_len)
        if probs is None:
            probs = np.full(MAX_TARGET_LEN, 1.0 / MAX_TARGET_LEN)
        return probs

    def prob(self, tgt_len, src_len):
        if not 1 <= tgt_len <= MAX_TARGET_LEN:
            return 0.0
        return float(self.row(src_len)[tgt_len - 1])

    def log_prob(self, tgt_len, src_len):
        p = self.prob(tgt_len, src_len)
        return float(np.log(p)) if p > 0.0 else float("-inf")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for src_len in sorted(self.rows):
                for tgt_len, p in enumerate(self.rows[src_len], start=1):
                    fh.write(f"{src_len} {tgt_len} {float(p)!r}\n")

    @classmethod
    def load(cls, path):
        rows = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                s, t, p = line.split()
                row = rows.setdefault(int(s), np.zeros(MAX_TARGET_LEN))
                row[int(t) - 1] = float(p)
        return cls(rows)


def estimate_length_model(pairs, cap=1_000_000):
    """Empirical length statistics over at most the first cap pairs."""
    counts = {}
    for pair in itertools.islice(pairs, cap):
        if not 1 <= pair.tgt_len <= MAX_TARGET_LEN:
            continue
        row = counts.setdefault(pair.src_len, np.zeros(MAX_TARGET_LEN))
        row[pair.tgt_len - 1] += 1.0
    if not counts:
        raise ValueError("no usable pairs for length estimation")
    return LengthModel({s: row + 1.0 for s, row in counts.items()})
