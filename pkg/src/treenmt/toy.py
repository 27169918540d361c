"""Synthetic parallel corpora for desk-scale experiments.

Source sentences are random tokens over a small vocabulary; trees are
drawn uniformly over all binary shapes for the sentence length.  Tasks:

  copy      target = source
  reverse   target = source reversed
  bracket   target = source reordered by the tree shape (at every phrase
            the smaller side is emitted first, ties right-first), so the
            mapping cannot be predicted from the token sequence alone
"""
import math

import numpy as np

from . import trees as treelib

TASKS = ("copy", "reverse", "bracket")


def _catalan(n):
    return math.comb(2 * n, n) // (n + 1)


# trees with k leaves, k = 0..32 (index 0 unused)
_SHAPES = [0] + [_catalan(k - 1) for k in range(1, 33)]


def random_binary_tree(tokens, rng, offset=0):
    """Uniform draw over all binary tree shapes with these leaves."""
    n = len(tokens)
    if n == 1:
        return treelib.Leaf(tokens[0], offset)
    weights = np.array(
        [_SHAPES[k] * _SHAPES[n - k] for k in range(1, n)], dtype=np.float64
    )
    split = 1 + int(rng.choice(n - 1, p=weights / weights.sum()))
    left = random_binary_tree(tokens[:split], rng, offset)
    right = random_binary_tree(tokens[split:], rng, offset + split)
    return treelib.Internal(left, right)


def shape_order(tree):
    """Leaf tokens in smaller-subtree-first order (ties visit right first)."""
    if tree.is_leaf():
        return [tree.token]
    nl = treelib.n_leaves(tree.left)
    nr = treelib.n_leaves(tree.right)
    first, second = (tree.left, tree.right) if nl < nr else (tree.right, tree.left)
    return shape_order(first) + shape_order(second)


def toy_tokens(vocab_size):
    return [f"w{i:02d}" for i in range(vocab_size)]


def generate_toy_corpus(size, vocab_size, task, seed, min_len=3, max_len=12):
    """Returns (src_lines, tgt_lines, tree_lines), reproducible by seed."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; choices: {TASKS}")
    if not 1 <= min_len <= max_len <= 32:
        raise ValueError("sentence lengths must satisfy 1 <= min <= max <= 32")
    rng = np.random.default_rng(seed)
    alphabet = toy_tokens(vocab_size)
    src_lines = []
    tgt_lines = []
    tree_lines = []
    for _ in range(size):
        length = int(rng.integers(min_len, max_len + 1))
        tokens = [alphabet[i] for i in rng.integers(0, vocab_size, size=length)]
        tree = random_binary_tree(tokens, rng)
        if task == "copy":
            target = tokens
        elif task == "reverse":
            target = tokens[::-1]
        else:
            target = shape_order(tree)
        src_lines.append(" ".join(tokens))
        tgt_lines.append(" ".join(target))
        tree_lines.append(treelib.render(tree))
    return src_lines, tgt_lines, tree_lines
