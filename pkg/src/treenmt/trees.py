"""Strictly binary phrase trees and their one-line S-expression format.

A tree file carries one entry per source line: either a bare token (the
one-word sentence), a parenthesized expression whose internal nodes have
exactly two children, or the literal sentinel NOPARSE for sentences the
upstream parser could not handle.  Parentheses are structural and must be
whitespace-separated from tokens.
"""
from dataclasses import dataclass

NOPARSE = "NOPARSE"


@dataclass
class Leaf:
    token: str
    index: int = -1  # position in the sentence, filled once the tree is read

    def is_leaf(self):
        return True


@dataclass
class Internal:
    left: object
    right: object

    def is_leaf(self):
        return False


@dataclass
class ParseFailure:
    reason: str

    def is_failure(self):
        return True


def is_tree(obj):
    return isinstance(obj, (Leaf, Internal))


def leaves(tree):
    out = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.is_leaf():
            out.append(node)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return out


def leaf_tokens(tree):
    return [lf.token for lf in leaves(tree)]


def n_leaves(tree):
    return len(leaves(tree))


def internal_nodes(tree):
    """Internal nodes in post order (children before parents, root last)."""
    out = []

    def walk(node):
        if node.is_leaf():
            return
        walk(node.left)
        walk(node.right)
        out.append(node)

    walk(tree)
    return out


def _number_leaves(tree):
    for pos, lf in enumerate(leaves(tree)):
        lf.index = pos
    return tree


def _left_binarize(children):
    node = children[0]
    for child in children[1:]:
        node = Internal(node, child)
    return node


def parse_tree(line, binarize=False):
    """Read one tree line; malformed input becomes a ParseFailure, not an error.

    With binarize=True an internal node with more than two children is
    repaired by left-binarization instead of rejected.
    """
    text = line.strip()
    if text == NOPARSE:
        return ParseFailure("NOPARSE sentinel")
    toks = text.split()
    if not toks:
        return ParseFailure("empty line")

    pos = 0

    def parse_node():
        nonlocal pos
        if pos >= len(toks):
            raise _Malformed("unexpected end of input")
        tok = toks[pos]
        if tok == "(":
            pos += 1
            children = []
            while pos < len(toks) and toks[pos] != ")":
                children.append(parse_node())
            if pos >= len(toks):
                raise _Malformed("unbalanced parentheses: missing ')'")
            pos += 1  # consume ')'
            if len(children) == 2:
                return Internal(children[0], children[1])
            if len(children) > 2 and binarize:
                return _left_binarize(children)
            raise _Malformed(f"internal node with {len(children)} children")
        if tok == ")":
            raise _Malformed("unbalanced parentheses: unexpected ')'")
        pos += 1
        return Leaf(tok)

    try:
        tree = parse_node()
        if pos != len(toks):
            raise _Malformed(f"trailing input after tree: {' '.join(toks[pos:])!r}")
    except _Malformed as exc:
        return ParseFailure(str(exc))
    return _number_leaves(tree)


class _Malformed(Exception):
    pass


def render(tree):
    """Inverse of parse_tree: one-line S-expression, space separated."""
    if tree.is_leaf():
        return tree.token
    return f"( {render(tree.left)} {render(tree.right)} )"


def same_shape(a, b):
    if a.is_leaf() != b.is_leaf():
        return False
    if a.is_leaf():
        return a.token == b.token
    return same_shape(a.left, b.left) and same_shape(a.right, b.right)
