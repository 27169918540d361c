"""Vocabulary building, bracketed tree reading, filters, length statistics."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treenmt import trees as treelib
from treenmt.corpus import (
    LengthModel,
    SentencePair,
    estimate_length_model,
    filter_pairs,
    load_pairs,
)
from treenmt.toy import random_binary_tree
from treenmt.vocab import EOS_TOKEN, UNK_TOKEN, Vocab, build_vocab


class TestBuildVocab:
    def test_threshold_definition(self):
        vocab = build_vocab([["a", "a", "b"]], min_count=2)
        assert sorted(vocab.tokens) == sorted([UNK_TOKEN, EOS_TOKEN, "a"])
        assert vocab.id_of("b") == vocab.unk_id

    def test_min_count_one_keeps_everything(self):
        vocab = build_vocab([["x", "y"], ["z"]], min_count=1)
        assert set(vocab.tokens) == {UNK_TOKEN, EOS_TOKEN, "x", "y", "z"}

    def test_deterministic_id_order(self):
        corpus = [["b", "b", "b"], ["a", "a", "a"], ["c"]]
        vocab = build_vocab(corpus, 1)
        # by descending count then lexicographic: a and b tie at 3
        assert vocab.tokens == [UNK_TOKEN, EOS_TOKEN, "a", "b", "c"]

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([], 1)

    def test_roundtrip_decode(self):
        vocab = build_vocab([["a", "b", "a"]], 1)
        assert vocab.decode(vocab.encode(["a", "b"])) == ["a", "b"]
        assert vocab.decode(vocab.encode(["a", "zzz"]))[1] == UNK_TOKEN


class TestEncodeSentence:
    def test_oov_and_eos(self):
        vocab = build_vocab([["a", "a"]], 1)
        ids = vocab.encode(["a", "b"])
        assert ids == [vocab.id_of("a"), vocab.unk_id, vocab.eos_id]

    def test_empty_sentence_still_terminated(self):
        vocab = build_vocab([["a"]], 1)
        assert vocab.encode([]) == [vocab.eos_id]

    def test_repeats(self):
        vocab = build_vocab([["a"]], 1)
        a = vocab.id_of("a")
        assert vocab.encode(["a", "a"]) == [a, a, vocab.eos_id]

    def test_save_load(self, tmp_path):
        vocab = build_vocab([["b", "a", "a"]], 1)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        again = Vocab.load(path)
        assert again.tokens == vocab.tokens
        assert again.tokens[0] == UNK_TOKEN and again.tokens[1] == EOS_TOKEN


class TestParseTree:
    def test_direct_reading(self):
        tree = treelib.parse_tree("( ( a b ) c )")
        assert treelib.is_tree(tree)
        assert not tree.is_leaf()
        assert tree.left.left.token == "a"
        assert tree.left.right.token == "b"
        assert tree.right.token == "c"
        assert [lf.index for lf in treelib.leaves(tree)] == [0, 1, 2]

    def test_ternary_node_fails(self):
        result = treelib.parse_tree("( a b c )")
        assert isinstance(result, treelib.ParseFailure)
        assert "3 children" in result.reason

    def test_noparse_sentinel(self):
        result = treelib.parse_tree("NOPARSE")
        assert isinstance(result, treelib.ParseFailure)

    def test_unbalanced(self):
        assert isinstance(treelib.parse_tree("( a ( b c )"), treelib.ParseFailure)
        assert isinstance(treelib.parse_tree("( a b ) )"), treelib.ParseFailure)
        assert isinstance(treelib.parse_tree("( a )"), treelib.ParseFailure)

    def test_single_token_sentence(self):
        tree = treelib.parse_tree("hello")
        assert tree.is_leaf() and tree.token == "hello"

    def test_binarize_repairs_ternary(self):
        tree = treelib.parse_tree("( a b c )", binarize=True)
        assert treelib.is_tree(tree)
        assert treelib.leaf_tokens(tree) == ["a", "b", "c"]
        assert treelib.render(tree) == "( ( a b ) c )"

    def test_internal_node_counts(self):
        tree = treelib.parse_tree("( ( a b ) ( c ( d e ) ) )")
        assert treelib.n_leaves(tree) == 5
        assert len(treelib.internal_nodes(tree)) == 4

    @given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=999))
    @settings(max_examples=60, deadline=None)
    def test_render_parse_roundtrip(self, n, seed):
        rng = np.random.default_rng(seed)
        tokens = [f"t{i}" for i in range(n)]
        tree = random_binary_tree(tokens, rng)
        text = treelib.render(tree)
        again = treelib.parse_tree(text)
        assert treelib.is_tree(again)
        assert treelib.same_shape(tree, again)
        assert " ".join(treelib.leaf_tokens(again)) == " ".join(tokens)


class TestLoadAndFilter:
    def _vocabs(self):
        v = build_vocab([["a", "b", "c", "d"]], 1)
        return v, v

    def test_line_alignment_enforced(self):
        sv, tv = self._vocabs()
        with pytest.raises(ValueError, match="line counts differ"):
            load_pairs(["a", "b"], ["a"], sv, tv)

    def test_parse_failures_recorded_not_fatal(self):
        sv, tv = self._vocabs()
        pairs, stats = load_pairs(["a b", "a b"], ["c", "c"], sv, tv,
                                  tree_lines=["( a b )", "NOPARSE"])
        assert stats.parse_failures == 1
        assert pairs[0].tree is not None and pairs[1].tree is None

    def test_mismatched_leaves_fall_back(self):
        sv, tv = self._vocabs()
        pairs, stats = load_pairs(["a b"], ["c"], sv, tv, tree_lines=["( a c )"])
        assert pairs[0].tree is None
        assert stats.parse_failures == 1

    def test_length_filter_boundary(self):
        sv, tv = self._vocabs()
        src50 = " ".join(["a"] * 50)
        src51 = " ".join(["a"] * 51)
        pairs, _ = load_pairs([src50, src51], ["b", "b"], sv, tv,
                              tree_lines=[treelib.NOPARSE, treelib.NOPARSE])
        kept = filter_pairs(pairs, max_len=50, drop_unparsed=False)
        assert len(kept) == 1
        assert kept[0].src_len == 50

    def test_eval_mode_keeps_unparsed(self):
        sv, tv = self._vocabs()
        pairs, _ = load_pairs(["a b"], ["c"], sv, tv, tree_lines=["NOPARSE"])
        assert filter_pairs(pairs, drop_unparsed=True) == []
        kept = filter_pairs(pairs, drop_unparsed=False)
        assert len(kept) == 1 and kept[0].tree is None

    def test_reverse_source_drops_trees(self):
        sv, tv = self._vocabs()
        pairs, _ = load_pairs(["a b"], ["c"], sv, tv, tree_lines=["( a b )"],
                              reverse_source=True)
        assert pairs[0].tree is None
        assert pairs[0].src_ids[:2] == [sv.id_of("b"), sv.id_of("a")]


def _pair(src_len, tgt_len):
    return SentencePair([2] * src_len + [1], [2] * tgt_len + [1], None)


class TestLengthModel:
    def test_point_mass(self):
        model = estimate_length_model([_pair(3, 4)] * 500)
        row = model.row(3)
        assert int(np.argmax(row)) + 1 == 4
        assert row[3] > 0.8

    def test_unseen_source_uniform(self):
        model = estimate_length_model([_pair(3, 4)])
        row = model.row(37)
        np.testing.assert_allclose(row, np.full(100, 0.01))

    def test_symmetry(self):
        model = estimate_length_model([_pair(3, 4), _pair(3, 6)])
        assert model.prob(4, 3) == model.prob(6, 3)

    def test_rows_sum_to_one(self):
        model = estimate_length_model([_pair(3, 4), _pair(3, 6), _pair(5, 2)])
        for src_len in (3, 5, 123):
            assert abs(model.row(src_len).sum() - 1.0) < 1e-9

    def test_cap_limits_statistics(self):
        pairs = [_pair(3, 4)] * 10 + [_pair(3, 9)] * 10
        capped = estimate_length_model(pairs, cap=10)
        assert capped.prob(9, 3) < capped.prob(4, 3)

    def test_out_of_range_target_length(self):
        model = estimate_length_model([_pair(3, 4)])
        assert model.prob(0, 3) == 0.0
        assert model.log_prob(0, 3) == float("-inf")
        assert model.prob(101, 3) == 0.0

    def test_save_load_roundtrip(self, tmp_path):
        model = estimate_length_model([_pair(3, 4), _pair(5, 2), _pair(3, 7)])
        path = tmp_path / "lens.txt"
        model.save(path)
        again = LengthModel.load(path)
        for s in (3, 5):
            np.testing.assert_allclose(again.row(s), model.row(s), atol=1e-15)
