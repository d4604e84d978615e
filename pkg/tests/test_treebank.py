import random

import pytest

from marginparse.treebank import (BracketParseError, Constituent,
                                  CountingConfig, CountingMode, Tree,
                                  constituents, iter_tree_texts,
                                  parse_bracketed, preprocess,
                                  write_bracketed)

from conftest import random_preprocessed_tree

UNBIN = CountingConfig(CountingMode.UNBINARIZED)
BIN = CountingConfig(CountingMode.BINARIZED)


class TestParseBracketed:
    def test_two_token_tree(self):
        tree = parse_bracketed("(X (X a) (X a))")
        assert tree.label == "X"
        assert len(tree.children) == 2
        assert all(c.is_preterminal for c in tree.children)
        assert tree.leaves() == ["a", "a"]

    def test_three_token_tree(self):
        tree = parse_bracketed("(S (NP (D the) (N dog)) (VP (V barked)))")
        assert tree.label == "S"
        assert tree.leaves() == ["the", "dog", "barked"]

    def test_truncated_input_reports_offset(self):
        with pytest.raises(BracketParseError) as exc:
            parse_bracketed("(S (NP")
        assert exc.value.offset == 7

    def test_empty_node_rejected(self):
        with pytest.raises(BracketParseError):
            parse_bracketed("(S (NP ()) (VP (V x)))")

    def test_unbalanced_rejected(self):
        with pytest.raises(BracketParseError):
            parse_bracketed("(S (N x)) )")

    def test_ptb_outer_wrapper_unwrapped(self):
        tree = parse_bracketed("( (S (N dog)) )")
        assert tree.label == "S"

    def test_paren_tokens_unescaped(self):
        tree = parse_bracketed("(S (P -LRB-) (N x) (P -RRB-))")
        assert tree.leaves() == ["(", "x", ")"]


class TestWriteBracketed:
    def test_round_trip_examples(self):
        for text in ("(X (X a) (X a))",
                     "(S (NP (D the) (N dog)) (VP (V barked)))"):
            tree = parse_bracketed(text)
            assert parse_bracketed(write_bracketed(tree)) == tree

    def test_single_preterminal(self):
        assert write_bracketed(parse_bracketed("(X a)")) == "(X a)"

    def test_metadata_labels_serialized_verbatim(self):
        tree = parse_bracketed("(A (B b) (A|C-D (C c) (D d)))")
        assert "A|C-D" in write_bracketed(tree)
        again = parse_bracketed(write_bracketed(tree))
        assert again.children[1].label == "A|C-D"

    def test_paren_tokens_escaped(self):
        tree = Tree("P", [Tree.leaf("(")])
        assert write_bracketed(tree) == "(P -LRB-)"
        assert parse_bracketed(write_bracketed(tree)) == tree

    def test_random_round_trip(self):
        rng = random.Random(0)
        for _ in range(200):
            tree = random_preprocessed_tree(rng)
            assert parse_bracketed(write_bracketed(tree)) == tree


class TestIterTreeTexts:
    def test_multiline_ptb_joined(self):
        lines = ["( (S", "  (NP (D the) (N dog))", "  (VP (V barked))", "))",
                 "(X (X a) (X a))"]
        texts = list(iter_tree_texts(lines))
        assert len(texts) == 2
        assert parse_bracketed(texts[0]).label == "S"

    def test_unterminated_raises(self):
        with pytest.raises(BracketParseError):
            list(iter_tree_texts(["(S (N"]))


class TestPreprocess:
    def test_functional_tags_stripped(self):
        tree = parse_bracketed("(NP-SBJ (D the) (N dog))")
        assert write_bracketed(preprocess(tree)) == "(NP (D the) (N dog))"

    def test_equals_index_stripped(self):
        tree = parse_bracketed("(PP=2 (P of) (N it))")
        assert preprocess(tree).label == "PP"

    def test_null_removal_and_unary_collapse(self):
        tree = parse_bracketed("(S (NP (-NONE- *)) (VP (V barked)))")
        assert write_bracketed(preprocess(tree)) == "(S+VP (V barked))"

    def test_clean_tree_unchanged(self):
        tree = parse_bracketed("(S (NP (D the) (N dog)) (VP (V barked)))")
        assert preprocess(tree) == tree

    def test_punctuation_style_tags_kept(self):
        tree = parse_bracketed("(S (N x) (-RRB- -RRB-))")
        out = preprocess(tree)
        assert out.children[1].label == "-RRB-"

    def test_all_null_tree_errors(self):
        tree = parse_bracketed("(S (NP (-NONE- *)))")
        with pytest.raises(ValueError, match="empty tree"):
            preprocess(tree)

    def test_unary_above_preterminal_kept(self):
        tree = parse_bracketed("(S (NP (N dog)) (V barks))")
        assert preprocess(tree) == tree

    def test_idempotent(self):
        rng = random.Random(1)
        raw = [
            "(S (NP-SBJ (NP (D the) (N dog))) (VP (V barked) (NP (-NONE- *))))",
            "(S (X (Y (Z (N deep)))) (V goes))",
        ]
        for text in raw:
            once = preprocess(parse_bracketed(text))
            assert preprocess(once) == once
        for _ in range(100):
            tree = random_preprocessed_tree(rng)
            once = preprocess(tree)
            assert preprocess(once) == once


class TestConstituents:
    def test_gold_tree_example(self):
        tree = parse_bracketed(
            "(S (NP (D the) (N dog)) (VP (V saw) (NP (D the) (N cat))))")
        ref = constituents(tree, UNBIN)
        assert ref.constituents == {
            Constituent("S", 0, 5), Constituent("NP", 0, 2),
            Constituent("VP", 2, 5), Constituent("NP", 3, 5)}
        assert ref.size == 4

    def test_include_preterminals(self):
        tree = parse_bracketed("(S (N dog) (V barks))")
        ref = constituents(tree, CountingConfig(CountingMode.UNBINARIZED, False))
        assert Constituent("N", 0, 1) in ref.constituents
        assert ref.size == 3

    def test_artificial_skipped_unbinarized_counted_binarized(self):
        from marginparse.grammar import binarize_tree
        tree = binarize_tree(parse_bracketed("(T (A a) (B b) (C c))"))
        bin_ref = constituents(tree, BIN)
        unbin_ref = constituents(tree, UNBIN)
        assert Constituent("T|B-C", 1, 3) in bin_ref.constituents
        assert unbin_ref.constituents == {Constituent("T", 0, 3)}

    def test_parent_annotation_stripped_unbinarized(self):
        from marginparse.grammar import BinConfig, binarize_tree
        tree = binarize_tree(parse_bracketed("(S (A a) (B b))"),
                             BinConfig(vertical=2))
        assert constituents(tree, UNBIN).constituents == {Constituent("S", 0, 2)}
        assert Constituent("S^?", 0, 2) in constituents(tree, BIN).constituents

    def test_folded_unary_counts_as_constituent(self):
        from marginparse.grammar import binarize_tree
        tree = binarize_tree(parse_bracketed("(S (NP (N dog)) (V barks))"))
        ref = constituents(tree, UNBIN)
        assert Constituent("NP", 0, 1) in ref.constituents
        both = constituents(tree, CountingConfig(CountingMode.UNBINARIZED, False))
        assert Constituent("N", 0, 1) in both.constituents

    def test_size_bound(self):
        rng = random.Random(2)
        for _ in range(200):
            tree = random_preprocessed_tree(rng)
            n = len(tree.leaves())
            singles = _single_token_phrasals(tree)
            ref = constituents(tree, UNBIN)
            assert ref.size <= max(n - 1, 0) + singles + (1 if n == 1 else 0)

    def test_duplicate_spans_collapse(self):
        tree = Tree("S", [Tree("S", [Tree("A", [Tree.leaf("a")]),
                                     Tree("A", [Tree.leaf("b")])]),
                          Tree("A", [Tree.leaf("c")])])
        ref = constituents(tree, UNBIN)
        assert ref.size == len(ref.constituents)


def _single_token_phrasals(tree):
    count = 0

    def walk(node):
        nonlocal count
        if node.token is not None:
            return 1
        width = 0
        for child in node.children:
            width += walk(child)
        if width == 1 and not node.is_preterminal:
            count += 1
        return width

    walk(tree)
    return count


class TestCrossModule:
    def test_unbinarized_counts_match_debinarized(self):
        from marginparse.grammar import BinConfig, binarize_tree, debinarize_tree
        rng = random.Random(3)
        for _ in range(150):
            tree = random_preprocessed_tree(rng)
            cfg = BinConfig(horizontal=rng.choice([0, 1, 2, None]),
                            vertical=rng.choice([1, 2]))
            binarized = binarize_tree(tree, cfg)
            for exclude in (True, False):
                config = CountingConfig(CountingMode.UNBINARIZED, exclude)
                assert (constituents(binarized, config).constituents
                        == constituents(debinarize_tree(binarized),
                                        config).constituents)
