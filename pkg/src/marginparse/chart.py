"""Viterbi CKY decoding over a binarized grammar, plus the production-count
feature map and its linear score.

The chart is dense over (i, j) spans with a sparse symbol map per cell;
absent entries stand for minus infinity.  Ties are broken toward the
smaller split point, then the smaller production id, so decoding is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grammar import BinaryRule, Grammar, LexicalRule, RootRule, SymbolInfo
from .treebank import Tree


@dataclass
class Model:
    grammar: Grammar
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.grammar.num_productions,):
            raise ValueError("weight vector length must match the production count")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")

    @classmethod
    def zeros(cls, grammar: Grammar) -> "Model":
        return cls(grammar, np.zeros(grammar.num_productions))


@dataclass
class FeatureVector:
    """Sparse production counts: rule id -> occurrence count."""

    counts: dict

    def dot(self, weights) -> float:
        return float(sum(weights[i] * c for i, c in self.counts.items()))

    def total(self) -> int:
        return sum(self.counts.values())


def feature_vector(tree: Tree, grammar: Grammar) -> FeatureVector:
    """Count every production occurrence in a binarized tree.

    Raises ValueError naming the production when the tree uses a rule the
    grammar does not contain (after unknown-word mapping for lexical rules).
    """
    counts = {}
    ids = grammar.rule_ids

    def bump(rule):
        rid = ids.get(rule)
        if rid is None:
            raise ValueError(f"production not in grammar: {grammar.describe(rule)}")
        counts[rid] = counts.get(rid, 0) + 1

    def walk(node):
        name = node.full_label()
        if node.is_preterminal:
            word = node.children[0].token
            term = grammar.terminal_symbol(word)
            if term is None:
                raise ValueError(
                    f"production not in grammar: {name} -> {word!r} (no match, no unk class)")
            bump(LexicalRule(name, term))
            return
        if len(node.children) == 1:
            child = node.children[0]
            bump(RootRule(name, child.full_label()))
            walk(child)
            return
        if len(node.children) != 2:
            raise ValueError("feature map requires a binarized tree")
        bump(BinaryRule(name, node.children[0].full_label(),
                        node.children[1].full_label()))
        for child in node.children:
            walk(child)

    walk(tree)
    return FeatureVector(counts)


def feature_diff(a: FeatureVector, b: FeatureVector) -> dict:
    """Sparse a - b, with zero entries dropped."""
    out = dict(a.counts)
    for rid, cnt in b.counts.items():
        val = out.get(rid, 0) - cnt
        if val:
            out[rid] = val
        elif rid in out:
            del out[rid]
    return {rid: float(v) for rid, v in out.items()}


def score(model: Model, tree: Tree) -> float:
    """w . Psi(tree): the sum of per-production weights times frequencies."""
    return feature_vector(tree, model.grammar).dot(model.weights)


def _tree_from_symbol(info: SymbolInfo, children) -> Tree:
    return Tree(info.base, children, artificial=info.artificial,
                sib_context=info.sib_context, parent_context=info.parent_context,
                unary_above=info.unary_above)


def cky_parse(model: Model, tokens) -> Tree | None:
    """Highest-scoring binarized derivation of ``tokens``, or None (NoParse).

    Entries are (score, split, rule_id); a candidate replaces the incumbent
    only when its score is strictly greater or it wins the tie-break, so the
    result does not depend on iteration order.
    """
    grammar = model.grammar
    weights = model.weights
    n = len(tokens)
    if n == 0:
        raise ValueError("cannot parse an empty sentence")

    chart = {}
    for i, tok in enumerate(tokens):
        cell = {}
        term = grammar.terminal_symbol(tok)
        if term is not None:
            for rid, rule in grammar.lexical_by_word.get(term, ()):
                sc = weights[rid]
                cur = cell.get(rule.lhs)
                if cur is None or sc > cur[0]:
                    cell[rule.lhs] = (sc, -1, rid)
        chart[i, i + 1] = cell

    by_left = grammar.binary_by_left
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            cell = {}
            for s in range(i + 1, j):
                left = chart[i, s]
                right = chart[s, j]
                if not left or not right:
                    continue
                for lsym, lentry in left.items():
                    for rid, rule in by_left.get(lsym, ()):
                        rentry = right.get(rule.right)
                        if rentry is None:
                            continue
                        sc = weights[rid] + lentry[0] + rentry[0]
                        cur = cell.get(rule.lhs)
                        if (cur is None or sc > cur[0]
                                or (sc == cur[0] and (s, rid) < (cur[1], cur[2]))):
                            cell[rule.lhs] = (sc, s, rid)
            chart[i, j] = cell

    def build(i, j, sym):
        sc, s, rid = chart[i, j][sym]
        info = grammar.symbols[sym]
        if s == -1:
            return _tree_from_symbol(info, [Tree.leaf(tokens[i])])
        rule = grammar.rules[rid]
        return _tree_from_symbol(info, [build(i, s, rule.left),
                                        build(s, j, rule.right)])

    full = chart[0, n]
    if grammar.root_rules:
        best = None
        for rid, rule in grammar.root_rules:
            entry = full.get(rule.child)
            if entry is None:
                continue
            total = weights[rid] + entry[0]
            if best is None or total > best[0] or (total == best[0] and rid < best[1]):
                best = (total, rid, rule.child)
        if best is None:
            return None
        top_info = grammar.symbols[grammar.start_symbol]
        return _tree_from_symbol(top_info, [build(0, n, best[2])])
    if grammar.start_symbol not in full:
        return None
    return build(0, n, grammar.start_symbol)


def write_model(model: Model, path) -> None:
    from .grammar import write_grammar

    write_grammar(model.grammar, path, weights=model.weights)


def read_model(path) -> Model:
    from .grammar import read_grammar

    grammar, weights = read_grammar(path, with_weights=True)
    return Model(grammar, np.array(weights, dtype=np.float64))


def model_to_text(model: Model) -> str:
    from .grammar import grammar_lines

    return "\n".join(grammar_lines(model.grammar, model.weights)) + "\n"


def model_from_text(text: str) -> Model:
    from .grammar import grammar_from_lines

    grammar, weights = grammar_from_lines(text.splitlines(), with_weights=True)
    return Model(grammar, np.array(weights, dtype=np.float64))
