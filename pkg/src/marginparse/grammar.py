"""Grammar induction and tree binarization.

Binarization is right-factored: a node ``A`` with children ``C1 .. Ck``
(k >= 3) becomes ``A -> C1 A|C2-...`` with nested artificial nodes on the
right.  The sibling context recorded in an artificial label keeps the next
``h`` pending child labels (``horizontal`` markovization); every
non-artificial label gains the base labels of its ``v - 1`` nearest
ancestors (parent annotation), with ``?`` as the root's sentinel parent.
Artificial nodes inherit the parent annotation of their original node.

A unary node directly above a preterminal (e.g. ``(NP (N dog))``, which
survives unary collapse) is folded into the preterminal so the induced
grammar needs only binary and lexical rules; the fold is recorded on the
node and reversed exactly by ``debinarize_tree``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .treebank import Tree

TOP = "TOP"
ROOT_SENTINEL = "?"
_RESERVED = "^|~"


@dataclass(frozen=True)
class BinConfig:
    """horizontal: sibling labels kept in artificial symbols (None = all);
    vertical: parent-annotation order, 1 = none."""

    horizontal: int | None = None
    vertical: int = 1

    def __post_init__(self):
        if self.horizontal is not None and self.horizontal < 0:
            raise ValueError("horizontal must be >= 0 or None")
        if self.vertical < 1:
            raise ValueError("vertical must be >= 1")


@dataclass(frozen=True)
class BinaryRule:
    lhs: str
    left: str
    right: str


@dataclass(frozen=True)
class LexicalRule:
    lhs: str
    word: str


@dataclass(frozen=True)
class RootRule:
    """Synthetic start production used only when trees have mixed root labels."""

    lhs: str
    child: str


@dataclass(frozen=True)
class SymbolInfo:
    """Decomposition of a serialized grammar symbol."""

    name: str
    base: str
    artificial: bool = False
    sib_context: tuple = ()
    parent_context: tuple = ()
    unary_above: str | None = None


def symbol_info_for(node: Tree) -> SymbolInfo:
    return SymbolInfo(node.full_label(), node.label, node.artificial,
                      node.sib_context, node.parent_context, node.unary_above)


def parse_label(name: str) -> SymbolInfo:
    """Invert ``Tree.full_label()``; base labels must not contain ^ | ~."""
    rest = name
    artificial = False
    sib = ()
    parents = ()
    unary_above = None
    if "|" in rest:
        rest, sib_str = rest.split("|", 1)
        artificial = True
        sib = tuple(sib_str.split("-")) if sib_str else ()
    if "^" in rest:
        rest, parent_str = rest.split("^", 1)
        parents = tuple(parent_str.split("-"))
    if "~" in rest:
        unary_above, rest = rest.split("~", 1)
    return SymbolInfo(name, rest, artificial, sib, parents, unary_above)


def _check_label(label: str):
    if any(ch in label for ch in _RESERVED):
        raise ValueError(f"label {label!r} contains reserved characters {_RESERVED!r}")


def _pad_parents(ancestors: tuple, vertical: int) -> tuple:
    ctx = ancestors[:vertical - 1]
    return ctx + (ROOT_SENTINEL,) * (vertical - 1 - len(ctx))


def binarize_tree(tree: Tree, config: BinConfig = BinConfig()) -> Tree:
    """Right-factored binarization with markovization; exact inverse is
    debinarize_tree.  Expects a preprocessed tree (no nulls, unary chains
    collapsed)."""
    if tree.is_leaf:
        raise ValueError("cannot binarize a bare token")
    return _binarize(tree, config, ())


def _binarize(node: Tree, cfg: BinConfig, ancestors: tuple) -> Tree:
    _check_label(node.label)
    parents = _pad_parents(ancestors, cfg.vertical)
    if node.is_preterminal:
        return Tree(node.label, [Tree.leaf(node.children[0].token)],
                    parent_context=parents)
    kids = node.children
    if len(kids) == 1:
        child = kids[0]
        if child.token is None and child.is_preterminal:
            _check_label(child.label)
            return Tree(child.label, [Tree.leaf(child.children[0].token)],
                        parent_context=parents, unary_above=node.label)
        raise ValueError(
            f"unary chain above {node.label!r}; collapse unaries before binarizing")
    if any(c.token is not None for c in kids):
        raise ValueError(
            f"node {node.label!r} mixes tokens and nonterminals; malformed input")
    child_ancestors = (node.label,) + ancestors
    bkids = [_binarize(c, cfg, child_ancestors) for c in kids]
    if len(bkids) == 2:
        return Tree(node.label, bkids, parent_context=parents)
    labels = [c.label for c in kids]
    acc = bkids[-1]
    for t in range(len(kids) - 2, 0, -1):
        pending = labels[t:]
        if cfg.horizontal is not None:
            pending = pending[:cfg.horizontal]
        acc = Tree(node.label, [bkids[t], acc], artificial=True,
                   sib_context=tuple(pending), parent_context=parents)
    return Tree(node.label, [bkids[0], acc], parent_context=parents)


def debinarize_tree(tree: Tree) -> Tree:
    """Splice artificial nodes back into their parents, unfold preterminal
    unaries, and drop all annotation metadata."""
    if tree.is_leaf:
        return Tree.leaf(tree.token)
    if tree.artificial:
        # Only the synthetic root wrapper may sit at the top; it is unary.
        if len(tree.children) == 1:
            return debinarize_tree(tree.children[0])
        raise ValueError("artificial node at root cannot be debinarized")
    return _debinarize(tree)


def _debinarize(node: Tree) -> Tree:
    if node.token is not None:
        return Tree.leaf(node.token)
    flat = []

    def gather(children):
        for child in children:
            if child.artificial:
                gather(child.children)
            else:
                flat.append(child)

    gather(node.children)
    out = Tree(node.label, [_debinarize(c) for c in flat])
    if node.unary_above is not None:
        out = Tree(node.unary_above, [out])
    return out


def unk_signature(word: str) -> str:
    """Shape class for rare words: initial capital, all digits, short suffix."""
    shape = ""
    if word[:1].isupper():
        shape += "C"
    if word.isdigit():
        shape += "D"
    suffix = "".join(ch for ch in word[-3:].lower() if ch.isalnum())
    return f"<unk-{shape}-{suffix}>"


class Grammar:
    """An indexed set of binary/lexical (and possibly root) productions.

    Rule ids are dense 0..m-1 in first-occurrence order; the same ids index
    model weight vectors and feature counts.  Immutable after construction.
    """

    def __init__(self, rules, start_symbol, symbols, terminals, unk_threshold=0):
        self.rules = tuple(rules)
        self.start_symbol = start_symbol
        self.symbols = dict(symbols)
        self.terminals = frozenset(terminals)
        self.unk_threshold = unk_threshold
        self.rule_ids = {rule: i for i, rule in enumerate(self.rules)}
        if len(self.rule_ids) != len(self.rules):
            raise ValueError("duplicate productions")
        self.binary_by_left = {}
        self.binary_by_lhs = {}
        self.lexical_by_word = {}
        self.root_rules = []
        for i, rule in enumerate(self.rules):
            if isinstance(rule, BinaryRule):
                self.binary_by_left.setdefault(rule.left, []).append((i, rule))
                self.binary_by_lhs.setdefault(rule.lhs, []).append((i, rule))
            elif isinstance(rule, LexicalRule):
                self.lexical_by_word.setdefault(rule.word, []).append((i, rule))
            else:
                self.root_rules.append((i, rule))
        self.nonterminals = frozenset(self.symbols)

    @property
    def num_productions(self) -> int:
        return len(self.rules)

    def terminal_symbol(self, word: str) -> str | None:
        """Map a surface token to the terminal the grammar knows, or None."""
        if word in self.terminals:
            return word
        sig = unk_signature(word)
        if sig in self.terminals:
            return sig
        return None

    def describe(self, rule) -> str:
        if isinstance(rule, BinaryRule):
            return f"{rule.lhs} -> {rule.left} {rule.right}"
        if isinstance(rule, LexicalRule):
            return f"{rule.lhs} -> {rule.word!r}"
        return f"{rule.lhs} -> {rule.child}"


def induce(trees, unk_threshold: int = 2) -> Grammar:
    """Collect the distinct productions of binarized trees.

    Words with corpus frequency below ``unk_threshold`` are represented by
    their unknown-word signature class, so unseen words remain parseable.
    Trees with inconsistent root labels are wrapped under a synthetic TOP
    start symbol via root rules.
    """
    trees = list(trees)
    if not trees:
        raise ValueError("cannot induce a grammar from an empty treebank")
    word_counts = Counter(tok for tree in trees for tok in tree.leaves())

    def terminal_for(word):
        return word if word_counts[word] >= unk_threshold else unk_signature(word)

    rules = {}
    symbols = {}
    terminals = set()

    def add_rule(rule):
        if rule not in rules:
            rules[rule] = len(rules)

    def add_symbol(node):
        name = node.full_label()
        if name not in symbols:
            symbols[name] = symbol_info_for(node)
        return name

    def walk(node):
        name = add_symbol(node)
        if node.is_preterminal:
            term = terminal_for(node.children[0].token)
            terminals.add(term)
            add_rule(LexicalRule(name, term))
            return name
        if len(node.children) != 2:
            raise ValueError("trees must be binarized before induction")
        left = walk(node.children[0])
        right = walk(node.children[1])
        add_rule(BinaryRule(name, left, right))
        return name

    roots = [walk(tree) for tree in trees]
    distinct_roots = sorted(set(roots))
    if len(distinct_roots) == 1:
        start = distinct_roots[0]
    else:
        # The synthetic start is artificial, so its serialized name carries
        # the bar marker just like any other artificial symbol.
        base = TOP
        while base + "|" in symbols:
            base += "_"
        start = base + "|"
        symbols[start] = SymbolInfo(start, base, artificial=True)
        for root in distinct_roots:
            add_rule(RootRule(start, root))
    ordered = sorted(rules, key=rules.get)
    return Grammar(ordered, start, symbols, terminals, unk_threshold)


def wrap_root(tree: Tree, grammar: "Grammar") -> Tree:
    """Wrap a binarized tree under the synthetic root node when the grammar
    carries root rules; otherwise return the tree unchanged."""
    if not grammar.root_rules:
        return tree
    info = grammar.symbols[grammar.start_symbol]
    return Tree(info.base, [tree], artificial=True)


def grammar_lines(grammar: Grammar, weights=None):
    """TSV lines of the grammar (or model, with ``weights``) file format."""
    yield f"#start\t{grammar.start_symbol}"
    for i, rule in enumerate(grammar.rules):
        if isinstance(rule, BinaryRule):
            cols = ["B", rule.lhs, rule.left, rule.right]
        elif isinstance(rule, LexicalRule):
            cols = ["L", rule.lhs, rule.word]
        else:
            cols = ["R", rule.lhs, rule.child]
        if weights is not None:
            cols.append(repr(float(weights[i])))
        yield "\t".join(cols)


def grammar_from_lines(lines, with_weights=False):
    rules = []
    weights = []
    start = None
    symbols = {}
    terminals = set()

    def note_symbol(name):
        if name not in symbols:
            symbols[name] = parse_label(name)

    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if cols[0] == "#start":
            start = cols[1]
            continue
        kind = cols[0]
        body = cols[1:]
        if with_weights:
            weights.append(float(body[-1]))
            body = body[:-1]
        if kind == "B":
            lhs, left, right = body
            rules.append(BinaryRule(lhs, left, right))
            for name in (lhs, left, right):
                note_symbol(name)
        elif kind == "L":
            lhs, word = body
            rules.append(LexicalRule(lhs, word))
            note_symbol(lhs)
            terminals.add(word)
        elif kind == "R":
            lhs, child = body
            rules.append(RootRule(lhs, child))
            note_symbol(lhs)
            note_symbol(child)
        else:
            raise ValueError(f"unknown grammar line kind {kind!r} at line {lineno}")
    if start is None:
        raise ValueError("grammar file lacks a #start header")
    grammar = Grammar(rules, start, symbols, terminals)
    if with_weights:
        return grammar, weights
    return grammar


def write_grammar(grammar: Grammar, path, weights=None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for line in grammar_lines(grammar, weights):
            handle.write(line + "\n")


def read_grammar(path, with_weights=False):
    """Read a grammar (or model, with ``with_weights``) TSV file.

    Returns the Grammar, or a (Grammar, list-of-weights) pair.
    """
    with open(path, encoding="utf-8") as handle:
        return grammar_from_lines(handle, with_weights)
