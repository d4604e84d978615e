"""Loss-augmented inference, exact for losses parameterized by (tp, fp).

The decoder fills a chart whose cells are stratified by the exact number
of true and false positives a subtree accumulates against the gold
constituent set: entry (i, j, A, tp, fp) holds the best production-weight
sum over subtrees spanning [i, j) rooted at A with exactly those counts.
At the root the loss, a function of (tp, fp) only, multiplies
(const + score) and the best stratum wins.

Counting runs in one of two modes.  In binarized mode every node of the
binarized derivation counts under its full annotated label.  In
unbinarized mode artificial nodes contribute nothing and annotations are
ignored, so the accumulated counts equal the counts of the debinarized
tree against the original gold tree, while decoding stays in the
binarized (cubic) space.

``enumerate_parses`` plus tree-level counting provides the brute-force
oracle the DP is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .chart import Model, _tree_from_symbol, score
from .grammar import Grammar
from .treebank import (CountingConfig, CountingMode, GoldReference, Tree,
                       constituents)


class LossKind(Enum):
    F1 = "f1"
    FP = "fp"
    ZERO_ONE = "zeroone"


@dataclass(frozen=True)
class LossMode:
    kind: LossKind
    counting: CountingConfig
    name: str


F1_UNBINARIZED = LossMode(LossKind.F1, CountingConfig(CountingMode.UNBINARIZED), "f1")
F1_BINARIZED = LossMode(LossKind.F1, CountingConfig(CountingMode.BINARIZED), "f1-bin")
FP_BINARIZED = LossMode(LossKind.FP, CountingConfig(CountingMode.BINARIZED), "fp-bin")
ZERO_ONE_BINARIZED = LossMode(LossKind.ZERO_ONE,
                              CountingConfig(CountingMode.BINARIZED), "zeroone-bin")

ALL_MODES = (F1_UNBINARIZED, F1_BINARIZED, FP_BINARIZED, ZERO_ONE_BINARIZED)
_MODES_BY_NAME = {mode.name: mode for mode in ALL_MODES}


def parse_loss_mode(name: str) -> LossMode:
    try:
        return _MODES_BY_NAME[name]
    except KeyError:
        raise ValueError(
            f"unknown loss {name!r}; choose from {sorted(_MODES_BY_NAME)}") from None


def f1(tp: int, fp: int, gold_size: int) -> float:
    """2*tp / (gold_size + tp + fp), with the empty-empty case defined as 1."""
    if tp < 0 or fp < 0:
        raise ValueError("counts must be non-negative")
    if tp > gold_size:
        raise ValueError(f"tp={tp} exceeds gold size {gold_size}")
    denom = gold_size + tp + fp
    if denom == 0:
        return 1.0
    return 2.0 * tp / denom


def delta_value(kind: LossKind, tp: int, fp: int, gold_size: int) -> float:
    if kind is LossKind.F1:
        return 1.0 - f1(tp, fp, gold_size)
    if kind is LossKind.FP:
        return float(fp)
    return 0.0 if (tp == gold_size and fp == 0) else 1.0


def count_tree(tree: Tree, gold: GoldReference, config: CountingConfig):
    """(tp, fp) of a tree's counted constituents against the gold set."""
    pred = constituents(tree, config).constituents
    tp = len(pred & gold.constituents)
    return tp, len(pred) - tp


def delta(mode: LossMode, gold: GoldReference, tree: Tree) -> float:
    tp, fp = count_tree(tree, gold, mode.counting)
    return delta_value(mode.kind, tp, fp, gold.size)


@dataclass
class LAIResult:
    """Argmax of loss * (const + score) with its counts and loss value."""

    tree: Tree
    objective: float
    tp: int
    fp: int
    loss: float


def _lexical_counts(info, i, config, gold_set):
    """Counts contributed by one length-1 node (possibly a folded unary)."""
    if config.mode is CountingMode.BINARIZED:
        if config.exclude_preterminals:
            return 0, 0
        return (1, 0) if (info.name, i, i + 1) in gold_set else (0, 1)
    tp = fp = 0
    counted = set()
    if info.unary_above is not None:
        counted.add(info.unary_above)
    if not config.exclude_preterminals:
        counted.add(info.base)
    for label in counted:
        if (label, i, i + 1) in gold_set:
            tp += 1
        else:
            fp += 1
    return tp, fp


def _node_counts(info, i, j, config, gold_set):
    """Counts contributed by one internal binary (or root) node."""
    if config.mode is CountingMode.BINARIZED:
        return (1, 0) if (info.name, i, j) in gold_set else (0, 1)
    if info.artificial:
        return 0, 0
    return (1, 0) if (info.base, i, j) in gold_set else (0, 1)


def loss_augmented_infer(model: Model, tokens, gold: GoldReference,
                         mode: LossMode, gold_tree: Tree | None = None,
                         const: float | None = None) -> LAIResult | None:
    """Exact argmax over derivations y of  loss(y*, y) * (const + w.Psi(y)).

    ``const`` defaults to 1 - score(model, gold_tree) (the binarized gold
    tree must then be supplied).  Returns None when the sentence has no
    derivation.  Ties are resolved toward smaller fp, then larger tp, then
    the chart tie-break, so training is reproducible.
    """
    if const is None:
        if gold_tree is None:
            raise ValueError("need either const or the binarized gold tree")
        const = 1.0 - score(model, gold_tree)
    grammar = model.grammar
    weights = model.weights
    config = mode.counting
    gold_set = gold.constituents
    max_tp = gold.size
    n = len(tokens)
    if n == 0:
        raise ValueError("cannot decode an empty sentence")

    symbols = grammar.symbols
    cells = {}
    for i, tok in enumerate(tokens):
        cell = {}
        term = grammar.terminal_symbol(tok)
        if term is not None:
            for rid, rule in grammar.lexical_by_word.get(term, ()):
                counts = _lexical_counts(symbols[rule.lhs], i, config, gold_set)
                if counts[0] > max_tp:
                    continue
                sc = weights[rid]
                states = cell.setdefault(rule.lhs, {})
                cur = states.get(counts)
                if cur is None or sc > cur[0]:
                    states[counts] = (sc, -1, rid, None, None)
        cells[i, i + 1] = cell

    by_left = grammar.binary_by_left
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            cell = {}
            own_cache = {}
            for s in range(i + 1, j):
                left = cells[i, s]
                right = cells[s, j]
                if not left or not right:
                    continue
                for lsym, lstates in left.items():
                    for rid, rule in by_left.get(lsym, ()):
                        rstates = right.get(rule.right)
                        if rstates is None:
                            continue
                        lhs = rule.lhs
                        own = own_cache.get(lhs)
                        if own is None:
                            own = _node_counts(symbols[lhs], i, j, config, gold_set)
                            own_cache[lhs] = own
                        rule_sc = weights[rid]
                        target = cell.setdefault(lhs, {})
                        for lkey, lval in lstates.items():
                            tp0 = lkey[0] + own[0]
                            if tp0 > max_tp:
                                continue
                            fp0 = lkey[1] + own[1]
                            sc0 = rule_sc + lval[0]
                            for rkey, rval in rstates.items():
                                tp = tp0 + rkey[0]
                                if tp > max_tp:
                                    continue
                                key = (tp, fp0 + rkey[1])
                                sc = sc0 + rval[0]
                                cur = target.get(key)
                                if (cur is None or sc > cur[0]
                                        or (sc == cur[0]
                                            and (s, rid) < (cur[1], cur[2]))):
                                    target[key] = (sc, s, rid, lkey, rkey)
            cells[i, j] = cell

    # Termination: best loss stratum at the root (through root rules when
    # the grammar wraps mixed root labels).
    kind = mode.kind
    gold_size = gold.size
    best = None  # ((objective, -fp, tp, -rid), sym, key, tp, fp, wrapped)
    full = cells[0, n]

    def consider(total_tp, total_fp, total_sc, rid, sym, key, wrapped):
        nonlocal best
        objective = delta_value(kind, total_tp, total_fp, gold_size) * (const + total_sc)
        cand = (objective, -total_fp, total_tp, -rid)
        if best is None or cand > best[0]:
            best = (cand, sym, key, total_tp, total_fp, wrapped)

    if grammar.root_rules:
        top_own = _node_counts(symbols[grammar.start_symbol], 0, n, config, gold_set)
        for rid, rule in grammar.root_rules:
            states = full.get(rule.child)
            if not states:
                continue
            for key, val in states.items():
                tp = key[0] + top_own[0]
                if tp > max_tp:
                    continue
                consider(tp, key[1] + top_own[1], val[0] + weights[rid],
                         rid, rule.child, key, True)
    else:
        states = full.get(grammar.start_symbol)
        if states:
            for key, val in states.items():
                consider(key[0], key[1], val[0], 0, grammar.start_symbol, key, False)

    if best is None:
        return None

    def build(i, j, sym, key):
        sc, s, rid, lkey, rkey = cells[i, j][sym][key]
        info = symbols[sym]
        if s == -1:
            return _tree_from_symbol(info, [Tree.leaf(tokens[i])])
        rule = grammar.rules[rid]
        return _tree_from_symbol(info, [build(i, s, rule.left, lkey),
                                        build(s, j, rule.right, rkey)])

    cand, sym, key, tp, fp, wrapped = best
    tree = build(0, n, sym, key)
    if wrapped:
        tree = _tree_from_symbol(symbols[grammar.start_symbol], [tree])
    loss = delta_value(kind, tp, fp, gold_size)
    return LAIResult(tree, float(cand[0]), tp, fp, loss)


def enumerate_parses(grammar: Grammar, tokens, max_len: int = 8) -> list:
    """Every distinct derivation of ``tokens``, for oracle checks.

    Guarded by ``max_len`` since the forest grows combinatorially.
    """
    n = len(tokens)
    if n == 0:
        raise ValueError("cannot enumerate parses of an empty sentence")
    if n > max_len:
        raise ValueError(f"sentence length {n} exceeds enumeration bound {max_len}")
    symbols = grammar.symbols
    terms = [grammar.terminal_symbol(tok) for tok in tokens]
    memo = {}

    def parses(i, j, sym):
        state = memo.get((i, j, sym))
        if state is not None:
            return state
        out = []
        if j - i == 1:
            if terms[i] is not None:
                for _, rule in grammar.lexical_by_word.get(terms[i], ()):
                    if rule.lhs == sym:
                        out.append(_tree_from_symbol(symbols[sym],
                                                     [Tree.leaf(tokens[i])]))
        for _, rule in grammar.binary_by_lhs.get(sym, ()):
            for s in range(i + 1, j):
                lefts = parses(i, s, rule.left)
                if not lefts:
                    continue
                rights = parses(s, j, rule.right)
                for lt in lefts:
                    for rt in rights:
                        out.append(_tree_from_symbol(symbols[sym], [lt, rt]))
        memo[(i, j, sym)] = out
        return out

    if grammar.root_rules:
        top_info = symbols[grammar.start_symbol]
        result = []
        for _, rule in grammar.root_rules:
            for tree in parses(0, n, rule.child):
                result.append(_tree_from_symbol(top_info, [tree]))
        return result
    return parses(0, n, grammar.start_symbol)


def brute_force_best(model: Model, tokens, gold: GoldReference, mode: LossMode,
                     const: float, max_len: int = 8):
    """Oracle for loss_augmented_infer: exhaustive maximization over the
    enumerated forest with tree-level counting.  Returns (objective, tree)
    or None when no derivation exists."""
    forest = enumerate_parses(model.grammar, tokens, max_len=max_len)
    if not forest:
        return None
    best = None
    for tree in forest:
        objective = delta(mode, gold, tree) * (const + score(model, tree))
        if best is None or objective > best[0]:
            best = (objective, tree)
    return best
