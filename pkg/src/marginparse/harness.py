"""Randomized correctness harness.

Each trial builds a small random treebank, binarizes it under a random
markovization config, induces a grammar, draws random weights, and checks

  * the stratified loss-augmented decoder against brute-force enumeration
    for every loss mode, and
  * CKY against the enumeration maximum.

The brute-force side scores full trees and counts constituents at tree
level, sharing nothing with the chart recurrences.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .chart import Model, cky_parse, score
from .grammar import BinConfig, binarize_tree, debinarize_tree, induce, wrap_root
from .lossdp import (ALL_MODES, brute_force_best, count_tree,
                     enumerate_parses, loss_augmented_infer)
from .treebank import CountingMode, Tree, constituents

TOLERANCE = 1e-9

_PHRASALS = ["S", "T", "U"]
_TAGS = ["A", "B"]
_VOCAB = ["a", "b", "c"]


@dataclass
class ModeCheck:
    mode_name: str
    dp_objective: float
    brute_objective: float
    match: bool
    tp: int
    fp: int


@dataclass
class TrialRecord:
    trial: int
    cky_score: float
    enum_best_score: float
    cky_match: bool
    checks: list


def random_gold_tree(rng: random.Random, length: int) -> Tree:
    """A random n-ary tree over ``length`` fresh tokens; occasionally puts a
    unary phrasal directly above a preterminal (which binarization folds)."""
    tokens = [rng.choice(_VOCAB) for _ in range(length)]

    def build(span):
        if len(span) == 1:
            node = Tree(rng.choice(_TAGS), [Tree.leaf(span[0])])
            if rng.random() < 0.25:
                node = Tree(rng.choice(_PHRASALS), [node])
            return node
        k = rng.randint(2, min(4, len(span)))
        cuts = sorted(rng.sample(range(1, len(span)), k - 1))
        bounds = [0] + cuts + [len(span)]
        parts = [span[bounds[t]:bounds[t + 1]] for t in range(k)]
        return Tree(rng.choice(_PHRASALS), [build(part) for part in parts])

    root = build(tokens)
    if root.token is not None:
        root = Tree(rng.choice(_TAGS), [root])
    return root


def random_instance(rng: random.Random, max_len: int):
    """(model, gold tree, binarized+wrapped gold, tokens) for one trial."""
    n_trees = rng.randint(2, 4)
    trees = [random_gold_tree(rng, rng.randint(1, max_len)) for _ in range(n_trees)]
    cfg = BinConfig(horizontal=rng.choice([0, 1, 2, None]),
                    vertical=rng.choice([1, 2]))
    btrees = [binarize_tree(t, cfg) for t in trees]
    grammar = induce(btrees, unk_threshold=1)
    weights = np.array([rng.uniform(-2.0, 2.0)
                        for _ in range(grammar.num_productions)])
    model = Model(grammar, weights)
    gold = trees[0]
    gold_b = wrap_root(btrees[0], grammar)
    return model, gold, gold_b, gold.leaves()


def run_trials(trials: int, max_len: int = 7, seed: int = 42,
               modes=ALL_MODES, strict: bool = False) -> list:
    """Run the randomized oracle comparison; ``strict`` additionally asserts
    the decoder's internal invariants (used by the test suite)."""
    rng = random.Random(seed)
    records = []
    for trial in range(trials):
        model, gold, gold_b, tokens = random_instance(rng, max_len)
        grammar = model.grammar
        const = 1.0 - score(model, gold_b)
        wrapped = bool(grammar.root_rules)

        forest = enumerate_parses(grammar, tokens, max_len=max_len + 1)
        enum_best = max(score(model, t) for t in forest)
        parsed = cky_parse(model, tokens)
        cky_sc = score(model, parsed)
        cky_ok = bool(abs(cky_sc - enum_best) <= TOLERANCE)
        if strict:
            assert parsed.leaves() == tokens
            assert cky_ok, f"trial {trial}: cky {cky_sc} != enumeration {enum_best}"

        checks = []
        for mode in modes:
            if mode.counting.mode is CountingMode.BINARIZED:
                ref = constituents(gold_b, mode.counting)
            else:
                ref = constituents(gold, mode.counting)
            result = loss_augmented_infer(model, tokens, ref, mode, const=const)
            brute = brute_force_best(model, tokens, ref, mode, const,
                                     max_len=max_len + 1)
            match = (result is not None and brute is not None
                     and abs(result.objective - brute[0]) <= TOLERANCE)
            checks.append(ModeCheck(mode.name, float(result.objective),
                                    float(brute[0]), bool(match),
                                    result.tp, result.fp))
            if strict:
                assert match, (f"trial {trial} mode {mode.name}: "
                               f"dp {result.objective} != brute {brute[0]}")
                assert result.objective >= -TOLERANCE
                counted = count_tree(result.tree, ref, mode.counting)
                assert counted == (result.tp, result.fp), \
                    f"trial {trial} mode {mode.name}: chart counts != tree counts"
                recomputed = result.loss * (const + score(model, result.tree))
                assert abs(recomputed - result.objective) <= TOLERANCE
                if (mode.counting.mode is CountingMode.BINARIZED
                        and mode.counting.exclude_preterminals):
                    expected = len(tokens) - 1 + (1 if wrapped else 0)
                    assert result.tp + result.fp == expected
                if mode.counting.mode is CountingMode.UNBINARIZED:
                    flat = debinarize_tree(result.tree)
                    assert count_tree(flat, ref, mode.counting) == counted
        records.append(TrialRecord(trial, cky_sc, enum_best, cky_ok, checks))
    return records


def records_to_tsv(records) -> str:
    lines = ["trial\tmode\tdp_objective\tbrute_objective\tmatch"]
    for rec in records:
        for check in rec.checks:
            lines.append(f"{rec.trial}\t{check.mode_name}\t"
                         f"{check.dp_objective!r}\t{check.brute_objective!r}\t"
                         f"{int(check.match)}")
    return "\n".join(lines) + "\n"


def all_match(records) -> bool:
    return all(check.match for rec in records for check in rec.checks) and \
        all(rec.cky_match for rec in records)
