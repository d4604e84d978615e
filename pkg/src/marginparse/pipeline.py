"""End-to-end orchestration: preprocess -> induce -> train -> parse ->
evaluate/compare.  The service endpoints and the CLI are thin wrappers
around these functions."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .chart import Model, cky_parse
from .grammar import BinConfig, binarize_tree, debinarize_tree, induce, wrap_root
from .lossdp import (F1_BINARIZED, F1_UNBINARIZED, FP_BINARIZED,
                     ZERO_ONE_BINARIZED, LossMode)
from .metrics import (WilcoxonResult, evaluate, loss_difference_export,
                      wilcoxon_signed_rank)
from .ssvm import TrainConfig, TrainReport, train
from .treebank import CountingConfig, CountingMode, Tree, constituents

NOPARSE_LABEL = "NOPARSE"


def preprocess_corpus(trees, strip_functional=True, remove_nulls=True,
                      collapse_unaries=True, max_len=None):
    """Normalize a corpus; sentences longer than ``max_len`` are dropped.
    Returns (kept trees, number dropped)."""
    from .treebank import preprocess

    kept = []
    dropped = 0
    for tree in trees:
        clean = preprocess(tree, strip_functional, remove_nulls, collapse_unaries)
        if max_len is not None and len(clean.leaves()) > max_len:
            dropped += 1
            continue
        kept.append(clean)
    return kept, dropped


def build_examples(trees, grammar, bin_config: BinConfig, mode: LossMode):
    """(tokens, binarized gold, GoldReference) triples for the trainer."""
    examples = []
    for tree in trees:
        binarized = wrap_root(binarize_tree(tree, bin_config), grammar)
        if mode.counting.mode is CountingMode.BINARIZED:
            reference = constituents(binarized, mode.counting)
        else:
            reference = constituents(tree, mode.counting)
        examples.append((tree.leaves(), binarized, reference))
    return examples


def train_pipeline(trees, config: TrainConfig, bin_config: BinConfig = BinConfig(),
                   unk_threshold: int = 2):
    """Binarize, induce, and train; returns (Model, TrainReport)."""
    trees = list(trees)
    binarized = [binarize_tree(t, bin_config) for t in trees]
    grammar = induce(binarized, unk_threshold=unk_threshold)
    examples = build_examples(trees, grammar, bin_config, config.loss_mode)
    return train(examples, grammar, config)


def noparse_placeholder(tokens) -> Tree:
    return Tree(NOPARSE_LABEL, [Tree.leaf(tok) for tok in tokens])


def parse_corpus(model: Model, sentences, threads: int = 1):
    """Decode and debinarize each token list; unparseable sentences get a
    flat NOPARSE placeholder.  Returns (trees, noparse count)."""

    def one(tokens):
        parsed = cky_parse(model, tokens)
        if parsed is None:
            return noparse_placeholder(tokens)
        return debinarize_tree(parsed)

    sentences = list(sentences)
    if threads > 1 and len(sentences) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(one, sentences))
    else:
        trees = [one(tokens) for tokens in sentences]
    noparse = sum(1 for t in trees if t.label == NOPARSE_LABEL)
    return trees, noparse


@dataclass
class ProtocolRow:
    measure: str
    precision: float
    recall: float
    f1: float
    exact_match: float
    noparse: int

    def to_json_dict(self) -> dict:
        return {"measure": self.measure, "precision": self.precision,
                "recall": self.recall, "f1": self.f1,
                "exact_match": self.exact_match, "noparse": self.noparse}


@dataclass
class ProtocolResult:
    rows: list
    wilcoxon: WilcoxonResult
    diff_rows: list
    reports: dict


def run_protocol(train_trees, eval_trees, config: TrainConfig,
                 bin_config: BinConfig = BinConfig(), unk_threshold: int = 2,
                 threads: int = 1) -> ProtocolResult:
    """Train one model per loss mode, evaluate each on the eval set with
    unbinarized counting, and compare the two F1-trained models with the
    signed-rank test over per-sentence loss differences."""
    from dataclasses import replace

    eval_config = CountingConfig(CountingMode.UNBINARIZED,
                                 config.loss_mode.counting.exclude_preterminals)
    sentences = [t.leaves() for t in eval_trees]
    rows = []
    reports = {}
    predictions = {}
    for mode in (ZERO_ONE_BINARIZED, FP_BINARIZED, F1_BINARIZED, F1_UNBINARIZED):
        model, report = train_pipeline(train_trees, replace(config, loss_mode=mode),
                                       bin_config, unk_threshold)
        trees, noparse = parse_corpus(model, sentences, threads)
        result = evaluate(trees, eval_trees, eval_config)
        rows.append(ProtocolRow(mode.name, result.precision, result.recall,
                                result.f1, result.exact_match, noparse))
        reports[mode.name] = report
        predictions[mode.name] = trees
    diff_rows = loss_difference_export(predictions["f1"], predictions["f1-bin"],
                                       eval_trees, eval_config)
    wilcoxon = wilcoxon_signed_rank([row.difference for row in diff_rows])
    return ProtocolResult(rows, wilcoxon, diff_rows, reports)


def protocol_table_tsv(rows) -> str:
    lines = ["measure\tprecision\trecall\tf1\texact_match\tnoparse"]
    for row in rows:
        lines.append(f"{row.measure}\t{row.precision:.4f}\t{row.recall:.4f}\t"
                     f"{row.f1:.4f}\t{row.exact_match:.4f}\t{row.noparse}")
    return "\n".join(lines) + "\n"
