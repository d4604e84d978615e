"""Corpus evaluation (micro-averaged P/R/F1 and exact-match accuracy),
the Wilcoxon signed-rank test for paired model comparison, and the
per-sentence loss-difference table behind comparison histograms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .lossdp import f1 as f1_score
from .treebank import CountingConfig, Tree, constituents


@dataclass(frozen=True)
class SentenceScore:
    tp: int
    fp: int
    gold_size: int
    delta_f1: float


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f1: float
    exact_match: float
    per_sentence: tuple

    @property
    def n_sentences(self) -> int:
        return len(self.per_sentence)

    def to_json_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "exact_match": self.exact_match,
                "n_sentences": self.n_sentences}


def _score_pair(pred: Tree, gold: Tree, config: CountingConfig) -> SentenceScore:
    gold_ref = constituents(gold, config)
    pred_set = constituents(pred, config).constituents
    tp = len(pred_set & gold_ref.constituents)
    fp = len(pred_set) - tp
    return SentenceScore(tp, fp, gold_ref.size,
                         1.0 - f1_score(tp, fp, gold_ref.size))


def evaluate(pred, gold, config: CountingConfig = CountingConfig()) -> EvalResult:
    """Micro-averaged corpus metrics: P = sum tp / sum (tp+fp),
    R = sum tp / sum gold, F1 their harmonic mean, exact_match the fraction
    of sentences with a perfectly matching counted set."""
    pred = list(pred)
    gold = list(gold)
    if len(pred) != len(gold):
        raise ValueError(
            f"prediction/gold length mismatch: {len(pred)} vs {len(gold)}")
    scores = []
    for index, (p, g) in enumerate(zip(pred, gold)):
        if p.leaves() != g.leaves():
            raise ValueError(f"token mismatch at sentence {index}")
        scores.append(_score_pair(p, g, config))
    total_tp = sum(s.tp for s in scores)
    total_pred = sum(s.tp + s.fp for s in scores)
    total_gold = sum(s.gold_size for s in scores)
    precision = total_tp / total_pred if total_pred else (1.0 if total_gold == 0 else 0.0)
    recall = total_tp / total_gold if total_gold else (1.0 if total_pred == 0 else 0.0)
    corpus_f1 = (2 * precision * recall / (precision + recall)
                 if precision + recall > 0 else 0.0)
    exact = (sum(1 for s in scores if s.tp == s.gold_size and s.fp == 0)
             / len(scores) if scores else 1.0)
    return EvalResult(precision, recall, corpus_f1, exact, tuple(scores))


class WilcoxonMethod(Enum):
    EXACT = "Exact"
    NORMAL_APPROX = "NormalApprox"


@dataclass(frozen=True)
class WilcoxonResult:
    n_nonzero: int
    w_statistic: float
    p_value: float
    method: WilcoxonMethod

    def to_json_dict(self) -> dict:
        return {"n_nonzero": self.n_nonzero, "w": self.w_statistic,
                "p_value": self.p_value, "method": self.method.value}


def _ranks(values) -> list:
    """Average ranks (1-based) with ties sharing their mean rank."""
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and values[order[end + 1]] == values[order[pos]]:
            end += 1
        mean_rank = (pos + end) / 2.0 + 1.0
        for k in range(pos, end + 1):
            ranks[order[k]] = mean_rank
        pos = end + 1
    return ranks


_EXACT_CUTOFF = 20


def wilcoxon_signed_rank(diffs) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test; zero differences are dropped.

    Up to 20 nonzero differences the null distribution of the rank sum is
    computed exactly over all 2^n sign assignments; beyond that a normal
    approximation with tie correction and continuity correction is used.
    """
    diffs = list(diffs)
    if not diffs:
        raise ValueError("need at least one difference")
    nonzero = [d for d in diffs if d != 0]
    n = len(nonzero)
    if n == 0:
        return WilcoxonResult(0, 0.0, 1.0, WilcoxonMethod.EXACT)
    ranks = _ranks([abs(d) for d in nonzero])
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)
    w_minus = sum(r for d, r in zip(nonzero, ranks) if d < 0)
    w = min(w_plus, w_minus)
    total = w_plus + w_minus

    if n <= _EXACT_CUTOFF:
        # Distribution of 2*W+ over all sign assignments; average ranks are
        # half-integers, so doubling keeps everything integral.
        scaled = [int(round(2 * r)) for r in ranks]
        dist = {0: 1}
        for r in scaled:
            nxt = {}
            for value, count in dist.items():
                nxt[value] = nxt.get(value, 0) + count
                nxt[value + r] = nxt.get(value + r, 0) + count
            dist = nxt
        threshold = int(round(2 * w))
        upper = int(round(2 * total)) - threshold
        hits = sum(count for value, count in dist.items()
                   if value <= threshold or value >= upper)
        p = min(1.0, hits / (2 ** n))
        return WilcoxonResult(n, w, p, WilcoxonMethod.EXACT)

    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    counts = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    for t in counts.values():
        variance -= (t ** 3 - t) / 48.0
    sd = math.sqrt(variance)
    z = (w - mean + 0.5) / sd
    p = min(1.0, 1.0 + math.erf(z / math.sqrt(2.0)))  # 2 * Phi(z)
    return WilcoxonResult(n, w, p, WilcoxonMethod.NORMAL_APPROX)


@dataclass(frozen=True)
class LossDifferenceRow:
    index: int
    delta_f1_a: float
    delta_f1_b: float
    difference: float
    zero_diff: bool


def loss_difference_export(pred_a, pred_b, gold,
                           config: CountingConfig = CountingConfig()) -> list:
    """Per-sentence loss differences between two prediction sets; rows with
    zero difference are flagged so downstream tests can drop them."""
    result_a = evaluate(pred_a, gold, config)
    result_b = evaluate(pred_b, gold, config)
    rows = []
    for index, (sa, sb) in enumerate(zip(result_a.per_sentence,
                                         result_b.per_sentence)):
        diff = sa.delta_f1 - sb.delta_f1
        rows.append(LossDifferenceRow(index, sa.delta_f1, sb.delta_f1,
                                      diff, diff == 0.0))
    return rows


def rows_to_tsv(rows) -> str:
    lines = ["index\tdelta_f1_a\tdelta_f1_b\tdifference\tzero_diff"]
    for row in rows:
        lines.append(f"{row.index}\t{row.delta_f1_a!r}\t{row.delta_f1_b!r}\t"
                     f"{row.difference!r}\t{int(row.zero_diff)}")
    return "\n".join(lines) + "\n"
