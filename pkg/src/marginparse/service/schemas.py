"""Request/response models for the parsing service.

Trees travel as single-line bracketed strings, models as the TSV text of
the model file format, so payloads stay language-neutral.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class PreprocessRequest(BaseModel):
    trees: list[str]
    strip_functional: bool = True
    remove_nulls: bool = True
    collapse_unaries: bool = True
    max_len: int | None = None


class PreprocessResponse(BaseModel):
    trees: list[str]
    dropped: int


class TrainRequest(BaseModel):
    trees: list[str]
    loss: str = "f1"
    C: float = 100.0
    epsilon: float = 0.01
    max_outer_iters: int = 100
    qp_tolerance: float = 1e-8
    qp_max_passes: int = 2000
    batch_size: int = 1
    threads: int = 1
    horizontal: int | None = None
    vertical: int = 1
    unk_threshold: int = 2


class TrainReportModel(BaseModel):
    passes: int
    constraints: int
    objective: float
    skipped_noparse: int
    wall_time_seconds: float
    remaining_violations: int
    converged: bool
    per_pass: list[dict]


class TrainResponse(BaseModel):
    model: str
    report: TrainReportModel


class ParseRequest(BaseModel):
    model: str
    sentences: list[list[str]]
    threads: int = 1


class ParseResponse(BaseModel):
    trees: list[str]
    noparse: int


class EvalRequest(BaseModel):
    pred: list[str]
    gold: list[str]
    mode: str = "unbinarized"
    exclude_preterminals: bool = True


class EvalResponse(BaseModel):
    precision: float
    recall: float
    f1: float
    exact_match: float
    n_sentences: int


class CompareRow(BaseModel):
    index: int
    delta_f1_a: float
    delta_f1_b: float
    difference: float
    zero_diff: bool


class WilcoxonModel(BaseModel):
    n_nonzero: int
    w: float
    p_value: float
    method: str


class CompareRequest(BaseModel):
    pred_a: list[str]
    pred_b: list[str]
    gold: list[str]
    mode: str = "unbinarized"
    exclude_preterminals: bool = True


class CompareResponse(BaseModel):
    wilcoxon: WilcoxonModel
    rows: list[CompareRow]


class OracleCheckRequest(BaseModel):
    trials: int = Field(default=200, ge=1)
    max_len: int = Field(default=7, ge=1)
    seed: int = 42


class OracleCheckRow(BaseModel):
    trial: int
    mode: str
    dp_objective: float
    brute_objective: float
    match: bool


class OracleCheckResponse(BaseModel):
    rows: list[OracleCheckRow]
    cky_matches: int
    trials: int
    all_match: bool


class ProtocolRequest(BaseModel):
    train_trees: list[str]
    eval_trees: list[str] | None = None
    C: float = 100.0
    epsilon: float = 0.01
    max_outer_iters: int = 100
    horizontal: int | None = None
    vertical: int = 1
    unk_threshold: int = 2
    threads: int = 1


class ProtocolRowModel(BaseModel):
    measure: str
    precision: float
    recall: float
    f1: float
    exact_match: float
    noparse: int


class ProtocolResponse(BaseModel):
    rows: list[ProtocolRowModel]
    wilcoxon: WilcoxonModel
    diff_rows: list[CompareRow]
