"""FastAPI service exposing the parsing toolkit.

Every endpoint is a stateless wrapper over the core package: trees come in
as bracketed strings, models as model-file text.  Malformed payloads and
data inconsistencies surface as HTTP 400 with a detail message.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import harness
from ..chart import model_from_text, model_to_text
from ..grammar import BinConfig
from ..lossdp import parse_loss_mode
from ..metrics import evaluate, loss_difference_export, wilcoxon_signed_rank
from ..pipeline import (parse_corpus, preprocess_corpus, run_protocol,
                        train_pipeline)
from ..ssvm import TrainConfig
from ..treebank import (CountingConfig, CountingMode, parse_bracketed,
                        write_bracketed)
from . import schemas

app = FastAPI(title="marginparse", version="0.1.0")


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


def _parse_trees(texts):
    return [parse_bracketed(text) for text in texts]


def _counting_config(mode: str, exclude_preterminals: bool) -> CountingConfig:
    try:
        counting = CountingMode(mode)
    except ValueError:
        raise ValueError(f"unknown counting mode {mode!r}") from None
    return CountingConfig(counting, exclude_preterminals)


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/preprocess", response_model=schemas.PreprocessResponse)
def preprocess_endpoint(req: schemas.PreprocessRequest):
    trees = _parse_trees(req.trees)
    kept, dropped = preprocess_corpus(trees, req.strip_functional,
                                      req.remove_nulls, req.collapse_unaries,
                                      req.max_len)
    return schemas.PreprocessResponse(
        trees=[write_bracketed(t) for t in kept], dropped=dropped)


@app.post("/train", response_model=schemas.TrainResponse)
def train_endpoint(req: schemas.TrainRequest):
    trees = _parse_trees(req.trees)
    config = TrainConfig(C=req.C, epsilon=req.epsilon,
                         max_outer_iters=req.max_outer_iters,
                         loss_mode=parse_loss_mode(req.loss),
                         qp_tolerance=req.qp_tolerance,
                         qp_max_passes=req.qp_max_passes,
                         batch_size=req.batch_size, threads=req.threads)
    bin_config = BinConfig(horizontal=req.horizontal, vertical=req.vertical)
    model, report = train_pipeline(trees, config, bin_config, req.unk_threshold)
    return schemas.TrainResponse(
        model=model_to_text(model),
        report=schemas.TrainReportModel(**report.to_json_dict()))


@app.post("/parse", response_model=schemas.ParseResponse)
def parse_endpoint(req: schemas.ParseRequest):
    model = model_from_text(req.model)
    for index, sentence in enumerate(req.sentences):
        if not sentence:
            raise ValueError(f"empty sentence at index {index}")
    trees, noparse = parse_corpus(model, req.sentences, req.threads)
    return schemas.ParseResponse(
        trees=[write_bracketed(t) for t in trees], noparse=noparse)


@app.post("/evaluate", response_model=schemas.EvalResponse)
def evaluate_endpoint(req: schemas.EvalRequest):
    config = _counting_config(req.mode, req.exclude_preterminals)
    result = evaluate(_parse_trees(req.pred), _parse_trees(req.gold), config)
    return schemas.EvalResponse(**result.to_json_dict())


@app.post("/compare", response_model=schemas.CompareResponse)
def compare_endpoint(req: schemas.CompareRequest):
    config = _counting_config(req.mode, req.exclude_preterminals)
    gold = _parse_trees(req.gold)
    rows = loss_difference_export(_parse_trees(req.pred_a),
                                  _parse_trees(req.pred_b), gold, config)
    wilcoxon = wilcoxon_signed_rank([row.difference for row in rows])
    return schemas.CompareResponse(
        wilcoxon=schemas.WilcoxonModel(**wilcoxon.to_json_dict()),
        rows=[schemas.CompareRow(index=row.index, delta_f1_a=row.delta_f1_a,
                                 delta_f1_b=row.delta_f1_b,
                                 difference=row.difference,
                                 zero_diff=row.zero_diff)
              for row in rows])


@app.post("/oracle-check", response_model=schemas.OracleCheckResponse)
def oracle_check_endpoint(req: schemas.OracleCheckRequest):
    records = harness.run_trials(req.trials, req.max_len, req.seed)
    rows = [schemas.OracleCheckRow(trial=rec.trial, mode=check.mode_name,
                                   dp_objective=check.dp_objective,
                                   brute_objective=check.brute_objective,
                                   match=check.match)
            for rec in records for check in rec.checks]
    return schemas.OracleCheckResponse(
        rows=rows,
        cky_matches=sum(1 for rec in records if rec.cky_match),
        trials=len(records),
        all_match=harness.all_match(records))


@app.post("/protocol", response_model=schemas.ProtocolResponse)
def protocol_endpoint(req: schemas.ProtocolRequest):
    train_trees = _parse_trees(req.train_trees)
    eval_trees = (_parse_trees(req.eval_trees)
                  if req.eval_trees is not None else train_trees)
    config = TrainConfig(C=req.C, epsilon=req.epsilon,
                         max_outer_iters=req.max_outer_iters)
    bin_config = BinConfig(horizontal=req.horizontal, vertical=req.vertical)
    result = run_protocol(train_trees, eval_trees, config, bin_config,
                          req.unk_threshold, req.threads)
    return schemas.ProtocolResponse(
        rows=[schemas.ProtocolRowModel(**row.to_json_dict())
              for row in result.rows],
        wilcoxon=schemas.WilcoxonModel(**result.wilcoxon.to_json_dict()),
        diff_rows=[schemas.CompareRow(index=row.index,
                                      delta_f1_a=row.delta_f1_a,
                                      delta_f1_b=row.delta_f1_b,
                                      difference=row.difference,
                                      zero_diff=row.zero_diff)
                   for row in result.diff_rows])
