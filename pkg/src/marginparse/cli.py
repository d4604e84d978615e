"""Command-line client for the parsing service.

Subcommands wire the pipeline end to end: preprocess -> train -> parse ->
eval/compare, plus the randomized oracle-check harness and the four-row
training protocol.  All computation happens behind the service API; by
default the app runs in-process, ``--server URL`` targets a running one.

Exit codes: 0 success, 1 usage error, 2 data error, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import httpx

USAGE_EXIT = 1
DATA_EXIT = 2
ORACLE_MISMATCH_EXIT = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def make_client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app)


def call(client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise DataError(f"{path}: {detail}")
    return response.json()


def read_tree_texts(path) -> list:
    from .treebank import iter_tree_texts

    try:
        with open(path, encoding="utf-8") as handle:
            texts = list(iter_tree_texts(handle))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not texts:
        raise DataError(f"{path}: empty treebank")
    return texts


def read_sentences(path) -> list:
    try:
        with open(path, encoding="utf-8") as handle:
            sentences = [line.split() for line in handle if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not sentences:
        raise DataError(f"{path}: no sentences")
    return sentences


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(line + "\n")


def _positive(value: float, flag: str) -> float:
    if value <= 0:
        raise UsageError(f"{flag} must be positive")
    return value


def _parse_horizontal(text):
    if text is None or text in ("inf", "none", ""):
        return None
    try:
        value = int(text)
    except ValueError:
        raise UsageError(f"--h expects an integer or 'inf', got {text!r}") from None
    if value < 0:
        raise UsageError("--h must be >= 0 or 'inf'")
    return value


class Settings:
    """Flag resolution: explicit flags > config file > defaults."""

    def __init__(self, args):
        self._args = vars(args)
        self._config = {}
        config_path = self._args.get("config")
        if config_path:
            try:
                with open(config_path, encoding="utf-8") as handle:
                    self._config = json.load(handle)
            except (OSError, ValueError) as exc:
                raise DataError(f"cannot load config {config_path}: {exc}") from exc

    def get(self, name, default=None):
        value = self._args.get(name)
        if value is not None:
            return value
        if name in self._config:
            return self._config[name]
        return default


def build_parser() -> _Parser:
    parser = _Parser(prog="marginparse",
                     description="Max-margin constituency parser toolkit")
    parser.add_argument("--server", help="URL of a running service "
                        "(default: run the service in-process)")
    parser.add_argument("--config", help="optional JSON config file")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for parsing/training "
                        "(default: CPU count)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized harnesses (default 42)")
    # The global flags are also accepted after the subcommand; SUPPRESS keeps
    # the subparser from clobbering a value given before it.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("preprocess", help="normalize a treebank file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--keep-functional", action="store_true")
    p.add_argument("--keep-nulls", action="store_true")
    p.add_argument("--no-collapse-unaries", action="store_true")

    p = add_parser("train", help="train a model on a treebank")
    p.add_argument("--trees", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--grammar-out")
    p.add_argument("--report-out")
    p.add_argument("--loss", default=None,
                   choices=["f1", "f1-bin", "fp-bin", "zeroone-bin"])
    p.add_argument("--C", dest="C", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--h", dest="horizontal", default=None)
    p.add_argument("--v", dest="vertical", type=int, default=None)
    p.add_argument("--unk-threshold", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--qp-tolerance", type=float, default=None)
    p.add_argument("--qp-max-passes", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)

    p = add_parser("parse", help="parse tokenized sentences with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)

    p = add_parser("eval", help="score predictions against gold trees")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--mode", default=None, choices=["unbinarized", "binarized"])
    p.add_argument("--count-preterminals", action="store_true")
    p.add_argument("--out")

    p = add_parser("compare", help="compare two prediction files")
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--mode", default=None, choices=["unbinarized", "binarized"])
    p.add_argument("--count-preterminals", action="store_true")
    p.add_argument("--table-out")

    p = add_parser("oracle-check",
                       help="randomized decoder-vs-enumeration check")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--out")

    p = add_parser("protocol",
                       help="train all four loss modes and compare them")
    p.add_argument("--trees", required=True)
    p.add_argument("--eval-trees")
    p.add_argument("--C", dest="C", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--h", dest="horizontal", default=None)
    p.add_argument("--v", dest="vertical", type=int, default=None)
    p.add_argument("--unk-threshold", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--table-out")

    p = add_parser("serve", help="run the service with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def cmd_preprocess(client, args, settings) -> int:
    texts = read_tree_texts(args.infile)
    payload = {
        "trees": texts,
        "strip_functional": not args.keep_functional,
        "remove_nulls": not args.keep_nulls,
        "collapse_unaries": not args.no_collapse_unaries,
        "max_len": settings.get("max_len"),
    }
    body = call(client, "/preprocess", payload)
    write_lines(args.outfile, body["trees"])
    sys.stderr.write(f"wrote {len(body['trees'])} trees "
                     f"({body['dropped']} dropped)\n")
    return 0


def _train_payload(args, settings, texts) -> dict:
    threads = settings.get("threads", os.cpu_count() or 1)
    payload = {
        "trees": texts,
        "loss": settings.get("loss", "f1"),
        "C": _positive(float(settings.get("C", 100.0)), "--C"),
        "epsilon": _positive(float(settings.get("eps", 0.01)), "--eps"),
        "max_outer_iters": int(settings.get("max_iters", 100)),
        "qp_tolerance": float(settings.get("qp_tolerance", 1e-8)),
        "qp_max_passes": int(settings.get("qp_max_passes", 2000)),
        "batch_size": int(settings.get("batch_size", 1)),
        "threads": int(threads),
        "horizontal": _parse_horizontal(settings.get("horizontal")),
        "vertical": int(settings.get("vertical", 1)),
        "unk_threshold": int(settings.get("unk_threshold", 2)),
    }
    if payload["vertical"] < 1:
        raise UsageError("--v must be >= 1")
    if payload["max_outer_iters"] < 1:
        raise UsageError("--max-iters must be >= 1")
    return payload


def cmd_train(client, args, settings) -> int:
    texts = read_tree_texts(args.trees)
    payload = _train_payload(args, settings, texts)
    body = call(client, "/train", payload)
    with open(args.model_out, "w", encoding="utf-8") as handle:
        handle.write(body["model"])
    if args.grammar_out:
        lines = [line for line in body["model"].splitlines()]
        stripped = [line.rsplit("\t", 1)[0] if not line.startswith("#") else line
                    for line in lines]
        write_lines(args.grammar_out, stripped)
    report = body["report"]
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as handle:
            json.dump(report, handle, indent=2)
            handle.write("\n")
    print(json.dumps(report))
    sys.stderr.write(f"model written to {args.model_out}\n")
    return 0


def cmd_parse(client, args, settings) -> int:
    try:
        with open(args.model, encoding="utf-8") as handle:
            model_text = handle.read()
    except OSError as exc:
        raise DataError(f"cannot read {args.model}: {exc}") from exc
    sentences = read_sentences(args.infile)
    threads = settings.get("threads", os.cpu_count() or 1)
    body = call(client, "/parse", {"model": model_text, "sentences": sentences,
                                   "threads": int(threads)})
    write_lines(args.outfile, body["trees"])
    sys.stderr.write(f"parsed {len(body['trees'])} sentences "
                     f"({body['noparse']} NOPARSE)\n")
    return 0


def cmd_eval(client, args, settings) -> int:
    payload = {
        "pred": read_tree_texts(args.pred),
        "gold": read_tree_texts(args.gold),
        "mode": settings.get("mode", "unbinarized"),
        "exclude_preterminals": not args.count_preterminals,
    }
    body = call(client, "/evaluate", payload)
    text = json.dumps(body)
    print(text)
    if args.out:
        write_lines(args.out, [text])
    return 0


def cmd_compare(client, args, settings) -> int:
    payload = {
        "pred_a": read_tree_texts(args.pred_a),
        "pred_b": read_tree_texts(args.pred_b),
        "gold": read_tree_texts(args.gold),
        "mode": settings.get("mode", "unbinarized"),
        "exclude_preterminals": not args.count_preterminals,
    }
    body = call(client, "/compare", payload)
    print(json.dumps(body["wilcoxon"]))
    table = ["index\tdelta_f1_a\tdelta_f1_b\tdifference\tzero_diff"]
    for row in body["rows"]:
        table.append(f"{row['index']}\t{row['delta_f1_a']!r}\t"
                     f"{row['delta_f1_b']!r}\t{row['difference']!r}\t"
                     f"{int(row['zero_diff'])}")
    if args.table_out:
        write_lines(args.table_out, table)
    return 0


def cmd_oracle_check(client, args, settings) -> int:
    trials = int(settings.get("trials", 200))
    max_len = int(settings.get("max_len", 7))
    if trials < 1 or max_len < 1:
        raise UsageError("--trials and --max-len must be >= 1")
    payload = {"trials": trials, "max_len": max_len,
               "seed": int(settings.get("seed", 42))}
    body = call(client, "/oracle-check", payload)
    table = ["trial\tmode\tdp_objective\tbrute_objective\tmatch"]
    for row in body["rows"]:
        table.append(f"{row['trial']}\t{row['mode']}\t{row['dp_objective']!r}\t"
                     f"{row['brute_objective']!r}\t{int(row['match'])}")
    if args.out:
        write_lines(args.out, table)
    else:
        print("\n".join(table))
    ok = body["all_match"]
    sys.stderr.write(
        f"{body['trials']} trials, cky matches {body['cky_matches']}, "
        f"loss-dp all match: {ok}\n")
    return 0 if ok else ORACLE_MISMATCH_EXIT


def cmd_protocol(client, args, settings) -> int:
    texts = read_tree_texts(args.trees)
    payload = {
        "train_trees": texts,
        "eval_trees": read_tree_texts(args.eval_trees) if args.eval_trees else None,
        "C": _positive(float(settings.get("C", 100.0)), "--C"),
        "epsilon": _positive(float(settings.get("eps", 0.01)), "--eps"),
        "max_outer_iters": int(settings.get("max_iters", 100)),
        "horizontal": _parse_horizontal(settings.get("horizontal")),
        "vertical": int(settings.get("vertical", 1)),
        "unk_threshold": int(settings.get("unk_threshold", 2)),
        "threads": int(settings.get("threads", os.cpu_count() or 1)),
    }
    body = call(client, "/protocol", payload)
    print(json.dumps({"rows": body["rows"], "wilcoxon": body["wilcoxon"]}))
    if args.table_out:
        table = ["measure\tprecision\trecall\tf1\texact_match\tnoparse"]
        for row in body["rows"]:
            table.append(f"{row['measure']}\t{row['precision']:.4f}\t"
                         f"{row['recall']:.4f}\t{row['f1']:.4f}\t"
                         f"{row['exact_match']:.4f}\t{row['noparse']}")
        write_lines(args.table_out, table)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        if args.command == "serve":
            return cmd_serve(args)
        client = make_client(args.server)
        try:
            handler = {
                "preprocess": cmd_preprocess,
                "train": cmd_train,
                "parse": cmd_parse,
                "eval": cmd_eval,
                "compare": cmd_compare,
                "oracle-check": cmd_oracle_check,
                "protocol": cmd_protocol,
            }[args.command]
            return handler(client, args, settings)
        finally:
            client.close()
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_EXIT
    except DataError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return DATA_EXIT
    except httpx.HTTPError as exc:
        sys.stderr.write(f"error: cannot reach service: {exc}\n")
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
