"""Pipeline runs on a small treebank with realistic annotation artifacts:
functional tags, trace subtrees, punctuation tags, escaped parentheses,
mixed root labels, and unary nodes above the tag level."""

import json

import pytest

from marginparse.cli import main
from marginparse.treebank import read_treebank

RAW = """\
( (S
    (NP-SBJ (DT the) (NN market))
    (VP (VBD fell)
        (NP-TMP (NN yesterday))
        (NP (-NONE- *T*-1)))
    (. .)) )
( (S
    (NP-SBJ (PRP it))
    (VP (VBD rose)
        (PP-DIR (IN to)
            (NP (CD 2,570.8) (-RRB- -RRB-))))
    (. .)) )
( (SINV
    (VP (VBD said)
        (NP (-NONE- *)))
    (NP-SBJ (NNP Smith))
    (. .)) )
( (S
    (NP-SBJ (DT the) (NN market))
    (VP (VBD fell)
        (NP-TMP (NN sharply)))
    (. .)) )
"""


@pytest.fixture
def corpus(tmp_path):
    raw = tmp_path / "raw.mrg"
    raw.write_text(RAW)
    return tmp_path


def test_realistic_pipeline(corpus, capsys):
    clean = corpus / "clean.mrg"
    assert main(["preprocess", "--in", str(corpus / "raw.mrg"),
                 "--out", str(clean), "--max-len", "20"]) == 0
    trees = read_treebank(clean)
    assert len(trees) == 4
    labels = {node.label for tree in trees for node in _internal(tree)}
    assert "NP-SBJ" not in labels and "-NONE-" not in labels
    roots = {tree.label for tree in trees}
    assert roots == {"S", "SINV"}

    model = corpus / "model.tsv"
    assert main(["train", "--trees", str(clean), "--model-out", str(model),
                 "--loss", "f1", "--C", "20", "--h", "1", "--v", "2",
                 "--unk-threshold", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["converged"]

    sents = corpus / "sents.txt"
    sents.write_text("".join(" ".join(t.leaves()) + "\n" for t in trees))
    pred = corpus / "pred.mrg"
    assert main(["parse", "--model", str(model), "--in", str(sents),
                 "--out", str(pred)]) == 0
    capsys.readouterr()
    parsed = read_treebank(pred)
    # debinarized output: no artificial or annotated labels anywhere
    for tree in parsed:
        for node in _internal(tree):
            assert "|" not in node.label and "^" not in node.label

    assert main(["eval", "--pred", str(pred), "--gold", str(clean)]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["n_sentences"] == 4
    assert metrics["f1"] == 1.0


def _internal(tree):
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.token is None:
            yield node
            stack.extend(node.children)
