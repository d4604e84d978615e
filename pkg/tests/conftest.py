import random

import pytest

from marginparse.grammar import BinConfig, binarize_tree, induce
from marginparse.treebank import Tree, parse_bracketed


@pytest.fixture
def g1():
    """Fully ambiguous one-symbol grammar: X -> X X, X -> a."""
    trees = [parse_bracketed("(X (X a) (X a))"),
             parse_bracketed("(X (X (X a) (X a)) (X a))")]
    binarized = [binarize_tree(t) for t in trees]
    return induce(binarized, unk_threshold=1)


@pytest.fixture
def g2_tree():
    """Flat ternary gold tree whose binarization introduces one artificial node."""
    return parse_bracketed("(T (A a) (A a) (A a))")


def random_preprocessed_tree(rng: random.Random, max_len: int = 9,
                             phrasals=("S", "T", "U"), tags=("A", "B"),
                             vocab=("a", "b", "c")) -> Tree:
    """Random tree in preprocessed form: no nulls, no unary chains except a
    single phrasal directly above a preterminal."""
    length = rng.randint(1, max_len)
    tokens = [rng.choice(vocab) for _ in range(length)]

    def build(span):
        if len(span) == 1:
            node = Tree(rng.choice(tags), [Tree.leaf(span[0])])
            if rng.random() < 0.3:
                node = Tree(rng.choice(phrasals), [node])
            return node
        k = rng.randint(2, min(5, len(span)))
        cuts = sorted(rng.sample(range(1, len(span)), k - 1))
        bounds = [0] + cuts + [len(span)]
        return Tree(rng.choice(phrasals),
                    [build(span[bounds[t]:bounds[t + 1]]) for t in range(k)])

    root = build(tokens)
    if root.token is not None:
        root = Tree(rng.choice(tags), [root])
    return root
