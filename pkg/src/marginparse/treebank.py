"""Bracketed parse trees: reading, writing, preprocessing, constituent extraction.

Trees are ordered labeled trees over a token sequence.  A node is either a
leaf holding a token, or an internal node with a label and one or more
children.  Spans are half-open [start, end) token intervals derived from
leaf positions.

Binarization metadata (artificial flag, sibling context for markovized
labels, parent annotation, and a folded unary parent on preterminals) is
carried structurally on nodes rather than re-parsed from label strings.
``Tree.full_label()`` renders a node's complete serialized symbol, e.g.
``A^?|C-D`` for an artificial node with parent annotation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

_ESCAPES = (("(", "-LRB-"), (")", "-RRB-"))


class BracketParseError(ValueError):
    """Malformed bracketed input.  ``offset`` is a 1-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class Tree:
    """One node of a parse tree.

    Leaves carry ``token`` and have no children; internal nodes carry
    ``label`` and a non-empty child list.  The remaining slots hold
    binarization metadata and default to "plain node".
    """

    __slots__ = ("label", "token", "children", "artificial", "sib_context",
                 "parent_context", "unary_above")

    def __init__(self, label=None, children=(), token=None, artificial=False,
                 sib_context=(), parent_context=(), unary_above=None):
        if token is not None:
            if label is not None or children:
                raise ValueError("a leaf carries only a token")
        elif label is None or not children:
            raise ValueError("an internal node needs a label and children")
        self.label = label
        self.token = token
        self.children = list(children)
        self.artificial = artificial
        self.sib_context = tuple(sib_context)
        self.parent_context = tuple(parent_context)
        self.unary_above = unary_above

    @classmethod
    def leaf(cls, token: str) -> "Tree":
        return cls(token=token)

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].token is not None

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.token]
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.token is not None:
                out.append(node.token)
            else:
                stack.extend(reversed(node.children))
        return out

    def full_label(self) -> str:
        """Serialized symbol including metadata: ``top~base^P1-P2|C1-C2``."""
        s = self.label
        if self.unary_above is not None:
            s = self.unary_above + "~" + s
        if self.parent_context:
            s = s + "^" + "-".join(self.parent_context)
        if self.artificial:
            s = s + "|" + "-".join(self.sib_context)
        return s

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return (self.label == other.label and self.token == other.token
                and self.artificial == other.artificial
                and self.sib_context == other.sib_context
                and self.parent_context == other.parent_context
                and self.unary_above == other.unary_above
                and self.children == other.children)

    def __repr__(self):
        return f"Tree({write_bracketed(self)!r})"


def _escape(token: str) -> str:
    for plain, escaped in _ESCAPES:
        token = token.replace(plain, escaped)
    return token


def _unescape(token: str) -> str:
    for plain, escaped in _ESCAPES:
        token = token.replace(escaped, plain)
    return token


def parse_bracketed(text: str) -> Tree:
    """Parse a single Penn-style bracketed expression into a Tree.

    Labels with binarization markers are kept verbatim as label strings;
    no metadata is reconstructed.  A label-less outer wrapper ``( ... )``
    with exactly one child (raw PTB convention) is unwrapped.

    Raises BracketParseError with a 1-based character offset on
    unbalanced parentheses, empty nodes, or trailing content.
    """
    pos = 0
    n = len(text)

    def fail(message, at):
        raise BracketParseError(message, at + 1)

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_atom():
        nonlocal pos
        start = pos
        while pos < n and not text[pos].isspace() and text[pos] not in "()":
            pos += 1
        return text[start:pos]

    def parse_node():
        nonlocal pos
        open_at = pos
        pos += 1  # consume '('
        skip_ws()
        if pos >= n:
            fail("unexpected end of input", pos)
        label = "" if text[pos] == "(" else read_atom()
        children = []
        while True:
            skip_ws()
            if pos >= n:
                fail("unexpected end of input", pos)
            ch = text[pos]
            if ch == ")":
                pos += 1
                break
            if ch == "(":
                children.append(parse_node())
            else:
                children.append(Tree.leaf(_unescape(read_atom())))
        if not children:
            fail("empty node", open_at)
        if label == "":
            if len(children) == 1 and children[0].token is None:
                return children[0]
            fail("node without a label", open_at)
        return Tree(label, children)

    skip_ws()
    if pos >= n:
        fail("empty input", pos)
    if text[pos] != "(":
        fail("expected '('", pos)
    tree = parse_node()
    skip_ws()
    if pos < n:
        fail("trailing content", pos)
    return tree


def write_bracketed(tree: Tree) -> str:
    """Single-line bracketed form; inverse of parse_bracketed on plain trees."""
    if tree.is_leaf:
        return _escape(tree.token)
    parts = " ".join(write_bracketed(c) for c in tree.children)
    return f"({tree.full_label()} {parts})"


def iter_tree_texts(lines: Iterable[str]) -> Iterator[str]:
    """Join raw treebank lines into one balanced bracketed expression each.

    Handles both one-tree-per-line files and multi-line PTB input by
    tracking the parenthesis balance.
    """
    buf = []
    depth = 0
    for line in lines:
        stripped = line.strip()
        if not stripped and depth == 0:
            continue
        buf.append(stripped)
        depth += stripped.count("(") - stripped.count(")")
        if depth < 0:
            raise BracketParseError("unbalanced ')'", 1)
        if depth == 0:
            yield " ".join(buf)
            buf = []
    if buf:
        raise BracketParseError("unexpected end of input", 1)


def read_treebank(path) -> list[Tree]:
    with open(path, encoding="utf-8") as handle:
        return [parse_bracketed(text) for text in iter_tree_texts(handle)]


def write_treebank(path, trees: Iterable[Tree]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for tree in trees:
            handle.write(write_bracketed(tree) + "\n")


def _strip_functional(label: str) -> str:
    # Tags like -NONE- / -LRB- start with '-' and are kept verbatim.
    if label.startswith("-"):
        return label
    cut = len(label)
    for mark in "-=":
        found = label.find(mark)
        if found > 0:
            cut = min(cut, found)
    return label[:cut]


def preprocess(tree: Tree, strip_functional: bool = True,
               remove_nulls: bool = True, collapse_unaries: bool = True) -> Tree:
    """Standard treebank normalization, applied in order:

    1. strip functional-tag suffixes (everything from the first ``-`` or
       ``=`` in a nonterminal label, except tags that start with ``-``);
    2. delete ``-NONE-`` subtrees, recursively deleting emptied ancestors;
    3. collapse unary chains of nonterminals above the preterminal level
       into ``+``-joined composite labels (``S+VP``).

    Pure and idempotent.  Raises ValueError when null removal empties the
    whole tree.
    """

    def walk(node):
        if node.is_leaf:
            return Tree.leaf(node.token)
        label = _strip_functional(node.label) if strip_functional else node.label
        if remove_nulls and node.label == "-NONE-":
            return None
        kids = []
        for child in node.children:
            kept = walk(child)
            if kept is not None:
                kids.append(kept)
        if not kids:
            return None
        return Tree(label, kids)

    out = walk(tree)
    if out is None:
        raise ValueError("empty tree after preprocessing")
    if collapse_unaries:
        out = _collapse(out)
    return out


def _collapse(node: Tree) -> Tree:
    if node.is_leaf:
        return node
    label = node.label
    children = node.children
    while (len(children) == 1 and children[0].token is None
           and not children[0].is_preterminal):
        label = label + "+" + children[0].label
        children = children[0].children
    return Tree(label, [_collapse(c) for c in children])


class CountingMode(Enum):
    BINARIZED = "binarized"
    UNBINARIZED = "unbinarized"


@dataclass(frozen=True)
class CountingConfig:
    """Which tree nodes participate in true/false-positive counting.

    In UNBINARIZED mode, artificial nodes are skipped, annotations are
    stripped back to base labels, and a folded unary parent on a
    preterminal counts as its own constituent.  In BINARIZED mode every
    non-leaf node counts under its full serialized label.
    """

    mode: CountingMode = CountingMode.UNBINARIZED
    exclude_preterminals: bool = True


class Constituent(NamedTuple):
    label: str
    start: int
    end: int


@dataclass(frozen=True)
class GoldReference:
    """The counted-constituent set of a gold tree and its cardinality."""

    constituents: frozenset
    size: int

    @property
    def spans(self):
        return self.constituents


def constituents(tree: Tree, config: CountingConfig = CountingConfig()) -> GoldReference:
    """Extract the set of countable constituents of ``tree`` under ``config``.

    Duplicate (label, start, end) triples collapse to one set element.
    """
    found = set()

    def walk(node, start):
        if node.is_leaf:
            return start + 1
        end = start
        for child in node.children:
            end = walk(child, end)
        if config.mode is CountingMode.BINARIZED:
            if node.is_preterminal:
                if not config.exclude_preterminals:
                    found.add(Constituent(node.full_label(), start, end))
            else:
                found.add(Constituent(node.full_label(), start, end))
        else:
            if node.is_preterminal:
                if node.unary_above is not None:
                    found.add(Constituent(node.unary_above, start, end))
                if not config.exclude_preterminals:
                    found.add(Constituent(node.label, start, end))
            elif not node.artificial:
                found.add(Constituent(node.label, start, end))
        return end

    walk(tree, 0)
    frozen = frozenset(found)
    return GoldReference(frozen, len(frozen))
