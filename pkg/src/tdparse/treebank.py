"""Bracketed treebank reading, writing, and normalization.

Trees are read from the usual one-tree-per-line (or multi-line) bracketed
format::

    (S (NP (NN Spot)) (VP (VBD ran)))

Brackets are self-delimiting; everything else splits on whitespace.  The
label right after an open bracket names the node, bare tokens are leaves.
Node labels may not contain ``-`` or ``,``: those characters are reserved
for rendering factored nonterminals (see grammar.py), and letting them
into input labels would make factored labels ambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

# Reserved protocol tokens.  All of these are configurable at the call
# sites that care; the constants are the documented defaults.
AXIOM = "TOP"
STOP_LABEL = "STOP"
END_TOKEN = "</s>"
UNK_TOKEN = "<unk>"
NUMBER_TOKEN = "N"
EPSILON = "<eps>"

FACTOR_SEP = "-"
CHILD_SEP = ","
RESERVED_LABEL_CHARS = (FACTOR_SEP, CHILD_SEP)

DEFAULT_PUNCT_LABELS = frozenset({".", ",", ":", "``", "''", "-LRB-", "-RRB-"})

ROLES = ("train", "heldout", "test")

# Optional sign, then either digits (with optional , or . groups) or a bare
# decimal fraction.  "42", "-3.5", "1,234", "+.75" all match; "4th" does not.
_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:[.,]\d+)*|\.\d+)$")


class TreebankError(ValueError):
    """Malformed tree text, tree structure, or normalization input."""


class Tree:
    """Immutable ordered tree; a leaf is a node with no children.

    A leaf's label is its terminal token.  A preterminal is an internal
    node whose single child is a leaf.
    """

    __slots__ = ("label", "children", "_hash", "_head")

    def __init__(self, label: str, children: Sequence["Tree"] = ()):
        self.label = label
        self.children = tuple(children)
        self._hash = None
        self._head = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    def leaves(self) -> Iterator["Tree"]:
        if not self.children:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def yield_tokens(self) -> list[str]:
        return [leaf.label for leaf in self.leaves()]

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Tree):
            return NotImplemented
        return self.label == other.label and self.children == other.children

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.label, self.children))
        return self._hash

    def __repr__(self) -> str:
        return f"Tree({to_bracketed(self)!r})"


def to_bracketed(t: Tree) -> str:
    """Render a tree in canonical single-space bracketed form."""
    if t.is_leaf:
        return t.label
    inner = " ".join(to_bracketed(c) for c in t.children)
    return f"({t.label} {inner})"


def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in re.findall(r"\(|\)|[^\s()]+", line):
            yield tok, lineno


def parse_trees(text: str, source: str = "<string>") -> list[Tree]:
    """Parse all trees in ``text``.  Errors carry source and line number."""

    def fail(lineno: int, msg: str):
        raise TreebankError(f"{source}:{lineno}: {msg}")

    trees: list[Tree] = []
    stack: list[tuple[Optional[str], list[Tree], int]] = []
    expect_label = False
    last_line = 1
    for tok, lineno in _tokenize(text):
        last_line = lineno
        if tok == "(":
            if expect_label:
                fail(lineno, "expected node label after '('")
            stack.append((None, [], lineno))
            expect_label = True
        elif tok == ")":
            if expect_label:
                fail(lineno, "node has no label")
            if not stack:
                fail(lineno, "unbalanced ')'")
            label, children, open_line = stack.pop()
            if not children:
                fail(lineno, f"empty node ({label})")
            node = Tree(label, children)
            if stack:
                stack[-1][1].append(node)
            else:
                trees.append(node)
        elif expect_label:
            for ch in RESERVED_LABEL_CHARS:
                if ch in tok:
                    fail(lineno, f"label {tok!r} contains reserved character {ch!r}")
            label, children, open_line = stack.pop()
            stack.append((tok, children, open_line))
            expect_label = False
        else:
            if not stack:
                fail(lineno, f"token {tok!r} outside any tree")
            stack[-1][1].append(Tree(tok))
    if stack:
        raise TreebankError(
            f"{source}:{stack[-1][2]}: unbalanced '(' still open at end of input"
        )
    return trees


def read_trees(path: str) -> list[Tree]:
    with open(path, encoding="utf-8") as fh:
        return parse_trees(fh.read(), source=path)


def write_trees(path: str, trees: Iterable[Tree]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trees:
            fh.write(to_bracketed(t))
            fh.write("\n")


@dataclass(frozen=True)
class Corpus:
    """A list of trees plus the closed vocabulary they define.

    The vocabulary is the union of tree yields and the reserved tokens in
    play: the end marker always, the unknown token once normalization has
    run (read_corpus cannot know a custom unk token).
    """

    trees: tuple[Tree, ...]
    vocabulary: frozenset[str]
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise TreebankError(f"unknown corpus role {self.role!r}")


def read_corpus(path: str, role: str, end_token: str = END_TOKEN) -> Corpus:
    trees = read_trees(path)
    if not trees:
        raise TreebankError(f"{path}: empty corpus")
    vocab = {tok for t in trees for tok in t.yield_tokens()}
    vocab.add(end_token)
    return Corpus(tuple(trees), frozenset(vocab), role)


def augment_with_stop(
    t: Tree,
    end_token: str = END_TOKEN,
    axiom: str = AXIOM,
    stop_label: str = STOP_LABEL,
) -> Tree:
    """Wrap a tree under the axiom with an explicit end-marker child."""
    if t.label == axiom:
        raise TreebankError(f"tree is already rooted at the axiom {axiom!r}")
    return Tree(axiom, (t, Tree(stop_label, (Tree(end_token),))))


def strip_stop(
    t: Tree,
    end_token: str = END_TOKEN,
    axiom: str = AXIOM,
    stop_label: str = STOP_LABEL,
) -> Tree:
    """Inverse of augment_with_stop; rejects anything of a different shape."""
    if t.label != axiom:
        raise TreebankError(f"root is {t.label!r}, not the axiom {axiom!r}")
    if len(t.children) != 2:
        raise TreebankError("axiom node must have exactly two children")
    body, stop = t.children
    if stop.label != stop_label or not stop.is_preterminal:
        raise TreebankError(f"second child of axiom is not a {stop_label!r} preterminal")
    if stop.children[0].label != end_token:
        raise TreebankError(f"{stop_label!r} does not dominate the end token {end_token!r}")
    return body


@dataclass(frozen=True)
class NormalizationConfig:
    """Speech-style normalization: drop punctuation, fold numbers, cap vocab."""

    strip_punctuation: bool = True
    punct_labels: frozenset[str] = DEFAULT_PUNCT_LABELS
    number_token: str = NUMBER_TOKEN
    vocab_cap: int = 10000
    unk_token: str = UNK_TOKEN
    end_token: str = END_TOKEN

    def __post_init__(self):
        if self.vocab_cap < 1:
            raise TreebankError("vocab_cap must be at least 1")
        if self.unk_token == self.end_token:
            raise TreebankError("unk_token and end_token must differ")

    def reserved_tokens(self) -> frozenset[str]:
        return frozenset({self.number_token, self.unk_token, self.end_token})


def is_number_token(tok: str) -> bool:
    return bool(_NUMBER_RE.fullmatch(tok))


def _strip_punct(t: Tree, punct_labels: frozenset[str]) -> Optional[Tree]:
    if t.is_preterminal:
        return None if t.label in punct_labels else t
    kept = []
    for child in t.children:
        if child.is_leaf:
            kept.append(child)
            continue
        sub = _strip_punct(child, punct_labels)
        if sub is not None:
            kept.append(sub)
    if not kept:
        return None
    return Tree(t.label, kept)


def _map_leaves(t: Tree, fn) -> Tree:
    if t.is_leaf:
        return Tree(fn(t.label))
    return Tree(t.label, tuple(_map_leaves(c, fn) for c in t.children))


def speech_normalize(
    corpus: Corpus,
    cfg: NormalizationConfig,
    keep_tokens: Optional[frozenset[str]] = None,
) -> Corpus:
    """Normalize a corpus for speech-style language modelling.

    Punctuation preterminals are deleted (parents emptied by the deletion
    go with them), digit tokens fold to ``cfg.number_token``, and tokens
    outside the ``cfg.vocab_cap`` most frequent become ``cfg.unk_token``.
    Pass ``keep_tokens`` (a training vocabulary) when normalizing heldout
    or test corpora so the closure matches training.  Idempotent: reserved
    tokens are always kept, so a second pass is the identity.
    """
    trees = []
    for idx, t in enumerate(corpus.trees):
        if cfg.strip_punctuation:
            t = _strip_punct(t, cfg.punct_labels)
            if t is None:
                raise TreebankError(f"tree {idx}: normalization emptied the yield")
        t = _map_leaves(t, lambda tok: cfg.number_token if is_number_token(tok) else tok)
        trees.append(t)

    reserved = cfg.reserved_tokens()
    if keep_tokens is None:
        counts: dict[str, int] = {}
        for t in trees:
            for tok in t.yield_tokens():
                counts[tok] = counts.get(tok, 0) + 1
        ranked = sorted(
            (tok for tok in counts if tok not in reserved),
            key=lambda tok: (-counts[tok], tok),
        )
        kept = frozenset(ranked[: cfg.vocab_cap]) | reserved
    else:
        kept = frozenset(keep_tokens) | reserved

    trees = [
        _map_leaves(t, lambda tok: tok if tok in kept else cfg.unk_token) for t in trees
    ]
    vocab = {tok for t in trees for tok in t.yield_tokens()}
    vocab.update({cfg.end_token, cfg.unk_token})
    return Corpus(tuple(trees), frozenset(vocab), corpus.role)


def normalize_tokens(
    tokens: Sequence[str],
    vocabulary: frozenset[str],
    cfg: NormalizationConfig,
    allow_unk: bool = True,
) -> list[str]:
    """Map a raw sentence onto the model vocabulary.

    Reserved tokens may not appear in the input; out-of-vocabulary tokens
    become the unknown token, or raise when ``allow_unk`` is off.
    """
    out = []
    for tok in tokens:
        if tok in (cfg.end_token, cfg.unk_token):
            raise TreebankError(f"reserved token {tok!r} in input sentence")
        if is_number_token(tok):
            tok = cfg.number_token
        if tok not in vocabulary:
            if not allow_unk:
                raise TreebankError(f"token {tok!r} outside the closed vocabulary")
            tok = cfg.unk_token
        out.append(tok)
    return out


def read_sentences(path: str) -> list[tuple[int, list[str]]]:
    """Read a one-sentence-per-line token file; yields (lineno, tokens).

    Empty lines are skipped; the caller decides whether to warn.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = line.split()
            if toks:
                out.append((lineno, toks))
    return out
