"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from tdparse.conditioning import CondConfig, ContextModel
from tdparse.grammar import induce_pcfg, left_factor_tree
from tdparse.lookahead import LookaheadTables
from tdparse.parser import BeamParser, ParserConfig
from tdparse.treebank import AXIOM, END_TOKEN, Corpus, Tree, augment_with_stop, read_trees

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_trees(name: str) -> list[Tree]:
    return read_trees(str(FIXTURES / name))


def fixture_sentences(name: str) -> list[list[str]]:
    out = []
    for line in (FIXTURES / name).read_text().splitlines():
        toks = line.split()
        if toks:
            out.append(toks)
    return out


def as_corpus(trees, role: str) -> Corpus:
    vocab = {tok for t in trees for tok in t.yield_tokens()}
    vocab.add(END_TOKEN)
    return Corpus(tuple(trees), frozenset(vocab), role)


def factored_corpus(trees) -> list[Tree]:
    return [left_factor_tree(augment_with_stop(t)) for t in trees]


def build_parser(
    trees,
    depths: tuple[int, int, int] = (0, 0, 0),
    base_beam: float = 0.0,
    heldout=None,
    max_pops: int = 10_000,
) -> BeamParser:
    """Induce a grammar from plain trees and wire up a parser.

    Default is plain-PCFG conditioning in exact mode, the setup every
    oracle comparison uses.
    """
    factored = factored_corpus(trees)
    grammar = induce_pcfg(factored, AXIOM)
    context = ContextModel(grammar, CondConfig(*depths))
    context.train_counts(factored)
    if heldout is not None:
        context.tune_mix_weights(factored_corpus(heldout))
    lookahead = LookaheadTables.from_trees(factored)
    config = ParserConfig(base_beam=base_beam, max_pops=max_pops)
    return BeamParser(grammar, context, lookahead, config)


# Random trees for round-trip and preservation properties.  Labels reuse a
# small pool on purpose: repeated nonterminals give the induced grammars
# nontrivial rule distributions.

PHRASE_LABELS = ["S", "NP", "VP", "PP", "X", "Y"]
POS_LABELS = ["A", "B", "C", "D"]
WORDS = ["alpha", "bravo", "charlie", "delta", "echo"]


def random_tree(rng: random.Random, depth: int = 0) -> Tree:
    if depth >= 3 or rng.random() < 0.3:
        return Tree(rng.choice(POS_LABELS), (Tree(rng.choice(WORDS)),))
    width = rng.randint(1, 4)
    kids = tuple(random_tree(rng, depth + 1) for _ in range(width))
    return Tree(rng.choice(PHRASE_LABELS), kids)


def random_corpus(n: int, seed: int) -> list[Tree]:
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        t = random_tree(rng)
        if t.label == AXIOM or t.is_preterminal:
            t = Tree("S", (t,))
        out.append(t)
    return out
