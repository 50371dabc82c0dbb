"""Left-factored PCFG induction and tree scoring.

Factoring rewrites every internal node with children X0..Xk into a binary
chain that introduces one child at a time and closes with an epsilon::

    (NP (DT the) (NN ball))
      -> (NP (DT the) (NP-DT (NN ball) (NP-DT,NN <eps>)))

A factored label ``A-X0,..,Xk`` has base ``A`` and the consumed child
labels after the hyphen.  The transform is reversible, and relative
frequency estimation on the factored corpus assigns every original tree
the same probability the unfactored grammar would: the chain probabilities
telescope to count(A -> X0..Xk) / count(A).

Grammars here are always the factored kind: every rule is binary over
nonterminals, a single-terminal preterminal rule, or an epsilon rule with
a factored left-hand side.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, NamedTuple, Sequence

from .treebank import CHILD_SEP, EPSILON, FACTOR_SEP, Tree


class GrammarError(ValueError):
    """Malformed tree shapes or rule inventories."""


def make_factored(base: str, consumed: Sequence[str]) -> str:
    if not consumed:
        return base
    return base + FACTOR_SEP + CHILD_SEP.join(consumed)


def split_factored(label: str) -> tuple[str, tuple[str, ...]]:
    if FACTOR_SEP not in label:
        return label, ()
    base, rest = label.split(FACTOR_SEP, 1)
    return base, tuple(rest.split(CHILD_SEP))


def is_factored(label: str) -> bool:
    return FACTOR_SEP in label


def constituent_of(label: str) -> str:
    """The original nonterminal a (possibly factored) label belongs to."""
    return label.split(FACTOR_SEP, 1)[0]


class Rule(NamedTuple):
    lhs: str
    rhs: tuple[str, ...]
    lexical: bool

    def render(self) -> str:
        rhs = " ".join(self.rhs) if self.rhs else EPSILON
        mark = "'" if self.lexical else ""
        return f"{self.lhs} -> {mark}{rhs}"


def _check_children(t: Tree) -> None:
    if any(c.is_leaf for c in t.children):
        raise GrammarError(
            f"node {t.label!r} mixes bare tokens with constituents; "
            "every terminal must sit under its own preterminal"
        )


def left_factor_tree(t: Tree) -> Tree:
    """Binarize a tree by left factoring.  Preterminals pass through."""
    if t.is_leaf:
        raise GrammarError("cannot factor a bare token")
    if t.is_preterminal:
        return t
    _check_children(t)
    kids = [left_factor_tree(c) for c in t.children]
    labels = [c.label for c in t.children]
    # Build the chain inside out: the deepest tail erases to epsilon.
    node = Tree(make_factored(t.label, labels), (Tree(EPSILON),))
    for j in range(len(kids) - 1, 0, -1):
        node = Tree(make_factored(t.label, labels[:j]), (kids[j], node))
    return Tree(t.label, (kids[0], node))


def unfactor_tree(t: Tree) -> Tree:
    """Invert left_factor_tree.  Rejects partial or malformed chains."""
    if t.is_leaf:
        raise GrammarError("cannot unfactor a bare token")
    if is_factored(t.label):
        raise GrammarError(f"unexpected factored label {t.label!r} at subtree root")
    if t.is_preterminal:
        return t
    if len(t.children) != 2:
        raise GrammarError(f"node {t.label!r} is not a binary factored node")
    first, tail = t.children
    kids = [unfactor_tree(first)]
    consumed = [first.label]
    while True:
        base, seen = split_factored(tail.label)
        if base != t.label or list(seen) != consumed:
            raise GrammarError(
                f"factored label {tail.label!r} does not continue {t.label!r} "
                f"after {consumed}"
            )
        if tail.is_leaf:
            raise GrammarError(f"dangling factored chain at {tail.label!r}")
        if len(tail.children) == 1:
            only = tail.children[0]
            if only.is_leaf and only.label == EPSILON:
                break
            raise GrammarError(f"dangling factored chain at {tail.label!r}")
        if len(tail.children) != 2:
            raise GrammarError(f"factored node {tail.label!r} is not binary")
        child, tail = tail.children
        kids.append(unfactor_tree(child))
        consumed.append(child.label)
    return Tree(t.label, kids)


def tree_to_derivation(t: Tree) -> Iterator[Rule]:
    """Rules of a tree in leftmost-derivation (preorder) order."""
    if t.is_leaf:
        raise GrammarError("a bare token has no derivation")
    if len(t.children) == 1 and t.children[0].is_leaf:
        tok = t.children[0].label
        if tok == EPSILON:
            yield Rule(t.label, (), False)
        else:
            yield Rule(t.label, (tok,), True)
        return
    _check_children(t)
    yield Rule(t.label, tuple(c.label for c in t.children), False)
    for child in t.children:
        yield from tree_to_derivation(child)


class Pcfg:
    """A relative-frequency PCFG over factored rules.

    ``by_lhs`` maps a nonterminal to its expansions as (rule, rule_id,
    log probability) triples; rule ids are positions in the sorted rule
    list and are stable across save/load.
    """

    def __init__(self, rule_counts: dict[Rule, int], start: str):
        if not rule_counts:
            raise GrammarError("no rules")
        self.start = start
        self.rule_counts = dict(rule_counts)
        self.lhs_counts: dict[str, int] = {}
        for rule, n in rule_counts.items():
            if n <= 0:
                raise GrammarError(f"rule {rule.render()} has count {n}")
            self.lhs_counts[rule.lhs] = self.lhs_counts.get(rule.lhs, 0) + n
        self.rules: list[Rule] = sorted(rule_counts)
        self.rule_ids: dict[Rule, int] = {r: i for i, r in enumerate(self.rules)}
        self.preterminals = frozenset(r.lhs for r in self.rules if r.lexical)
        self.vocabulary = frozenset(r.rhs[0] for r in self.rules if r.lexical)
        self.by_lhs: dict[str, tuple[tuple[Rule, int, float], ...]] = {}
        grouped: dict[str, list[tuple[Rule, int, float]]] = {}
        for rule in self.rules:
            logp = math.log(rule_counts[rule] / self.lhs_counts[rule.lhs])
            grouped.setdefault(rule.lhs, []).append((rule, self.rule_ids[rule], logp))
        self.by_lhs = {lhs: tuple(entries) for lhs, entries in grouped.items()}
        self._validate()

    def _validate(self) -> None:
        if self.start not in self.by_lhs:
            raise GrammarError(f"start symbol {self.start!r} has no rules")
        nonterminals = set(self.by_lhs)
        for rule in self.rules:
            if rule.lexical:
                if len(rule.rhs) != 1:
                    raise GrammarError(f"lexical rule {rule.render()} is not unary")
            elif len(rule.rhs) == 0:
                if not is_factored(rule.lhs):
                    raise GrammarError(
                        f"epsilon rule on unfactored symbol {rule.lhs!r}"
                    )
            elif len(rule.rhs) == 2:
                for sym in rule.rhs:
                    if sym not in nonterminals:
                        raise GrammarError(
                            f"rule {rule.render()} references {sym!r}, "
                            "which has no expansions"
                        )
            else:
                raise GrammarError(f"rule {rule.render()} is not in factored form")
        for lhs, entries in self.by_lhs.items():
            total = math.fsum(math.exp(logp) for _, _, logp in entries)
            if abs(total - 1.0) > 1e-9:
                raise GrammarError(f"probabilities for {lhs!r} sum to {total!r}")

    def rule_prob(self, rule: Rule) -> float:
        n = self.rule_counts.get(rule)
        if n is None:
            return 0.0
        return n / self.lhs_counts[rule.lhs]

    def expansions(self, lhs: str) -> tuple[tuple[Rule, int, float], ...]:
        return self.by_lhs.get(lhs, ())


def induce_pcfg(trees: Iterable[Tree], start: str) -> Pcfg:
    """Relative-frequency estimation over factored, axiom-rooted trees."""
    counts: dict[Rule, int] = {}
    any_tree = False
    for t in trees:
        any_tree = True
        if t.label != start:
            raise GrammarError(
                f"tree rooted at {t.label!r}; expected the axiom {start!r} "
                "(augment before inducing)"
            )
        for rule in tree_to_derivation(t):
            counts[rule] = counts.get(rule, 0) + 1
    if not any_tree:
        raise GrammarError("empty corpus")
    return Pcfg(counts, start)


def log_tree_probability(g: Pcfg, t: Tree) -> float:
    """Log probability of a tree under g; -inf signals an unseen rule.

    The -inf return is an exact zero-probability signal, distinct from any
    underflow: log space never underflows at these scales.
    """
    total = 0.0
    for rule in tree_to_derivation(t):
        entry = g.rule_counts.get(rule)
        if entry is None:
            return -math.inf
        total += math.log(entry / g.lhs_counts[rule.lhs])
    return total


def tree_probability(g: Pcfg, t: Tree) -> float:
    logp = log_tree_probability(g, t)
    return math.exp(logp) if logp != -math.inf else 0.0
