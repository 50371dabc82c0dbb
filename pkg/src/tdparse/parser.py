"""Incremental top-down beam parser.

The parser keeps one queue of candidate analyses per input position.  An
analysis is a stack of grammar symbols left to expand, the partial tree
built so far (as a spine, see conditioning.py), its derivation log
probability, and a figure of merit that multiplies in the lookahead
probability of the word it now has to explain.  Processing a queue pops
analyses best-first; rules that consume the current word move their
successor to the next queue, all other rules push back into the current
one.  A queue stops when it empties, when the best remaining figure of
merit falls below

    gamma * |H| ** 3 * best,

where best and |H| are the top figure of merit and size of the next
queue so far, or when the pop budget runs out.  base_beam = 0 switches
every cutoff off and enumerates exactly; that terminates only for
grammars without left recursion or unary cycles.

The initial content of queue i, before any same-position work, is
exactly the set of analyses that consumed the i-word prefix, so its
probability mass is the (beam lower bound on the) prefix probability.
Those masses drive the language model in langmodel.py.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Optional

from .conditioning import ContextModel, SpineNode, apply_rule
from .grammar import Pcfg
from .lookahead import LookaheadTables
from .treebank import Tree


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class ParserConfig:
    base_beam: float = 1e-11      # gamma; 0.0 disables pruning and budgets
    max_pops: int = 10_000        # per-queue expansion budget
    lap_floor: float = 1e-10      # clamp on the lookahead factor

    def __post_init__(self):
        if self.base_beam < 0 or self.base_beam >= 1:
            raise ParseError("base_beam must be 0 (exact) or in (0, 1)")
        if self.max_pops <= 0:
            raise ParseError("max_pops must be positive")
        if self.lap_floor < 0:
            raise ParseError("lap_floor must be nonnegative")


def beam_threshold(best_logf: float, queue_size: int, base_beam: float) -> float:
    """Log figure-of-merit cutoff given the next queue's best entry and size."""
    return best_logf + math.log(base_beam) + 3.0 * math.log(queue_size)


class Analysis:
    """One candidate: symbols still to expand plus the structure built."""

    __slots__ = ("stack", "spine", "logp", "logf", "pos", "rules", "tree")

    def __init__(self, stack, spine, logp, logf, pos, rules, tree=None):
        self.stack: tuple[str, ...] = stack        # top of stack at the end
        self.spine: Optional[SpineNode] = spine
        self.logp: float = logp
        self.logf: float = logf
        self.pos: int = pos
        self.rules: tuple[int, ...] = rules
        self.tree: Optional[Tree] = tree


@dataclass
class QueueInfo:
    mass: float
    size: int
    best: Optional[Analysis]


@dataclass
class ParseResult:
    words: tuple[str, ...]
    queues: list[QueueInfo]                  # len(words) + 1 initial snapshots
    completed: list[Analysis]                # best derivation first
    tree: Tree                               # complete parse or partial cover
    failed: bool
    fallback_from: Optional[int]             # queue the partial tree came from
    pops: int
    pushes: int

    @property
    def masses(self) -> list[float]:
        return [q.mass for q in self.queues]

    @property
    def best_logp(self) -> Optional[float]:
        return self.completed[0].logp if self.completed else None


class BeamParser:
    def __init__(
        self,
        grammar: Pcfg,
        context: ContextModel,
        lookahead: LookaheadTables,
        config: ParserConfig = ParserConfig(),
    ):
        if context.grammar is not grammar:
            raise ParseError("context model was built for a different grammar")
        self.grammar = grammar
        self.context = context
        self.lookahead = lookahead
        self.config = config

    # -- pieces ---------------------------------------------------------------

    def _lap_log(self, stack: tuple[str, ...], word: Optional[str]) -> float:
        p = self.lookahead.stack_prob(reversed(stack), word)
        p = max(p, self.config.lap_floor)
        return math.log(p) if p > 0.0 else -math.inf

    def initial_entries(self, first_word: Optional[str]) -> list[Analysis]:
        stack = (self.grammar.start,)
        return [Analysis(stack, None, 0.0, self._lap_log(stack, first_word), 0, ())]

    def advance(
        self, entries: list[Analysis], word: str, next_word: Optional[str]
    ) -> tuple[list[Analysis], int, int]:
        """Run one queue to completion and collect the next queue's entries.

        ``word`` is what analyses must consume to advance; ``next_word``
        is only used to score the advanced successors' figures of merit.
        Returns (next entries, pops, pushes).
        """
        exact = self.config.base_beam == 0.0
        log_gamma = None if exact else math.log(self.config.base_beam)
        tie = itertools.count()
        heap = [(-e.logf, next(tie), e) for e in entries]
        heapq.heapify(heap)
        nxt: list[Analysis] = []
        best_next = -math.inf
        pops = pushes = 0
        while heap:
            if not exact:
                if nxt and -heap[0][0] < beam_threshold(best_next, len(nxt), self.config.base_beam):
                    break
                if pops >= self.config.max_pops:
                    break
            a = heapq.heappop(heap)[2]
            pops += 1
            if not a.stack:
                # Derivation finished with input left over: a dead end.
                continue
            top = a.stack[-1]
            score = self.context.scorer(a.spine, top)
            for rule, rid, _ in self.grammar.expansions(top):
                lp = score(rid)
                if lp == -math.inf:
                    continue
                if rule.lexical:
                    if rule.rhs[0] != word:
                        continue
                    stack = a.stack[:-1]
                    logp = a.logp + lp
                    logf = logp + self._lap_log(stack, next_word)
                    if not exact and nxt and logf < beam_threshold(
                        best_next, len(nxt), self.config.base_beam
                    ):
                        continue
                    spine, done = apply_rule(a.spine, rule)
                    nxt.append(Analysis(stack, spine, logp, logf, a.pos + 1, a.rules + (rid,), done))
                    pushes += 1
                    if logf > best_next:
                        best_next = logf
                else:
                    if rule.rhs:
                        stack = a.stack[:-1] + (rule.rhs[1], rule.rhs[0])
                    else:
                        stack = a.stack[:-1]
                        if not stack:
                            # Completed before the input ran out; drop.
                            continue
                    spine, _ = apply_rule(a.spine, rule)
                    logp = a.logp + lp
                    logf = logp + self._lap_log(stack, word)
                    heapq.heappush(heap, (-logf, next(tie), Analysis(stack, spine, logp, logf, a.pos, a.rules + (rid,))))
                    pushes += 1
        return nxt, pops, pushes

    def finish(self, entries: list[Analysis]) -> tuple[list[Analysis], int, int]:
        """Erase what remains after the last word and collect full parses."""
        exact = self.config.base_beam == 0.0
        tie = itertools.count()
        heap = [(-e.logf, next(tie), e) for e in entries]
        heapq.heapify(heap)
        completed: list[Analysis] = []
        best_done = -math.inf
        pops = pushes = 0
        while heap:
            if not exact:
                if completed and -heap[0][0] < beam_threshold(
                    best_done, len(completed), self.config.base_beam
                ):
                    break
                if pops >= self.config.max_pops:
                    break
            a = heapq.heappop(heap)[2]
            pops += 1
            if not a.stack:
                # Emptied exactly at the input boundary by a lexical rule.
                if a.tree is not None:
                    completed.append(a)
                    if a.logp > best_done:
                        best_done = a.logp
                continue
            top = a.stack[-1]
            score = self.context.scorer(a.spine, top)
            for rule, rid, _ in self.grammar.expansions(top):
                if rule.lexical:
                    continue
                lp = score(rid)
                if lp == -math.inf:
                    continue
                spine, done = apply_rule(a.spine, rule)
                logp = a.logp + lp
                if rule.rhs:
                    stack = a.stack[:-1] + (rule.rhs[1], rule.rhs[0])
                else:
                    stack = a.stack[:-1]
                    if not stack:
                        completed.append(Analysis((), None, logp, logp, a.pos, a.rules + (rid,), done))
                        if logp > best_done:
                            best_done = logp
                        continue
                logf = logp + self._lap_log(stack, None)
                heapq.heappush(heap, (-logf, next(tie), Analysis(stack, spine, logp, logf, a.pos, a.rules + (rid,))))
                pushes += 1
        completed.sort(key=lambda c: (-c.logp, c.rules))
        return completed, pops, pushes

    # -- the whole pipeline ----------------------------------------------------

    def parse(self, words: list[str]) -> ParseResult:
        """Parse a sentence given as tokens ending with the end marker."""
        if not words:
            raise ParseError("cannot parse an empty sentence")
        entries = self.initial_entries(words[0])
        queues = [self._snapshot(entries)]
        total_pops = total_pushes = 0
        for i, w in enumerate(words):
            nxt_word = words[i + 1] if i + 1 < len(words) else None
            entries, pops, pushes = self.advance(entries, w, nxt_word)
            total_pops += pops
            total_pushes += pushes
            queues.append(self._snapshot(entries))
        completed, pops, pushes = self.finish(entries)
        total_pops += pops
        total_pushes += pushes
        if completed:
            tree, failed, origin = completed[0].tree, False, None
        else:
            origin = max(i for i, q in enumerate(queues) if q.size > 0)
            tree = self._partial_tree(queues[origin].best, list(words[origin:]))
            failed = True
        return ParseResult(
            words=tuple(words),
            queues=queues,
            completed=completed,
            tree=tree,
            failed=failed,
            fallback_from=origin,
            pops=total_pops,
            pushes=total_pushes,
        )

    def _snapshot(self, entries: list[Analysis]) -> QueueInfo:
        if not entries:
            return QueueInfo(0.0, 0, None)
        mass = math.fsum(math.exp(e.logp) for e in entries)
        best = max(entries, key=lambda e: e.logf)
        return QueueInfo(mass, len(entries), best)

    def _partial_tree(self, analysis: Analysis, remaining: list[str]) -> Tree:
        """Close the spine and park unconsumed words under the root.

        Open constituents with nothing in them yet are dropped rather
        than kept as empty brackets.
        """
        node = analysis.spine
        sub: Optional[Tree] = None
        while node is not None:
            kids = node.children + ((sub,) if sub is not None else ())
            if kids:
                sub = Tree(node.label, kids)
            node = node.parent
        leaves = tuple(Tree(w) for w in remaining)
        if sub is None:
            return Tree(self.grammar.start, leaves)
        if leaves:
            sub = Tree(sub.label, sub.children + leaves)
        return sub

    # -- mass probes -------------------------------------------------------------

    def prefix_entries(self, prefix: list[str]) -> list[Analysis]:
        """Queue entries after consuming ``prefix`` under the usual beam."""
        entries = self.initial_entries(prefix[0] if prefix else None)
        for j, w in enumerate(prefix):
            nxt = prefix[j + 1] if j + 1 < len(prefix) else None
            entries, _, _ = self.advance(entries, w, nxt)
        return entries

    def advance_mass(self, entries: list[Analysis], word: str) -> float:
        """Mass reaching the next queue if ``word`` came next."""
        rescored = [
            Analysis(e.stack, e.spine, e.logp, e.logp + self._lap_log(e.stack, word), e.pos, e.rules)
            for e in entries
        ]
        nxt, _, _ = self.advance(rescored, word, None)
        return math.fsum(math.exp(e.logp) for e in nxt)


def queue_mass(entries: list[Analysis]) -> float:
    return math.fsum(math.exp(e.logp) for e in entries)
