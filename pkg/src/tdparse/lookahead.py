"""Lookahead word probabilities for ranking parser analyses.

A candidate analysis is a stack of symbols still to be expanded.  How
well it predicts the next input word is estimated from smoothed
first-word statistics: for each grammar symbol A, the chance that A's
yield starts with word w, that it starts with preterminal X, or that the
yield is empty.  The per-symbol estimate mixes the direct first-word
frequency with a preterminal backoff,

    P(w | A) = m * f(first word of A = w) + (1 - m) * sum_X f(first
    preterminal of A = X) * f(w | X),     m = f(A) / (f(A) + K),

and the stack estimate lets leading symbols erase:

    P(w | A1 A2 ...) = P(w | A1) + P(eps | A1) * P(w | A2 A3 ...).

A lookahead of None asks for the probability that the whole stack
erases, which is what remains once every input word is consumed.

These numbers rank analyses only; derivation probabilities never include
them.  No flooring happens here, callers clamp as they see fit.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .treebank import EPSILON, Tree


class LookaheadError(ValueError):
    pass


class LookaheadTables:
    """First-word, first-preterminal and erasure counts per symbol."""

    def __init__(self, smoothing_k: int = 5):
        if smoothing_k < 0:
            raise LookaheadError("smoothing_k must be nonnegative")
        self.smoothing_k = smoothing_k
        self.occurrences: dict[str, int] = {}
        self.first_word: dict[str, dict[str, int]] = {}
        self.first_pos: dict[str, dict[str, int]] = {}
        self.erased: dict[str, int] = {}
        self.pos_word: dict[str, dict[str, int]] = {}
        self.pos_total: dict[str, int] = {}

    @classmethod
    def from_trees(cls, trees: Iterable[Tree], smoothing_k: int = 5) -> "LookaheadTables":
        tables = cls(smoothing_k)
        for t in trees:
            tables._walk(t)
        if not tables.occurrences:
            raise LookaheadError("no constituents to collect lookahead counts from")
        return tables

    def _walk(self, t: Tree) -> Optional[tuple[str, str]]:
        # Returns the (word, preterminal) pair heading t's yield, or None
        # when the yield is empty.  Epsilon leaves are not words.
        if t.is_preterminal:
            token = t.children[0].label
            if token == EPSILON:
                first = None
            else:
                first = (token, t.label)
                words = self.pos_word.setdefault(t.label, {})
                words[token] = words.get(token, 0) + 1
                self.pos_total[t.label] = self.pos_total.get(t.label, 0) + 1
        else:
            first = None
            for child in t.children:
                r = self._walk(child)
                if first is None:
                    first = r
        self.occurrences[t.label] = self.occurrences.get(t.label, 0) + 1
        if first is None:
            self.erased[t.label] = self.erased.get(t.label, 0) + 1
        else:
            word, pos = first
            fw = self.first_word.setdefault(t.label, {})
            fw[word] = fw.get(word, 0) + 1
            fp = self.first_pos.setdefault(t.label, {})
            fp[pos] = fp.get(pos, 0) + 1
        return first

    def word_prob(self, symbol: str, word: str) -> float:
        """Probability that ``symbol`` expands to a yield starting with ``word``."""
        occ = self.occurrences.get(symbol, 0)
        if not occ:
            return 0.0
        mix = occ / (occ + self.smoothing_k)
        direct = self.first_word.get(symbol, {}).get(word, 0) / occ
        backoff = 0.0
        for pos, n in self.first_pos.get(symbol, {}).items():
            emit = self.pos_word.get(pos, {}).get(word, 0)
            if emit:
                backoff += (n / occ) * (emit / self.pos_total[pos])
        return mix * direct + (1.0 - mix) * backoff

    def eps_prob(self, symbol: str) -> float:
        occ = self.occurrences.get(symbol, 0)
        if not occ:
            return 0.0
        return self.erased.get(symbol, 0) / occ

    def stack_prob(self, symbols: Iterable[str], word: Optional[str]) -> float:
        """Probability of ``word`` as the next terminal from this stack.

        ``symbols`` run top of stack first.  ``word`` None means "no word
        at all": the probability that every symbol erases.
        """
        p = 0.0
        weight = 1.0
        for sym in symbols:
            if word is not None:
                p += weight * self.word_prob(sym, word)
            weight *= self.eps_prob(sym)
            if weight == 0.0:
                break
        if word is None:
            return weight
        return p
