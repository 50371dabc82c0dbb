"""Language modeling on top of the incremental parser.

The ratio of successive queue masses is the parser's conditional word
probability: mass(i+1)/mass(i) = P(word i | words < i) up to beam loss.
Each conditional is shrunk slightly toward a unigram floor so that beam
search errors never zero out a whole sentence; if the parser loses every
analysis (a garden path), the unigram alone stands in for the rest of
the sentence.  Perplexities count the end-of-sentence marker as a word.

A standard trigram model with deleted interpolation (weights tied by
history-count bucket, fit with the same EM used for the conditioning
weights) serves both as a baseline and as a mixture partner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .conditioning import bucket_of, tune_interpolation
from .parser import BeamParser, ParseResult, queue_mass
from .treebank import END_TOKEN, Tree

START_TOKEN = "<s>"


class LangModelError(ValueError):
    pass


def sentences_from_trees(trees: Iterable[Tree], end_token: str = END_TOKEN) -> list[list[str]]:
    """Token lists (end marker appended) from tree yields."""
    return [list(t.yield_tokens()) + [end_token] for t in trees]


def build_unigram(sentences: Iterable[Sequence[str]]) -> dict[str, float]:
    counts: dict[str, int] = {}
    total = 0
    for toks in sentences:
        for w in toks:
            counts[w] = counts.get(w, 0) + 1
            total += 1
    if not total:
        raise LangModelError("no tokens to estimate a unigram from")
    return {w: c / total for w, c in sorted(counts.items())}


@dataclass
class WordProbTrace:
    """Per-word conditional probabilities for one sentence."""

    words: tuple[str, ...]
    model_probs: tuple[float, ...]   # raw queue-mass ratios
    final_probs: tuple[float, ...]   # smoothed with the unigram
    fallback: tuple[bool, ...]       # True where only the unigram was left

    @property
    def log_prob(self) -> float:
        total = 0.0
        for p in self.final_probs:
            if p <= 0.0:
                return -math.inf
            total += math.log(p)
        return total


def word_probabilities(
    result: ParseResult,
    unigram: dict[str, float],
    model_weight: float = 0.999,
) -> WordProbTrace:
    if not 0.0 < model_weight <= 1.0:
        raise LangModelError("model_weight must be in (0, 1]")
    masses = result.masses
    model: list[float] = []
    final: list[float] = []
    fallback: list[bool] = []
    for i, w in enumerate(result.words):
        uni = unigram.get(w, 0.0)
        if masses[i] > 0.0:
            ratio = masses[i + 1] / masses[i]
            model.append(ratio)
            final.append(model_weight * ratio + (1.0 - model_weight) * uni)
            fallback.append(False)
        else:
            model.append(0.0)
            final.append(uni)
            fallback.append(True)
    return WordProbTrace(result.words, tuple(model), tuple(final), tuple(fallback))


def perplexity(probs: Iterable[float], n_words: Optional[int] = None) -> float:
    """exp of the average negative log probability; inf if any prob is 0."""
    probs = list(probs)
    n = n_words if n_words is not None else len(probs)
    if n <= 0:
        raise LangModelError("perplexity needs at least one word")
    total = 0.0
    for p in probs:
        if p <= 0.0:
            return math.inf
        total -= math.log(p)
    return math.exp(total / n)


def corpus_perplexity(traces: Iterable[WordProbTrace]) -> float:
    probs: list[float] = []
    for tr in traces:
        probs.extend(tr.final_probs)
    return perplexity(probs)


class NgramModel:
    """Interpolated n-gram model (trigram by default).

    Lower-order estimates back off the higher ones:
    P = lam_k * f(w | last k words) + (1 - lam_k) * P_{k-1}, bottoming out
    in the unigram.  Histories are padded with a start symbol that is
    never itself predicted.  Weights are tied by (order, history-count
    bucket) and fit on heldout text; unseen histories skip their level,
    so the distribution stays normalized over the training vocabulary.
    """

    def __init__(self, order: int = 3):
        if order < 1:
            raise LangModelError("order must be at least 1")
        self.order = order
        self.counts: list[dict[tuple, dict[str, int]]] = [{} for _ in range(order)]
        self.totals: list[dict[tuple, int]] = [{} for _ in range(order)]
        self.lambdas: dict[tuple[int, int], float] = {}

    def train(self, sentences: Iterable[Sequence[str]]) -> None:
        pad = self.order - 1
        for toks in sentences:
            ctx = (START_TOKEN,) * pad
            for w in toks:
                for k in range(self.order):
                    key = ctx[pad - k :] if k else ()
                    d = self.counts[k].setdefault(key, {})
                    d[w] = d.get(w, 0) + 1
                    self.totals[k][key] = self.totals[k].get(key, 0) + 1
                if pad:
                    ctx = ctx[1:] + (w,)
        if not self.totals[0]:
            raise LangModelError("no tokens to train on")

    @property
    def vocabulary(self) -> list[str]:
        return sorted(self.counts[0].get((), {}))

    def tune(self, heldout: Iterable[Sequence[str]], max_iter: int = 100, tol: float = 1e-6) -> list[float]:
        """Fit interpolation weights by EM on heldout sentences."""
        pad = self.order - 1
        uni_total = self.totals[0].get((), 0)
        if not uni_total:
            raise LangModelError("train before tuning")
        events = []
        pinned: dict[tuple[int, int], float] = {}
        for toks in heldout:
            ctx = (START_TOKEN,) * pad
            for w in toks:
                p0 = self.counts[0][()].get(w, 0) / uni_total
                levels = []
                for k in range(1, self.order):
                    key = ctx[pad - k :]
                    tot = self.totals[k].get(key, 0)
                    b = bucket_of(tot)
                    if b == 0:
                        pinned[(k, 0)] = 0.0
                        continue
                    ph = self.counts[k].get(key, {}).get(w, 0) / tot
                    levels.append(((k, b), ph))
                events.append((p0, levels))
                if pad:
                    ctx = ctx[1:] + (w,)
        lam, history = tune_interpolation(events, max_iter=max_iter, tol=tol)
        self.lambdas = dict(sorted({**pinned, **lam}.items()))
        return history

    def word_prob(self, context: Sequence[str], word: str) -> float:
        uni_total = self.totals[0].get((), 0)
        if not uni_total:
            return 0.0
        p = self.counts[0][()].get(word, 0) / uni_total
        ctx = tuple(context)
        for k in range(1, self.order):
            if len(ctx) < k:
                break
            key = ctx[len(ctx) - k :]
            tot = self.totals[k].get(key, 0)
            if not tot:
                continue
            lam = self.lambdas.get((k, bucket_of(tot)), 0.0)
            if lam <= 0.0:
                continue
            p = lam * (self.counts[k][key].get(word, 0) / tot) + (1.0 - lam) * p
        return p

    def word_probs(self, tokens: Sequence[str]) -> list[float]:
        pad = self.order - 1
        ctx = (START_TOKEN,) * pad
        out = []
        for w in tokens:
            out.append(self.word_prob(ctx, w))
            if pad:
                ctx = ctx[1:] + (w,)
        return out


def mixed_probs(
    parser_probs: Sequence[float], trigram_probs: Sequence[float], trigram_share: float = 0.36
) -> list[float]:
    """Linear mixture of per-word probabilities from the two models."""
    if len(parser_probs) != len(trigram_probs):
        raise LangModelError("probability sequences differ in length")
    if not 0.0 <= trigram_share <= 1.0:
        raise LangModelError("trigram_share must be in [0, 1]")
    return [
        (1.0 - trigram_share) * p + trigram_share * q
        for p, q in zip(parser_probs, trigram_probs)
    ]


def vocab_mass(parser: BeamParser, prefix: Sequence[str], candidates: Sequence[str]) -> dict[str, float]:
    """P(next word | prefix) for each candidate, by advancing the beam.

    All candidates share one set of prefix queue entries, so with exact
    search over a proper grammar the values sum to 1 and under pruning
    they sum to at most 1.
    """
    entries = parser.prefix_entries(list(prefix))
    denom = queue_mass(entries)
    if denom == 0.0:
        return {w: 0.0 for w in candidates}
    return {w: parser.advance_mass(entries, w) / denom for w in candidates}
