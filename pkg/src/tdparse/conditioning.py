"""Context-conditioned rule probabilities for top-down derivations.

Every rule expansion in a leftmost derivation sees the rooted partial tree
built so far.  That context is kept as a *spine*: the chain of open
constituents from the root down to the constituent being worked on, each
holding the completed subtrees to its left.  The spine is immutable and
shared between candidate analyses, so extending one analysis never
disturbs another.

From the spine we read off a fixed schedule of conditioning values for
the expansion of a left-hand side A.  Which schedule applies depends on
where A sits:

* left path (A is not a preterminal), up to 7 values:
  A, parent, closest left sibling, grandparent, parent's closest left
  sibling, conjunction peek, lexical head seen so far;
* middle path (A is the leftmost preterminal of its constituent), up to
  6 values: A, parent, sibling (NULL here by definition), grandparent,
  then POS and token of the closest c-commanding lexical head;
* right path (A is a preterminal with a left sibling), up to 5 values:
  A, parent, sibling, then the two closest c-commanding lexical heads.

Rule probabilities interpolate relative frequencies down the schedule:
P_k = lam_k * f(rule | values[0..k]) + (1 - lam_k) * P_{k-1}, bottoming
out in the plain PCFG estimate f(rule | A).  A level whose value is NULL
adds no mixing step (it carries no new conditioning event), though the
NULL stays part of deeper table keys.  The lam_k are tied by (path,
level, frequency bucket of the conditioning-event count) and fit by EM
on heldout derivations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .grammar import Pcfg, Rule, split_factored, tree_to_derivation
from .treebank import Tree

LEFT = "left"
MIDDLE = "middle"
RIGHT = "right"
PATH_MAX = {LEFT: 6, MIDDLE: 5, RIGHT: 4}

# Count buckets for tying interpolation weights: 0, 1, 2-4, 5-9, 10-99, 100+.
BUCKET_EDGES = (1, 2, 5, 10, 100)

# EM may drive a weight to the boundary when heldout never backs off in a
# bucket; keep a sliver of backoff so unseen events never get probability 0.
LAMBDA_CAP = 1.0 - 1e-6


class ConditioningError(ValueError):
    pass


def bucket_of(count: int) -> int:
    if count <= 0:
        return 0
    for i, edge in enumerate(BUCKET_EDGES):
        if count < edge:
            return i
    return len(BUCKET_EDGES)


# Head percolation: label -> (scan direction, priority labels).  The scan
# looks for each priority label in turn, moving through the children in
# the given direction; with no priority hit it falls back to the first
# child ("left") or last child ("right").  Covers the conventional
# treebank inventory plus the short tags the fixture grammars use.
DEFAULT_HEAD_TABLE: dict[str, tuple[str, tuple[str, ...]]] = {
    "TOP": ("left", ()),
    "S": ("left", ("VP", "S", "SBAR", "SINV", "ADJP", "UCP", "NP")),
    "SINV": ("left", ("VBZ", "VBD", "VBP", "VB", "MD", "VP", "S", "SINV", "ADJP", "NP")),
    "SBAR": ("left", ("WHNP", "WHPP", "WHADVP", "WHADJP", "IN", "DT", "C", "S", "SQ", "SINV", "SBAR", "FRAG")),
    "SBARQ": ("left", ("SQ", "S", "SINV", "SBARQ", "FRAG")),
    "SQ": ("left", ("VBZ", "VBD", "VBP", "VB", "MD", "VP", "SQ")),
    "VP": ("left", ("VBD", "VBN", "MD", "VBZ", "VB", "VBG", "VBP", "V", "VP", "ADJP", "NN", "NNS", "NP")),
    "NP": ("right", ("NN", "NNP", "NNPS", "NNS", "NX", "POS", "JJR", "N", "NP", "PRP", "CD", "JJ")),
    "PP": ("left", ("IN", "TO", "VBG", "VBN", "RP", "FW", "P")),
    "ADJP": ("right", ("NNS", "QP", "NN", "ADVP", "JJ", "VBN", "VBG", "ADJP", "JJR", "NP", "JJS", "DT", "FW", "RBR", "RBS", "SBAR", "RB")),
    "ADVP": ("right", ("RB", "RBR", "RBS", "FW", "ADVP", "TO", "CD", "JJR", "JJ", "IN", "NP", "JJS", "NN")),
    "QP": ("left", ("IN", "NNS", "NN", "JJ", "RB", "DT", "CD", "QP", "JJR", "JJS")),
    "WHNP": ("left", ("WDT", "WP", "WHADJP", "WHPP", "WHNP")),
    "WHPP": ("right", ("IN", "TO", "FW")),
    "WHADVP": ("right", ("CC", "WRB")),
    "PRT": ("right", ("RP",)),
    "NAC": ("left", ("NN", "NNS", "NNP", "NNPS", "NP", "NAC", "EX", "CD", "QP", "PRP", "VBG", "JJ", "JJS", "JJR", "ADJP", "FW")),
    "NX": ("left", ("NN", "NNS", "NNP", "NNPS")),
    "CONJP": ("right", ("CC", "RB", "IN")),
    "LST": ("right", ("LS",)),
    "RRC": ("right", ("VP", "NP", "ADVP", "ADJP", "PP")),
    "UCP": ("right", ()),
    "FRAG": ("right", ()),
    "X": ("right", ()),
}
DEFAULT_HEAD_FALLBACK = ("left", ())

PRESETS: dict[str, tuple[int, int, int]] = {
    "none": (0, 0, 0),
    "par+sib": (2, 2, 2),
    "nt-struct": (5, 2, 2),
    "nt-head": (6, 2, 2),
    "pos-struct": (6, 3, 2),
    "attach": (6, 5, 2),
    "all": (6, 6, 4),
}


@dataclass(frozen=True)
class CondConfig:
    """Per-path conditioning depths (deepest active level index).

    ``phrasal_depth`` governs the left path, ``first_pos_depth`` the
    middle path, ``later_pos_depth`` the right path.  Depth 0 everywhere
    is the plain PCFG.  Values clamp to each path's maximum.
    """

    phrasal_depth: int = 6
    first_pos_depth: int = 5
    later_pos_depth: int = 4

    def __post_init__(self):
        for name, ceiling in (
            ("phrasal_depth", PATH_MAX[LEFT]),
            ("first_pos_depth", PATH_MAX[MIDDLE]),
            ("later_pos_depth", PATH_MAX[RIGHT]),
        ):
            v = getattr(self, name)
            if v < 0:
                raise ConditioningError(f"{name} must be nonnegative")
            if v > ceiling:
                object.__setattr__(self, name, ceiling)

    @classmethod
    def from_preset(cls, name: str) -> "CondConfig":
        key = name.strip().lower().replace(" ", "-").replace("_", "-")
        if key not in PRESETS:
            raise ConditioningError(
                f"unknown conditioning preset {name!r}; choose from "
                + ", ".join(sorted(PRESETS))
            )
        return cls(*PRESETS[key])

    def depth_for(self, path: str) -> int:
        if path == LEFT:
            return self.phrasal_depth
        if path == MIDDLE:
            return self.first_pos_depth
        return self.later_pos_depth

    @property
    def max_depth(self) -> int:
        return max(self.phrasal_depth, self.first_pos_depth, self.later_pos_depth)


class SpineNode:
    """One open constituent: its label, completed children, and parent."""

    __slots__ = ("label", "children", "parent")

    def __init__(self, label: str, children: tuple[Tree, ...], parent: Optional["SpineNode"]):
        self.label = label
        self.children = children
        self.parent = parent


def apply_rule(spine: Optional[SpineNode], rule: Rule) -> tuple[Optional[SpineNode], Optional[Tree]]:
    """Advance the partial-tree spine by one rule of a leftmost derivation.

    Returns the new spine and, when the rule closes the root constituent,
    the finished tree.
    """
    if rule.lexical:
        t = Tree(rule.lhs, (Tree(rule.rhs[0]),))
        if spine is None:
            # The whole derivation was a single preterminal.
            return None, t
        return SpineNode(spine.label, spine.children + (t,), spine.parent), None
    if not rule.rhs:
        t = Tree(spine.label, spine.children)
        parent = spine.parent
        if parent is None:
            return None, t
        return SpineNode(parent.label, parent.children + (t,), parent.parent), None
    base, consumed = split_factored(rule.lhs)
    if consumed:
        # Continuing an already-open constituent; the new child attaches
        # when it is itself expanded.
        return spine, None
    return SpineNode(base, (), spine), None


def replay(trees: Iterable[Tree]) -> Iterator[tuple[Optional[SpineNode], Rule]]:
    """Yield (context spine, rule) for every expansion in the given trees.

    The spine is the state *before* the rule applies, exactly what the
    parser sees when it scores the same expansion.
    """
    for t in trees:
        spine: Optional[SpineNode] = None
        for rule in tree_to_derivation(t):
            yield spine, rule
            spine, _ = apply_rule(spine, rule)


def head_of(t: Tree, table: dict) -> tuple[str, str]:
    """Percolated (token, POS tag) head of a completed subtree."""
    cached = t._head
    if cached is not None and cached[0] is table:
        return cached[1]
    if t.is_leaf:
        h = (t.label, t.label)
    elif t.is_preterminal:
        h = (t.children[0].label, t.label)
    else:
        h = head_of(head_child(t.label, t.children, table), table)
    t._head = (table, h)
    return h


def head_child(label: str, children: tuple[Tree, ...], table: dict) -> Tree:
    direction, priorities = table.get(label, DEFAULT_HEAD_FALLBACK)
    ordered = children if direction == "left" else children[::-1]
    for want in priorities:
        for child in ordered:
            if child.label == want:
                return child
    return ordered[0]


def open_constituent_head(label: str, children: tuple[Tree, ...], table: dict) -> Optional[tuple[str, str]]:
    """Head of a constituent still being built.

    If the percolation priorities match one of the children seen so far,
    that child's head counts as already seen; otherwise the last built
    child stands proxy.  No children yet means no head.
    """
    if not children:
        return None
    _, priorities = table.get(label, DEFAULT_HEAD_FALLBACK)
    for want in priorities:
        for child in reversed(children):
            if child.label == want:
                return head_of(child, table)
    return head_of(children[-1], table)


def c_command_heads(spine: Optional[SpineNode], table: dict) -> Iterator[tuple[str, str]]:
    """Heads of constituents c-commanding the node pending under ``spine``.

    Nearest first: completed left siblings of the pending node, then the
    left siblings of each open ancestor on the way to the root.  A closed
    constituent contributes its percolated head, so material inside it
    never surfaces separately.
    """
    node = spine
    while node is not None:
        for sib in reversed(node.children):
            yield head_of(sib, table)
        node = node.parent


class ContextModel:
    """Count tables and interpolation weights over conditioning values."""

    def __init__(
        self,
        grammar: Pcfg,
        config: CondConfig,
        head_table: Optional[dict] = None,
        conj_label: str = "CC",
    ):
        self.grammar = grammar
        self.config = config
        self.head_table = head_table if head_table is not None else DEFAULT_HEAD_TABLE
        self.conj_label = conj_label
        depth = config.max_depth
        self.tables: list[dict[tuple, dict[int, int]]] = [{} for _ in range(depth + 1)]
        self.totals: list[dict[tuple, int]] = [{} for _ in range(depth + 1)]
        # (path, level, bucket) -> weight on the level's own estimate.
        self.lambdas: dict[tuple[str, int, int], float] = {}

    # -- context extraction -------------------------------------------------

    def select_path(self, spine: Optional[SpineNode], lhs: str) -> str:
        if lhs not in self.grammar.preterminals:
            return LEFT
        siblings = spine.children if spine is not None else ()
        return RIGHT if siblings else MIDDLE

    def extract_values(self, spine: Optional[SpineNode], lhs: str) -> tuple[str, tuple]:
        """Conditioning values for expanding ``lhs`` in this context.

        Returns (path, values); values[0] is always the lhs itself and the
        tuple is cut off at the configured depth for the path.  Missing
        structure shows up as None, never as a shorter tuple.
        """
        base, consumed = split_factored(lhs)
        is_pos = lhs in self.grammar.preterminals
        if consumed:
            parent_spine = spine.parent
            within = spine.children
        else:
            parent_spine = spine
            within = ()
        siblings = parent_spine.children if parent_spine is not None else ()
        y_s = siblings[-1].label if siblings else None
        if is_pos:
            path = RIGHT if y_s is not None else MIDDLE
        else:
            path = LEFT
        depth = min(self.config.depth_for(path), PATH_MAX[path])
        values: list = [lhs]
        if depth >= 1:
            values.append(parent_spine.label if parent_spine is not None else None)
        if depth >= 2:
            values.append(y_s)
        if depth >= 3:
            if path == RIGHT:
                heads = []
                for h in c_command_heads(spine, self.head_table):
                    heads.append(h)
                    if len(heads) == 2:
                        break
                values.append(heads[0][0] if heads else None)
                if depth >= 4:
                    values.append(heads[1][0] if len(heads) > 1 else None)
            else:
                grand = parent_spine.parent if parent_spine is not None else None
                values.append(grand.label if grand is not None else None)
                if path == MIDDLE:
                    if depth >= 4:
                        first = next(c_command_heads(spine, self.head_table), None)
                        values.append(first[1] if first else None)
                        if depth >= 5:
                            values.append(first[0] if first else None)
                else:
                    if depth >= 4:
                        psibs = grand.children if grand is not None else ()
                        values.append(psibs[-1].label if psibs else None)
                    if depth >= 5:
                        conj = None
                        if y_s == self.conj_label and len(siblings) >= 2:
                            prev = siblings[-2]
                            if prev.children:
                                conj = prev.children[0].label
                        values.append(conj)
                    if depth >= 6:
                        if consumed:
                            h = open_constituent_head(base, within, self.head_table)
                            values.append(h[0] if h else None)
                        else:
                            values.append(None)
        return path, tuple(values)

    # -- training ------------------------------------------------------------

    def train_counts(self, trees: Iterable[Tree]) -> int:
        """Accumulate prefix-closed count tables from factored trees."""
        rule_ids = self.grammar.rule_ids
        seen = 0
        for spine, rule in replay(trees):
            rid = rule_ids.get(rule)
            if rid is None:
                raise ConditioningError(
                    f"rule {rule.render()} is not in the grammar"
                )
            _, values = self.extract_values(spine, rule.lhs)
            for k in range(len(values)):
                key = tuple(values[: k + 1])
                counts = self.tables[k].setdefault(key, {})
                counts[rid] = counts.get(rid, 0) + 1
                self.totals[k][key] = self.totals[k].get(key, 0) + 1
            seen += 1
        return seen

    def tune_mix_weights(self, heldout_trees: Iterable[Tree], max_iter: int = 100, tol: float = 1e-6) -> list[float]:
        """Fit interpolation weights by EM on heldout derivations.

        Returns the heldout log-likelihood trace (nats, one entry per
        iteration); it is non-decreasing.  Buckets never seen in heldout
        keep no entry and back off entirely (weight 0), as does bucket 0.
        """
        if self.config.max_depth == 0:
            self.lambdas = {}
            return []
        events = []
        pinned: dict[tuple[str, int, int], float] = {}
        rule_ids = self.grammar.rule_ids
        for spine, rule in replay(heldout_trees):
            rid = rule_ids.get(rule)
            if rid is None:
                continue
            path, values = self.extract_values(spine, rule.lhs)
            tot0 = self.totals[0].get((values[0],), 0)
            p0 = self.tables[0][(values[0],)].get(rid, 0) / tot0 if tot0 else 0.0
            levels = []
            for k in range(1, len(values)):
                if values[k] is None:
                    continue
                key = tuple(values[: k + 1])
                tot = self.totals[k].get(key, 0)
                b = bucket_of(tot)
                if b == 0:
                    pinned[(path, k, 0)] = 0.0
                    continue
                ph = self.tables[k].get(key, {}).get(rid, 0) / tot
                levels.append(((path, k, b), ph))
            events.append((p0, levels))
        lam, history = tune_interpolation(events, max_iter=max_iter, tol=tol)
        self.lambdas = dict(sorted({**pinned, **lam}.items()))
        return history

    # -- scoring ---------------------------------------------------------------

    def scorer(self, spine: Optional[SpineNode], lhs: str) -> Callable[[int], float]:
        """A log-probability function over rule ids for one expansion site.

        With depth 0 this is the plain PCFG estimate and the partial tree
        is never walked.
        """
        key0 = (lhs,)
        tot0 = self.totals[0].get(key0, 0)
        if not tot0:
            return lambda rid: -math.inf
        counts0 = self.tables[0][key0]
        if self.config.max_depth == 0:
            def score0(rid: int) -> float:
                c = counts0.get(rid, 0)
                return math.log(c / tot0) if c else -math.inf
            return score0
        path, values = self.extract_values(spine, lhs)
        prep = []
        for k in range(1, len(values)):
            if values[k] is None:
                continue
            key = tuple(values[: k + 1])
            tot = self.totals[k].get(key, 0)
            if not tot:
                continue
            lam = self.lambdas.get((path, k, bucket_of(tot)), 0.0)
            if lam <= 0.0:
                continue
            prep.append((lam, self.tables[k][key], tot))

        def score(rid: int) -> float:
            p = counts0.get(rid, 0) / tot0
            for lam, counts, tot in prep:
                p = lam * (counts.get(rid, 0) / tot) + (1.0 - lam) * p
            return math.log(p) if p > 0.0 else -math.inf

        return score

    def rule_logprob(self, spine: Optional[SpineNode], rule: Rule) -> float:
        rid = self.grammar.rule_ids.get(rule)
        if rid is None:
            return -math.inf
        return self.scorer(spine, rule.lhs)(rid)


def tune_interpolation(
    events: list[tuple[float, list[tuple[tuple, float]]]],
    max_iter: int = 100,
    tol: float = 1e-6,
) -> tuple[dict, list[float]]:
    """EM for tied nested interpolation weights.

    Each event is (base probability, [(weight key, level estimate), ...])
    with levels ordered bottom-up.  The mixture puts weight
    lam_k * prod_{j>k} (1 - lam_j) on level k.  M-step: a key's new weight
    is the expected share of events that stop at its level among those
    reaching it.  Heldout likelihood never decreases.
    """
    keys = {key for _, levels in events for key, _ in levels}
    lam = {key: 0.5 for key in keys}
    history: list[float] = []
    prev = None
    for _ in range(max_iter):
        ll = 0.0
        stop = dict.fromkeys(keys, 0.0)
        reach = dict.fromkeys(keys, 0.0)
        used = 0
        for p0, levels in events:
            comps = []
            weight = 1.0
            for key, ph in reversed(levels):
                v = lam[key]
                comps.append((key, weight * v * ph))
                weight *= 1.0 - v
            comps.append((None, weight * p0))
            total = math.fsum(c for _, c in comps)
            if total <= 0.0:
                continue
            used += 1
            ll += math.log(total)
            above = 0.0
            for key, c in comps:
                g = c / total
                if key is not None:
                    stop[key] += g
                    reach[key] += 1.0 - above
                above += g
        if used == 0:
            raise ConditioningError("no scorable heldout events")
        history.append(ll)
        for key in keys:
            if reach[key] > 0.0:
                lam[key] = min(max(stop[key] / reach[key], 0.0), LAMBDA_CAP)
        if prev is not None and ll - prev < tol:
            break
        prev = ll
    return lam, history
