"""Training pipeline assembly and model persistence.

A trained model bundles the normalization settings, the induced factored
grammar, conditioning tables with their interpolation weights, lookahead
tables, and the trigram baseline.  The on-disk form is a line-oriented
UTF-8 text file: integers stay integers, floats are written with repr()
so they read back bit-identically, and every list is emitted in sorted
order, making the file a deterministic function of the training data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .conditioning import CondConfig, ContextModel
from .grammar import Pcfg, Rule, induce_pcfg, left_factor_tree
from .langmodel import NgramModel, build_unigram, sentences_from_trees
from .lookahead import LookaheadTables
from .treebank import (
    AXIOM,
    Corpus,
    NormalizationConfig,
    augment_with_stop,
    normalize_tokens,
    speech_normalize,
)

FORMAT_NAME = "tdparse-model"
FORMAT_VERSION = 1


class ModelIOError(ValueError):
    pass


@dataclass
class ParserModel:
    normalization: NormalizationConfig
    vocabulary: frozenset[str]
    grammar: Pcfg
    context: ContextModel
    lookahead: LookaheadTables
    ngram: NgramModel
    unigram: dict[str, float]

    def prepare(self, tokens: list[str]) -> list[str]:
        """Normalize an input sentence and append the end marker."""
        toks = normalize_tokens(tokens, self.vocabulary, self.normalization)
        return toks + [self.normalization.end_token]


def prepare_trees(corpus: Corpus, model_or_cfg, vocabulary=None) -> Corpus:
    """Normalize a tree corpus against an existing model's vocabulary."""
    if isinstance(model_or_cfg, ParserModel):
        cfg = model_or_cfg.normalization
        vocabulary = model_or_cfg.vocabulary
    else:
        cfg = model_or_cfg
    return speech_normalize(corpus, cfg, keep_tokens=vocabulary)


def train_parser_model(
    train: Corpus,
    heldout: Corpus,
    cond_config: CondConfig = CondConfig(),
    normalization: NormalizationConfig = NormalizationConfig(),
    head_table: Optional[dict] = None,
    conj_label: str = "CC",
    lookahead_k: int = 5,
    ngram_order: int = 3,
    em_max_iter: int = 100,
    em_tol: float = 1e-6,
) -> tuple[ParserModel, list[tuple[str, str]]]:
    """Full training pass: normalize, factor, induce, count, tune."""
    norm_train = speech_normalize(train, normalization)
    norm_heldout = speech_normalize(heldout, normalization, keep_tokens=norm_train.vocabulary)

    factored = [left_factor_tree(augment_with_stop(t)) for t in norm_train.trees]
    factored_heldout = [left_factor_tree(augment_with_stop(t)) for t in norm_heldout.trees]
    grammar = induce_pcfg(factored, AXIOM)

    context = ContextModel(grammar, cond_config, head_table=head_table, conj_label=conj_label)
    context.train_counts(factored)
    cond_history = context.tune_mix_weights(factored_heldout, max_iter=em_max_iter, tol=em_tol)

    lookahead = LookaheadTables.from_trees(factored, smoothing_k=lookahead_k)

    train_sents = sentences_from_trees(norm_train.trees, normalization.end_token)
    heldout_sents = sentences_from_trees(norm_heldout.trees, normalization.end_token)
    unigram = build_unigram(train_sents)
    ngram = NgramModel(ngram_order)
    ngram.train(train_sents)
    ngram_history = ngram.tune(heldout_sents, max_iter=em_max_iter, tol=em_tol)

    model = ParserModel(
        normalization=normalization,
        vocabulary=norm_train.vocabulary,
        grammar=grammar,
        context=context,
        lookahead=lookahead,
        ngram=ngram,
        unigram=unigram,
    )
    report = [
        ("train_trees", str(len(norm_train.trees))),
        ("heldout_trees", str(len(norm_heldout.trees))),
        ("vocabulary", str(len(model.vocabulary))),
        ("rules", str(len(grammar.rules))),
        ("conditioning", f"{cond_config.phrasal_depth},{cond_config.first_pos_depth},{cond_config.later_pos_depth}"),
        ("cond_lambda_entries", str(len(context.lambdas))),
        ("cond_em_iterations", str(len(cond_history))),
        ("cond_heldout_ll", repr(cond_history[-1]) if cond_history else "na"),
        ("ngram_lambda_entries", str(len(ngram.lambdas))),
        ("ngram_em_iterations", str(len(ngram_history))),
        ("ngram_heldout_ll", repr(ngram_history[-1]) if ngram_history else "na"),
    ]
    return model, report


# -- text encoding helpers ------------------------------------------------------


def _enc(value: Optional[str]) -> str:
    return "_" if value is None else "=" + value


def _dec(field: str) -> Optional[str]:
    if field == "_":
        return None
    if field.startswith("="):
        return field[1:]
    raise ModelIOError(f"bad value field {field!r}")


def _rule_line(rule: Rule, count: int) -> str:
    if rule.lexical:
        return f"rule {count} lex {rule.lhs} {rule.rhs[0]}"
    if not rule.rhs:
        return f"rule {count} eps {rule.lhs}"
    return f"rule {count} bin {rule.lhs} {rule.rhs[0]} {rule.rhs[1]}"


def save_model(model: ParserModel, path: str) -> None:
    lines: list[str] = [f"{FORMAT_NAME} {FORMAT_VERSION}"]
    n = model.normalization
    lines.append(f"norm strip_punctuation {int(n.strip_punctuation)}")
    lines.append(f"norm number_token {n.number_token}")
    lines.append(f"norm vocab_cap {n.vocab_cap}")
    lines.append(f"norm unk_token {n.unk_token}")
    lines.append(f"norm end_token {n.end_token}")
    for label in sorted(n.punct_labels):
        lines.append(f"norm punct_label {label}")
    for token in sorted(model.vocabulary):
        lines.append(f"vocab {token}")

    g = model.grammar
    lines.append(f"grammar start {g.start}")
    for rule in g.rules:
        lines.append(_rule_line(rule, g.rule_counts[rule]))

    c = model.context
    cc = c.config
    lines.append(f"cond config {cc.phrasal_depth} {cc.first_pos_depth} {cc.later_pos_depth}")
    lines.append(f"cond conj {c.conj_label}")
    for label in sorted(c.head_table):
        direction, priorities = c.head_table[label]
        lines.append(" ".join(["head", label, direction, *priorities]))
    for (path_name, level, bucket), lam in sorted(c.lambdas.items()):
        lines.append(f"clam {path_name} {level} {bucket} {lam!r}")
    for level, table in enumerate(c.tables):
        for key in sorted(table, key=lambda k: tuple(_enc(v) for v in k)):
            for rid in sorted(table[key]):
                fields = " ".join(_enc(v) for v in key)
                lines.append(f"ctx {level} {fields} {rid} {table[key][rid]}")

    la = model.lookahead
    lines.append(f"lap k {la.smoothing_k}")
    for label in sorted(la.occurrences):
        lines.append(f"lap occ {label} {la.occurrences[label]}")
    for label in sorted(la.erased):
        lines.append(f"lap eps {label} {la.erased[label]}")
    for label in sorted(la.first_word):
        for word in sorted(la.first_word[label]):
            lines.append(f"lap fw {label} {word} {la.first_word[label][word]}")
    for label in sorted(la.first_pos):
        for pos in sorted(la.first_pos[label]):
            lines.append(f"lap fp {label} {pos} {la.first_pos[label][pos]}")
    for pos in sorted(la.pos_word):
        for word in sorted(la.pos_word[pos]):
            lines.append(f"lap pw {pos} {word} {la.pos_word[pos][word]}")

    m = model.ngram
    lines.append(f"ngram order {m.order}")
    for level, table in enumerate(m.counts):
        for ctx in sorted(table):
            for word in sorted(table[ctx]):
                fields = " ".join(ctx)
                sep = " " if fields else ""
                lines.append(f"ngram count {level} {fields}{sep}{word} {table[ctx][word]}")
    for (level, bucket), lam in sorted(m.lambdas.items()):
        lines.append(f"ngram lam {level} {bucket} {lam!r}")

    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_model(path: str) -> ParserModel:
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ModelIOError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != FORMAT_NAME:
        raise ModelIOError(f"{path}: not a {FORMAT_NAME} file")
    if head[1] != str(FORMAT_VERSION):
        raise ModelIOError(
            f"{path}: model format version {head[1]} is not supported (expected {FORMAT_VERSION})"
        )

    norm_fields: dict[str, str] = {}
    punct: list[str] = []
    vocab: list[str] = []
    start: Optional[str] = None
    rule_counts: dict[Rule, int] = {}
    cond_cfg: Optional[tuple[int, int, int]] = None
    conj = "CC"
    head_table: dict[str, tuple[str, tuple[str, ...]]] = {}
    clams: dict[tuple[str, int, int], float] = {}
    ctx_rows: list[tuple[int, tuple, int, int]] = []
    lap_k = 5
    lap_rows: dict[str, list] = {"occ": [], "eps": [], "fw": [], "fp": [], "pw": []}
    ngram_order: Optional[int] = None
    ngram_rows: list[tuple[int, tuple[str, ...], str, int]] = []
    nglams: dict[tuple[int, int], float] = {}

    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "norm":
                if parts[1] == "punct_label":
                    punct.append(parts[2])
                else:
                    norm_fields[parts[1]] = parts[2]
            elif kind == "vocab":
                vocab.append(parts[1])
            elif kind == "grammar":
                start = parts[2]
            elif kind == "rule":
                count = int(parts[1])
                if parts[2] == "lex":
                    rule = Rule(parts[3], (parts[4],), True)
                elif parts[2] == "eps":
                    rule = Rule(parts[3], (), False)
                elif parts[2] == "bin":
                    rule = Rule(parts[3], (parts[4], parts[5]), False)
                else:
                    raise ModelIOError(f"{path}:{lineno}: unknown rule kind {parts[2]!r}")
                rule_counts[rule] = count
            elif kind == "cond":
                if parts[1] == "config":
                    cond_cfg = (int(parts[2]), int(parts[3]), int(parts[4]))
                elif parts[1] == "conj":
                    conj = parts[2]
            elif kind == "head":
                head_table[parts[1]] = (parts[2], tuple(parts[3:]))
            elif kind == "clam":
                clams[(parts[1], int(parts[2]), int(parts[3]))] = float(parts[4])
            elif kind == "ctx":
                level = int(parts[1])
                values = tuple(_dec(x) for x in parts[2 : 2 + level + 1])
                rid = int(parts[2 + level + 1])
                count = int(parts[2 + level + 2])
                ctx_rows.append((level, values, rid, count))
            elif kind == "lap":
                if parts[1] == "k":
                    lap_k = int(parts[2])
                else:
                    lap_rows[parts[1]].append(parts[2:])
            elif kind == "ngram":
                if parts[1] == "order":
                    ngram_order = int(parts[2])
                elif parts[1] == "lam":
                    nglams[(int(parts[2]), int(parts[3]))] = float(parts[4])
                else:
                    level = int(parts[2])
                    ctx = tuple(parts[3 : 3 + level])
                    word = parts[3 + level]
                    ngram_rows.append((level, ctx, word, int(parts[4 + level])))
            else:
                raise ModelIOError(f"{path}:{lineno}: unknown record {kind!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ModelIOError):
                raise
            raise ModelIOError(f"{path}:{lineno}: malformed line: {line}") from exc

    if start is None or not rule_counts:
        raise ModelIOError(f"{path}: missing grammar section")
    if cond_cfg is None:
        raise ModelIOError(f"{path}: missing conditioning config")
    if ngram_order is None:
        raise ModelIOError(f"{path}: missing ngram section")

    normalization = NormalizationConfig(
        strip_punctuation=bool(int(norm_fields["strip_punctuation"])),
        punct_labels=frozenset(punct),
        number_token=norm_fields["number_token"],
        vocab_cap=int(norm_fields["vocab_cap"]),
        unk_token=norm_fields["unk_token"],
        end_token=norm_fields["end_token"],
    )
    grammar = Pcfg(rule_counts, start)
    context = ContextModel(
        grammar,
        CondConfig(*cond_cfg),
        head_table=head_table if head_table else None,
        conj_label=conj,
    )
    context.lambdas = clams
    for level, values, rid, count in ctx_rows:
        context.tables[level].setdefault(values, {})[rid] = count
        context.totals[level][values] = context.totals[level].get(values, 0) + count

    lookahead = LookaheadTables(lap_k)
    for label, n in ((r[0], int(r[1])) for r in lap_rows["occ"]):
        lookahead.occurrences[label] = n
    for label, n in ((r[0], int(r[1])) for r in lap_rows["eps"]):
        lookahead.erased[label] = n
    for label, word, n in ((r[0], r[1], int(r[2])) for r in lap_rows["fw"]):
        lookahead.first_word.setdefault(label, {})[word] = n
    for label, pos, n in ((r[0], r[1], int(r[2])) for r in lap_rows["fp"]):
        lookahead.first_pos.setdefault(label, {})[pos] = n
    for pos, word, n in ((r[0], r[1], int(r[2])) for r in lap_rows["pw"]):
        lookahead.pos_word.setdefault(pos, {})[word] = n
        lookahead.pos_total[pos] = lookahead.pos_total.get(pos, 0) + n

    ngram = NgramModel(ngram_order)
    for level, ctx, word, count in ngram_rows:
        ngram.counts[level].setdefault(ctx, {})[word] = count
        ngram.totals[level][ctx] = ngram.totals[level].get(ctx, 0) + count
    ngram.lambdas = nglams

    uni_total = ngram.totals[0].get((), 0)
    unigram = {w: c / uni_total for w, c in sorted(ngram.counts[0].get((), {}).items())}

    return ParserModel(
        normalization=normalization,
        vocabulary=frozenset(vocab),
        grammar=grammar,
        context=context,
        lookahead=lookahead,
        ngram=ngram,
        unigram=unigram,
    )
