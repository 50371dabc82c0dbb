import pytest
from hypothesis import given, strategies as st

from support import as_corpus, fixture_trees, random_corpus
from tdparse.treebank import (
    AXIOM,
    END_TOKEN,
    STOP_LABEL,
    Corpus,
    NormalizationConfig,
    Tree,
    TreebankError,
    augment_with_stop,
    is_number_token,
    normalize_tokens,
    parse_trees,
    read_sentences,
    speech_normalize,
    strip_stop,
    to_bracketed,
    write_trees,
)


def test_parse_single_tree():
    (t,) = parse_trees("(S (NP Spot) (VP ran))")
    assert t.label == "S"
    assert t.yield_tokens() == ["Spot", "ran"]
    assert [c.label for c in t.children] == ["NP", "VP"]


def test_tree_shape_predicates():
    t = parse_trees("(S (NP (NN Spot)) (VP (VBD ran)))")[0]
    assert not t.is_leaf and not t.is_preterminal
    np = t.children[0]
    assert np.is_preterminal is False  # NP dominates a preterminal, not a leaf
    assert np.children[0].is_preterminal
    assert np.children[0].children[0].is_leaf


def test_tree_equality_and_hash():
    a = parse_trees("(S (A x) (B y))")[0]
    b = parse_trees("(S (A x) (B y))")[0]
    c = parse_trees("(S (A x) (B z))")[0]
    assert a == b and hash(a) == hash(b)
    assert a != c


def test_multiline_and_multiple_trees():
    text = "(S (A x)\n   (B y))\n(S (A z))"
    trees = parse_trees(text)
    assert len(trees) == 2
    assert trees[1].yield_tokens() == ["z"]


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("(S (NP Spot) (VP ran)", "unbalanced"),
        ("(S (NP Spot)) )", "unbalanced"),
        ("(S ())", "label"),
        ("(S (NP))", "empty node"),
        ("stray (S (A x))", "outside any tree"),
        ("(S (N-P x))", "reserved"),
        ("(S (N,P x))", "reserved"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(TreebankError, match=fragment):
        parse_trees(text)


def test_error_carries_source_and_line():
    with pytest.raises(TreebankError, match=r"two.trees:2"):
        parse_trees("(S (A x))\n(S (B y)", source="two.trees")


# Round trip through the text form, on fixtures and on random trees.

def test_write_read_round_trip_fixtures(tmp_path):
    for name in ("g1.trees", "g2.trees", "g3.trees"):
        trees = fixture_trees(name)
        path = tmp_path / name
        write_trees(str(path), trees)
        assert parse_trees(path.read_text()) == trees


_labels = st.text(alphabet="SNPVXQ", min_size=1, max_size=3)
_tokens = st.text(alphabet="abcxyz0", min_size=1, max_size=4)
_tree = st.recursive(
    st.builds(lambda lab, tok: Tree(lab, (Tree(tok),)), _labels, _tokens),
    lambda kids: st.builds(
        lambda lab, ks: Tree(lab, tuple(ks)),
        _labels,
        st.lists(kids, min_size=1, max_size=4),
    ),
    max_leaves=12,
)


@given(_tree)
def test_bracketed_round_trip_property(t):
    assert parse_trees(to_bracketed(t)) == [t]


def test_g1_corpus_vocabulary(g1_trees):
    corpus = as_corpus(g1_trees, "train")
    assert corpus.vocabulary == frozenset(
        {"Spot", "ran", "chased", "the", "ball", "dog", END_TOKEN}
    )
    assert len(corpus.trees) == 4


def test_corpus_role_validation(g1_trees):
    with pytest.raises(TreebankError, match="role"):
        Corpus(tuple(g1_trees), frozenset(), "validation")


def test_augment_with_stop_shape(g1_trees):
    t = g1_trees[0]
    aug = augment_with_stop(t)
    assert aug.label == AXIOM
    assert aug.children[0] == t
    stop = aug.children[1]
    assert stop.label == STOP_LABEL and stop.children[0].label == END_TOKEN
    # exactly one token added to the yield
    assert aug.yield_tokens() == t.yield_tokens() + [END_TOKEN]


def test_augment_strip_round_trip(g1_trees):
    for t in g1_trees:
        assert strip_stop(augment_with_stop(t)) == t


def test_augment_rejects_axiom_root(g1_trees):
    with pytest.raises(TreebankError, match="already rooted"):
        augment_with_stop(augment_with_stop(g1_trees[0]))


def test_strip_stop_rejects_other_shapes():
    t = parse_trees("(S (A x) (B y))")[0]
    with pytest.raises(TreebankError):
        strip_stop(t)
    bad = parse_trees(f"({AXIOM} (S (A x)) (S (B y)))")[0]
    with pytest.raises(TreebankError):
        strip_stop(bad)


@pytest.mark.parametrize(
    "tok,expected",
    [
        ("42", True),
        ("-3.5", True),
        ("1,234", True),
        ("+.75", True),
        ("4th", False),
        ("N", False),
        ("", False),
        ("-", False),
    ],
)
def test_is_number_token(tok, expected):
    assert is_number_token(tok) is expected


def test_speech_normalize_strips_punctuation():
    trees = parse_trees("(S (UH hello) (: --) (NP (NN world)) (. .))")
    out = speech_normalize(as_corpus(trees, "train"), NormalizationConfig())
    assert out.trees[0].yield_tokens() == ["hello", "world"]


def test_speech_normalize_drops_emptied_parents():
    trees = parse_trees("(S (NP (NN x)) (PRN (: --) (. .)))")
    out = speech_normalize(as_corpus(trees, "train"), NormalizationConfig())
    assert to_bracketed(out.trees[0]) == "(S (NP (NN x)))"


def test_speech_normalize_error_on_empty_yield():
    trees = parse_trees("(S (. .))")
    with pytest.raises(TreebankError, match="emptied"):
        speech_normalize(as_corpus(trees, "train"), NormalizationConfig())


def test_speech_normalize_folds_numbers():
    trees = parse_trees("(S (CD 42.5) (NN boxes))")
    out = speech_normalize(as_corpus(trees, "train"), NormalizationConfig())
    assert out.trees[0].yield_tokens() == ["N", "boxes"]


def test_speech_normalize_vocab_cap():
    # counts: a:5 b:4 c:3 d:1; cap 3 keeps a,b,c and folds d
    text = " ".join(
        ["(S"]
        + [f"(T {w})" for w in ["a"] * 5 + ["b"] * 4 + ["c"] * 3 + ["d"]]
        + [")"]
    )
    cfg = NormalizationConfig(vocab_cap=3)
    out = speech_normalize(as_corpus(parse_trees(text), "train"), cfg)
    toks = out.trees[0].yield_tokens()
    assert toks.count(cfg.unk_token) == 1
    assert set(toks) == {"a", "b", "c", cfg.unk_token}


def test_speech_normalize_idempotent():
    trees = random_corpus(20, seed=7)
    cfg = NormalizationConfig(vocab_cap=4)
    once = speech_normalize(as_corpus(trees, "train"), cfg)
    twice = speech_normalize(once, cfg)
    assert twice.trees == once.trees
    assert twice.vocabulary == once.vocabulary


def test_speech_normalize_keep_tokens_matches_training():
    train = speech_normalize(
        as_corpus(parse_trees("(S (A x) (A x) (A y))"), "train"),
        NormalizationConfig(vocab_cap=1),
    )
    test = speech_normalize(
        as_corpus(parse_trees("(S (A x) (A y) (A z))"), "test"),
        NormalizationConfig(vocab_cap=1),
        keep_tokens=train.vocabulary,
    )
    cfg = NormalizationConfig()
    assert test.trees[0].yield_tokens() == ["x", cfg.unk_token, cfg.unk_token]


def test_normalization_config_validation():
    with pytest.raises(TreebankError):
        NormalizationConfig(vocab_cap=0)
    with pytest.raises(TreebankError):
        NormalizationConfig(unk_token="<e>", end_token="<e>")


def test_normalize_tokens_paths():
    cfg = NormalizationConfig()
    vocab = frozenset({"the", "dog", "N", cfg.unk_token, cfg.end_token})
    assert normalize_tokens(["the", "dog"], vocab, cfg) == ["the", "dog"]
    assert normalize_tokens(["the", "cat"], vocab, cfg) == ["the", cfg.unk_token]
    assert normalize_tokens(["40", "dogs"], vocab, cfg) == ["N", cfg.unk_token]
    with pytest.raises(TreebankError, match="reserved"):
        normalize_tokens([cfg.end_token], vocab, cfg)
    with pytest.raises(TreebankError, match="closed vocabulary"):
        normalize_tokens(["cat"], vocab, cfg, allow_unk=False)


def test_read_sentences_skips_blank_lines(tmp_path):
    p = tmp_path / "sents.txt"
    p.write_text("the dog ran\n\n  \nSpot ran\n")
    assert read_sentences(str(p)) == [(1, ["the", "dog", "ran"]), (4, ["Spot", "ran"])]
