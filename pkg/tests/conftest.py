"""Session fixtures shared across test modules."""

from __future__ import annotations

import sys
from types import SimpleNamespace

import pytest

from deskcorpus import make_corpus
from support import as_corpus, fixture_trees
from tdparse.conditioning import CondConfig
from tdparse.langmodel import sentences_from_trees
from tdparse.model_io import prepare_trees, train_parser_model


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance verdict lines after the run summary."""
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance checklist")
        for line in verdicts:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def g1_trees():
    return fixture_trees("g1.trees")


@pytest.fixture(scope="session")
def g1_model():
    """G1 trained end to end, heldout = train (4 trees is all there is)."""
    corpus = as_corpus(fixture_trees("g1.trees"), "train")
    heldout = as_corpus(fixture_trees("g1.trees"), "heldout")
    model, report = train_parser_model(corpus, heldout)
    return SimpleNamespace(model=model, report=report)


@pytest.fixture(scope="session")
def desk():
    """Desk-corpus models for the trend criteria: full and bare conditioning."""
    train, heldout, test = make_corpus()
    train_c = as_corpus(train, "train")
    heldout_c = as_corpus(heldout, "heldout")
    test_c = as_corpus(test, "test")
    model_all, _ = train_parser_model(train_c, heldout_c)
    model_none, _ = train_parser_model(train_c, heldout_c, cond_config=CondConfig(0, 0, 0))
    gold = prepare_trees(test_c, model_all).trees
    sents = sentences_from_trees(gold)
    return SimpleNamespace(
        train=train_c,
        heldout=heldout_c,
        test=test_c,
        models={"all": model_all, "none": model_none},
        gold=gold,
        sents=sents,
    )
