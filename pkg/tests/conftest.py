import pathlib

import pytest

from treelm import smoothing as sm
from treelm import trees as tr
from treelm import trigram as tg
from treelm.constraints import ConstraintLayer, MaskedModels
from treelm.trees import HeadedTree
from treelm.training import COMPONENTS, initial_training, tree_events
from treelm.vocab import (RESERVED_LABELS, RESERVED_TAGS, RESERVED_WORDS,
                          Vocabularies, build_vocabularies)

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def rules():
    perc = tr.PercolationRuleSet.from_file(str(DATA / "rules" / "percolation.txt"))
    binr = tr.BinarizationRuleSet.from_file(str(DATA / "rules" / "binarization.txt"))
    return perc, binr


@pytest.fixture(scope="session")
def toy_raw():
    out = {}
    for name in ("dev", "check", "test"):
        with open(DATA / "toy" / ("%s.mrg" % name)) as fh:
            out[name] = tr.read_treebank(fh.read())
    return out


@pytest.fixture(scope="session")
def toy_prepared(toy_raw, rules):
    perc, binr = rules
    return {name: [tr.prepare_tree(t, perc, binr) for t in trees]
            for name, trees in toy_raw.items()}


@pytest.fixture(scope="session")
def toy_words(toy_prepared):
    return {name: [t.words() for t in trees]
            for name, trees in toy_prepared.items()}


@pytest.fixture(scope="session")
def toy_vocabs(toy_prepared):
    return build_vocabularies(toy_prepared["dev"])


@pytest.fixture(scope="session")
def toy_state(toy_prepared, toy_vocabs):
    return initial_training(toy_prepared["dev"], toy_prepared["check"],
                            toy_vocabs)


@pytest.fixture(scope="session")
def toy_masked(toy_state):
    return toy_state.masked()


@pytest.fixture(scope="session")
def toy_trigram(toy_words, toy_vocabs):
    return tg.train_trigram(toy_words["dev"], toy_words["check"], toy_vocabs)


def leaf(tag, word, index):
    return HeadedTree(tag, word=word, head_word=word, head_tag=tag,
                      head_index=index, span=(index, index + 1))


def node(label, children, head_child):
    head = children[head_child]
    return HeadedTree(label, list(children), head_word=head.head_word,
                      head_tag=head.head_tag, head_index=head.head_index,
                      span=(children[0].span[0], children[-1].span[1]))


class TinyGrammar:
    """A two-word, two-tag, two-label world small enough to enumerate.

    Component counts come from four hand-built bodies, so the smoothed
    probabilities are uneven (not uniform) while every outcome keeps
    nonzero mass through the interpolation floor.
    """

    def __init__(self):
        self.vocabs = Vocabularies(RESERVED_WORDS + ("u", "v"),
                                   RESERVED_TAGS + ("A", "B"),
                                   RESERVED_LABELS)
        bodies = [
            leaf("A", "u", 0),
            node("TOP'", [leaf("A", "u", 0), leaf("B", "v", 1)], 0),
            node("TOP", [leaf("B", "v", 0), leaf("A", "u", 1)], 1),
            node("TOP", [node("TOP'", [leaf("B", "v", 0)], 0),
                         leaf("A", "u", 1)], 0),
        ]
        tables = {c: sm.CountTable(c) for c in COMPONENTS}
        for body in bodies:
            for ev in tree_events(body, self.vocabs):
                tables[ev.component].accumulate(ev)
        self.tables = tables
        self.models = {
            c: sm.ComponentModel(
                c, self.vocabs, tables[c],
                sm.InterpolationWeights.uniform(sm.COMPONENT_ORDER[c]),
                epsilon=0.01)
            for c in COMPONENTS
        }

    def masked(self, **layer_kwargs):
        layer_kwargs.setdefault("epsilon", 0.01)
        pred, tagger, parser = (self.models[c] for c in COMPONENTS)
        return MaskedModels(pred, tagger, parser,
                            ConstraintLayer(**layer_kwargs))


@pytest.fixture(scope="session")
def tiny():
    return TinyGrammar()


@pytest.fixture(scope="session")
def tiny_masked(tiny):
    return tiny.masked()
