import pytest

import exhaustive as ex
from treelm import derivation as dv
from treelm import trees as tr
from treelm.training import tree_events
from treelm.vocab import (BOS_TAG, BOS_WORD, EOS_TAG, EOS_WORD,
                          RESERVED_LABELS, RESERVED_TAGS, RESERVED_WORDS,
                          Vocabularies)


def replay(moves):
    prefix = dv.WordParsePrefix.initial()
    events = []
    for component, outcome in moves:
        prefix, ev = dv.apply(prefix, component, outcome)
        events.append(ev)
    return prefix, events


W, T, P = dv.WORD_PREDICTOR, dv.TAGGER, dv.PARSER


def test_one_word_golden_trace():
    prefix, events = replay([
        (W, "u"), (T, "A"), (P, "null"),
        (W, EOS_WORD), (T, EOS_TAG),
        (P, "adjoin-right_TOP'"), (P, "adjoin-right_TOP"),
    ])
    assert prefix.is_complete()
    assert [ev.context for ev in events] == [
        (BOS_TAG, BOS_WORD, BOS_TAG, BOS_WORD),
        ("u", BOS_TAG, BOS_TAG),
        ("A", "u", BOS_TAG, BOS_WORD),
        ("A", "u", BOS_TAG, BOS_WORD),
        (EOS_WORD, "A", BOS_TAG),
        (EOS_TAG, EOS_WORD, "A", "u"),
        ("TOP'", EOS_WORD, BOS_TAG, BOS_WORD),
    ]
    tree = dv.derivation_to_tree(dv.Derivation(events))
    assert tree.label == "TOP"
    assert tree.words() == [BOS_WORD, "u", EOS_WORD]
    assert tree.head == (EOS_WORD, EOS_TAG)


def test_two_word_left_headed_golden():
    prefix, events = replay([
        (W, "u"), (T, "A"), (P, "null"),
        (W, "v"), (T, "B"), (P, "adjoin-left_X"), (P, "null"),
        (W, EOS_WORD), (T, EOS_TAG),
        (P, "adjoin-right_TOP'"), (P, "adjoin-right_TOP"),
    ])
    assert prefix.is_complete()
    tree = dv.derivation_to_tree(dv.Derivation(events))
    body = tree.children[1].children[0]
    assert body.label == "X"
    assert body.head == ("u", "A")
    assert [c.word for c in body.children] == ["u", "v"]
    # after the adjoin the new constituent is the context head
    ev_null = events[6]
    assert ev_null.context == ("X", "u", BOS_TAG, BOS_WORD)


def test_unary_changes_exposed_label():
    prefix, events = replay([(W, "u"), (T, "A"), (P, "unary_Y")])
    assert prefix.h0.tag == "Y"
    assert prefix.h0.word == "u"
    assert not prefix.h0.leaf


def test_exposed_head_count_deltas():
    moves = [
        (W, "u"), (T, "A"), (P, "unary_Y"), (P, "null"),
        (W, "v"), (T, "B"), (P, "adjoin-right_X"), (P, "null"),
        (W, EOS_WORD), (T, EOS_TAG),
        (P, "adjoin-right_TOP'"), (P, "adjoin-right_TOP"),
    ]
    prefix = dv.WordParsePrefix.initial()
    sizes = {"before": None}
    for component, outcome in moves:
        before = prefix.top.size
        prefix, _ = dv.apply(prefix, component, outcome)
        delta = prefix.top.size - before
        if component == T:
            assert delta == 1  # the tagged word becomes a new head
        elif component == P and outcome.startswith("adjoin"):
            assert delta == -1
        elif component == P:
            assert delta == 0  # null and unary keep the count
        else:
            assert delta == 0  # a bare word is not yet a head


def test_bottom_head_is_bos_until_the_end():
    moves = [
        (W, "u"), (T, "A"), (P, "null"),
        (W, EOS_WORD), (T, EOS_TAG),
        (P, "adjoin-right_TOP'"), (P, "adjoin-right_TOP"),
    ]
    prefix = dv.WordParsePrefix.initial()
    for component, outcome in moves:
        assert prefix.heads()[0].word == BOS_WORD
        prefix, _ = dv.apply(prefix, component, outcome)
    assert prefix.heads()[0].word != BOS_WORD
    assert prefix.heads()[0].tag == "TOP"


def test_legal_actions_case_split():
    # first position: adjoins withheld while the start token is h-1
    prefix, _ = replay([(W, "u"), (T, "A")])
    forced, acts = dv.legal_actions(prefix)
    assert not forced
    assert acts == ((dv.NULL, None), (dv.UNARY, True))
    # after unary at the same position only null remains, now forced
    prefix, _ = dv.apply(prefix, P, "unary_Y")
    forced, acts = dv.legal_actions(prefix)
    assert forced and acts == ((dv.NULL, None),)
    # free position: everything, unary only while h0 is a leaf
    prefix, _ = replay([(W, "u"), (T, "A"), (P, "null"), (W, "v"), (T, "B")])
    forced, acts = dv.legal_actions(prefix)
    assert not forced
    assert acts == ((dv.NULL, None), (dv.UNARY, True),
                    (dv.ADJOIN_LEFT, True), (dv.ADJOIN_RIGHT, True))
    # the end word forces the first closing adjoin
    prefix, _ = replay([(W, "u"), (T, "A"), (P, "null"),
                        (W, EOS_WORD), (T, EOS_TAG)])
    forced, acts = dv.legal_actions(prefix)
    assert forced and acts == (("adjoin-right_TOP'", None),)
    # ... and the closing chain ends at TOP exactly when h-1 is <s>
    prefix, _ = dv.apply(prefix, P, "adjoin-right_TOP'")
    forced, acts = dv.legal_actions(prefix)
    assert forced and acts == (("adjoin-right_TOP", None),)


def test_illegal_moves_raise():
    prefix = dv.WordParsePrefix.initial()
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, T, "A")
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, P, "null")
    prefix, _ = dv.apply(prefix, W, "u")
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, W, "v")
    prefix, _ = dv.apply(prefix, T, "A")
    # adjoining the start token is never legal
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, P, "adjoin-left_X")
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, P, "bogus")
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, P, "unary")  # label missing


def test_unary_not_repeatable_at_position():
    prefix, _ = replay([(W, "u"), (T, "A"), (P, "unary_Y")])
    with pytest.raises(dv.DerivationError):
        dv.apply(prefix, P, "unary_Y")


def test_complete_prefix_accepts_nothing():
    prefix, _ = replay([
        (W, "u"), (T, "A"), (P, "null"),
        (W, EOS_WORD), (T, EOS_TAG),
        (P, "adjoin-right_TOP'"), (P, "adjoin-right_TOP"),
    ])
    for component, outcome in ((W, "u"), (T, "A"), (P, "null")):
        with pytest.raises(dv.DerivationError):
            dv.apply(prefix, component, outcome)


def test_split_action():
    assert dv.split_action("null") == ("null", None)
    assert dv.split_action("adjoin-left_NP") == ("adjoin-left", "NP")
    assert dv.split_action("unary_TOP'") == ("unary", "TOP'")
    with pytest.raises(dv.DerivationError):
        dv.split_action("shift")


def test_action_vocabulary():
    acts = dv.action_vocabulary(("TOP", "TOP'", "X"))
    assert acts[0] == "null"
    assert len(acts) == 1 + 3 * 3
    assert "adjoin-left_X" in acts and "unary_TOP" in acts


def test_tree_roundtrip_toy(toy_prepared, toy_vocabs):
    for body in toy_prepared["dev"][:60]:
        events = tree_events(body, toy_vocabs)
        back = dv.derivation_to_tree(dv.Derivation(events))
        from treelm.vocab import map_tree_words
        want = dv.complete_parse_from_body(map_tree_words(body, toy_vocabs))
        assert back == want


def test_roundtrip_includes_unary(tiny):
    # the fourth hand body carries a unary node
    counted = tiny.tables[dv.PARSER]
    n = counted.order
    assert any(y.startswith("unary") for _, y, _ in counted.entries(n))


def test_derivation_serialize_roundtrip(toy_prepared, toy_vocabs):
    events = tree_events(toy_prepared["dev"][0], toy_vocabs)
    der = dv.Derivation(events)
    again = dv.Derivation.deserialize(der.serialize())
    assert again == der


def test_stored_context_checked_on_replay(toy_prepared, toy_vocabs):
    events = list(tree_events(toy_prepared["dev"][0], toy_vocabs))
    bad = events[0]._replace(context=("XX",) + events[0].context[1:])
    with pytest.raises(dv.DerivationError) as err:
        dv.derivation_to_tree(dv.Derivation([bad] + events[1:]))
    assert "does not match replay" in str(err.value)


def test_tree_to_derivation_rejects_foreign_roots():
    bad = tr.HeadedTree("S", word=None)
    with pytest.raises(dv.DerivationError):
        dv.tree_to_derivation(bad)


def test_parser_op_counts():
    # ops per word position: at most the adjoins that close there plus
    # null/unary; the derivation of an n-word flat parse has n nulls
    # and n+1 closing adjoins.
    prefix, events = replay([
        (W, "u"), (T, "A"), (P, "null"),
        (W, "v"), (T, "B"), (P, "null"),
        (W, EOS_WORD), (T, EOS_TAG),
        (P, "adjoin-right_TOP'"), (P, "adjoin-right_TOP'"),
        (P, "adjoin-right_TOP"),
    ])
    assert prefix.is_complete()
    assert prefix.p == 5
    assert prefix.k == 3


def test_derivation_count_matches_structural_oracle():
    # machine-driven enumeration vs the closed-form construction count,
    # for several label/tag inventory sizes
    from treelm.constraints import MaskedModels
    from treelm import smoothing as sm
    from treelm.training import COMPONENTS

    for extra_labels, n_tags in (((), 1), (("X",), 1), ((), 2), (("X",), 2)):
        labels = RESERVED_LABELS + extra_labels
        tags = RESERVED_TAGS + tuple("AB"[:n_tags])
        vocabs = Vocabularies(RESERVED_WORDS + ("u", "v"), tags, labels)
        models = {}
        for c in COMPONENTS:
            table = sm.CountTable(c)
            weights = sm.InterpolationWeights.uniform(sm.COMPONENT_ORDER[c])
            models[c] = sm.ComponentModel(c, vocabs, table, weights,
                                          epsilon=0.01)
        masked = MaskedModels(*(models[c] for c in COMPONENTS))
        for n_words in (1, 2):
            words = ["u", "v"][:n_words]
            got = ex.derivation_count(words, masked)
            want = ex.structural_parse_count(n_words, n_tags,
                                             len(labels))
            assert got == want, (extra_labels, n_tags, n_words, got, want)


def test_structural_count_frozen_values():
    # hand-frozen combinatorial values for the two-word case
    assert ex.structural_parse_count(2, 1, 2) == 45
    assert ex.structural_parse_count(2, 1, 3) == 112
    assert ex.structural_parse_count(3, 2, 2) == 8856
