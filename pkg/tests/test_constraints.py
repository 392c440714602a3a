"""Forced/forbidden outcome layer over the smoothed components."""

import math

import pytest

import treelm.derivation as dv
from treelm import constraints as cn
from treelm.vocab import BOS_TAG, EOS_TAG, EOS_WORD


def drive(moves):
    """Apply (component, outcome) moves from the empty prefix."""
    prefix = dv.WordParsePrefix.initial()
    for component, outcome in moves:
        prefix, _ = dv.apply(prefix, component, outcome)
    return prefix


W, T, P = dv.WORD_PREDICTOR, dv.TAGGER, dv.PARSER


def test_epsilon_validation():
    cn.ConstraintLayer(epsilon=0.0)
    cn.ConstraintLayer(epsilon=0.5, degenerate_null=True)
    with pytest.raises(cn.ConstraintError):
        cn.ConstraintLayer(epsilon=1.0)
    with pytest.raises(cn.ConstraintError):
        cn.ConstraintLayer(epsilon=-0.1)


def test_predictor_floor_mixes_toward_eos(tiny):
    masked = tiny.masked(epsilon=0.25)
    plain = tiny.masked(epsilon=0.0)
    prefix = drive([])
    for word in ("u", "v", EOS_WORD):
        p = plain.word_prob(prefix, word)
        expected = 0.75 * p + (0.25 if word == EOS_WORD else 0.0)
        assert masked.word_prob(prefix, word) == pytest.approx(expected)


def test_predictor_sums_to_one_with_floor(tiny):
    masked = tiny.masked(epsilon=0.25)
    prefix = drive([(W, "u"), (T, "A"), (P, dv.NULL), (W, "v"), (T, "B"),
                    (P, dv.NULL)])
    total = math.fsum(masked.word_prob(prefix, w)
                      for w in tiny.vocabs.words)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_tagger_boundary_tags_are_struck(tiny):
    masked = tiny.masked()
    prefix = drive([(W, "u")])
    assert masked.tag_prob(prefix, BOS_TAG) == 0.0
    assert masked.tag_prob(prefix, EOS_TAG) == 0.0
    total = math.fsum(masked.tag_prob(prefix, t) for t in ("A", "B"))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_end_word_tag_is_a_point_mass(tiny):
    masked = tiny.masked()
    prefix = drive([(W, "u"), (T, "A"), (P, dv.NULL), (W, EOS_WORD)])
    assert masked.tag_prob(prefix, EOS_TAG) == 1.0
    assert masked.tag_prob(prefix, "A") == 0.0


def test_tag_probability_rejects_wrong_phase(tiny):
    prefix = drive([])
    with pytest.raises(cn.ConstraintError):
        cn.masked_tag_probability(tiny.models[T], cn.ConstraintLayer(),
                                  prefix, "A")


def test_forced_actions_are_point_masses(tiny):
    masked = tiny.masked()
    # one-word body fully tagged: </s> tagged, closing chain is forced
    prefix = drive([(W, "u"), (T, "A"), (P, dv.NULL), (W, EOS_WORD),
                    (T, EOS_TAG)])
    forced, acts = masked.parser_actions(prefix)
    assert forced and len(acts) == 1
    assert masked.parser_prob(prefix, acts[0]) == 1.0
    other = "%s_%s" % (dv.ADJOIN_LEFT, "TOP")
    assert masked.parser_prob(prefix, other) == 0.0


def test_free_actions_renormalize_over_legal_set(tiny):
    masked = tiny.masked()
    prefix = drive([(W, "u"), (T, "A")])  # after <s>: null or unary
    forced, acts = masked.parser_actions(prefix)
    assert not forced
    assert dv.NULL in acts
    assert all(not a.startswith(dv.ADJOIN_LEFT) for a in acts)
    total = math.fsum(masked.parser_prob(prefix, a) for a in acts)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert masked.parser_prob(prefix, "%s_TOP" % dv.ADJOIN_LEFT) == 0.0


def test_degenerate_null_collapses_the_parser(tiny):
    masked = tiny.masked(degenerate_null=True)
    prefix = drive([(W, "u"), (T, "A")])
    forced, acts = masked.parser_actions(prefix)
    assert forced and acts == (dv.NULL,)
    assert masked.parser_prob(prefix, dv.NULL) == 1.0
    # positions where null is illegal keep their usual forcing
    prefix = drive([(W, "u"), (T, "A"), (P, dv.NULL), (W, EOS_WORD),
                    (T, EOS_TAG)])
    forced, acts = masked.parser_actions(prefix)
    assert forced and acts[0] != dv.NULL


def test_cached_denominators_match_direct_functions(tiny):
    masked = tiny.masked()
    layer = masked.layer
    prefix = drive([(W, "v"), (T, "B")])
    for a in masked.parser_actions(prefix)[1]:
        direct = cn.masked_parser_probability(tiny.models[P], layer,
                                              prefix, a)
        assert masked.parser_prob(prefix, a) == direct
        assert masked.parser_prob(prefix, a) == direct  # cached hit
    tag_prefix = drive([(W, "v")])
    for t in ("A", "B"):
        direct = cn.masked_tag_probability(tiny.models[T], layer,
                                           tag_prefix, t)
        assert masked.tag_prob(tag_prefix, t) == direct


def test_dispatch_covers_all_components(tiny):
    layer = cn.ConstraintLayer()
    prefix = drive([])
    assert cn.masked_probability(tiny.models[W], layer, prefix, "u") \
        == cn.masked_word_probability(tiny.models[W], layer, prefix, "u")

    class Stub:
        component = "bogus"

    with pytest.raises(cn.ConstraintError):
        cn.masked_probability(Stub(), layer, prefix, "u")


def test_tag_candidates_modes(tiny):
    masked = tiny.masked()
    assert masked.tag_candidates("u") == ("A",)
    assert masked.tag_candidates("v") == ("B",)
    everything = masked.tag_candidates("u", mode="all")
    assert set(everything) == {"A", "B"}
    # unseen word falls back to the full non-boundary tag set
    assert set(masked.tag_candidates("<unk>")) == {"A", "B"}
    with pytest.raises(cn.ConstraintError):
        masked.tag_candidates("u", mode="frequent")
