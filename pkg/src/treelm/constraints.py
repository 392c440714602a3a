"""Forced and forbidden outcomes layered over the smoothed models.

The generative loop is only well defined once a handful of outcomes get
fixed values: the start token may be consumed only by the final
adjoin, the end-of-sentence head forces its adjoin chain, unary is
barred from internal heads, boundary tags never tag real words, and
end-of-sentence prediction keeps a floor probability so generation
halts. Everything else keeps its smoothed estimate, renormalized over
whatever remains legal.
"""

from __future__ import annotations

from . import derivation as dv
from .vocab import BOS_TAG, EOS_TAG, EOS_WORD


class ConstraintError(ValueError):
    pass


class ConstraintLayer:
    """The forced/forbidden rules plus the halting floor.

    ``degenerate_null`` collapses the parser: wherever null is legal it
    is taken with probability 1, so every sentence keeps a single flat
    parse and the word predictor sees the two preceding words. This is
    the configuration under which the model reduces to a trigram model.
    """

    __slots__ = ("epsilon", "degenerate_null")

    def __init__(self, epsilon=1e-6, degenerate_null=False):
        if not 0.0 <= epsilon < 1.0:
            raise ConstraintError("epsilon must lie in [0, 1)")
        self.epsilon = epsilon
        self.degenerate_null = degenerate_null


def effective_actions(prefix, layer, labels):
    """legal_actions expanded over ``labels``, after the layer's say.

    Returns (forced, actions). Under degenerate_null, any position
    where null is legal becomes a forced null.
    """
    forced, acts = dv.legal_actions(prefix)
    if layer.degenerate_null and acts[0][0] == dv.NULL:
        return True, (dv.NULL,)
    out = []
    for kind, needs_label in acts:
        if needs_label is None:
            out.append(kind)
        else:
            out.extend("%s_%s" % (kind, l) for l in labels)
    return forced, tuple(out)


def masked_word_probability(model, layer, prefix, y):
    """Predictor probability with the halting floor folded in."""
    p = model.probability(y, prefix.head_context())
    eps = layer.epsilon
    if not eps:
        return p
    p *= 1.0 - eps
    if y == EOS_WORD:
        p += eps
    return p


def masked_tag_probability(model, layer, prefix, y):
    """Tagger probability over the tags the word can actually take.

    The end word is tagged with its boundary tag outright; for any
    other word the two boundary tags are struck out and the rest of the
    distribution renormalized.
    """
    if prefix.phase != dv.P_TAG:
        raise ConstraintError("no tag expected in phase %r" % prefix.phase)
    if prefix.pending == EOS_WORD:
        return 1.0 if y == EOS_TAG else 0.0
    if y in (BOS_TAG, EOS_TAG):
        return 0.0
    ctx = prefix.tag_context()
    denom = 1.0 - model.probability(BOS_TAG, ctx) \
        - model.probability(EOS_TAG, ctx)
    return model.probability(y, ctx) / denom


def masked_parser_probability(model, layer, prefix, y):
    """Parser probability over the legal actions at this prefix.

    Forced positions are point masses regardless of the learned model;
    elsewhere illegal actions get 0 and the smoothed distribution is
    renormalized over the legal set.
    """
    forced, actions = effective_actions(prefix, layer, model.vocabs.labels)
    if forced:
        return 1.0 if y == actions[0] else 0.0
    if y not in actions:
        return 0.0
    ctx = prefix.head_context()
    denom = sum(model.probability(a, ctx) for a in actions)
    return model.probability(y, ctx) / denom


def masked_probability(model, layer, prefix, y):
    """Dispatch on the model's component; the reference implementation."""
    if model.component == dv.WORD_PREDICTOR:
        return masked_word_probability(model, layer, prefix, y)
    if model.component == dv.TAGGER:
        return masked_tag_probability(model, layer, prefix, y)
    if model.component == dv.PARSER:
        return masked_parser_probability(model, layer, prefix, y)
    raise ConstraintError("no masking defined for component %r"
                          % model.component)


class MaskedModels:
    """The three masked components bundled for the decoder.

    Caches the renormalization denominators, which depend on the prefix
    only through the context tuple and the legality signature; one
    decoding run hits the same contexts over and over.
    """

    __slots__ = ("predictor", "tagger", "parser", "layer",
                 "_parser_denom", "_tag_denom")

    def __init__(self, predictor, tagger, parser, layer=None):
        if layer is None:
            layer = ConstraintLayer(epsilon=predictor.epsilon)
        self.predictor = predictor
        self.tagger = tagger
        self.parser = parser
        self.layer = layer
        self._parser_denom = {}
        self._tag_denom = {}

    @property
    def vocabs(self):
        return self.predictor.vocabs

    def word_prob(self, prefix, y):
        return masked_word_probability(self.predictor, self.layer, prefix, y)

    def tag_prob(self, prefix, y):
        if prefix.pending == EOS_WORD:
            return 1.0 if y == EOS_TAG else 0.0
        if y in (BOS_TAG, EOS_TAG):
            return 0.0
        ctx = prefix.tag_context()
        denom = self._tag_denom.get(ctx)
        if denom is None:
            denom = 1.0 - self.tagger.probability(BOS_TAG, ctx) \
                - self.tagger.probability(EOS_TAG, ctx)
            self._tag_denom[ctx] = denom
        return self.tagger.probability(y, ctx) / denom

    def parser_actions(self, prefix):
        return effective_actions(prefix, self.layer, self.vocabs.labels)

    def parser_prob(self, prefix, y, actions=None):
        """P(action); pass ``actions`` when effective_actions was already
        taken for this prefix (the decoder's expansion loop does)."""
        if actions is None:
            actions = self.parser_actions(prefix)
        forced, acts = actions
        if forced:
            return 1.0 if y == acts[0] else 0.0
        if y not in acts:
            return 0.0
        ctx = prefix.head_context()
        h0 = prefix.h0
        key = (ctx, h0.leaf and not prefix.unary_used,
               prefix.h_1.word != dv.BOS_WORD)
        denom = self._parser_denom.get(key)
        if denom is None:
            denom = sum(self.parser.probability(a, ctx) for a in acts)
            self._parser_denom[key] = denom
        return self.parser.probability(y, ctx) / denom

    def tag_candidates(self, word, mode="observed"):
        """Tags the decoder branches over for a real word.

        ``observed`` keeps the tags the word carried in training and
        falls back to the full tag set for unseen words; ``all`` always
        branches over every non-boundary tag.
        """
        real = tuple(self.vocabs.word_tags())
        if mode == "all":
            return real
        if mode != "observed":
            raise ConstraintError("unknown tag candidate mode %r" % mode)
        seen = tuple(t for t in self.tagger.table.outcomes(1, (word,))
                     if t not in (BOS_TAG, EOS_TAG))
        return seen if seen else real
