"""Deleted-interpolation trigram baseline.

Reuses the whole smoothing stack with a two-word context: the
probability of a word given the previous two, start-padded, with the
end token predicted like any other word so perplexities are comparable
with the structured model's.
"""

from __future__ import annotations

from . import smoothing as sm
from .derivation import ElementaryEvent
from .vocab import BOS_WORD, EOS_WORD


def trigram_events(words, vocabs=None):
    """The prediction events of one sentence, end token included.

    ``words`` is the raw sentence; mapping to the vocabulary happens
    here when ``vocabs`` is given. The context is (previous word, the
    word before that), so back-off drops the older word first.
    """
    if vocabs is not None:
        words = vocabs.map_words(words)
    padded = [BOS_WORD, BOS_WORD] + list(words) + [EOS_WORD]
    return [ElementaryEvent(sm.TRIGRAM, padded[i], (padded[i - 1],
                                                    padded[i - 2]))
            for i in range(2, len(padded))]


def gather_counts(sentences, vocabs):
    table = sm.CountTable(sm.TRIGRAM)
    for words in sentences:
        table.accumulate_all(trigram_events(words, vocabs))
    return table


def train_trigram(sentences, check_sentences, vocabs,
                  boundaries=sm.DEFAULT_BUCKET_BOUNDARIES,
                  tol=1e-8, max_iter=100):
    """Count on ``sentences``, fit the interpolation weights on
    ``check_sentences``, return the finished component model."""
    table = gather_counts(sentences, vocabs)
    check = gather_counts(check_sentences, vocabs)
    weights = sm.estimate_lambdas(table, check, len(vocabs.words),
                                  boundaries, tol, max_iter)
    return sm.ComponentModel(sm.TRIGRAM, vocabs, table, weights)


def trigram_probability(model, w, w_prev, w_prev2):
    """P(w | two-word history); symbols must already be in-vocabulary."""
    return model.probability(w, (w_prev, w_prev2))


def sentence_logprobs(model, words):
    """Natural-log probabilities of each token, end token included.

    Returns (logprobs, oov_count); out-of-vocabulary words are scored
    as the unknown token.
    """
    import math

    vocabs = model.vocabs
    mapped = vocabs.map_words(words)
    oov = sum(1 for w, m in zip(words, mapped) if w != m)
    return [math.log(model.probability(ev.outcome, ev.context))
            for ev in trigram_events(mapped)], oov


def flat_parse_events(words, vocabs, tag):
    """Derivation events of the collapsed parse of one sentence.

    Every real word gets ``tag`` and attaches by null moves only, so
    the closing right-adjoin chain is the whole structure. Counting
    these events trains the structured model in the configuration
    whose predictions reduce to a trigram model.
    """
    from . import derivation as dv
    from .vocab import EOS_TAG

    prefix = dv.WordParsePrefix.initial()
    events = []
    for word in list(vocabs.map_words(words)) + [EOS_WORD]:
        prefix, ev = dv.apply(prefix, dv.WORD_PREDICTOR, word)
        events.append(ev)
        prefix, ev = dv.apply(prefix, dv.TAGGER,
                              EOS_TAG if word == EOS_WORD else tag)
        events.append(ev)
        while prefix.phase == dv.P_PARSER:
            forced, acts = dv.legal_actions(prefix)
            prefix, ev = dv.apply(prefix, dv.PARSER,
                                  acts[0][0] if forced else dv.NULL)
            events.append(ev)
    return events


def predictor_weights_matching(weights):
    """Word-predictor weights under which the collapsed-parse model
    scores exactly like a trigram model built from the same sentences.

    With the parser degenerate (flat parses) and one shared tag for
    every real word, the exposed heads are the two preceding words, so
    the predictor's order-4 context is the trigram context with each
    word doubled by its (constant) tag. Orders 4, 2, 0 then carry the
    same counts as trigram orders 2, 1, 0; orders 3 and 1 split
    contexts by the boundary tag and must be passed through, which a
    weight of 1 in every bucket does.
    """
    if weights.order != sm.COMPONENT_ORDER[sm.TRIGRAM]:
        raise sm.SmoothingError("expected trigram weights of order 2")
    ones = (1.0,) * sm.bucket_count(weights.boundaries)
    rows = [weights.values[0], ones, weights.values[1], ones,
            weights.values[2]]
    return sm.InterpolationWeights(weights.boundaries, rows)
