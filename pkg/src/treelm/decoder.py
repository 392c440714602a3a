"""Synchronous multi-stack beam search over word-parse prefixes.

Hypotheses that have read the same number of words and taken the same
number of parser operations compete in one stack. A search cycle
extends every prepared hypothesis with the next word and a tag, then
sweeps the stacks in operation order: each stack is pruned by depth and
by a log-probability threshold, its unfinished hypotheses expand by one
parser action into the next stack, and once every survivor has taken
null a final threshold prune over the whole stage yields the surviving
prefix set for the next word. At the end token the forced adjoins
complete each hypothesis and the best survivors form the N-best list.
"""

from __future__ import annotations

import math
from bisect import insort

from . import derivation as dv
from .vocab import EOS_TAG, EOS_WORD, RESERVED_WORDS


class DecodeError(ValueError):
    pass


class SearchParams:
    """Beam settings; the defaults follow the reference setup.

    stack_depth: hypotheses kept per stack. logprob_threshold: nats
    between a stack's best and worst kept hypothesis (also applied
    globally after each stage); 6.91 nats is a 1/1000 probability
    ratio. nbest: complete parses returned. max_position_ops: cap on
    parser operations at one word position; None means 2k+2 at word k,
    enough for every legal sequence, so the cap only guards against
    bugs. tag_candidates: 'observed' or 'all' (see MaskedModels).
    """

    __slots__ = ("stack_depth", "logprob_threshold", "nbest",
                 "max_position_ops", "tag_candidates")

    def __init__(self, stack_depth=10, logprob_threshold=6.91, nbest=10,
                 max_position_ops=None, tag_candidates="observed"):
        if stack_depth < 1:
            raise DecodeError("stack depth must be at least 1")
        if logprob_threshold is None:
            logprob_threshold = math.inf
        if logprob_threshold < 0:
            raise DecodeError("log-probability threshold must be >= 0")
        if nbest < 1:
            raise DecodeError("nbest must be at least 1")
        if max_position_ops is not None and max_position_ops < 2:
            raise DecodeError("max_position_ops must allow at least "
                              "an action and a null")
        self.stack_depth = stack_depth
        self.logprob_threshold = logprob_threshold
        self.nbest = nbest
        self.max_position_ops = max_position_ops
        self.tag_candidates = tag_candidates

    def position_cap(self, k):
        if self.max_position_ops is not None:
            return self.max_position_ops
        return 2 * k + 2


class Hypothesis:
    """A prefix, its accumulated log-probability, and the back-trace."""

    __slots__ = ("prefix", "logp", "parent", "event", "key")

    def __init__(self, prefix, logp, parent, event):
        self.prefix = prefix
        self.logp = logp
        self.parent = parent
        self.event = event
        # serialized derivation prefix; the deterministic tie-break
        self.key = (parent.key + (event.serialize(),)) if parent is not None \
            else ()

    def extend(self, component, outcome, prob):
        prefix, event = dv.apply(self.prefix, component, outcome)
        return Hypothesis(prefix, self.logp + math.log(prob), self, event)

    def events(self):
        out = []
        node = self
        while node.parent is not None:
            out.append(node.event)
            node = node.parent
        out.reverse()
        return out

    def derivation(self):
        return dv.Derivation(self.events())

    def tree(self):
        return dv.derivation_to_tree(self.derivation())

    def sort_key(self):
        return (-self.logp, self.key)


class DecodeResult:
    """Stage sets S_0..S_n (prepared hypotheses with their normalized
    weights) plus the N-best complete hypotheses."""

    __slots__ = ("stages", "nbest", "words", "lattice")

    def __init__(self, stages, nbest, words, lattice=None):
        self.stages = stages
        self.nbest = nbest
        self.words = words
        self.lattice = lattice


def _normalized(hyps):
    """(hypothesis, weight) pairs, weights proportional to exp(logp)."""
    best = max(h.logp for h in hyps)
    raw = [math.exp(h.logp - best) for h in hyps]
    total = math.fsum(raw)
    return tuple((h, r / total) for h, r in zip(hyps, raw))


def _prune(stack, params):
    stack.sort(key=Hypothesis.sort_key)
    kept = stack[:params.stack_depth]
    cutoff = kept[0].logp - params.logprob_threshold
    return [h for h in kept if h.logp >= cutoff]


def decode(words, models, params, collect_lattice=False):
    """Beam-decode one sentence; returns stages, N-best, and optionally
    the pruned stack lattice as dump lines (k, p, score, actions).

    ``words`` is the raw sentence; the end token is appended internally
    and out-of-vocabulary words are mapped to the unknown token.
    """
    if not words:
        raise DecodeError("cannot decode an empty sentence")
    for w in words:
        if w in RESERVED_WORDS:
            raise DecodeError("sentence contains reserved token %r" % w)
    vocabs = models.vocabs
    mapped = [vocabs.map_word(w) for w in words]

    root = Hypothesis(dv.WordParsePrefix.initial(), 0.0, None, None)
    stage = ((root, 1.0),)
    stages = [stage]
    lattice = [] if collect_lattice else None
    for k, w in enumerate(mapped):
        survivors = _advance(stage, w, models, params, lattice, k + 1)
        if not survivors:
            raise DecodeError("no hypothesis survived at word %d" % (k + 1))
        stages.append(_normalized(survivors))
        stage = stages[-1]
    completes = _advance(stage, EOS_WORD, models, params, lattice,
                         len(mapped) + 1)
    if not completes:
        raise DecodeError("no complete parse survived")
    nbest = tuple(completes[:params.nbest])
    return DecodeResult(tuple(stages), nbest, tuple(mapped),
                        tuple(lattice) if lattice is not None else None)


def _advance(stage, word, models, params, lattice, k):
    """One extension cycle: word + tag + parser sweep; returns the
    sorted survivors (prepared prefixes, or complete parses at the end
    token)."""
    final = word == EOS_WORD
    stacks = {}
    order = []
    for hyp, _weight in stage:
        wp = models.word_prob(hyp.prefix, word)
        if wp <= 0.0:
            continue
        seeded = hyp.extend(dv.WORD_PREDICTOR, word, wp)
        if final:
            tags = (EOS_TAG,)
        else:
            tags = models.tag_candidates(word, params.tag_candidates)
        for tag in tags:
            tp = models.tag_prob(seeded.prefix, tag)
            if tp <= 0.0:
                continue
            h = seeded.extend(dv.TAGGER, tag, tp)
            _push(stacks, order, h.prefix.p, h)

    cap = params.position_cap(k)
    finished = []
    i = 0
    while i < len(order):
        p = order[i]
        i += 1
        kept = _prune(stacks[p], params)
        stacks[p] = kept
        if lattice is not None:
            for h in kept:
                lattice.append(_lattice_line(k, p, h))
        for h in kept:
            if h.prefix.phase == dv.P_WORD or h.prefix.is_complete():
                finished.append(h)
                continue
            forced, actions = models.parser_actions(h.prefix)
            if not forced and h.prefix.pos_ops + 1 >= cap:
                # op budget exhausted: close the position now
                forced, actions = True, (dv.NULL,)
            for action in actions:
                prob = 1.0 if forced else models.parser_prob(
                    h.prefix, action, (forced, actions))
                if prob <= 0.0:
                    continue
                _push(stacks, order, p + 1, h.extend(dv.PARSER, action, prob),
                      cursor=i)

    if not finished:
        return []
    best = max(h.logp for h in finished)
    cutoff = best - params.logprob_threshold
    finished = [h for h in finished if h.logp >= cutoff]
    finished.sort(key=Hypothesis.sort_key)
    return finished


def _push(stacks, order, p, hyp, cursor=0):
    stack = stacks.get(p)
    if stack is None:
        stacks[p] = [hyp]
        if order and order[-1] >= p:
            # keep the unprocessed tail of the sweep order sorted
            insort(order, p, lo=cursor)
        else:
            order.append(p)
    else:
        stack.append(hyp)


def _lattice_line(k, p, hyp):
    actions = " ".join(ev.outcome for ev in hyp.events())
    return "%d\t%d\t%s\t%s" % (k, p, repr(hyp.logp), actions)


def phi_weights(hypotheses):
    """Normalized N-best weights: each parse's share of the summed
    probability mass, computed with a max-shift."""
    if not hypotheses:
        raise DecodeError("phi weights need at least one hypothesis")
    best = max(h.logp for h in hypotheses)
    raw = [math.exp(h.logp - best) for h in hypotheses]
    total = math.fsum(raw)
    return [r / total for r in raw]


def nbest_with_phi(result):
    """(complete parse tree, phi) pairs for a decode result."""
    phis = phi_weights(result.nbest)
    return [(h.tree(), phi) for h, phi in zip(result.nbest, phis)]
