"""Parser actions, word-parse prefixes, and tree/derivation conversion.

A sentence and its binary parse are generated left to right by three
alternating components: predict the next word, tag it, then run parser
transitions (unary / adjoin-left / adjoin-right / null) until null hands
control back to the predictor. The prefix state is the list of exposed
heads: the roots of the maximal subtrees built so far, each a
(headword, label) pair. Every (sentence, parse) pair corresponds to
exactly one action sequence, which is what makes treebank initialization
possible: ``tree_to_derivation`` recovers it and ``derivation_to_tree``
replays it.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .trees import HeadedTree
from .vocab import BOS_TAG, BOS_WORD, EOS_TAG, EOS_WORD, TOP, TOP_PRIME

WORD_PREDICTOR = "word-predictor"
TAGGER = "tagger"
PARSER = "parser"

NULL = "null"
UNARY = "unary"
ADJOIN_LEFT = "adjoin-left"
ADJOIN_RIGHT = "adjoin-right"

# phases of the generation loop
P_WORD = "word"
P_TAG = "tag"
P_PARSER = "parser"
P_DONE = "done"


class DerivationError(ValueError):
    """An action illegal at its prefix, or a tree the model cannot derive."""


def unary(label):
    return "%s_%s" % (UNARY, label)


def adjoin_left(label):
    return "%s_%s" % (ADJOIN_LEFT, label)


def adjoin_right(label):
    return "%s_%s" % (ADJOIN_RIGHT, label)


def split_action(action):
    """'adjoin-left_NP' -> ('adjoin-left', 'NP'); 'null' -> ('null', None)."""
    if action == NULL:
        return NULL, None
    kind, sep, label = action.partition("_")
    if not sep or not label or kind not in (UNARY, ADJOIN_LEFT, ADJOIN_RIGHT):
        raise DerivationError("malformed parser action %r" % action)
    return kind, label


def action_vocabulary(labels):
    """{null} plus the three transition kinds crossed with the labels."""
    out = [NULL]
    for kind in (UNARY, ADJOIN_LEFT, ADJOIN_RIGHT):
        out.extend("%s_%s" % (kind, l) for l in labels)
    return out


class Head(NamedTuple):
    word: str
    tag: str      # POStag for a leaf, constituent label once built on
    index: int    # leaf position of the headword
    leaf: bool


class ElementaryEvent(NamedTuple):
    component: str
    outcome: str
    context: tuple

    def serialize(self):
        return "\t".join((self.component, self.outcome) + self.context)

    @classmethod
    def parse(cls, line):
        fields = line.rstrip("\n").split("\t")
        if len(fields) < 2:
            raise DerivationError("event line needs component and outcome")
        return cls(fields[0], fields[1], tuple(fields[2:]))


_BOS_HEAD = Head(BOS_WORD, BOS_TAG, 0, True)


class _Cell:
    """One exposed head in a persistent (shared-tail) stack."""

    __slots__ = ("head", "below", "size")

    def __init__(self, head, below):
        self.head = head
        self.below = below
        self.size = 1 if below is None else below.size + 1


class WordParsePrefix:
    """Exposed heads plus the generation-loop bookkeeping.

    Immutable: every transition returns a fresh prefix sharing the head
    stack's tail, so the decoder can branch hypotheses cheaply. ``k``
    counts predicted words (the end token included), ``p`` counts parser
    operations (null included), ``pos_ops`` the operations at the
    current word position.
    """

    __slots__ = ("top", "k", "p", "pos_ops", "pending", "unary_used",
                 "phase", "_ctx")

    def __init__(self, top, k, p, pos_ops, pending, unary_used, phase):
        self.top = top
        self.k = k
        self.p = p
        self.pos_ops = pos_ops
        self.pending = pending
        self.unary_used = unary_used
        self.phase = phase
        self._ctx = None

    @classmethod
    def initial(cls):
        return cls(_Cell(_BOS_HEAD, None), 0, 0, 0, None, False, P_WORD)

    @property
    def h0(self):
        return self.top.head

    @property
    def h_1(self):
        below = self.top.below
        return below.head if below is not None else _BOS_HEAD

    def heads(self):
        """Exposed heads bottom-up (the start token first)."""
        out = []
        cell = self.top
        while cell is not None:
            out.append(cell.head)
            cell = cell.below
        out.reverse()
        return out

    def head_context(self):
        """(h0.tag, h0.word, h-1.tag, h-1.word), cached per prefix."""
        if self._ctx is None:
            h0, h_1 = self.h0, self.h_1
            self._ctx = (h0.tag, h0.word, h_1.tag, h_1.word)
        return self._ctx

    def tag_context(self):
        h0, h_1 = self.h0, self.h_1
        return (self.pending, h0.tag, h_1.tag)

    def is_complete(self):
        return self.phase == P_DONE


def word_event(prefix, word):
    return ElementaryEvent(WORD_PREDICTOR, word, prefix.head_context())


def tag_event(prefix, tag):
    return ElementaryEvent(TAGGER, tag, prefix.tag_context())


def parser_event(prefix, action):
    return ElementaryEvent(PARSER, action, prefix.head_context())


def legal_actions(prefix):
    """The parser actions allowed at this prefix.

    Returns (forced, labeled) where ``labeled`` is a tuple of (kind,
    needs_label) pairs: needs_label means the caller crosses the kind
    with its non-terminal vocabulary. ``forced`` marks the positions
    whose single action gets probability 1 regardless of the model.
    The case split:

    - h0 already the end-of-sentence head under the primed root label:
      forced adjoin-right under the root label when h-1 is the start
      token, else forced adjoin-right under the primed label again.
    - the end word just predicted (h0 is the end leaf): forced
      adjoin-right under the primed root label.
    - h-1 is the start token: null, or unary if h0 is still a leaf and
      unary was not taken at this position; adjoins are withheld so the
      start token is consumed only by the final step.
    - otherwise: null, both adjoins, and unary under the leaf condition.
    """
    if prefix.phase != P_PARSER:
        raise DerivationError("no parser action expected in phase %r"
                              % prefix.phase)
    h0, h_1 = prefix.h0, prefix.h_1
    if h0.word == EOS_WORD and h0.tag == TOP_PRIME:
        if h_1.word == BOS_WORD:
            return True, ((adjoin_right(TOP), None),)
        return True, ((adjoin_right(TOP_PRIME), None),)
    if h0.word == EOS_WORD:
        return True, ((adjoin_right(TOP_PRIME), None),)
    unary_ok = h0.leaf and not prefix.unary_used
    if h_1.word == BOS_WORD:
        acts = [(NULL, None)]
        if unary_ok:
            acts.append((UNARY, True))
        return len(acts) == 1, tuple(acts)
    acts = [(NULL, None)]
    if unary_ok:
        acts.append((UNARY, True))
    acts.append((ADJOIN_LEFT, True))
    acts.append((ADJOIN_RIGHT, True))
    return False, tuple(acts)


def expand_actions(prefix, labels):
    """legal_actions crossed with the label vocabulary, in a fixed order."""
    forced, acts = legal_actions(prefix)
    out = []
    for kind, needs_label in acts:
        if needs_label is None:
            out.append(kind)
        else:
            out.extend("%s_%s" % (kind, l) for l in labels)
    return forced, tuple(out)


def _check_parser_action(prefix, kind, label):
    """Raise DerivationError naming the violated constraint, if any."""
    h0, h_1 = prefix.h0, prefix.h_1
    if h0.word == EOS_WORD and h0.tag == TOP_PRIME:
        want = TOP if h_1.word == BOS_WORD else TOP_PRIME
        if kind != ADJOIN_RIGHT or label != want:
            raise DerivationError(
                "end-of-sentence head forces adjoin-right under %r" % want)
        return
    if h0.word == EOS_WORD:
        if kind != ADJOIN_RIGHT or label != TOP_PRIME:
            raise DerivationError(
                "end word forces adjoin-right under %r" % TOP_PRIME)
        return
    if kind == NULL:
        return
    if kind == UNARY:
        if not h0.leaf:
            raise DerivationError("unary over an internal head")
        if prefix.unary_used:
            raise DerivationError("unary taken twice at one position")
        return
    # adjoins
    if h_1.word == BOS_WORD:
        raise DerivationError(
            "adjoining the start token is reserved for the final step")


def apply(prefix, component, outcome):
    """One generation step; returns (new prefix, the event with context).

    ``component`` picks the move: a word prediction pushes nothing yet
    (the word waits for its tag), a tag pushes the new leaf head, a
    parser action rewrites the top of the head stack. Illegal moves
    raise DerivationError naming the violated constraint.
    """
    if component == WORD_PREDICTOR:
        if prefix.phase != P_WORD:
            raise DerivationError("word predicted in phase %r" % prefix.phase)
        ev = word_event(prefix, outcome)
        nxt = WordParsePrefix(prefix.top, prefix.k + 1, prefix.p, 0,
                              outcome, False, P_TAG)
        return nxt, ev

    if component == TAGGER:
        if prefix.phase != P_TAG:
            raise DerivationError("tag assigned in phase %r" % prefix.phase)
        ev = tag_event(prefix, outcome)
        head = Head(prefix.pending, outcome, prefix.k, True)
        nxt = WordParsePrefix(_Cell(head, prefix.top), prefix.k, prefix.p,
                              0, None, False, P_PARSER)
        return nxt, ev

    if component != PARSER:
        raise DerivationError("unknown component %r" % component)
    if prefix.phase != P_PARSER:
        raise DerivationError("parser action in phase %r" % prefix.phase)
    kind, label = split_action(outcome)
    _check_parser_action(prefix, kind, label)
    ev = parser_event(prefix, outcome)
    p = prefix.p + 1
    ops = prefix.pos_ops + 1

    if kind == NULL:
        nxt = WordParsePrefix(prefix.top, prefix.k, p, ops, None, False,
                              P_WORD)
        return nxt, ev
    if kind == UNARY:
        h0 = prefix.h0
        head = Head(h0.word, label, h0.index, False)
        nxt = WordParsePrefix(_Cell(head, prefix.top.below), prefix.k, p,
                              ops, None, True, P_PARSER)
        return nxt, ev
    # adjoin-left / adjoin-right
    if prefix.top.below is None:
        raise DerivationError("adjoin with a single exposed head")
    src = prefix.h_1 if kind == ADJOIN_LEFT else prefix.h0
    head = Head(src.word, label, src.index, False)
    below = prefix.top.below.below
    cell = _Cell(head, below)
    phase = P_DONE if below is None and label == TOP else P_PARSER
    nxt = WordParsePrefix(cell, prefix.k, p, ops, None, prefix.unary_used,
                          phase)
    return nxt, ev


class Derivation:
    """The event sequence generating one (sentence, parse) pair."""

    __slots__ = ("events",)

    def __init__(self, events):
        self.events = tuple(events)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __eq__(self, other):
        if not isinstance(other, Derivation):
            return NotImplemented
        return self.events == other.events

    def serialize(self):
        return "\n".join(ev.serialize() for ev in self.events)

    @classmethod
    def deserialize(cls, text):
        lines = [l for l in text.splitlines() if l]
        return cls(ElementaryEvent.parse(l) for l in lines)

    def words(self):
        """The predicted words, end token included."""
        return [e.outcome for e in self.events if e.component == WORD_PREDICTOR]


def complete_parse_from_body(body):
    """Wrap a binarized body tree into the rooted complete-parse shape.

    The body's leaves shift one position right to make room for the
    start token; the end leaf goes under a primed-root node headed by
    it, and the start leaf is attached last under the root.
    """
    shifted = _shift(body, 1)
    n = shifted.span[1]
    eos = HeadedTree(EOS_TAG, word=EOS_WORD, head_word=EOS_WORD,
                     head_tag=EOS_TAG, head_index=n, span=(n, n + 1))
    spine = HeadedTree(TOP_PRIME, [shifted, eos], head_word=EOS_WORD,
                       head_tag=EOS_TAG, head_index=n, span=(1, n + 1))
    bos = HeadedTree(BOS_TAG, word=BOS_WORD, head_word=BOS_WORD,
                     head_tag=BOS_TAG, head_index=0, span=(0, 1))
    return HeadedTree(TOP, [bos, spine], head_word=EOS_WORD,
                      head_tag=EOS_TAG, head_index=n, span=(0, n + 1))


def _shift(tree, offset):
    if tree.is_leaf():
        idx = tree.head_index + offset
        return HeadedTree(tree.label, word=tree.word, head_word=tree.head_word,
                          head_tag=tree.head_tag, head_index=idx,
                          span=(tree.span[0] + offset, tree.span[1] + offset))
    children = [_shift(c, offset) for c in tree.children]
    return HeadedTree(tree.label, children, head_word=tree.head_word,
                      head_tag=tree.head_tag,
                      head_index=tree.head_index + offset,
                      span=(tree.span[0] + offset, tree.span[1] + offset))


def tree_to_derivation(parse):
    """Recover the unique action sequence deriving a complete parse.

    The actions fall out of a post-order walk: each leaf is a
    word+tag pair, each internal node the parser action that builds it,
    with a null inserted before every word but the first. The sequence
    is then replayed through ``apply`` so every structural constraint is
    checked and every event carries its true context snapshot.
    """
    if parse.is_leaf() or parse.label != TOP:
        raise DerivationError("complete parse must be rooted at %r" % TOP)
    first = next(iter(parse.leaves()))
    if first.word != BOS_WORD:
        raise DerivationError("complete parse must start with the start token")

    moves = []
    _postorder_moves(parse, moves)
    if not moves or moves[0] != ("shift", BOS_WORD, BOS_TAG):
        raise DerivationError("start token must be the first leaf")

    prefix = WordParsePrefix.initial()
    events = []
    for move in moves[1:]:
        if move[0] == "shift":
            _, word, tag = move
            if prefix.phase == P_PARSER:
                prefix, ev = apply(prefix, PARSER, NULL)
                events.append(ev)
            prefix, ev = apply(prefix, WORD_PREDICTOR, word)
            events.append(ev)
            prefix, ev = apply(prefix, TAGGER, tag)
            events.append(ev)
        else:
            prefix, ev = apply(prefix, PARSER, move[1])
            events.append(ev)
    if not prefix.is_complete():
        raise DerivationError("action sequence leaves the parse incomplete")
    return Derivation(events)


def _postorder_moves(node, moves):
    if node.is_leaf():
        moves.append(("shift", node.word, node.label))
        return
    for child in node.children:
        _postorder_moves(child, moves)
    if len(node.children) == 1:
        moves.append(("reduce", unary(node.label)))
    elif len(node.children) == 2:
        left, right = node.children
        if right.head_index == node.head_index:
            moves.append(("reduce", adjoin_right(node.label)))
        elif left.head_index == node.head_index:
            moves.append(("reduce", adjoin_left(node.label)))
        else:
            raise DerivationError(
                "head of %r is not the head of either child" % node.label)
    else:
        raise DerivationError(
            "node %r has %d children; derivations need a binarized tree"
            % (node.label, len(node.children)))


def derivation_to_tree(derivation):
    """Replay events into the complete parse they generate.

    Checks each event's legality and its stored context against the
    replayed prefix; errors carry the index of the offending event.
    """
    events = list(derivation)
    if not events:
        raise DerivationError("incomplete derivation: no events")
    prefix = WordParsePrefix.initial()
    bos = HeadedTree(BOS_TAG, word=BOS_WORD, head_word=BOS_WORD,
                     head_tag=BOS_TAG, head_index=0, span=(0, 1))
    stack = [bos]
    for i, ev in enumerate(events):
        try:
            prefix, replayed = apply(prefix, ev.component, ev.outcome)
        except DerivationError as err:
            raise DerivationError("event %d: %s" % (i, err)) from None
        if replayed.context != ev.context:
            raise DerivationError(
                "event %d: stored context %r does not match replay %r"
                % (i, ev.context, replayed.context))
        if ev.component == TAGGER:
            idx = prefix.h0.index
            stack.append(HeadedTree(ev.outcome, word=prefix.h0.word,
                                    head_word=prefix.h0.word,
                                    head_tag=ev.outcome, head_index=idx,
                                    span=(idx, idx + 1)))
        elif ev.component == PARSER and ev.outcome != NULL:
            kind, label = split_action(ev.outcome)
            if kind == UNARY:
                child = stack.pop()
                stack.append(HeadedTree(label, [child],
                                        head_word=child.head_word,
                                        head_tag=child.head_tag,
                                        head_index=child.head_index,
                                        span=child.span))
            else:
                right = stack.pop()
                left = stack.pop()
                head = left if kind == ADJOIN_LEFT else right
                stack.append(HeadedTree(label, [left, right],
                                        head_word=head.head_word,
                                        head_tag=head.head_tag,
                                        head_index=head.head_index,
                                        span=(left.span[0], right.span[1])))
    if not prefix.is_complete():
        raise DerivationError("incomplete derivation: parse not finished")
    assert len(stack) == 1
    return stack[0]
