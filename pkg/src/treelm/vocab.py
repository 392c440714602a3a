"""Vocabularies over words, POS tags and nonterminal labels.

The three closed sets the model works with, plus the distinguished
symbols: sentence-boundary words ``<s>``/``</s>`` with their reserved
tags, the root label and its primed variant, and ``<unk>`` for words cut
by the frequency cap. The word vocabulary is built from training counts;
tag and label vocabularies are closed over everything seen.
"""

from __future__ import annotations

import hashlib
from collections import Counter

BOS_WORD = "<s>"
EOS_WORD = "</s>"
BOS_TAG = "SB"
EOS_TAG = "SE"
TOP = "TOP"
TOP_PRIME = "TOP'"
UNK = "<unk>"

RESERVED_WORDS = (BOS_WORD, EOS_WORD, UNK)
RESERVED_TAGS = (BOS_TAG, EOS_TAG)
RESERVED_LABELS = (TOP, TOP_PRIME)


class VocabularyError(ValueError):
    pass


def _digest(items):
    h = hashlib.sha256()
    for item in items:
        h.update(item.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:16]


class SymbolSet:
    """An ordered, hash-identified set of symbols."""

    def __init__(self, symbols):
        self.symbols = tuple(symbols)
        self._index = {s: i for i, s in enumerate(self.symbols)}
        if len(self._index) != len(self.symbols):
            dupes = [s for s, c in Counter(self.symbols).items() if c > 1]
            raise VocabularyError("duplicate symbols: %s" % ", ".join(dupes))

    def __contains__(self, symbol):
        return symbol in self._index

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        if not isinstance(other, SymbolSet):
            return NotImplemented
        return self.symbols == other.symbols

    def digest(self):
        return _digest(self.symbols)


class Vocabularies:
    """Word, tag and label sets with the distinguished symbols included.

    ``words`` always contains <s>, </s> and <unk>. ``tags`` contains SB
    and SE. ``labels`` are the nonterminal labels including TOP, TOP' and
    any primed labels binarization introduced. ``map_word`` sends
    out-of-vocabulary words to <unk>.
    """

    def __init__(self, words, tags, labels):
        self.words = words if isinstance(words, SymbolSet) else SymbolSet(words)
        self.tags = tags if isinstance(tags, SymbolSet) else SymbolSet(tags)
        self.labels = labels if isinstance(labels, SymbolSet) else SymbolSet(labels)
        for w in RESERVED_WORDS:
            if w not in self.words:
                raise VocabularyError("word set lacks reserved %r" % w)
        for t in RESERVED_TAGS:
            if t not in self.tags:
                raise VocabularyError("tag set lacks reserved %r" % t)
        for nt in RESERVED_LABELS:
            if nt not in self.labels:
                raise VocabularyError("label set lacks reserved %r" % nt)

    def map_word(self, word):
        return word if word in self.words else UNK

    def map_words(self, words):
        return [self.map_word(w) for w in words]

    # tags usable for actual words (the boundary tags only ever tag <s> and </s>)
    def word_tags(self):
        return [t for t in self.tags if t not in RESERVED_TAGS]

    def digests(self):
        """(words, tags, labels) content hashes, used in model file headers."""
        return (self.words.digest(), self.tags.digest(), self.labels.digest())

    def __eq__(self, other):
        if not isinstance(other, Vocabularies):
            return NotImplemented
        return (self.words == other.words and self.tags == other.tags
                and self.labels == other.labels)


def build_vocabularies(trees, word_cap=None, min_count=1):
    """Build the three vocabularies from binarized headed trees.

    ``word_cap`` keeps the most frequent N words (ties broken
    alphabetically so the result does not depend on counter order);
    ``min_count`` drops words rarer than the threshold. Either way the
    reserved symbols ride along. Tags and labels are never cut.
    """
    word_counts = Counter()
    tags = set()
    labels = set()
    for tree in trees:
        for leaf in tree.leaves():
            word_counts[leaf.word] += 1
            tags.add(leaf.label)
        labels.update(_internal_labels(tree))
    ranked = sorted(word_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [w for w, c in ranked if c >= min_count]
    if word_cap is not None:
        kept = kept[:word_cap]
    words = list(RESERVED_WORDS) + sorted(w for w in kept
                                          if w not in RESERVED_WORDS)
    tag_list = list(RESERVED_TAGS) + sorted(t for t in tags
                                            if t not in RESERVED_TAGS)
    label_list = list(RESERVED_LABELS) + sorted(l for l in labels
                                                if l not in RESERVED_LABELS)
    return Vocabularies(words, tag_list, label_list)


def _internal_labels(tree):
    if tree.is_leaf():
        return
    yield tree.label
    for child in tree.children:
        yield from _internal_labels(child)


def word_vocabulary(sentences, word_cap=None, min_count=1):
    """Vocabularies for word-only models: counted words, reserved tags/labels."""
    counts = Counter()
    for sentence in sentences:
        counts.update(sentence)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [w for w, c in ranked if c >= min_count]
    if word_cap is not None:
        kept = kept[:word_cap]
    words = list(RESERVED_WORDS) + sorted(w for w in kept
                                          if w not in RESERVED_WORDS)
    return Vocabularies(words, RESERVED_TAGS, RESERVED_LABELS)


def map_tree_words(tree, vocabs):
    """Copy a headed tree with OOV words (and headwords) sent to <unk>."""
    from .trees import HeadedTree

    if tree.is_leaf():
        return HeadedTree(tree.label, word=vocabs.map_word(tree.word),
                          head_word=vocabs.map_word(tree.head_word),
                          head_tag=tree.head_tag, head_index=tree.head_index,
                          span=tree.span)
    children = [map_tree_words(c, vocabs) for c in tree.children]
    return HeadedTree(tree.label, children,
                      head_word=vocabs.map_word(tree.head_word),
                      head_tag=tree.head_tag, head_index=tree.head_index,
                      span=tree.span)


# ---------------------------------------------------------------------------
# file format: a versioned header, then one section per symbol set

_FORMAT = "treelm-vocab"
_VERSION = "1"
_SECTIONS = ("words", "tags", "labels")


def save_vocabularies(vocabs, path):
    lines = ["%s %s" % (_FORMAT, _VERSION)]
    for name in _SECTIONS:
        symbols = getattr(vocabs, name).symbols
        lines.append("%s %d" % (name, len(symbols)))
        lines.extend(symbols)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_vocabularies(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "%s %s" % (_FORMAT, _VERSION):
        raise VocabularyError("%s: not a %s file" % (path, _FORMAT))
    pos = 1
    sets = {}
    for name in _SECTIONS:
        if pos >= len(lines):
            raise VocabularyError("%s: missing %s section" % (path, name))
        head = lines[pos].split()
        if len(head) != 2 or head[0] != name or not head[1].isdigit():
            raise VocabularyError("%s: bad section header %r" % (path, lines[pos]))
        n = int(head[1])
        body = lines[pos + 1:pos + 1 + n]
        if len(body) != n:
            raise VocabularyError("%s: %s section truncated" % (path, name))
        sets[name] = body
        pos += 1 + n
    return Vocabularies(sets["words"], sets["tags"], sets["labels"])
