"""A small synthetic treebank with long-distance agreement.

Every sentence pairs a subject with a verb that agrees in number, and a
prepositional phrase can intervene with a noun of the opposite number
("the dog near the cats barks"). A model conditioning on the previous
two surface words sees the intervening noun; a model conditioning on
exposed constituent heads sees the subject. That gap is the point of
the corpus.

Running the module writes the three treebank splits plus the percolation
and binarization rule files::

    python -m treelm.toycorpus --out-dir data
"""

from __future__ import annotations

import argparse
import os
import random

from .trees import RawTree, write_tree

SG = "sg"
PL = "pl"

NOUNS = {
    SG: ("bird", "cat", "dog", "fox", "horse", "mouse", "owl", "pig"),
    PL: ("birds", "cats", "dogs", "foxes", "horses", "mice", "owls", "pigs"),
}
IVERBS = {  # intransitive
    SG: ("barks", "runs", "sleeps", "waits"),
    PL: ("bark", "run", "sleep", "wait"),
}
TVERBS = {  # transitive
    SG: ("chases", "follows", "likes", "sees"),
    PL: ("chase", "follow", "like", "see"),
}
DETS = {SG: ("a", "every", "the"), PL: ("many", "some", "the")}
ADJS = ("big", "old", "red", "small")
PREPS = ("above", "behind", "near", "with")
ADVS = ("never", "often", "quietly")

NOUN_TAG = {SG: "NN", PL: "NNS"}
VERB_TAG = {SG: "VBZ", PL: "VBP"}

PERCOLATION_RULES = """\
# headword percolation: PARENT direction child-labels-by-priority
S	left-to-right	VP
NP	right-to-left	NN NNS NP
VP	left-to-right	VBZ VBP
PP	left-to-right	IN
DEFAULT	right-to-left
"""

BINARIZATION_RULES = """\
# binarization scheme per parent label
DEFAULT	A
VP	B
"""


def _leaf(tag, word):
    return RawTree(tag, word=word)


def _np(rng, number, depth):
    if number == PL and depth == 0 and rng.random() < 0.12:
        base = RawTree("NP", [_leaf("NNS", rng.choice(NOUNS[PL]))])
    else:
        parts = [_leaf("DT", rng.choice(DETS[number]))]
        if rng.random() < 0.3:
            parts.append(_leaf("JJ", rng.choice(ADJS)))
        parts.append(_leaf(NOUN_TAG[number], rng.choice(NOUNS[number])))
        base = RawTree("NP", parts)
    if depth < 2 and rng.random() < (0.55 if depth == 0 else 0.2):
        # the interesting case: a modifier noun right before the verb
        inner = _np(rng, rng.choice((SG, PL)), depth + 1)
        pp = RawTree("PP", [_leaf("IN", rng.choice(PREPS)), inner])
        base = RawTree("NP", [base, pp])
    return base


def _vp(rng, number):
    roll = rng.random()
    if roll < 0.30:
        return RawTree("VP", [_leaf(VERB_TAG[number], rng.choice(IVERBS[number]))])
    if roll < 0.45:
        return RawTree("VP", [_leaf("RB", rng.choice(ADVS)),
                              _leaf(VERB_TAG[number], rng.choice(IVERBS[number]))])
    verb = _leaf(VERB_TAG[number], rng.choice(TVERBS[number]))
    obj = _np(rng, rng.choice((SG, PL)), 1)
    if roll < 0.85:
        return RawTree("VP", [verb, obj])
    return RawTree("VP", [_leaf("RB", rng.choice(ADVS)), verb, obj])


def sample_tree(rng):
    number = rng.choice((SG, PL))
    return RawTree("S", [_np(rng, number, 0), _vp(rng, number)])


def sample_corpus(count, seed):
    rng = random.Random(seed)
    return [sample_tree(rng) for _ in range(count)]


def corpus_text(count, seed):
    return "".join(write_tree(t) + "\n" for t in sample_corpus(count, seed))


SPLITS = (("dev", 1300, 11), ("check", 260, 12), ("test", 260, 13))


def write_corpus(out_dir):
    """Write toy/{dev,check,test}.mrg and rules/{percolation,binarization}.txt."""
    toy = os.path.join(out_dir, "toy")
    rules = os.path.join(out_dir, "rules")
    os.makedirs(toy, exist_ok=True)
    os.makedirs(rules, exist_ok=True)
    paths = []
    for name, count, seed in SPLITS:
        path = os.path.join(toy, name + ".mrg")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(corpus_text(count, seed))
        paths.append(path)
    for name, text in (("percolation.txt", PERCOLATION_RULES),
                       ("binarization.txt", BINARIZATION_RULES)):
        path = os.path.join(rules, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="data")
    args = ap.parse_args(argv)
    for path in write_corpus(args.out_dir):
        print(path)


if __name__ == "__main__":
    main()
