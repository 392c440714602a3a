"""Initialization from treebank derivations and N-best re-estimation.

First training pass: every development tree is converted to its unique
derivation and the elementary events are counted with weight 1; the
interpolation weights are then fit on counts gathered the same way from
check data. Re-estimation decodes the development sentences (words
only), weights each N-best derivation by its share phi of the N-best
probability mass, and accumulates those fractional counts into fresh
tables; the interpolation weights and their count buckets stay frozen
across iterations, so the counts are the only moving parameters.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re

from . import derivation as dv
from . import parallel
from . import smoothing as sm
from .constraints import ConstraintLayer, MaskedModels
from .decoder import decode, phi_weights
from .perplexity import PplReport, l2r_word_prob
from .vocab import EOS_WORD, map_tree_words

log = logging.getLogger("treelm")


class TrainingError(ValueError):
    pass


MODEL_FILES = {
    dv.WORD_PREDICTOR: "word-predictor.model",
    dv.TAGGER: "tagger.model",
    dv.PARSER: "parser.model",
}
COMPONENTS = (dv.WORD_PREDICTOR, dv.TAGGER, dv.PARSER)
MANIFEST_FILE = "manifest.json"
_ITER_DIR = re.compile(r"^iter_(\d{3,})$")


class TrainingState:
    """Iteration index plus the three trained component models."""

    __slots__ = ("iteration", "predictor", "tagger", "parser")

    def __init__(self, iteration, predictor, tagger, parser):
        self.iteration = iteration
        self.predictor = predictor
        self.tagger = tagger
        self.parser = parser

    @property
    def vocabs(self):
        return self.predictor.vocabs

    def models(self):
        return {dv.WORD_PREDICTOR: self.predictor, dv.TAGGER: self.tagger,
                dv.PARSER: self.parser}

    def masked(self, layer=None):
        if layer is None:
            layer = ConstraintLayer(epsilon=self.predictor.epsilon)
        return MaskedModels(self.predictor, self.tagger, self.parser, layer)


def tree_events(tree, vocabs):
    """The derivation events of one prepared (headed, binarized) tree."""
    mapped = map_tree_words(tree, vocabs)
    parse = dv.complete_parse_from_body(mapped)
    return dv.tree_to_derivation(parse).events


def gather_tables(trees, vocabs):
    """Weight-1 count tables for all three components."""
    tables = {c: sm.CountTable(c) for c in COMPONENTS}
    for i, tree in enumerate(trees):
        try:
            events = tree_events(tree, vocabs)
        except dv.DerivationError as err:
            raise TrainingError("tree %d: %s" % (i, err)) from None
        for ev in events:
            tables[ev.component].accumulate(ev)
    return tables


def _outcome_count(component, vocabs):
    if component == dv.WORD_PREDICTOR:
        return len(vocabs.words)
    if component == dv.TAGGER:
        return len(vocabs.tags)
    return 1 + 3 * len(vocabs.labels)


def initial_training(dev_trees, check_trees, vocabs, epsilon=1e-6,
                     boundaries=sm.DEFAULT_BUCKET_BOUNDARIES,
                     tol=1e-8, max_iter=100):
    """Count development derivations, fit weights on check derivations."""
    dev_trees = list(dev_trees)
    check_trees = list(check_trees)
    if not dev_trees:
        raise TrainingError("development treebank is empty")
    if not check_trees:
        raise TrainingError("check treebank is empty")
    tables = gather_tables(dev_trees, vocabs)
    check = gather_tables(check_trees, vocabs)
    models = {}
    for c in COMPONENTS:
        weights = sm.estimate_lambdas(tables[c], check[c],
                                      _outcome_count(c, vocabs),
                                      boundaries, tol, max_iter)
        models[c] = sm.ComponentModel(c, vocabs, tables[c], weights, epsilon)
    return TrainingState(0, models[dv.WORD_PREDICTOR], models[dv.TAGGER],
                         models[dv.PARSER])


class IterationReport:
    """What one re-estimation pass did: sentence tally, skipped
    sentences, and development perplexities measured on the same decode.

    The perplexities describe the model that DID the decoding, i.e. the
    state at ``iteration - 1``, not the freshly counted one; measuring
    the new model would need a second decode pass.
    """

    __slots__ = ("iteration", "sentences", "skipped", "dev_l2r", "dev_sum")

    def __init__(self, iteration, sentences, skipped, dev_l2r, dev_sum):
        self.iteration = iteration
        self.sentences = sentences
        self.skipped = tuple(skipped)
        self.dev_l2r = dev_l2r
        self.dev_sum = dev_sum

    @property
    def measured_iteration(self):
        return self.iteration - 1


def _decode_row(payload, item):
    models, params = payload
    index, words = item
    try:
        result = decode(words, models, params)
    except Exception as err:  # skip-and-log contract
        return (index, None, str(err))
    phis = phi_weights(result.nbest)
    weighted = [(phi, hyp.events())
                for phi, hyp in zip(phis, result.nbest)]
    targets = list(result.words) + [EOS_WORD]
    l2r = math.fsum(math.log(l2r_word_prob(stage, target, models))
                    for stage, target in zip(result.stages, targets))
    logs = [h.logp for h in result.nbest]
    best = max(logs)
    nbest_sum = best + math.log(math.fsum(math.exp(l - best) for l in logs))
    return (index, weighted, (len(targets), l2r, nbest_sum))


def reestimation_iteration(state, sentences, params, layer=None, jobs=1,
                           check_tables=None):
    """One pass: decode, weight by phi, count into fresh tables.

    Sentences that fail to decode are skipped and logged, never fatal.
    Interpolation weights are carried over unchanged unless
    ``check_tables`` is given, which re-fits them (an extension; the
    reference procedure keeps them fixed).
    """
    sentences = list(sentences)
    if not sentences:
        raise TrainingError("no sentences to re-estimate on")
    models = state.masked(layer)
    rows = parallel.map_items(_decode_row, (models, params),
                              list(enumerate(sentences)), jobs)
    tables = {c: sm.CountTable(c) for c in COMPONENTS}
    skipped = []
    l2r_rows = []
    sum_rows = []
    for index, weighted, stats in rows:
        if weighted is None:
            log.warning("sentence %d skipped: %s", index, stats)
            skipped.append((index, stats))
            continue
        for phi, events in weighted:
            for ev in events:
                tables[ev.component].accumulate(ev, phi)
        tokens, l2r, nbest_sum = stats
        l2r_rows.append((tokens, l2r))
        sum_rows.append((tokens, nbest_sum))

    vocabs = state.vocabs
    new_models = {}
    for c, old in state.models().items():
        weights = old.weights
        if check_tables is not None:
            weights = sm.estimate_lambdas(
                tables[c], check_tables[c], _outcome_count(c, vocabs),
                old.weights.boundaries)
        new_models[c] = sm.ComponentModel(c, vocabs, tables[c], weights,
                                          old.epsilon)
    new_state = TrainingState(state.iteration + 1,
                              new_models[dv.WORD_PREDICTOR],
                              new_models[dv.TAGGER], new_models[dv.PARSER])
    report = IterationReport(
        new_state.iteration, len(sentences), skipped,
        _ppl("l2r", l2r_rows), _ppl("sum", sum_rows))
    return new_state, report


def _ppl(mode, rows):
    tokens = sum(t for t, _ in rows)
    logprob = math.fsum(lp for _, lp in rows)
    return PplReport(mode, tokens, logprob, 0, rows)


def zero_to_nonzero_report(old_state, new_state):
    """Top-order events absent from the old tables but counted now.

    The N-best dynamics create events the treebank derivations never
    contained; this enumerates them, sorted, for inspection.
    """
    out = []
    for c in COMPONENTS:
        old = old_state.models()[c].table
        new = new_state.models()[c].table
        n = new.order
        for ctx, y, count in new.entries(n):
            if count > 0.0 and old.count(n, ctx, y) == 0.0:
                out.append((c, ctx, y))
    return out


# ---------------------------------------------------------------------------
# checkpoints


def checkpoint_dir(model_dir, iteration):
    return os.path.join(model_dir, "iter_%03d" % iteration)


def save_checkpoint(state, model_dir, manifest):
    """Write the three model files plus a manifest; returns the path."""
    path = checkpoint_dir(model_dir, state.iteration)
    os.makedirs(path, exist_ok=True)
    for c, model in state.models().items():
        sm.save_model(model, os.path.join(path, MODEL_FILES[c]))
    data = dict(manifest)
    data["iteration"] = state.iteration
    with open(os.path.join(path, MANIFEST_FILE), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(data, sort_keys=True, indent=2) + "\n")
    return path


def load_checkpoint(model_dir, iteration, vocabs):
    path = checkpoint_dir(model_dir, iteration)
    models = {}
    for c, name in MODEL_FILES.items():
        models[c] = sm.load_model(os.path.join(path, name), vocabs)
    return TrainingState(iteration, models[dv.WORD_PREDICTOR],
                         models[dv.TAGGER], models[dv.PARSER])


def load_manifest(model_dir, iteration):
    path = os.path.join(checkpoint_dir(model_dir, iteration), MANIFEST_FILE)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def latest_iteration(model_dir):
    """Highest complete checkpoint index in model_dir, or None."""
    if not os.path.isdir(model_dir):
        return None
    found = None
    for name in os.listdir(model_dir):
        m = _ITER_DIR.match(name)
        if not m:
            continue
        it = int(m.group(1))
        complete = all(
            os.path.exists(os.path.join(model_dir, name, f))
            for f in list(MODEL_FILES.values()) + [MANIFEST_FILE])
        if complete and (found is None or it > found):
            found = it
    return found
