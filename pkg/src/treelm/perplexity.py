"""Word-level perplexity over beam-decoded prefix sets.

The proper, causal estimate mixes next-word probabilities over the
surviving prefixes at each position, weighted by each prefix's share of
the stage's probability mass. The summed N-best sentence probability
gives a second, deficient estimate, and scoring along the single final
best parse is kept as a diagnostic only: that conditioning peeks at the
future, so it is not a valid probability assignment over strings.
"""

from __future__ import annotations

import math

from . import parallel
from . import trigram as tg
from .decoder import decode
from .derivation import WORD_PREDICTOR
from .vocab import EOS_WORD


class PerplexityError(ValueError):
    pass


class PplReport:
    """Token count, total log-probability (nats) and the derived
    perplexity; token counts include the end-of-sentence events."""

    __slots__ = ("mode", "tokens", "logprob", "oov", "per_sentence", "lam")

    def __init__(self, mode, tokens, logprob, oov, per_sentence, lam=None):
        self.mode = mode
        self.tokens = tokens
        self.logprob = logprob
        self.oov = oov
        self.per_sentence = tuple(per_sentence)
        self.lam = lam

    @property
    def perplexity(self):
        return math.exp(-self.logprob / self.tokens)

    def to_machine(self):
        """Line-oriented metric-TAB-value format."""
        lines = [
            "mode\t%s" % self.mode,
            "sentences\t%d" % len(self.per_sentence),
            "tokens\t%d" % self.tokens,
            "oov\t%d" % self.oov,
            "logprob\t%s" % repr(self.logprob),
            "perplexity\t%s" % repr(self.perplexity),
        ]
        if self.lam is not None:
            lines.append("lambda\t%s" % repr(self.lam))
        return "\n".join(lines) + "\n"

    def to_text(self):
        rows = [
            ("mode", self.mode),
            ("sentences", str(len(self.per_sentence))),
            ("tokens", str(self.tokens)),
            ("oov tokens", str(self.oov)),
            ("log-probability (nats)", "%.6f" % self.logprob),
            ("perplexity", "%.4f" % self.perplexity),
        ]
        if self.lam is not None:
            rows.append(("interpolation weight", "%.6f" % self.lam))
        width = max(len(name) for name, _ in rows)
        return "\n".join("%-*s  %s" % (width, name, value)
                         for name, value in rows) + "\n"


def parse_machine(text):
    """Parse the machine format back into a {metric: value} dict."""
    out = {}
    for line in text.splitlines():
        if not line:
            continue
        name, _, value = line.partition("\t")
        if name in ("mode",):
            out[name] = value
        elif name in ("sentences", "tokens", "oov"):
            out[name] = int(value)
        else:
            out[name] = float(value)
    return out


def _report(mode, rows, lam=None):
    tokens = sum(r[0] for r in rows)
    oov = sum(r[1] for r in rows)
    logprob = math.fsum(r[2] for r in rows)
    per_sentence = tuple((r[0], r[2]) for r in rows)
    return PplReport(mode, tokens, logprob, oov, per_sentence, lam)


def l2r_word_prob(stage, word, models):
    """Next-word probability mixed over a stage's surviving prefixes."""
    if not stage:
        raise PerplexityError("empty prefix set")
    return math.fsum(weight * models.word_prob(hyp.prefix, word)
                     for hyp, weight in stage)


def sentence_l2r_logprobs(words, models, params):
    """Per-token log-probabilities for one sentence, end token last."""
    result = decode(words, models, params)
    targets = list(result.words) + [EOS_WORD]
    return [math.log(l2r_word_prob(stage, target, models))
            for stage, target in zip(result.stages, targets)]


def _count_oov(words, vocabs):
    return sum(1 for w in words if vocabs.map_word(w) != w)


def _l2r_row(payload, words):
    models, params = payload
    logs = sentence_l2r_logprobs(words, models, params)
    return (len(logs), _count_oov(words, models.vocabs), math.fsum(logs))


def l2r_ppl(sentences, models, params, jobs=1):
    rows = parallel.map_items(_l2r_row, (models, params), sentences, jobs)
    return _report("l2r", rows)


def _sum_row(payload, words):
    models, params = payload
    result = decode(words, models, params)
    logs = [h.logp for h in result.nbest]
    best = max(logs)
    lp = best + math.log(math.fsum(math.exp(l - best) for l in logs))
    return (len(result.words) + 1, _count_oov(words, models.vocabs), lp)


def sum_ppl(sentences, models, params, jobs=1):
    """Perplexity from summed N-best parse probabilities; deficient,
    since the mass outside the N-best is dropped."""
    rows = parallel.map_items(_sum_row, (models, params), sentences, jobs)
    return _report("sum", rows)


def _viterbi_row(payload, words):
    models, params = payload
    result = decode(words, models, params)
    best = result.nbest[0]
    lp = 0.0
    count = 0
    node = best
    while node.parent is not None:
        if node.event.component == WORD_PREDICTOR:
            lp += node.logp - node.parent.logp
            count += 1
        node = node.parent
    return (count, _count_oov(words, models.vocabs), lp)


def viterbi_ppl_diagnostic(sentences, models, params, jobs=1):
    """Word scores along the single best final parse. Diagnostic only:
    conditioning every position on the completed parse is not causal."""
    rows = parallel.map_items(_viterbi_row, (models, params), sentences, jobs)
    return _report("viterbi-diagnostic", rows)


def _interp_row(payload, words):
    models, params, trigram_model, lam = payload
    slm = [math.exp(lp)
           for lp in sentence_l2r_logprobs(words, models, params)]
    tri_logs, oov = tg.sentence_logprobs(trigram_model, words)
    tri = [math.exp(lp) for lp in tri_logs]
    lp = math.fsum(math.log(lam * pt + (1.0 - lam) * ps)
                   for pt, ps in zip(tri, slm))
    return (len(slm), oov, lp)


def interpolated_ppl(sentences, models, trigram_model, lam, params, jobs=1):
    """Perplexity of the per-position convex mixture of the trigram and
    the structured model's causal word probabilities."""
    if not 0.0 <= lam <= 1.0:
        raise PerplexityError("interpolation weight must lie in [0, 1]")
    rows = parallel.map_items(
        _interp_row, (models, params, trigram_model, lam), sentences, jobs)
    return _report("interpolated", rows, lam=lam)


def trigram_ppl(sentences, trigram_model, jobs=1):
    rows = parallel.map_items(_trigram_row, trigram_model, sentences, jobs)
    return _report("trigram", rows)


def _trigram_row(model, words):
    logs, oov = tg.sentence_logprobs(model, words)
    return (len(logs), oov, math.fsum(logs))


def _pair_row(payload, words):
    models, params, trigram_model = payload
    slm = sentence_l2r_logprobs(words, models, params)
    tri, _ = tg.sentence_logprobs(trigram_model, words)
    return list(zip(tri, slm))


def estimate_interpolation_weight(sentences, models, trigram_model, params,
                                  tol=1e-10, max_iter=200, jobs=1):
    """EM-fit the trigram share of the mixture on held-out sentences.

    The mixture log-likelihood is concave in the weight, so the fixed
    point is the global optimum. Returns (weight, log-likelihoods).
    """
    pair_rows = parallel.map_items(
        _pair_row, (models, params, trigram_model), sentences, jobs)
    pairs = [(math.exp(t), math.exp(s)) for row in pair_rows
             for t, s in row]
    if not pairs:
        raise PerplexityError("no tokens to fit the mixture on")
    lam = 0.5
    lls = []
    prev = None
    for _ in range(max_iter):
        ll = 0.0
        resp = 0.0
        for pt, ps in pairs:
            q = lam * pt + (1.0 - lam) * ps
            ll += math.log(q)
            resp += lam * pt / q
        if prev is not None and ll - prev < tol:
            break
        lls.append(ll)
        prev = ll
        lam = resp / len(pairs)
    return lam, lls
