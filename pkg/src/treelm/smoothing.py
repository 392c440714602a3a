"""Count tables, recursive deleted interpolation, and tied-weight EM.

Each model component (word predictor, tagger, parser, and the trigram
baseline) is a conditional table smoothed the same way: relative
frequencies of decreasing context order are mixed recursively,
P(y|x1..xn) = lam * P(y|x1..xn-1) + (1-lam) * f(y|x1..xn), grounded at
the uniform distribution over the outcome vocabulary. The mixing weight
lam depends on the context only through the bucketed range of its
training count; buckets are tied per order and the weights are fit by
EM on counts from held-out check data.
"""

from __future__ import annotations

import math
from bisect import bisect_right

from . import derivation as dv
from .vocab import Vocabularies


class SmoothingError(ValueError):
    pass


TRIGRAM = "trigram"

# context tuple length per component; truncation drops symbols from the right
COMPONENT_ORDER = {
    dv.WORD_PREDICTOR: 4,
    dv.TAGGER: 3,
    dv.PARSER: 4,
    TRIGRAM: 2,
}

# count ranges {0}, (0,2), [2,4), ..., [4096, inf); the first boundary is
# open below so fractional re-estimation counts in (0,1) land in a bucket
DEFAULT_BUCKET_BOUNDARIES = tuple(2 ** i for i in range(1, 13))


def bucket_index(count, boundaries=DEFAULT_BUCKET_BOUNDARIES):
    if count < 0:
        raise SmoothingError("negative count %r" % count)
    if count == 0:
        return 0
    return 1 + bisect_right(boundaries, count)


def bucket_count(boundaries):
    return len(boundaries) + 2


class CountTable:
    """Per-order joint counts for one component.

    Order n holds counts keyed by (context[:n], outcome); accumulating
    one event touches every order, so the lower-order tables are the
    right-truncation aggregates of the top one. Marginals are rebuilt
    lazily by summing outcome counts in sorted key order, which keeps
    them independent of accumulation and file order.
    """

    __slots__ = ("component", "order", "joint", "_marginals")

    def __init__(self, component, order=None):
        if component not in COMPONENT_ORDER:
            raise SmoothingError("unknown component %r" % component)
        self.component = component
        self.order = COMPONENT_ORDER[component] if order is None else order
        self.joint = [{} for _ in range(self.order + 1)]
        self._marginals = None

    def accumulate(self, event, weight=1.0):
        if weight < 0:
            raise SmoothingError("negative event weight %r" % weight)
        if event.component != self.component:
            raise SmoothingError("event for %r accumulated into %r table"
                                 % (event.component, self.component))
        if len(event.context) != self.order:
            raise SmoothingError(
                "context %r has length %d, component %r needs %d"
                % (event.context, len(event.context), self.component,
                   self.order))
        if weight == 0:
            return
        for n in range(self.order + 1):
            ctx = event.context[:n]
            by_outcome = self.joint[n].get(ctx)
            if by_outcome is None:
                by_outcome = self.joint[n][ctx] = {}
            by_outcome[event.outcome] = by_outcome.get(event.outcome, 0.0) \
                + weight
        self._marginals = None

    def accumulate_all(self, events, weight=1.0):
        for ev in events:
            self.accumulate(ev, weight)

    def _ensure_marginals(self):
        if self._marginals is None:
            self._marginals = [
                {ctx: math.fsum(by_outcome[y] for y in sorted(by_outcome))
                 for ctx, by_outcome in table.items()}
                for table in self.joint
            ]
        return self._marginals

    def marginal(self, n, ctx):
        return self._ensure_marginals()[n].get(ctx, 0.0)

    def count(self, n, ctx, outcome):
        by_outcome = self.joint[n].get(ctx)
        return by_outcome.get(outcome, 0.0) if by_outcome else 0.0

    def rel_freq(self, n, ctx, outcome):
        c = self.marginal(n, ctx)
        if c == 0:
            raise SmoothingError("relative frequency of unseen context %r"
                                 % (ctx,))
        return self.count(n, ctx, outcome) / c

    def outcomes(self, n, ctx):
        """Outcomes observed for a context, sorted."""
        by_outcome = self.joint[n].get(ctx)
        return tuple(sorted(by_outcome)) if by_outcome else ()

    def entries(self, n):
        """Sorted (ctx, outcome, count) triples at order n."""
        for ctx in sorted(self.joint[n]):
            by_outcome = self.joint[n][ctx]
            for y in sorted(by_outcome):
                yield ctx, y, by_outcome[y]

    def total(self):
        return self.marginal(0, ())

    def is_empty(self):
        return not self.joint[0]

    def __eq__(self, other):
        if not isinstance(other, CountTable):
            return NotImplemented
        return (self.component == other.component and self.order == other.order
                and self.joint == other.joint)

    @classmethod
    def from_events(cls, component, events, weight=1.0):
        table = cls(component)
        table.accumulate_all(events, weight)
        return table


def merge_counts(a, b):
    """Pointwise sum of two tables for the same component."""
    if a.component != b.component or a.order != b.order:
        raise SmoothingError(
            "cannot merge %r/order-%d with %r/order-%d"
            % (a.component, a.order, b.component, b.order))
    out = CountTable(a.component, a.order)
    for n in range(a.order + 1):
        table = out.joint[n]
        for src in (a, b):
            for ctx, by_outcome in src.joint[n].items():
                dst = table.get(ctx)
                if dst is None:
                    dst = table[ctx] = {}
                for y, c in by_outcome.items():
                    dst[y] = dst.get(y, 0.0) + c
    return out


class InterpolationWeights:
    """Per-order, per-count-bucket mixing weights.

    values[n][b] is the weight given to the order-(n-1) recursion at an
    order-n context whose training count falls in bucket b. Bucket 0
    (count zero, the unseen-context case) is pinned at 1: an unseen
    context contributes nothing of its own.
    """

    __slots__ = ("boundaries", "values")

    def __init__(self, boundaries, values):
        self.boundaries = tuple(boundaries)
        if any(b <= 0 for b in self.boundaries) or \
                list(self.boundaries) != sorted(set(self.boundaries)):
            raise SmoothingError("bucket boundaries must be positive and "
                                 "strictly increasing")
        nb = bucket_count(self.boundaries)
        vals = []
        for n, row in enumerate(values):
            row = tuple(row)
            if len(row) != nb:
                raise SmoothingError("order %d has %d weights, expected %d"
                                     % (n, len(row), nb))
            if any(not 0.0 <= v <= 1.0 for v in row):
                raise SmoothingError("weights must lie in [0, 1]")
            if row[0] != 1.0:
                raise SmoothingError(
                    "bucket 0 (unseen context) must have weight 1")
            vals.append(row)
        self.values = tuple(vals)

    @property
    def order(self):
        return len(self.values) - 1

    def value(self, n, bucket):
        return self.values[n][bucket]

    def for_count(self, n, count):
        return self.values[n][bucket_index(count, self.boundaries)]

    def __eq__(self, other):
        if not isinstance(other, InterpolationWeights):
            return NotImplemented
        return (self.boundaries == other.boundaries
                and self.values == other.values)

    @classmethod
    def uniform(cls, order, boundaries=DEFAULT_BUCKET_BOUNDARIES, lam=0.5):
        nb = bucket_count(boundaries)
        row = (1.0,) + (lam,) * (nb - 1)
        return cls(boundaries, [row] * (order + 1))


class ComponentModel:
    """A smoothed conditional model: counts, weights, outcome vocabulary.

    epsilon is the halting floor mixed onto end-of-sentence prediction;
    it is stored with every component for a uniform file header but only
    the word predictor's masking consults it.
    """

    __slots__ = ("component", "vocabs", "table", "weights", "epsilon",
                 "_outcomes", "_uniform")

    def __init__(self, component, vocabs, table, weights, epsilon=0.0):
        if component not in COMPONENT_ORDER:
            raise SmoothingError("unknown component %r" % component)
        if table.component != component:
            raise SmoothingError("table component %r under model %r"
                                 % (table.component, component))
        if weights.order != table.order:
            raise SmoothingError("weights cover order %d, table needs %d"
                                 % (weights.order, table.order))
        if not 0.0 <= epsilon < 1.0:
            raise SmoothingError("epsilon must lie in [0, 1)")
        self.component = component
        self.vocabs = vocabs
        self.table = table
        self.weights = weights
        self.epsilon = epsilon
        self._outcomes = frozenset(self.outcome_vocabulary())
        self._uniform = 1.0 / len(self._outcomes)

    @property
    def order(self):
        return self.table.order

    def outcome_vocabulary(self):
        if self.component in (dv.WORD_PREDICTOR, TRIGRAM):
            return tuple(self.vocabs.words)
        if self.component == dv.TAGGER:
            return tuple(self.vocabs.tags)
        return tuple(dv.action_vocabulary(self.vocabs.labels))

    def probability(self, y, context):
        """The interpolated P(y | context); context at full order."""
        if y not in self._outcomes:
            raise SmoothingError("outcome %r not in the %s vocabulary"
                                 % (y, self.component))
        if len(context) != self.order:
            raise SmoothingError("context %r has length %d, expected %d"
                                 % (context, len(context), self.order))
        p = self._uniform
        table, weights = self.table, self.weights
        for n in range(self.order + 1):
            ctx = context[:n]
            c = table.marginal(n, ctx)
            if c == 0.0:
                continue  # unseen context: weight 1 on the lower order
            lam = weights.for_count(n, c)
            f = table.count(n, ctx, y) / c
            p = lam * p + (1.0 - lam) * f
        return p

    def distribution(self, context):
        """{y: P(y|context)} over the whole outcome vocabulary."""
        return {y: self.probability(y, context)
                for y in self.outcome_vocabulary()}

    def with_weights(self, weights):
        return ComponentModel(self.component, self.vocabs, self.table,
                              weights, self.epsilon)


def em_interpolation_weights(train, check, outcome_count,
                             boundaries=DEFAULT_BUCKET_BOUNDARIES,
                             tol=1e-8, max_iter=100, init=0.5):
    """Fit tied interpolation weights by EM on check-data counts.

    Returns (weights, log_likelihoods, converged). The trajectory lists
    the check log-likelihood of each accepted iterate; an iteration
    whose relative improvement falls below tol stops the loop without
    being recorded, so the trajectory is non-decreasing by construction.
    Orders whose context was never seen in training take no parameter
    (weight 1 is forced at lookup time), and bucket 0 stays pinned.
    """
    if check.is_empty():
        raise SmoothingError("check counts are empty")
    if train.component != check.component or train.order != check.order:
        raise SmoothingError("train and check tables disagree on schema")
    order = train.order
    nb = bucket_count(boundaries)
    lam = [[1.0] + [init] * (nb - 1) for _ in range(order + 1)]
    uniform = 1.0 / outcome_count

    # precompute per check event: weight, f_n and bucket at each active order
    events = []
    for ctx, y, c_check in check.entries(order):
        levels = []
        for n in range(order + 1):
            ctxn = ctx[:n]
            c_train = train.marginal(n, ctxn)
            if c_train == 0.0:
                continue
            b = bucket_index(c_train, boundaries)
            levels.append((n, b, train.count(n, ctxn, y) / c_train))
        events.append((c_check, levels))

    lls = []
    converged = False
    prev = None
    for _ in range(max_iter):
        ll = 0.0
        num = [[0.0] * nb for _ in range(order + 1)]
        den = [[0.0] * nb for _ in range(order + 1)]
        for c_check, levels in events:
            # mixture weight of stopping at each level, top order first
            stops = []
            carry = 1.0
            for n, b, f in reversed(levels):
                l = lam[n][b]
                stops.append((1.0 - l) * carry * f)
                carry *= l
            stops.reverse()
            p_uniform = carry * uniform
            p = math.fsum(stops) + p_uniform
            ll += c_check * math.log(p)
            cum = p_uniform / p
            for (n, b, _f), stop in zip(levels, stops):
                q = stop / p
                num[n][b] += c_check * cum
                den[n][b] += c_check * (cum + q)
                cum += q
        if prev is not None and ll - prev < tol * max(1.0, abs(prev)):
            converged = True
            break
        lls.append(ll)
        prev = ll
        for n in range(order + 1):
            for b in range(1, nb):
                if den[n][b] > 0.0:
                    lam[n][b] = num[n][b] / den[n][b]
    weights = InterpolationWeights(boundaries, [tuple(row) for row in lam])
    return weights, lls, converged


def estimate_lambdas(train, check, outcome_count,
                     boundaries=DEFAULT_BUCKET_BOUNDARIES,
                     tol=1e-8, max_iter=100):
    """EM-fit interpolation weights; see em_interpolation_weights."""
    weights, _, _ = em_interpolation_weights(train, check, outcome_count,
                                             boundaries, tol, max_iter)
    return weights


# ---------------------------------------------------------------------------
# model files

FORMAT_NAME = "treelm-model"
FORMAT_VERSION = "1"


class ModelFileError(ValueError):
    pass


def save_model(model, path):
    """Write a component model as versioned text; counts keep full
    precision (repr) so a load/save cycle is byte-identical."""
    lines = [
        "%s\t%s" % (FORMAT_NAME, FORMAT_VERSION),
        "component\t%s" % model.component,
        "order\t%d" % model.order,
        "epsilon\t%s" % repr(model.epsilon),
    ]
    for kind, digest in zip(("words", "tags", "labels"),
                            model.vocabs.digests()):
        lines.append("vocab\t%s\t%s" % (kind, digest))
    lines.append("buckets\t" + "\t".join(repr(b)
                                         for b in model.weights.boundaries))
    for n, row in enumerate(model.weights.values):
        lines.append("lambda\t%d\t%s" % (n, "\t".join(repr(v) for v in row)))
    lines.append("counts")
    for n in range(model.order + 1):
        for ctx, y, c in model.table.entries(n):
            lines.append("\t".join((str(n),) + ctx + (y, repr(c))))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _number(text):
    value = float(text)
    return int(value) if value == int(value) and "." not in text \
        and "e" not in text and "E" not in text else value


def load_model(path, vocabs):
    """Read a model file back; vocab digests must match ``vocabs``."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split("\t") != [FORMAT_NAME, FORMAT_VERSION]:
        raise ModelFileError("%s: not a %s version %s file"
                             % (path, FORMAT_NAME, FORMAT_VERSION))
    header = {}
    lambdas = {}
    body_at = None
    for i, line in enumerate(lines[1:], start=1):
        if line == "counts":
            body_at = i + 1
            break
        fields = line.split("\t")
        if fields[0] == "lambda":
            lambdas[int(fields[1])] = tuple(float(v) for v in fields[2:])
        elif fields[0] == "vocab":
            header.setdefault("vocab", {})[fields[1]] = fields[2]
        elif fields[0] == "buckets":
            header["buckets"] = tuple(_number(v) for v in fields[1:])
        else:
            header[fields[0]] = fields[1]
    if body_at is None:
        raise ModelFileError("%s: missing counts section" % path)
    component = header.get("component")
    if component not in COMPONENT_ORDER:
        raise ModelFileError("%s: unknown component %r" % (path, component))
    order = int(header["order"])
    stored = header.get("vocab", {})
    for kind, digest in zip(("words", "tags", "labels"), vocabs.digests()):
        if stored.get(kind) != digest:
            raise ModelFileError(
                "%s: %s vocabulary hash %s does not match the loaded "
                "vocabulary (%s)" % (path, kind, stored.get(kind), digest))
    weights = InterpolationWeights(
        header["buckets"], [lambdas[n] for n in range(order + 1)])
    table = CountTable(component, order)
    for lineno, line in enumerate(lines[body_at:], start=body_at + 1):
        if not line:
            continue
        fields = line.split("\t")
        n = int(fields[0])
        if len(fields) != n + 3:
            raise ModelFileError("%s:%d: order-%d line needs %d fields"
                                 % (path, lineno, n, n + 3))
        ctx, y, c = tuple(fields[1:1 + n]), fields[1 + n], float(fields[2 + n])
        by_outcome = table.joint[n].setdefault(ctx, {})
        by_outcome[y] = by_outcome.get(y, 0.0) + c
    table._marginals = None
    return ComponentModel(component, vocabs, table, weights,
                          float(header["epsilon"]))
