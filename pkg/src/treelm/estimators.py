"""scikit-learn style wrappers around the toolkit.

Three estimators: ``TreebankBinarizer`` turns raw bracketed trees into
the headed binary representation, ``StructuredLanguageModel`` trains the
joint word/parse model (with a ``reestimate`` method for the N-best
refinement passes), and ``TrigramLanguageModel`` is the interpolated
trigram baseline. All follow the fit/transform/predict conventions, so
they compose with pipelines and `get_params` round-trips.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import perplexity as ppl
from . import trees as tr
from .decoder import SearchParams, decode
from .smoothing import DEFAULT_BUCKET_BOUNDARIES
from .training import initial_training, reestimation_iteration
from .trigram import train_trigram, trigram_probability
from .vocab import (RESERVED_WORDS, build_vocabularies, word_vocabulary)

DEFAULT_PERCOLATION = "DEFAULT right-to-left\n"
DEFAULT_BINARIZATION = "DEFAULT A\n"


def as_raw_trees(X):
    """Coerce a sequence of RawTree or single-tree bracketed strings."""
    out = []
    for i, item in enumerate(X):
        if isinstance(item, tr.RawTree):
            out.append(item)
        elif isinstance(item, str):
            parsed = tr.read_treebank(item)
            if len(parsed) != 1:
                raise ValueError("item %d holds %d trees, expected exactly 1"
                                 % (i, len(parsed)))
            out.append(parsed[0])
        else:
            raise TypeError("item %d: expected RawTree or bracketed string, "
                            "got %s" % (i, type(item).__name__))
    if not out:
        raise ValueError("empty tree sequence")
    return out


def as_headed_trees(X):
    out = list(X)
    if not out:
        raise ValueError("empty tree sequence")
    for i, item in enumerate(out):
        if not isinstance(item, tr.HeadedTree):
            raise TypeError("item %d: expected HeadedTree (run "
                            "TreebankBinarizer first), got %s"
                            % (i, type(item).__name__))
        tr.validate_headed(item)
    return out


def as_sentences(X):
    """Coerce token lists / whitespace-separated strings; reject reserved
    symbols, which only the model itself may emit."""
    out = []
    for i, item in enumerate(X):
        words = item.split() if isinstance(item, str) else list(item)
        if not words:
            raise ValueError("item %d: empty sentence" % i)
        for w in words:
            if not isinstance(w, str) or not w or w.split() != [w]:
                raise ValueError("item %d: bad token %r" % (i, w))
            if w in RESERVED_WORDS:
                raise ValueError("item %d: token %r is reserved" % (i, w))
        out.append(words)
    if not out:
        raise ValueError("empty sentence sequence")
    return out


def _split_check(items, check):
    """Default held-out split: every 10th item when none is supplied."""
    if check is not None:
        check = list(check)
        if not check:
            raise ValueError("check set is empty")
        return list(items), check
    if len(items) < 2:
        raise ValueError("need at least 2 items to hold out a check set")
    dev = [x for i, x in enumerate(items) if i % 10 != 0]
    held = [x for i, x in enumerate(items) if i % 10 == 0]
    return dev, held


class TreebankBinarizer(TransformerMixin, BaseEstimator):
    """Percolate headwords and binarize raw treebank trees.

    Parameters are the two rule files as text (same format as on disk:
    `PARENT direction child-priorities` and `PARENT A|B`, with a DEFAULT
    line; '#' starts a comment).
    """

    def __init__(self, percolation_rules=DEFAULT_PERCOLATION,
                 binarization_rules=DEFAULT_BINARIZATION):
        self.percolation_rules = percolation_rules
        self.binarization_rules = binarization_rules

    def fit(self, X, y=None):
        self.percolation_ = tr.PercolationRuleSet.from_text(self.percolation_rules)
        self.binarization_ = tr.BinarizationRuleSet.from_text(self.binarization_rules)
        return self

    def transform(self, X):
        check_is_fitted(self, "percolation_")
        out = []
        for raw in as_raw_trees(X):
            headed = tr.prepare_tree(raw, self.percolation_, self.binarization_)
            tr.validate_headed(headed)
            out.append(headed)
        return out


class StructuredLanguageModel(BaseEstimator):
    """The joint word/parse model, fit on headed binary trees.

    ``fit`` runs the supervised initialization (counts from the unique
    tree derivations, interpolation weights by EM on held-out counts);
    ``reestimate`` runs N-best re-estimation passes over raw sentences.
    ``predict`` returns the best parse per sentence; ``score`` is the
    mean per-token log-probability of the causal word model.
    """

    def __init__(self, word_cap=None, min_count=1, epsilon=1e-6,
                 bucket_boundaries=DEFAULT_BUCKET_BOUNDARIES,
                 stack_depth=10, logprob_threshold=6.91, nbest=10,
                 tag_candidates="observed", em_tol=1e-8, em_max_iter=100,
                 jobs=1):
        self.word_cap = word_cap
        self.min_count = min_count
        self.epsilon = epsilon
        self.bucket_boundaries = bucket_boundaries
        self.stack_depth = stack_depth
        self.logprob_threshold = logprob_threshold
        self.nbest = nbest
        self.tag_candidates = tag_candidates
        self.em_tol = em_tol
        self.em_max_iter = em_max_iter
        self.jobs = jobs

    def fit(self, X, y=None, check=None):
        """X: headed binary trees. check: held-out trees for the
        interpolation-weight EM (default: every 10th tree of X)."""
        trees = as_headed_trees(X)
        dev, held = _split_check(trees, check)
        if check is not None:
            held = as_headed_trees(held)
        self.vocabs_ = build_vocabularies(dev, self.word_cap, self.min_count)
        self.state_ = initial_training(
            dev, held, self.vocabs_, epsilon=self.epsilon,
            boundaries=tuple(self.bucket_boundaries),
            tol=self.em_tol, max_iter=self.em_max_iter)
        self.dev_words_ = [t.words() for t in dev]
        self.history_ = []
        return self

    def search_params(self, **overrides):
        fields = dict(stack_depth=self.stack_depth,
                      logprob_threshold=self.logprob_threshold,
                      nbest=self.nbest, tag_candidates=self.tag_candidates)
        fields.update(overrides)
        return SearchParams(**fields)

    def reestimate(self, X=None, iterations=1):
        """Run N-best re-estimation passes; X defaults to the fit words."""
        check_is_fitted(self, "state_")
        sentences = self.dev_words_ if X is None else as_sentences(X)
        params = self.search_params()
        for _ in range(iterations):
            self.state_, report = reestimation_iteration(
                self.state_, sentences, params, jobs=self.jobs)
            self.history_.append(report)
        return self

    @property
    def n_iterations_(self):
        check_is_fitted(self, "state_")
        return self.state_.iteration

    def perplexity(self, X, mode="l2r", trigram=None, lam=0.5):
        """PplReport on raw sentences; mode l2r, sum, viterbi or
        interpolated (the latter needs the fitted trigram baseline)."""
        check_is_fitted(self, "state_")
        sentences = as_sentences(X)
        models = self.state_.masked()
        params = self.search_params()
        if mode == "l2r":
            return ppl.l2r_ppl(sentences, models, params, jobs=self.jobs)
        if mode == "sum":
            return ppl.sum_ppl(sentences, models, params, jobs=self.jobs)
        if mode == "viterbi":
            return ppl.viterbi_ppl_diagnostic(sentences, models, params,
                                              jobs=self.jobs)
        if mode == "interpolated":
            if trigram is None:
                raise ValueError("interpolated mode needs trigram=")
            model = trigram.model_ if isinstance(trigram, TrigramLanguageModel) \
                else trigram
            return ppl.interpolated_ppl(sentences, models, model, lam, params,
                                        jobs=self.jobs)
        raise ValueError("unknown mode %r" % mode)

    def score(self, X, y=None):
        report = self.perplexity(X, mode="l2r")
        return report.logprob / report.tokens

    def parse(self, sentence, nbest=None):
        """N-best (log-probability, headed tree) pairs for one sentence."""
        check_is_fitted(self, "state_")
        words = as_sentences([sentence])[0]
        params = self.search_params(**({} if nbest is None
                                       else {"nbest": nbest}))
        result = decode(words, self.state_.masked(), params)
        return [(hyp.logp, hyp.tree()) for hyp in result.nbest]

    def predict(self, X):
        """Best parse (headed tree) for each sentence."""
        check_is_fitted(self, "state_")
        return [self.parse(s, nbest=1)[0][1] for s in as_sentences(X)]


class TrigramLanguageModel(BaseEstimator):
    """Deleted-interpolation trigram baseline over the same machinery."""

    def __init__(self, word_cap=None, min_count=1,
                 bucket_boundaries=DEFAULT_BUCKET_BOUNDARIES,
                 em_tol=1e-8, em_max_iter=100):
        self.word_cap = word_cap
        self.min_count = min_count
        self.bucket_boundaries = bucket_boundaries
        self.em_tol = em_tol
        self.em_max_iter = em_max_iter

    def fit(self, X, y=None, check=None):
        sentences = as_sentences(X)
        dev, held = _split_check(sentences, check)
        if check is not None:
            held = as_sentences(held)
        self.vocabs_ = word_vocabulary(dev, self.word_cap, self.min_count)
        self.model_ = train_trigram(dev, held, self.vocabs_,
                                    boundaries=tuple(self.bucket_boundaries),
                                    tol=self.em_tol, max_iter=self.em_max_iter)
        return self

    def probability(self, word, prev, prev2):
        check_is_fitted(self, "model_")
        return trigram_probability(self.model_, word, prev, prev2)

    def perplexity(self, X):
        check_is_fitted(self, "model_")
        return ppl.trigram_ppl(as_sentences(X), self.model_)

    def score(self, X, y=None):
        report = self.perplexity(X)
        return report.logprob / report.tokens
