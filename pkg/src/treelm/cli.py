"""Command line front end.

Five subcommands cover the full experiment cycle::

    treelm prepare     raw treebank + rule files -> headed binary corpus
    treelm train       first-pass counts and interpolation weights (E0)
    treelm reestimate  N-best re-estimation passes (E1..)
    treelm ppl         perplexity reports (l2r, sum, viterbi, trigram,
                       interpolated)
    treelm parse       N-best parses for one sentence

Every flag can also be given in a `key=value` config file (--config);
flags override the file. Exit codes: 0 success, 1 data or runtime
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

from . import derivation as dv
from . import perplexity as ppl
from . import smoothing as sm
from . import training
from . import trees as tr
from . import trigram as tg
from .constraints import ConstraintError
from .decoder import DecodeError, SearchParams, decode
from .vocab import (VocabularyError, build_vocabularies, load_vocabularies,
                    save_vocabularies)

log = logging.getLogger("treelm")


class ConfigError(ValueError):
    pass


# every config key: (type, default). Flags mirror these 1:1.
_SPEC = {
    "dev": ("str", None),
    "check": ("str", None),
    "test": ("str", None),
    "percolation_rules": ("str", None),
    "binarization_rules": ("str", None),
    "out_dir": ("str", None),
    "vocab": ("str", None),
    "model_dir": ("str", None),
    "word_cap": ("optint", None),
    "min_count": ("int", 1),
    "epsilon": ("float", 1e-6),
    "em_tol": ("float", 1e-8),
    "em_max_iter": ("int", 100),
    "stack_depth": ("int", 10),
    "logprob_threshold_nats": ("float", 6.91),
    "nbest": ("int", 10),
    "tag_candidates": ("choice:observed,all", "observed"),
    "iterations": ("int", 1),
    "iteration": ("optint", None),
    "jobs": ("int", 1),
    "lambda": ("float", 0.5),
    "mode": ("choice:l2r,sum,viterbi,trigram,interpolated", "l2r"),
    "format": ("choice:human,machine", "human"),
    "out": ("str", None),
    "lattice_dump": ("str", None),
    "reestimate_lambdas": ("bool", False),
    "eval_dev": ("bool", False),
    "random_free": ("bool", True),
}

_BOOL = {"true": True, "1": True, "yes": True,
         "false": False, "0": False, "no": False}


def _convert(key, text):
    kind = _SPEC[key][0]
    text = text.strip()
    if kind.startswith("opt") and text.lower() in ("", "none"):
        return None
    try:
        if kind in ("int", "optint"):
            return int(text)
        if kind in ("float", "optfloat"):
            return float(text)
        if kind == "bool":
            return _BOOL[text.lower()]
        if kind.startswith("choice:"):
            allowed = kind.split(":", 1)[1].split(",")
            if text not in allowed:
                raise KeyError
            return text
        return text
    except (ValueError, KeyError):
        raise ConfigError("bad value %r for %s" % (text, key)) from None


def read_config(path):
    """Parse a key=value config file ('#' comments, blank lines ok)."""
    if not os.path.exists(path):
        raise ConfigError("config file not found: %s" % path)
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected key=value" % (path, lineno))
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _SPEC:
                raise ConfigError("%s:%d: unknown key %r" % (path, lineno, key))
            values[key] = _convert(key, value)
    return values


class RunConfig:
    """Defaults, overlaid with the config file, overlaid with flags."""

    def __init__(self, values):
        self.values = values
        if not values["random_free"]:
            raise ConfigError("the system has no randomness to seed; "
                              "random_free must remain true")

    def __getitem__(self, key):
        return self.values[key]

    def require(self, *keys):
        for key in keys:
            if self.values.get(key) is None:
                raise ConfigError("missing required setting: %s "
                                  "(flag --%s or config key)"
                                  % (key, key.replace("_", "-")))

    def require_files(self, *keys):
        self.require(*keys)
        for key in keys:
            path = self.values[key]
            if not os.path.exists(path):
                raise ConfigError("%s: file not found: %s" % (key, path))

    def search_params(self):
        return SearchParams(stack_depth=self.values["stack_depth"],
                            logprob_threshold=self.values["logprob_threshold_nats"],
                            nbest=self.values["nbest"],
                            tag_candidates=self.values["tag_candidates"])


def build_config(args):
    values = {key: default for key, (_, default) in _SPEC.items()}
    if args.config:
        values.update(read_config(args.config))
    for key in _SPEC:
        given = getattr(args, key, None)
        if given is not None:
            values[key] = given
    return RunConfig(values)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(data, sort_keys=True, indent=2) + "\n")


def _read_sentences(path):
    """Sentences from either a bracketed treebank or one-per-line text."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("("):
        return [t.words() for t in tr.read_treebank(text, normalize=False)]
    return [line.split() for line in text.splitlines() if line.split()]


def _load_headed(path):
    with open(path, "r", encoding="utf-8") as fh:
        trees = tr.read_headed_trees(fh.read())
    if not trees:
        raise tr.TreebankError("%s: no trees" % path)
    return trees


# ---------------------------------------------------------------------------
# subcommands


def cmd_prepare(cfg, stdout):
    cfg.require_files("dev", "check", "percolation_rules", "binarization_rules")
    cfg.require("out_dir")
    if cfg["test"] is not None:
        cfg.require_files("test")
    perc = tr.PercolationRuleSet.from_file(cfg["percolation_rules"])
    binr = tr.BinarizationRuleSet.from_file(cfg["binarization_rules"])
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)

    splits = [("dev", cfg["dev"]), ("check", cfg["check"])]
    if cfg["test"] is not None:
        splits.append(("test", cfg["test"]))
    outputs = {}
    dev_trees = None
    for name, src in splits:
        with open(src, "r", encoding="utf-8") as fh:
            raw = tr.read_treebank(fh.read())
        prepared = []
        for tree in raw:
            headed = tr.prepare_tree(tree, perc, binr)
            tr.validate_headed(headed)
            prepared.append(headed)
        dest = os.path.join(out_dir, name + ".tb")
        with open(dest, "w", encoding="utf-8") as fh:
            for headed in prepared:
                fh.write(tr.write_headed_tree(headed) + "\n")
        outputs[name + ".tb"] = dest
        if name == "dev":
            dev_trees = prepared

    vocabs = build_vocabularies(dev_trees, cfg["word_cap"], cfg["min_count"])
    vocab_path = os.path.join(out_dir, "vocab.txt")
    save_vocabularies(vocabs, vocab_path)
    outputs["vocab.txt"] = vocab_path

    manifest = {
        "command": "prepare",
        "inputs": {key: _sha256(cfg[key]) for key in
                   ("dev", "check", "percolation_rules", "binarization_rules")
                   if cfg[key] is not None},
        "outputs": {name: _sha256(path) for name, path in sorted(outputs.items())},
        "params": {"word_cap": cfg["word_cap"], "min_count": cfg["min_count"]},
    }
    if cfg["test"] is not None:
        manifest["inputs"]["test"] = _sha256(cfg["test"])
    _write_manifest(os.path.join(out_dir, "manifest.json"), manifest)
    for name in sorted(outputs):
        print(outputs[name], file=stdout)
    print(os.path.join(out_dir, "manifest.json"), file=stdout)
    return 0


def _corpus_hashes(cfg, *keys):
    return {key: _sha256(cfg[key]) for key in keys if cfg[key] is not None}


def _dev_eval(state, sentences, cfg):
    models = state.masked()
    params = cfg.search_params()
    jobs = cfg["jobs"]
    l2r = ppl.l2r_ppl(sentences, models, params, jobs=jobs)
    total = ppl.sum_ppl(sentences, models, params, jobs=jobs)
    return {"l2r": l2r.perplexity, "sum": total.perplexity}


def cmd_train(cfg, stdout):
    cfg.require_files("dev", "check", "vocab")
    cfg.require("model_dir")
    vocabs = load_vocabularies(cfg["vocab"])
    dev_trees = _load_headed(cfg["dev"])
    check_trees = _load_headed(cfg["check"])
    state = training.initial_training(
        dev_trees, check_trees, vocabs, epsilon=cfg["epsilon"],
        tol=cfg["em_tol"], max_iter=cfg["em_max_iter"])

    trigram_model = tg.train_trigram(
        [t.words() for t in dev_trees], [t.words() for t in check_trees],
        vocabs, tol=cfg["em_tol"], max_iter=cfg["em_max_iter"])
    os.makedirs(cfg["model_dir"], exist_ok=True)
    sm.save_model(trigram_model, os.path.join(cfg["model_dir"], "trigram.model"))

    dev_ppl = None
    if cfg["eval_dev"]:
        dev_ppl = _dev_eval(state, [t.words() for t in dev_trees], cfg)
    manifest = {
        "command": "train",
        "corpus": _corpus_hashes(cfg, "dev", "check", "vocab"),
        "params": {"epsilon": cfg["epsilon"], "em_tol": cfg["em_tol"],
                   "em_max_iter": cfg["em_max_iter"]},
        "dev_perplexity": dev_ppl,
        "skipped": [],
    }
    path = training.save_checkpoint(state, cfg["model_dir"], manifest)
    print("checkpoint %s" % path, file=stdout)
    if dev_ppl is not None:
        print("dev-l2r-ppl %.4f" % dev_ppl["l2r"], file=stdout)
        print("dev-sum-ppl %.4f" % dev_ppl["sum"], file=stdout)
    return 0


def cmd_reestimate(cfg, stdout):
    cfg.require_files("dev", "vocab")
    cfg.require("model_dir")
    vocabs = load_vocabularies(cfg["vocab"])
    latest = training.latest_iteration(cfg["model_dir"])
    if latest is None:
        raise training.TrainingError(
            "no checkpoint in %s; run `treelm train` first" % cfg["model_dir"])
    target = cfg["iterations"]
    if latest >= target:
        print("nothing to do: checkpoint iter_%03d already present"
              % latest, file=stdout)
        return 0

    dev_trees = _load_headed(cfg["dev"])
    sentences = [t.words() for t in dev_trees]  # words only from here on
    check_tables = None
    if cfg["reestimate_lambdas"]:
        cfg.require_files("check")
        check_tables = training.gather_tables(_load_headed(cfg["check"]), vocabs)

    state = training.load_checkpoint(cfg["model_dir"], latest, vocabs)
    params = cfg.search_params()
    corpus = _corpus_hashes(cfg, "dev", "vocab")
    run_params = {"stack_depth": cfg["stack_depth"],
                  "logprob_threshold_nats": cfg["logprob_threshold_nats"],
                  "nbest": cfg["nbest"], "tag_candidates": cfg["tag_candidates"],
                  "reestimate_lambdas": cfg["reestimate_lambdas"]}
    for _ in range(latest + 1, target + 1):
        state, report = training.reestimation_iteration(
            state, sentences, params, jobs=cfg["jobs"],
            check_tables=check_tables)
        manifest = {
            "command": "reestimate",
            "corpus": corpus,
            "params": run_params,
            # measured by the decoding model, i.e. the previous iteration
            "dev_perplexity": {"l2r": report.dev_l2r.perplexity,
                               "sum": report.dev_sum.perplexity,
                               "model_iteration": report.measured_iteration},
            "skipped": [[i, msg] for i, msg in report.skipped],
        }
        path = training.save_checkpoint(state, cfg["model_dir"], manifest)
        print("checkpoint %s dev-l2r-ppl[iter_%03d] %.4f dev-sum-ppl[iter_%03d] "
              "%.4f skipped %d"
              % (path, report.measured_iteration, report.dev_l2r.perplexity,
                 report.measured_iteration, report.dev_sum.perplexity,
                 len(report.skipped)), file=stdout)
    return 0


def _load_state(cfg, vocabs):
    iteration = cfg["iteration"]
    if iteration is None:
        iteration = training.latest_iteration(cfg["model_dir"])
        if iteration is None:
            raise training.TrainingError(
                "no checkpoint in %s" % cfg["model_dir"])
    return training.load_checkpoint(cfg["model_dir"], iteration, vocabs)


def cmd_ppl(cfg, stdout):
    cfg.require_files("test", "vocab")
    cfg.require("model_dir")
    vocabs = load_vocabularies(cfg["vocab"])
    sentences = _read_sentences(cfg["test"])
    mode = cfg["mode"]
    jobs = cfg["jobs"]

    if mode == "trigram":
        model = sm.load_model(os.path.join(cfg["model_dir"], "trigram.model"),
                              vocabs)
        report = ppl.trigram_ppl(sentences, model, jobs=jobs)
    else:
        state = _load_state(cfg, vocabs)
        models = state.masked()
        params = cfg.search_params()
        if mode == "l2r":
            report = ppl.l2r_ppl(sentences, models, params, jobs=jobs)
        elif mode == "sum":
            report = ppl.sum_ppl(sentences, models, params, jobs=jobs)
        elif mode == "viterbi":
            report = ppl.viterbi_ppl_diagnostic(sentences, models, params,
                                                jobs=jobs)
        else:
            trigram_model = sm.load_model(
                os.path.join(cfg["model_dir"], "trigram.model"), vocabs)
            report = ppl.interpolated_ppl(sentences, models, trigram_model,
                                          cfg["lambda"], params, jobs=jobs)

    text = report.to_machine() if cfg["format"] == "machine" else report.to_text()
    stdout.write(text)
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def cmd_parse(cfg, words, stdout):
    cfg.require_files("vocab")
    cfg.require("model_dir")
    if not words:
        raise ConfigError("parse needs a sentence (word word ...)")
    vocabs = load_vocabularies(cfg["vocab"])
    state = _load_state(cfg, vocabs)
    result = decode(words, state.masked(), cfg.search_params(),
                    collect_lattice=cfg["lattice_dump"] is not None)
    for hyp in result.nbest:
        print("%s\t%s" % (repr(hyp.logp), tr.write_headed_tree(hyp.tree())),
              file=stdout)
    if cfg["lattice_dump"] is not None:
        with open(cfg["lattice_dump"], "w", encoding="utf-8") as fh:
            for line in result.lattice:
                fh.write(line + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _add_flags(parser, keys):
    for key in keys:
        kind = _SPEC[key][0]
        flag = "--" + key.replace("_", "-")
        if kind in ("int", "optint"):
            parser.add_argument(flag, dest=key, type=int, default=None)
        elif kind in ("float", "optfloat"):
            parser.add_argument(flag, dest=key, type=float, default=None)
        elif kind == "bool":
            parser.add_argument(flag, dest=key, default=None,
                                type=lambda s: _convert_bool_flag(s))
        elif kind.startswith("choice:"):
            parser.add_argument(flag, dest=key, default=None,
                                choices=kind.split(":", 1)[1].split(","))
        else:
            parser.add_argument(flag, dest=key, default=None)


def _convert_bool_flag(text):
    value = _BOOL.get(text.lower())
    if value is None:
        raise argparse.ArgumentTypeError("expected true or false")
    return value


_COMMON = ("jobs", "random_free")
_SEARCH = ("stack_depth", "logprob_threshold_nats", "nbest", "tag_candidates")

_COMMANDS = {
    "prepare": ("dev", "check", "test", "percolation_rules",
                "binarization_rules", "out_dir", "word_cap", "min_count"),
    "train": ("dev", "check", "vocab", "model_dir", "epsilon", "em_tol",
              "em_max_iter", "eval_dev") + _SEARCH,
    "reestimate": ("dev", "check", "vocab", "model_dir", "iterations",
                   "reestimate_lambdas") + _SEARCH,
    "ppl": ("test", "vocab", "model_dir", "mode", "lambda", "iteration",
            "format", "out") + _SEARCH,
    "parse": ("vocab", "model_dir", "iteration", "lattice_dump") + _SEARCH,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="treelm",
        description="structured language model toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, keys in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="key=value file; flags override it")
        _add_flags(p, keys + _COMMON)
        if name == "parse":
            p.add_argument("words", nargs="*",
                           help="the sentence, one token per argument")
    return parser


_DATA_ERRORS = (tr.TreebankError, tr.RuleFileError, VocabularyError,
                sm.SmoothingError, sm.ModelFileError, dv.DerivationError,
                ConstraintError, DecodeError, training.TrainingError,
                ppl.PerplexityError, OSError, json.JSONDecodeError)


def main(argv=None, stdout=None):
    stdout = stdout if stdout is not None else sys.stdout
    logging.basicConfig(format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "prepare":
            return cmd_prepare(cfg, stdout)
        if args.command == "train":
            return cmd_train(cfg, stdout)
        if args.command == "reestimate":
            return cmd_reestimate(cfg, stdout)
        if args.command == "ppl":
            return cmd_ppl(cfg, stdout)
        return cmd_parse(cfg, args.words, stdout)
    except ConfigError as err:
        print("config error: %s" % err, file=sys.stderr)
        return 2
    except _DATA_ERRORS as err:
        print("error: %s" % err, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
