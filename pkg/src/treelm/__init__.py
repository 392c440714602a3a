"""A structured language model toolkit.

Train a joint word/parse generative model from headword-annotated
binary treebanks, decode left-to-right with a synchronous multi-stack
beam search, evaluate word-level perplexity several ways, re-estimate
the counts from weighted N-best derivations, and compare against a
deleted-interpolation trigram baseline.
"""

from .constraints import ConstraintLayer, MaskedModels
from .decoder import DecodeResult, SearchParams, decode, nbest_with_phi
from .derivation import (Derivation, DerivationError, WordParsePrefix,
                         derivation_to_tree, legal_actions, tree_to_derivation)
from .estimators import (StructuredLanguageModel, TreebankBinarizer,
                         TrigramLanguageModel)
from .perplexity import (PplReport, interpolated_ppl, l2r_ppl, sum_ppl,
                         trigram_ppl, viterbi_ppl_diagnostic)
from .smoothing import (ComponentModel, CountTable, InterpolationWeights,
                        estimate_lambdas, load_model, save_model)
from .training import (TrainingState, initial_training, load_checkpoint,
                       reestimation_iteration, save_checkpoint)
from .trees import (BinarizationRuleSet, HeadedTree, PercolationRuleSet,
                    RawTree, binarize, percolate, prepare_tree, read_treebank,
                    write_headed_tree, write_tree)
from .trigram import train_trigram
from .vocab import Vocabularies, build_vocabularies, load_vocabularies, save_vocabularies

__version__ = "0.1.0"

__all__ = [
    "BinarizationRuleSet", "ComponentModel", "ConstraintLayer", "CountTable",
    "DecodeResult", "Derivation", "DerivationError", "HeadedTree",
    "InterpolationWeights", "MaskedModels", "PercolationRuleSet", "PplReport",
    "RawTree", "SearchParams", "StructuredLanguageModel", "TrainingState",
    "TreebankBinarizer", "TrigramLanguageModel", "Vocabularies",
    "WordParsePrefix", "binarize", "build_vocabularies", "decode",
    "derivation_to_tree", "estimate_lambdas", "initial_training",
    "interpolated_ppl", "l2r_ppl", "legal_actions", "load_checkpoint",
    "load_model", "load_vocabularies", "nbest_with_phi", "percolate",
    "prepare_tree", "read_treebank", "reestimation_iteration",
    "save_checkpoint", "save_model", "save_vocabularies", "sum_ppl",
    "train_trigram", "tree_to_derivation", "trigram_ppl",
    "viterbi_ppl_diagnostic", "write_headed_tree", "write_tree",
]
