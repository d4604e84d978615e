"""Max-margin constituency parsing with exact F1 loss-augmented inference."""

from .treebank import (BracketParseError, Constituent, CountingConfig,
                       CountingMode, GoldReference, Tree, constituents,
                       parse_bracketed, preprocess, read_treebank,
                       write_bracketed, write_treebank)
from .grammar import (BinConfig, BinaryRule, Grammar, LexicalRule, RootRule,
                      binarize_tree, debinarize_tree, induce, read_grammar,
                      unk_signature, wrap_root, write_grammar)
from .chart import (FeatureVector, Model, cky_parse, feature_diff,
                    feature_vector, model_from_text, model_to_text,
                    read_model, score, write_model)
from .lossdp import (ALL_MODES, F1_BINARIZED, F1_UNBINARIZED, FP_BINARIZED,
                     ZERO_ONE_BINARIZED, LAIResult, LossKind, LossMode,
                     brute_force_best, count_tree, delta, delta_value,
                     enumerate_parses, f1, loss_augmented_infer,
                     parse_loss_mode)
from .ssvm import (Constraint, TrainConfig, TrainReport, WorkingSet,
                   solve_restricted_qp, train, violation)
from .metrics import (EvalResult, WilcoxonMethod, WilcoxonResult, evaluate,
                      loss_difference_export, wilcoxon_signed_rank)
from .pipeline import (build_examples, parse_corpus, preprocess_corpus,
                       run_protocol, train_pipeline)

__version__ = "0.1.0"
