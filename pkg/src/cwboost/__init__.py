"""Column-generation multi-class boosting with class-wise decision stumps and
a closed-form coordinate-descent solver."""

from .backends import available_backends, current_backend, use_backend
from .data_io import (DataError, LabelMap, load_csv, load_libsvm, load_model,
                      save_model, split)
from .model import (ALGORITHMS, Dataset, Model, Stump, TrainConfig, class_score,
                    evaluate_stump, margin, predict, predict_batch,
                    primal_objective, score_matrix)
from .solver import (DeltaCodes, SolverStats, build_delta_codes,
                     closed_form_update, edge_sums, init_mu, solve,
                     stagewise_update, update_mu, violations)
from .stumps import (StumpSearchIndex, best_stump, build_search_index,
                     generate_class_wise, generate_shared, signed_weights)
from .training import (DualState, TraceRecord, TrainTrace, init_duals,
                       stopping_check, train, update_duals)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "DataError", "Dataset", "DeltaCodes", "DualState", "LabelMap",
    "Model", "SolverStats", "Stump", "StumpSearchIndex", "TraceRecord",
    "TrainConfig", "TrainTrace", "available_backends", "best_stump",
    "build_delta_codes", "build_search_index", "class_score",
    "closed_form_update", "current_backend", "edge_sums", "evaluate_stump",
    "generate_class_wise", "generate_shared", "init_duals", "init_mu",
    "load_csv", "load_libsvm", "load_model", "margin", "predict",
    "predict_batch", "primal_objective", "save_model", "score_matrix",
    "signed_weights", "solve", "split", "stagewise_update", "stopping_check",
    "train", "update_duals", "update_mu", "use_backend", "violations",
]
