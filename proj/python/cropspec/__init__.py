"""Spectral-library crop classification toolkit.

Thin convenience layer over the compiled extension: everything numeric lives
in C++; this package re-exports the bindings and decodes the JSON report
strings into dictionaries.
"""

import json as _json

from ._core import (
    DataError,
    Dataset,
    DiscriminantModel,
    FoldAssignment,
    MLPModel,
    NumericError,
    PCAModel,
    UsageError,
    class_log_posteriors,
    emit_scatter,
    fit_discriminant,
    fit_pca,
    joint_posteriors,
    load_library,
    load_model,
    make_dataset,
    predict,
    predict_mlp,
    project,
    save_model,
    stratified_kfold,
    summarize,
    synthesize,
    train_mlp,
    write_library,
)
from ._core import grid_search as _grid_search_json
from ._core import run_cv as _run_cv_json


def run_cv(ds, algorithm, folds):
    """Cross-validate one algorithm; returns the report as a dictionary."""
    return _json.loads(_run_cv_json(ds, algorithm, folds))


def grid_search(ds, algorithm, folds, grid=None):
    """Paired shrinkage sweep; returns the result as a dictionary."""
    return _json.loads(_grid_search_json(ds, algorithm, folds, grid))


__all__ = [
    "DataError",
    "Dataset",
    "DiscriminantModel",
    "FoldAssignment",
    "MLPModel",
    "NumericError",
    "PCAModel",
    "UsageError",
    "class_log_posteriors",
    "emit_scatter",
    "fit_discriminant",
    "fit_pca",
    "grid_search",
    "joint_posteriors",
    "load_library",
    "load_model",
    "make_dataset",
    "predict",
    "predict_mlp",
    "project",
    "run_cv",
    "save_model",
    "stratified_kfold",
    "summarize",
    "synthesize",
    "train_mlp",
    "write_library",
]
