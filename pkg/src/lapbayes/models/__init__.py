"""Reference model families and JSON loading for the CLI and service."""

from __future__ import annotations

import json
import os

import numpy as np

from lapbayes.errors import ConfigurationError
from lapbayes.loss import ExpertBelief
from lapbayes.models.exponential import ExponentialSurvivalModel, SurvivalData
from lapbayes.models.mvn import ConcordanceBelief, MvnElicitationModel
from lapbayes.models.regression import (
    RepeatedMeasuresData,
    RepeatedMeasuresModel,
    generate_exercise_data,
    load_repeated_measures_csv,
    orthogonal_poly,
)

__all__ = [
    "ExponentialSurvivalModel",
    "SurvivalData",
    "MvnElicitationModel",
    "ConcordanceBelief",
    "RepeatedMeasuresModel",
    "RepeatedMeasuresData",
    "generate_exercise_data",
    "load_repeated_measures_csv",
    "orthogonal_poly",
    "model_from_json",
    "target_from_json",
]


def model_from_json(doc: dict, base_dir: str = "."):
    """Build a model plus beliefs from the model+belief JSON document.

    Returns (model, beliefs, data) where data stays None unless the document
    inlines it or points at a CSV path.
    """
    if "model" not in doc:
        raise ConfigurationError('document needs a top-level "model" object')
    mdoc = dict(doc["model"])
    family = mdoc.pop("family", None)
    beliefs = [ExpertBelief.from_json(b) for b in doc.get("beliefs", [])]

    if family == "exponential":
        data = None
        if "data" in doc and doc["data"] is not None:
            data = _load_survival_data(doc["data"], base_dir)
        model = ExponentialSurvivalModel.from_json(mdoc, data=data)
        return model, beliefs, data
    if family == "mvn":
        data = None
        if "data" in doc and doc["data"] is not None:
            data = _load_matrix_data(doc["data"], base_dir, mdoc.get("k"))
        model = MvnElicitationModel.from_json(mdoc, data=data)
        return model, beliefs, data
    if family == "repeated_measures":
        data = None
        if "data" in doc and doc["data"] is not None:
            data = _load_repeated(doc["data"], base_dir)
        model = RepeatedMeasuresModel.from_json(mdoc, data=data)
        return model, beliefs, data
    raise ConfigurationError(
        f"unknown model family {family!r}; expected exponential, mvn or "
        "repeated_measures"
    )


def target_from_json(doc: dict, base_dir: str = "."):
    model, beliefs, _ = model_from_json(doc, base_dir)
    return model.build_target(beliefs)


def load_model_file(path: str):
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_json(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def _load_survival_data(data_doc, base_dir):
    if isinstance(data_doc, str):
        path = os.path.join(base_dir, data_doc)
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return SurvivalData(times=rows[:, 0], events=rows[:, 1].astype(int))
    return SurvivalData(
        times=np.asarray(data_doc["times"], dtype=float),
        events=np.asarray(data_doc.get("events", np.ones(len(data_doc["times"]))), dtype=int),
    )


def _load_matrix_data(data_doc, base_dir, k):
    if isinstance(data_doc, str):
        path = os.path.join(base_dir, data_doc)
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return np.asarray(data_doc, dtype=float)


def _load_repeated(data_doc, base_dir):
    if isinstance(data_doc, str):
        return load_repeated_measures_csv(os.path.join(base_dir, data_doc))
    return RepeatedMeasuresData.from_columns(
        ids=data_doc["id"], groups=data_doc["group"],
        times=data_doc["time"], responses=data_doc["response"],
    )
