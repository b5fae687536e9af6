"""Per-user binary authentication models behind one train/score/decide API.

Four families: linear-kernel SVM, RBF-kernel SVM, random forest, and a
feed-forward network.  All train on rows normalized into the unit cube with
0/1 labels (1 = genuine) and score genuine-likelihood in [0, 1]; `decide`
thresholds the score with ties counting as genuine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import serialize
from .ffnn import FfnnState, fit_ffnn
from .forest import ForestState, Tree, fit_forest
from .svm import SvmState, fit_svm

GENUINE = "genuine"
IMPOSTOR = "impostor"

FAMILIES = ("linsvm", "rbfsvm", "rndf", "ffnn")

_DEFAULTS = {
    "linsvm": {"C": 1.0, "tol": 1e-3, "max_iter": None},
    "rbfsvm": {"C": 1.0, "gamma": "scale", "tol": 1e-3, "max_iter": None},
    "rndf": {"n_trees": 100, "max_features": "sqrt", "bootstrap": True,
             "min_samples_split": 2},
    "ffnn": {"hidden": (64, 64), "lr": 1e-3, "epochs": 100, "batch": 32},
}


@dataclass(frozen=True)
class ModelSpec:
    """Classifier family plus its hyperparameters (validated, defaulted)."""

    family: str
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        family = self.family.lower()
        if family == "tfdnn":  # accepted alias for the feed-forward family
            family = "ffnn"
        if family not in FAMILIES:
            raise ValueError(f"unknown classifier family {self.family!r}; "
                             f"expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        merged = dict(_DEFAULTS[family])
        for key, value in self.hyperparameters.items():
            if key not in merged:
                raise ValueError(f"unknown hyperparameter {key!r} for {family}")
            merged[key] = value
        object.__setattr__(self, "hyperparameters", merged)


@dataclass
class TrainedAuthModel:
    """Immutable fitted model: spec, owner, parameter state, threshold."""

    spec: ModelSpec
    user_id: str
    feature_dim: int
    parameters: object
    threshold: float = 0.5


def _validate_rows(name: str, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(rows)):
        raise ValueError(f"{name} contains non-finite values")
    if rows.min() < -1e-9 or rows.max() > 1.0 + 1e-9:
        raise ValueError(f"{name} must be normalized into [0, 1]")
    return rows


def train(spec: ModelSpec, genuine_rows: np.ndarray, impostor_rows: np.ndarray,
          seed: int, user_id: str = "") -> TrainedAuthModel:
    """Fit one per-user model on normalized genuine/impostor rows."""
    genuine = _validate_rows("genuine_rows", genuine_rows)
    impostor = _validate_rows("impostor_rows", impostor_rows)
    if genuine.shape[1] != impostor.shape[1]:
        raise ValueError("genuine and impostor rows differ in width")
    x = np.concatenate([genuine, impostor], axis=0)
    y = np.concatenate([np.ones(len(genuine)), np.zeros(len(impostor))])
    hp = spec.hyperparameters
    if spec.family == "linsvm":
        state = fit_svm(x, y, kind="linear", c=hp["C"], tol=hp["tol"],
                        max_iter=hp["max_iter"])
    elif spec.family == "rbfsvm":
        state = fit_svm(x, y, kind="rbf", c=hp["C"], gamma=hp["gamma"],
                        tol=hp["tol"], max_iter=hp["max_iter"])
    elif spec.family == "rndf":
        state = fit_forest(x, y, n_trees=hp["n_trees"],
                           max_features=hp["max_features"],
                           bootstrap=hp["bootstrap"],
                           min_samples_split=hp["min_samples_split"], seed=seed)
    else:
        state = fit_ffnn(x, y, hidden=tuple(hp["hidden"]), lr=hp["lr"],
                         epochs=hp["epochs"], batch=hp["batch"], seed=seed)
    return TrainedAuthModel(spec=spec, user_id=user_id, feature_dim=x.shape[1],
                            parameters=state)


def score_rows(model: TrainedAuthModel, rows: np.ndarray) -> np.ndarray:
    """Genuine-likelihood in [0,1] for each row."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.shape[1] != model.feature_dim:
        raise ValueError(
            f"row width {rows.shape[1]} != model feature_dim {model.feature_dim}"
        )
    if not np.all(np.isfinite(rows)):
        raise ValueError("rows contain non-finite values")
    return model.parameters.scores(rows)


def score(model: TrainedAuthModel, x) -> float:
    """Score a single feature row."""
    return float(score_rows(model, np.asarray(x, dtype=np.float64))[0])


def decide(model: TrainedAuthModel, x, threshold: float = None) -> str:
    """Genuine iff score >= threshold (ties accept); default threshold 0.5."""
    if threshold is None:
        threshold = model.threshold
    return GENUINE if score(model, x) >= threshold else IMPOSTOR


def decide_rows(model: TrainedAuthModel, rows: np.ndarray,
                threshold: float = None) -> np.ndarray:
    """Vectorized decide: boolean array, True = genuine."""
    if threshold is None:
        threshold = model.threshold
    return score_rows(model, rows) >= threshold


# ---- serialization -----------------------------------------------------------


def save_model(model: TrainedAuthModel, path) -> None:
    meta = {
        "format": "gaitauth-model",
        "version": 1,
        "family": model.spec.family,
        "hyperparameters": _json_safe(model.spec.hyperparameters),
        "user_id": model.user_id,
        "feature_dim": model.feature_dim,
        "threshold": model.threshold,
    }
    state = model.parameters
    arrays = {}
    if isinstance(state, SvmState):
        meta["svm_kind"] = state.kind
        meta["rho"] = state.rho
        meta["margin_scale"] = state.margin_scale
        meta["gamma_value"] = state.gamma
        if state.kind == "linear":
            arrays["weight"] = state.weight
        else:
            arrays["support"] = state.support
            arrays["coef"] = state.coef
    elif isinstance(state, ForestState):
        meta["n_trees"] = len(state.trees)
        for i, tree in enumerate(state.trees):
            tag = f"tree{i:03d}_"
            arrays[tag + "feature"] = tree.feature
            arrays[tag + "threshold"] = tree.threshold
            arrays[tag + "left"] = tree.left
            arrays[tag + "right"] = tree.right
            arrays[tag + "vote"] = tree.vote
    elif isinstance(state, FfnnState):
        meta["n_layers"] = len(state.weights)
        for i, (w, b) in enumerate(zip(state.weights, state.biases)):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
    else:
        raise TypeError(f"cannot serialize parameter state {type(state)!r}")
    serialize.save_blobs(path, meta, arrays)


def load_model(path) -> TrainedAuthModel:
    meta, arrays = serialize.load_blobs(path)
    if meta.get("format") != "gaitauth-model":
        raise ValueError(f"{path}: not a model file")
    family = meta["family"]
    hp = dict(meta["hyperparameters"])
    if family == "ffnn" and "hidden" in hp:
        hp["hidden"] = tuple(hp["hidden"])
    spec = ModelSpec(family=family, hyperparameters=hp)
    if family in ("linsvm", "rbfsvm"):
        if meta["svm_kind"] == "linear":
            state = SvmState("linear", weight=arrays["weight"], rho=meta["rho"],
                             margin_scale=meta["margin_scale"])
        else:
            state = SvmState("rbf", support=arrays["support"],
                             coef=arrays["coef"], rho=meta["rho"],
                             gamma=meta["gamma_value"],
                             margin_scale=meta["margin_scale"])
    elif family == "rndf":
        trees = []
        for i in range(meta["n_trees"]):
            tag = f"tree{i:03d}_"
            trees.append(Tree(arrays[tag + "feature"], arrays[tag + "threshold"],
                              arrays[tag + "left"], arrays[tag + "right"],
                              arrays[tag + "vote"]))
        state = ForestState(trees)
    else:
        weights = [arrays[f"w{i}"] for i in range(meta["n_layers"])]
        biases = [arrays[f"b{i}"] for i in range(meta["n_layers"])]
        state = FfnnState(weights, biases)
    return TrainedAuthModel(spec=spec, user_id=meta["user_id"],
                            feature_dim=meta["feature_dim"], parameters=state,
                            threshold=meta["threshold"])


def _json_safe(hp: dict) -> dict:
    out = {}
    for key, value in hp.items():
        if isinstance(value, tuple):
            out[key] = list(value)
        else:
            out[key] = value
    return out
