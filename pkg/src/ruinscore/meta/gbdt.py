"""Gradient-boosted regression trees with a softmax objective.

Per round and per class a tree is fit to the negative gradient with Newton
leaf values sum(g)/(sum(h)+lam). Splits are exact greedy over sorted unique
feature values (no histogram binning), ties broken by lowest feature index
then lowest threshold, which together with zero-randomness training makes
serialized models bit-reproducible. The split scan runs in the compiled
kernel when available (see _kernels).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateData, DimensionMismatch
from . import _kernels
from .features import FEATURE_LAYOUT
from .hyper import TrainHyper
from .logreg import _as_matrix, _one_hot, softmax_rows

N_CLASSES = 4
GBDT_FORMAT = "ruinscore-gbdt-v1"
_PRIOR_FLOOR = 1e-12  # keeps log priors finite (and JSON-serializable) for absent classes


@dataclass
class GbdtModel:
    trees: list[list[dict]]  # rounds x 4; nodes are nested dicts, leaves {"value": v}
    base_scores: np.ndarray  # (4,) log class priors
    learning_rate: float
    max_depth: int
    dim: int
    degenerate: bool = False
    feature_layout: str = FEATURE_LAYOUT
    loss_trace: list[float] = field(default_factory=list, repr=False)  # not serialized

    @property
    def rounds(self) -> int:
        return len(self.trees)


def _leaf(g_sum: float, h_sum: float, lam: float) -> dict:
    return {"value": g_sum / (h_sum + lam)}


def _build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, depth: int, hp) -> dict:
    n = X.shape[0]
    if depth >= hp.max_depth or n < 2 * hp.min_leaf:
        return _leaf(float(g.sum()), float(h.sum()), hp.lam)
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.ascontiguousarray(np.take_along_axis(X, order, axis=0))
    gs = np.ascontiguousarray(g[order])
    hs = np.ascontiguousarray(h[order])
    feat, _, thr, _ = _kernels.best_split(xs, gs, hs, hp.lam, hp.min_leaf)
    if feat < 0:
        return _leaf(float(g.sum()), float(h.sum()), hp.lam)
    mask = X[:, feat] <= thr
    return {
        "feature": int(feat),
        "threshold": float(thr),
        "left": _build_tree(X[mask], g[mask], h[mask], depth + 1, hp),
        "right": _build_tree(X[~mask], g[~mask], h[~mask], depth + 1, hp),
    }


def _eval_tree(tree: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if "value" in node:
            out[idx] = node["value"]
        else:
            left = X[idx, node["feature"]] <= node["threshold"]
            stack.append((node["left"], idx[left]))
            stack.append((node["right"], idx[~left]))
    return out


def train_gbdt(X, y, hyper: TrainHyper) -> GbdtModel:
    """Boost hyper.gbdt.rounds rounds of 4 per-class trees.

    A training set with every label identical yields a flagged priors-only
    model (nothing to split on). Fewer than 2*min_leaf samples raises
    DegenerateData outright.
    """
    X = _as_matrix(X)
    n, d = X.shape
    hp = hyper.gbdt
    if n < 2 * hp.min_leaf:
        raise DegenerateData(f"need at least {2 * hp.min_leaf} samples, got {n}")
    Y = _one_hot(y, n)

    if hyper.class_weights is None:
        sw = np.ones(n, dtype=np.float64)
    else:
        sw = np.asarray(hyper.class_weights, dtype=np.float64)[Y.argmax(axis=1)]

    priors = (Y * sw[:, None]).sum(axis=0) / sw.sum()
    base = np.log(np.maximum(priors, _PRIOR_FLOOR))
    degenerate = bool((Y.sum(axis=0) > 0).sum() == 1)

    F = np.tile(base, (n, 1))
    trace: list[float] = []
    trees: list[list[dict]] = []
    w_total = sw.sum()

    def current_loss() -> float:
        P = softmax_rows(F)
        ll = -np.log(np.clip((P * Y).sum(axis=1), 1e-300, None))
        return float((sw * ll).sum() / w_total)

    rounds = 0 if degenerate else hp.rounds
    trace.append(current_loss())
    for _ in range(rounds):
        P = softmax_rows(F)
        round_trees = []
        for c in range(N_CLASSES):
            g = (Y[:, c] - P[:, c]) * sw
            h = (P[:, c] * (1.0 - P[:, c])) * sw
            tree = _build_tree(X, g, h, 0, hp)
            round_trees.append(tree)
            F[:, c] += hp.learning_rate * _eval_tree(tree, X)
        trees.append(round_trees)
        trace.append(current_loss())

    return GbdtModel(
        trees=trees,
        base_scores=base,
        learning_rate=hp.learning_rate,
        max_depth=hp.max_depth,
        dim=d,
        degenerate=degenerate,
        loss_trace=trace,
    )


def _margins(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    F = np.tile(model.base_scores, (X.shape[0], 1))
    for round_trees in model.trees:
        for c, tree in enumerate(round_trees):
            F[:, c] += model.learning_rate * _eval_tree(tree, X)
    return F


def predict_gbdt(model: GbdtModel, x) -> tuple[float, float, float, float]:
    """Class probabilities: softmax over base score plus scaled tree outputs."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dim:
        raise DimensionMismatch(model.dim, x.shape[0])
    p = softmax_rows(_margins(model, x.reshape(1, -1)))[0]
    return (float(p[0]), float(p[1]), float(p[2]), float(p[3]))


def predict_gbdt_batch(model: GbdtModel, X) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != model.dim:
        raise DimensionMismatch(model.dim, X.shape[1])
    return softmax_rows(_margins(model, X))


def gbdt_to_dict(model: GbdtModel) -> dict:
    return {
        "format": GBDT_FORMAT,
        "feature_layout": model.feature_layout,
        "dim": model.dim,
        "learning_rate": model.learning_rate,
        "max_depth": model.max_depth,
        "degenerate": model.degenerate,
        "base_scores": model.base_scores.tolist(),
        "trees": model.trees,
    }


def gbdt_from_dict(raw: dict) -> GbdtModel:
    return GbdtModel(
        trees=raw["trees"],
        base_scores=np.asarray(raw["base_scores"], dtype=np.float64),
        learning_rate=float(raw["learning_rate"]),
        max_depth=int(raw["max_depth"]),
        dim=int(raw["dim"]),
        degenerate=bool(raw["degenerate"]),
        feature_layout=str(raw["feature_layout"]),
    )


def gbdt_training_accuracy(model: GbdtModel, X, y) -> float:
    P = predict_gbdt_batch(model, X)
    labels = np.asarray([int(v) for v in y])
    return float((P.argmax(axis=1) == labels).mean())
