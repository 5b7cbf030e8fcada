"""From-scratch random forest classifier over the 7 agronomic features.

CART-style trees with Gini impurity, midpoint thresholds, bagging, and
per-split feature subsampling. Per-tree RNGs are derived as
``seed XOR tree_index`` so serial and parallel training produce the same
forest, and the same (data, config, seed) always serializes to identical
bytes.

Prediction is soft voting: the forest probability for a crop is the mean
of the per-tree leaf class distributions.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .data_ingest import FEATURE_FIELDS, AgronomicRecord
from .errors import (
    EmptyCounts,
    ModelError,
    NonFiniteFeature,
    SingleClassDataset,
)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Leaf:
    probs: np.ndarray  # class distribution over the forest's label order


@dataclass(frozen=True)
class Internal:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    max_depth: int = 20
    min_samples_leaf: int = 1
    # "sqrt" -> floor(sqrt(n_features)) candidates per split; None -> all.
    max_features: int | str | None = "sqrt"
    bootstrap: bool = True

    def features_per_split(self, n_features: int) -> int:
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, int(math.isqrt(n_features)))
        return min(int(self.max_features), n_features)

    def to_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ForestConfig":
        return cls(**data)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]
    labels: tuple[str, ...]
    config: ForestConfig
    seed: int
    feature_names: tuple[str, ...] = tuple(f.upper() if len(f) == 1 else f for f in FEATURE_FIELDS)


def gini(counts: Mapping[str, int] | Sequence[int]) -> float:
    """Gini impurity 1 - sum(p_i^2) from label counts."""
    values = list(counts.values()) if isinstance(counts, Mapping) else list(counts)
    if any(c < 0 for c in values):
        raise ValueError("label counts must be non-negative")
    total = sum(values)
    if total == 0:
        raise EmptyCounts("at least one positive label count required")
    return 1.0 - sum((c / total) ** 2 for c in values)


def _gini_from_count_rows(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    # counts: (k, n_classes); totals: (k,) row sums, all > 0
    p = counts / totals[:, None]
    return 1.0 - np.sum(p * p, axis=1)


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_indices: Sequence[int],
    n_classes: int,
    min_samples_leaf: int = 1,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, gain) over midpoint thresholds, or None.

    Thresholds sit at midpoints between consecutive distinct sorted values
    of each candidate feature. Gain is parent Gini minus size-weighted
    child Gini. Ties resolve to the lower feature index, then the lower
    threshold; None means no split strictly reduces impurity.

    The scan runs in floating point, but candidates within a hair of the
    max are re-ranked in exact rational arithmetic: maximizing gain is the
    same as maximizing S_l/n_l + S_r/n_r (S = sum of squared class
    counts), so ties between mathematically equal gains follow the rule
    instead of rounding noise.
    """
    m = len(y)
    parent_counts = np.bincount(y, minlength=n_classes)
    parent_gini = 1.0 - float(np.sum((parent_counts / m) ** 2))
    parent_sq = int(np.sum(parent_counts.astype(np.int64) ** 2))
    best: tuple[Fraction, int, float] | None = None  # (-Q, feature, threshold)
    for f in sorted(int(i) for i in feature_indices):
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y[order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        cut = np.nonzero(sv[:-1] < sv[1:])[0]  # split after position i
        left_n = cut + 1
        keep = (left_n >= min_samples_leaf) & (m - left_n >= min_samples_leaf)
        cut, left_n = cut[keep], left_n[keep]
        if len(cut) == 0:
            continue
        left_counts = cum[cut]
        right_counts = parent_counts[None, :] - left_counts
        right_n = m - left_n
        weighted = (
            left_n * _gini_from_count_rows(left_counts, left_n)
            + right_n * _gini_from_count_rows(right_counts, right_n)
        ) / m
        gains = parent_gini - weighted
        # Float error here is ~1e-14, so anything within 1e-9 of the max
        # may be the true winner; the exact re-rank sorts them out.
        for j in np.nonzero(gains >= gains.max() - 1e-9)[0]:
            sq_l = sum(int(c) ** 2 for c in left_counts[j])
            sq_r = sum(int(c) ** 2 for c in right_counts[j])
            q = Fraction(sq_l, int(left_n[j])) + Fraction(sq_r, int(right_n[j]))
            threshold = float((sv[cut[j]] + sv[cut[j] + 1]) / 2.0)
            key = (-q, f, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    neg_q, f, threshold = best
    gain = (-neg_q) / m - Fraction(parent_sq, m * m)
    if gain <= 0:
        return None
    return f, threshold, float(gain)


def _leaf(y: np.ndarray, n_classes: int) -> Leaf:
    counts = np.bincount(y, minlength=n_classes)
    return Leaf(probs=counts / len(y))


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    config: ForestConfig,
    rng: np.random.Generator,
    n_classes: int,
) -> TreeNode:
    """Grow one tree; the rng drives the per-node feature subsets."""
    n_features = X.shape[1]
    k = config.features_per_split(n_features)

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        y_node = y[idx]
        if (
            depth >= config.max_depth
            or len(idx) < 2 * config.min_samples_leaf
            or (y_node == y_node[0]).all()
        ):
            return _leaf(y_node, n_classes)
        if k >= n_features:
            candidates: Sequence[int] = range(n_features)
        else:
            candidates = rng.choice(n_features, size=k, replace=False)
        split = best_split(X[idx], y_node, candidates, n_classes, config.min_samples_leaf)
        if split is None:
            return _leaf(y_node, n_classes)
        f, threshold, _ = split
        left_mask = X[idx, f] <= threshold
        left = grow(idx[left_mask], depth + 1)
        right = grow(idx[~left_mask], depth + 1)
        return Internal(feature=f, threshold=threshold, left=left, right=right)

    return grow(np.arange(len(y)), 0)


def _records_to_arrays(records: Sequence[AgronomicRecord]) -> tuple[np.ndarray, list[str]]:
    rows = []
    for r in records:
        feats = r.features()
        if any(v is None for v in feats):
            raise ModelError("training rows contain missing cells; impute first")
        rows.append(feats)
    X = np.asarray(rows, dtype=float)
    if not np.isfinite(X).all():
        raise NonFiniteFeature("training features must be finite")
    return X, [r.label for r in records]


def fit_forest(
    records: Sequence[AgronomicRecord],
    config: ForestConfig = ForestConfig(),
    seed: int = 42,
    n_jobs: int = 1,
) -> ForestModel:
    """Train the ensemble; deterministic for a fixed seed regardless of n_jobs."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    X, label_list = _records_to_arrays(records)
    labels = tuple(sorted(set(label_list)))
    if len(labels) < 2:
        raise SingleClassDataset(f"need >= 2 classes, got {labels}")
    code = {label: i for i, label in enumerate(labels)}
    y = np.array([code[label] for label in label_list])
    n = len(y)

    def train_one(t: int) -> TreeNode:
        rng = np.random.default_rng(seed ^ t)
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        return fit_tree(X[idx], y[idx], config, rng, len(labels))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(train_one, range(config.n_estimators)))
    else:
        trees = tuple(train_one(t) for t in range(config.n_estimators))
    return ForestModel(trees=trees, labels=labels, config=config, seed=seed)


def _tree_probs(node: TreeNode, x: np.ndarray) -> np.ndarray:
    while isinstance(node, Internal):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.probs


def predict_proba(model: ForestModel, x) -> dict[str, float]:
    """Per-crop probabilities: mean of the trees' leaf distributions."""
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (len(model.feature_names),):
        raise ModelError(f"expected {len(model.feature_names)} features, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteFeature(f"features must be finite, got {arr.tolist()}")
    total = np.zeros(len(model.labels))
    for tree in model.trees:
        total += _tree_probs(tree, arr)
    mean = total / len(model.trees)
    return {label: float(p) for label, p in zip(model.labels, mean)}


def top_k_crops(probs: Mapping[str, float], k: int = 3) -> list[str]:
    """The k most probable crops, descending; ties break lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(probs.items(), key=lambda kv: (-kv[1], kv[0]))
    return [crop for crop, _ in ranked[:k]]


def predict(model: ForestModel, x) -> str:
    return top_k_crops(predict_proba(model, x), 1)[0]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    per_class: dict[str, ClassMetrics] = field(default_factory=dict)


def evaluate_classifier(
    model: ForestModel, test_records: Sequence[AgronomicRecord]
) -> ClassificationMetrics:
    """Accuracy plus per-class precision/recall/F1 on held-out rows.

    A class never predicted gets precision 0 by convention.
    """
    if not test_records:
        raise ValueError("test rows must be non-empty")
    X, actual = _records_to_arrays(test_records)
    predicted = [predict(model, row) for row in X]
    classes = sorted(set(actual) | set(predicted))
    correct = sum(1 for a, p in zip(actual, predicted) if a == p)
    per_class = {}
    for c in classes:
        tp = sum(1 for a, p in zip(actual, predicted) if a == c and p == c)
        fp = sum(1 for a, p in zip(actual, predicted) if a != c and p == c)
        fn = sum(1 for a, p in zip(actual, predicted) if a == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = ClassMetrics(precision, recall, f1, support=tp + fn)
    return ClassificationMetrics(accuracy=correct / len(actual), per_class=per_class)


# ---------------------------------------------------------------------------
# Serialization


def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"probs": [float(p) for p in node.probs]}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict) -> TreeNode:
    if "probs" in data:
        return Leaf(probs=np.asarray(data["probs"], dtype=float))
    return Internal(
        feature=int(data["feature"]),
        threshold=float(data["threshold"]),
        left=_node_from_dict(data["left"]),
        right=_node_from_dict(data["right"]),
    )


def to_json(model: ForestModel) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "forest",
        "seed": model.seed,
        "config": model.config.to_dict(),
        "labels": list(model.labels),
        "feature_names": list(model.feature_names),
        "trees": [_node_to_dict(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> ForestModel:
    doc = json.loads(text)
    if doc.get("kind") != "forest":
        raise ModelError(f"not a forest model file (kind={doc.get('kind')!r})")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelError(f"unsupported forest format version {doc.get('format_version')!r}")
    return ForestModel(
        trees=tuple(_node_from_dict(t) for t in doc["trees"]),
        labels=tuple(doc["labels"]),
        config=ForestConfig.from_dict(doc["config"]),
        seed=int(doc["seed"]),
        feature_names=tuple(doc["feature_names"]),
    )


def save(model: ForestModel, path: str | Path) -> None:
    Path(path).write_text(to_json(model), encoding="utf-8")


def load(path: str | Path) -> ForestModel:
    p = Path(path)
    if not p.is_file():
        raise ModelError(f"model file not found: {path}")
    return from_json(p.read_text(encoding="utf-8"))
