"""Binary classification tree over normalized design coordinates.

Greedy CART growth with Gini impurity: every split is the exhaustive best
over features and midpoints between sorted distinct values, ties broken by
lowest feature index then lowest threshold. Points with coordinate >=
threshold go right. No pruning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .design import DesignSpace
from .errors import EmptyNode, NoSplit

__all__ = [
    "LABELS",
    "LabeledDesign",
    "TreeNode",
    "gini_impurity",
    "best_split",
    "fit_tree",
    "classify",
    "extract_rules",
    "tree_to_dict",
    "tree_from_dict",
    "format_rules",
]

LABELS = ("jet", "swirl")


@dataclass(frozen=True)
class LabeledDesign:
    coords: tuple
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass
class TreeNode:
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    label: Optional[str] = None
    counts: Optional[tuple] = None  # (n_jet, n_swirl)

    @property
    def is_leaf(self) -> bool:
        return self.label is not None

    @property
    def proportions(self):
        total = sum(self.counts)
        return tuple(c / total for c in self.counts)


def gini_impurity(n_jet: int, n_swirl: int) -> float:
    """p_j (1 - p_j) + p_s (1 - p_s) for a node's class counts."""
    total = n_jet + n_swirl
    if total == 0:
        raise EmptyNode("cannot compute impurity of an empty node")
    pj = n_jet / total
    ps = n_swirl / total
    return pj * (1.0 - pj) + ps * (1.0 - ps)


def _as_arrays(data):
    X = np.array([d.coords for d in data], dtype=float)
    y = np.array([LABELS.index(d.label) for d in data], dtype=int)
    return X, y


def _split_search(X, y, min_leaf: int):
    """Best (feature, threshold, weighted child impurity) or None."""
    n, p = X.shape
    best = None
    for feat in range(p):
        vals = np.unique(X[:, feat])
        if len(vals) < 2:
            continue
        thresholds = 0.5 * (vals[:-1] + vals[1:])
        for thr in thresholds:
            right = X[:, feat] >= thr
            n_right = int(np.count_nonzero(right))
            n_left = n - n_right
            if n_left < min_leaf or n_right < min_leaf:
                continue
            yl = y[~right]
            yr = y[right]
            gl = gini_impurity(int(np.sum(yl == 0)), int(np.sum(yl == 1)))
            gr = gini_impurity(int(np.sum(yr == 0)), int(np.sum(yr == 1)))
            score = (n_left * gl + n_right * gr) / n
            cand = (score, feat, float(thr))
            if best is None or cand < best:
                best = cand
    if best is None:
        return None
    score, feat, thr = best
    return feat, thr, score


def best_split(data):
    """Exhaustive best split of labeled designs.

    Requires at least two samples and both classes present; raises NoSplit
    when every feature is constant across the samples.
    """
    X, y = _as_arrays(data)
    if len(X) < 2:
        raise ValueError("need at least two samples")
    if len(np.unique(y)) < 2:
        raise ValueError("need both classes present")
    found = _split_search(X, y, min_leaf=1)
    if found is None:
        raise NoSplit("all samples identical in every feature")
    return found


def _majority_label(y) -> str:
    n_jet = int(np.sum(y == 0))
    n_swirl = int(np.sum(y == 1))
    # ties go to swirl
    return "swirl" if n_swirl >= n_jet else "jet"


def _grow(X, y, depth, max_depth, min_leaf) -> TreeNode:
    counts = (int(np.sum(y == 0)), int(np.sum(y == 1)))
    if depth >= max_depth or min(counts) == 0 or len(y) < 2 * min_leaf:
        return TreeNode(label=_majority_label(y), counts=counts)
    found = _split_search(X, y, min_leaf)
    if found is None:
        return TreeNode(label=_majority_label(y), counts=counts)
    feat, thr, _ = found
    right = X[:, feat] >= thr
    return TreeNode(
        feature=feat,
        threshold=thr,
        left=_grow(X[~right], y[~right], depth + 1, max_depth, min_leaf),
        right=_grow(X[right], y[right], depth + 1, max_depth, min_leaf),
        counts=counts,
    )


def fit_tree(data, max_depth: int = 4, min_leaf: int = 2) -> TreeNode:
    """Grow a tree by recursive greedy splitting.

    Stops at pure nodes, depth, or when no split leaves min_leaf samples
    on each side. Leaf labels are the majority class, ties to swirl.
    """
    if not data:
        raise ValueError("no training data")
    X, y = _as_arrays(data)
    return _grow(X, y, 0, max_depth, min_leaf)


def classify(tree: TreeNode, design) -> str:
    """Deterministic descent; coordinate >= threshold goes right."""
    coords = np.asarray(getattr(design, "coords", design), dtype=float)
    node = tree
    while not node.is_leaf:
        node = node.right if coords[node.feature] >= node.threshold else node.left
    return node.label


def extract_rules(tree: TreeNode, space: DesignSpace):
    """One rule per leaf: a conjunction of physical-unit constraints.

    Each rule is (constraints, label, counts) with constraints a list of
    (name, op, value, unit) where op is "<" or ">=".
    """
    rules = []

    def walk(node, constraints):
        if node.is_leaf:
            rules.append((list(constraints), node.label, node.counts))
            return
        prm = space.params[node.feature]
        value = prm.lo + node.threshold * (prm.hi - prm.lo)
        walk(node.left, constraints + [(prm.name, "<", value, prm.unit)])
        walk(node.right, constraints + [(prm.name, ">=", value, prm.unit)])

    walk(tree, [])
    return rules


def format_rules(rules) -> str:
    lines = []
    for constraints, label, counts in rules:
        if constraints:
            cond = " and ".join(f"{n} {op} {v:.4g}{(' ' + u) if u else ''}" for n, op, v, u in constraints)
        else:
            cond = "always"
        lines.append(f"{cond} -> {label} (jet={counts[0]}, swirl={counts[1]})")
    return "\n".join(lines)


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"label": node.label, "counts": list(node.counts)}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "counts": list(node.counts) if node.counts else None,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(obj: dict) -> TreeNode:
    if "label" in obj:
        return TreeNode(label=obj["label"], counts=tuple(obj["counts"]))
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        counts=tuple(obj["counts"]) if obj.get("counts") else None,
        left=tree_from_dict(obj["left"]),
        right=tree_from_dict(obj["right"]),
    )
