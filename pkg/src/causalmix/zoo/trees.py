"""CART decision trees, bagged random forests, and gradient-boosted trees.

The shared builder grows axis-aligned binary trees with exact split search
(prefix-sum scan over sorted feature values). Growth is depth-first, or
best-first by impurity gain when a leaf budget is set. All randomness
(feature subsampling, bootstrap, random splitter) flows through the caller's
generator, so fits are deterministic given a seed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .base import FittedModel, check_training_inputs, softmax


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    value: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.value is not None


@dataclass
class TreeParams:
    criterion: str = "gini"  # gini | entropy | mse
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: int | None = None  # resolved count; None = all
    max_leaf_nodes: int | None = None
    splitter: str = "best"  # best | random


def resolve_max_features(option, d: int) -> int | None:
    """Translate sklearn-style max_features options into a feature count."""
    if option is None:
        return None
    if option == "sqrt":
        return max(1, int(np.sqrt(d)))
    if option == "log2":
        return max(1, int(np.log2(d))) if d > 1 else 1
    if isinstance(option, float):
        return max(1, min(d, int(option * d)))
    return max(1, min(d, int(option)))


def _class_impurity(counts: np.ndarray, sizes: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity for stacked count vectors; `sizes` broadcasts along rows."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / sizes[:, None]
        if criterion == "entropy":
            terms = np.where(p > 0, -p * np.log2(p), 0.0)
            return terms.sum(axis=1)
        return 1.0 - (p**2).sum(axis=1)


class _TreeBuilder:
    """Grows one tree; classification when n_classes is set, else regression
    with Newton-style leaf values sum(g)/(sum(h)+l2).
    """

    def __init__(
        self,
        X: np.ndarray,
        params: TreeParams,
        rng: np.random.Generator | None,
        n_classes: int | None = None,
        y_idx: np.ndarray | None = None,
        grad: np.ndarray | None = None,
        hess: np.ndarray | None = None,
        leaf_l2: float = 0.0,
    ):
        self.X = X
        self.params = params
        self.rng = rng
        self.n_classes = n_classes
        self.y_idx = y_idx
        self.grad = grad
        self.hess = hess if hess is not None else (None if grad is None else np.ones_like(grad))
        self.leaf_l2 = leaf_l2

    def _leaf_value(self, idx: np.ndarray) -> np.ndarray:
        if self.n_classes is not None:
            counts = np.bincount(self.y_idx[idx], minlength=self.n_classes).astype(float)
            return counts / counts.sum()
        g = self.grad[idx].sum()
        h = self.hess[idx].sum()
        return np.array([g / (h + self.leaf_l2) if (h + self.leaf_l2) > 0 else 0.0])

    def _node_score(self, idx: np.ndarray) -> float:
        """Total impurity mass of a node (weighted by its size)."""
        if self.n_classes is not None:
            counts = np.bincount(self.y_idx[idx], minlength=self.n_classes).astype(float)
            return float(
                _class_impurity(counts[None, :], np.array([idx.size], dtype=float), self.params.criterion)[0]
                * idx.size
            )
        g = self.grad[idx]
        return float((g**2).sum() - g.sum() ** 2 / idx.size)

    def _candidate_features(self, d: int) -> np.ndarray:
        k = self.params.max_features
        if k is None or k >= d:
            return np.arange(d)
        return np.sort(self.rng.choice(d, size=k, replace=False))

    def _scan_feature(self, idx: np.ndarray, f: int):
        """Best split of `idx` on feature f: (score, threshold) or None."""
        v = self.X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        m = idx.size
        msl = self.params.min_samples_leaf
        if self.params.splitter == "random":
            lo, hi = vs[0], vs[-1]
            if lo == hi:
                return None
            thr = float(self.rng.uniform(lo, hi))
            left = int(np.searchsorted(vs, thr, side="right"))
            if left < msl or m - left < msl:
                return None
            positions = np.array([left])
            thresholds = np.array([thr])
        else:
            cuts = np.nonzero(vs[1:] > vs[:-1])[0] + 1  # left-side sizes
            cuts = cuts[(cuts >= msl) & (m - cuts >= msl)]
            if cuts.size == 0:
                return None
            positions = cuts
            thresholds = (vs[positions - 1] + vs[positions]) / 2.0

        sizes_l = positions.astype(float)
        sizes_r = m - sizes_l
        if self.n_classes is not None:
            ys = self.y_idx[idx][order]
            onehot = np.zeros((m, self.n_classes))
            onehot[np.arange(m), ys] = 1.0
            cum = np.cumsum(onehot, axis=0)
            left_counts = cum[positions - 1]
            right_counts = cum[-1][None, :] - left_counts
            score = sizes_l * _class_impurity(left_counts, sizes_l, self.params.criterion)
            score += sizes_r * _class_impurity(right_counts, sizes_r, self.params.criterion)
        else:
            g = self.grad[idx][order]
            cum = np.cumsum(g)
            cum2 = np.cumsum(g**2)
            sl = cum[positions - 1]
            s2l = cum2[positions - 1]
            sr = cum[-1] - sl
            s2r = cum2[-1] - s2l
            score = (s2l - sl**2 / sizes_l) + (s2r - sr**2 / sizes_r)
        best = int(np.argmin(score))
        return float(score[best]), float(thresholds[best])

    def _best_split(self, idx: np.ndarray):
        d = self.X.shape[1]
        best = None
        for f in self._candidate_features(d):
            found = self._scan_feature(idx, int(f))
            if found is None:
                continue
            score, thr = found
            if best is None or score < best[0] - 1e-12:
                best = (score, int(f), thr)
        return best

    def _splittable(self, idx: np.ndarray, depth: int) -> bool:
        if idx.size < self.params.min_samples_split or idx.size < 2 * self.params.min_samples_leaf:
            return False
        if self.params.max_depth is not None and depth >= self.params.max_depth:
            return False
        if self.n_classes is not None and np.unique(self.y_idx[idx]).size == 1:
            return False
        return True

    def build(self) -> _Node:
        all_idx = np.arange(self.X.shape[0])
        if self.params.max_leaf_nodes is not None:
            return self._build_best_first(all_idx)
        return self._build_depth_first(all_idx, 0)

    def _build_depth_first(self, idx: np.ndarray, depth: int) -> _Node:
        if self._splittable(idx, depth):
            best = self._best_split(idx)
            if best is not None:
                _, f, thr = best
                mask = self.X[idx, f] <= thr
                node = _Node(feature=f, threshold=thr)
                node.left = self._build_depth_first(idx[mask], depth + 1)
                node.right = self._build_depth_first(idx[~mask], depth + 1)
                return node
        return _Node(value=self._leaf_value(idx))

    def _build_best_first(self, all_idx: np.ndarray) -> _Node:
        root = _Node(value=self._leaf_value(all_idx))
        heap: list[tuple[float, int, _Node, np.ndarray, int]] = []
        counter = 0

        def push(node: _Node, idx: np.ndarray, depth: int) -> None:
            nonlocal counter
            if not self._splittable(idx, depth):
                return
            best = self._best_split(idx)
            if best is None:
                return
            gain = self._node_score(idx) - best[0]
            node._pending = (best[1], best[2])  # type: ignore[attr-defined]
            heapq.heappush(heap, (-gain, counter, node, idx, depth))
            counter += 1

        push(root, all_idx, 0)
        n_leaves = 1
        while heap and n_leaves < self.params.max_leaf_nodes:
            _, _, node, idx, depth = heapq.heappop(heap)
            f, thr = node._pending  # type: ignore[attr-defined]
            mask = self.X[idx, f] <= thr
            node.feature, node.threshold, node.value = f, thr, None
            node.left = _Node(value=self._leaf_value(idx[mask]))
            node.right = _Node(value=self._leaf_value(idx[~mask]))
            n_leaves += 1
            push(node.left, idx[mask], depth + 1)
            push(node.right, idx[~mask], depth + 1)
        return root


def _apply_tree(node: _Node, X: np.ndarray, out: np.ndarray, idx: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.value
        return
    mask = X[idx, node.feature] <= node.threshold
    _apply_tree(node.left, X, out, idx[mask])
    _apply_tree(node.right, X, out, idx[~mask])


def tree_predict(node: _Node, X: np.ndarray, width: int) -> np.ndarray:
    out = np.empty((X.shape[0], width))
    _apply_tree(node, X, out, np.arange(X.shape[0]))
    return out


class DecisionTreeClassifier(FittedModel):
    def __init__(self, spec, root: _Node, classes: np.ndarray, n_features: int):
        super().__init__(spec, n_features)
        self.root = root
        self.classes_ = classes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return tree_predict(self.root, X, self.classes_.size)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class DecisionTreeRegressor(FittedModel):
    def __init__(self, spec, root: _Node, n_features: int):
        super().__init__(spec, n_features)
        self.root = root

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return tree_predict(self.root, X, 1).ravel()


def fit_tree_classifier(
    spec, X: np.ndarray, y: np.ndarray, params: TreeParams, rng: np.random.Generator
) -> DecisionTreeClassifier:
    X, y = check_training_inputs(X, y)
    classes = np.unique(y)
    y_idx = np.searchsorted(classes, y)
    builder = _TreeBuilder(X, params, rng, n_classes=classes.size, y_idx=y_idx)
    return DecisionTreeClassifier(spec, builder.build(), classes, X.shape[1])


def fit_tree_regressor(
    spec,
    X: np.ndarray,
    y: np.ndarray,
    params: TreeParams,
    rng: np.random.Generator,
    hess: np.ndarray | None = None,
    leaf_l2: float = 0.0,
) -> DecisionTreeRegressor:
    X, y = check_training_inputs(X, y)
    if params.criterion in ("gini", "entropy", "log_loss"):
        params = TreeParams(**{**params.__dict__, "criterion": "mse"})
    builder = _TreeBuilder(X, params, rng, grad=y, hess=hess, leaf_l2=leaf_l2)
    return DecisionTreeRegressor(spec, builder.build(), X.shape[1])


class RandomForestClassifier(FittedModel):
    def __init__(self, spec, trees: list[DecisionTreeClassifier], classes: np.ndarray, n_features: int):
        super().__init__(spec, n_features)
        self.trees = trees
        self.classes_ = classes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        acc = np.zeros((X.shape[0], self.classes_.size))
        for tree in self.trees:
            acc += tree.predict_proba(X)
        return acc / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class RandomForestRegressor(FittedModel):
    def __init__(self, spec, trees: list[DecisionTreeRegressor], n_features: int):
        super().__init__(spec, n_features)
        self.trees = trees

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return np.mean([tree.predict(X) for tree in self.trees], axis=0)


def fit_forest(
    spec,
    X: np.ndarray,
    y: np.ndarray,
    params: TreeParams,
    rng: np.random.Generator,
    n_estimators: int,
    bootstrap: bool,
    classification: bool,
):
    X, y = check_training_inputs(X, y)
    n = X.shape[0]
    trees = []
    classes = np.unique(y) if classification else None
    for _ in range(n_estimators):
        child = np.random.default_rng(rng.integers(0, 2**63))
        if bootstrap:
            idx = child.integers(0, n, size=n)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        if classification:
            yb_idx = np.searchsorted(classes, yb)
            builder = _TreeBuilder(Xb, params, child, n_classes=classes.size, y_idx=yb_idx)
            trees.append(DecisionTreeClassifier(spec, builder.build(), classes, X.shape[1]))
        else:
            builder = _TreeBuilder(Xb, params, child, grad=yb)
            trees.append(DecisionTreeRegressor(spec, builder.build(), X.shape[1]))
    if classification:
        return RandomForestClassifier(spec, trees, classes, X.shape[1])
    return RandomForestRegressor(spec, trees, X.shape[1])


class GradBoostRegressor(FittedModel):
    def __init__(self, spec, init: float, trees: list[_Node], lr: float, n_features: int):
        super().__init__(spec, n_features)
        self.init = init
        self.trees = trees
        self.lr = lr

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        pred = np.full(X.shape[0], self.init)
        for root in self.trees:
            pred += self.lr * tree_predict(root, X, 1).ravel()
        return pred


def fit_gradboost_regressor(
    spec,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    n_estimators: int = 100,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    min_samples_leaf: int = 1,
    max_leaf_nodes: int | None = None,
    l2: float = 0.0,
) -> GradBoostRegressor:
    """Stagewise least-squares boosting: each tree fits the current residuals."""
    X, y = check_training_inputs(X, y)
    params = TreeParams(
        criterion="mse",
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        max_leaf_nodes=max_leaf_nodes,
    )
    init = float(y.mean())
    pred = np.full(X.shape[0], init)
    trees: list[_Node] = []
    for _ in range(n_estimators):
        child = np.random.default_rng(rng.integers(0, 2**63))
        builder = _TreeBuilder(X, params, child, grad=y - pred, leaf_l2=l2)
        root = builder.build()
        trees.append(root)
        pred += learning_rate * tree_predict(root, X, 1).ravel()
    return GradBoostRegressor(spec, init, trees, learning_rate, X.shape[1])


class GradBoostClassifier(FittedModel):
    def __init__(self, spec, init_scores: np.ndarray, stages: list[list[_Node]], lr: float, classes: np.ndarray, n_features: int):
        super().__init__(spec, n_features)
        self.init_scores = init_scores
        self.stages = stages
        self.lr = lr
        self.classes_ = classes

    def _raw_scores(self, X: np.ndarray) -> np.ndarray:
        scores = np.tile(self.init_scores, (X.shape[0], 1))
        for stage in self.stages:
            for k, root in enumerate(stage):
                scores[:, k] += self.lr * tree_predict(root, X, 1).ravel()
        return scores

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return softmax(self._raw_scores(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def fit_gradboost_classifier(
    spec,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    n_estimators: int = 100,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    min_samples_leaf: int = 1,
    max_leaf_nodes: int | None = None,
    l2: float = 0.0,
) -> GradBoostClassifier:
    """Multinomial boosting with Newton leaf values sum(g)/(sum(h)+l2)."""
    X, y = check_training_inputs(X, y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("gradient boosting needs at least 2 classes")
    onehot = (y[:, None] == classes[None, :]).astype(float)
    priors = np.clip(onehot.mean(axis=0), 1e-12, 1.0)
    init_scores = np.log(priors)
    scores = np.tile(init_scores, (X.shape[0], 1))
    params = TreeParams(
        criterion="mse",
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        max_leaf_nodes=max_leaf_nodes,
    )
    stages: list[list[_Node]] = []
    for _ in range(n_estimators):
        probs = softmax(scores)
        grad = onehot - probs
        hess = probs * (1.0 - probs)
        stage: list[_Node] = []
        for k in range(classes.size):
            child = np.random.default_rng(rng.integers(0, 2**63))
            builder = _TreeBuilder(X, params, child, grad=grad[:, k], hess=hess[:, k], leaf_l2=l2)
            root = builder.build()
            stage.append(root)
            scores[:, k] += learning_rate * tree_predict(root, X, 1).ravel()
        stages.append(stage)
    return GradBoostClassifier(spec, init_scores, stages, learning_rate, classes, X.shape[1])
