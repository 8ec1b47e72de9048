"""From-scratch classifiers used for machine-learning efficacy.

``fit_decision_tree`` grows a binary CART tree on Gini impurity;
``fit_mlp_classifier`` trains a one-hidden-layer softmax network on the
``nn`` engine with full-batch Adam.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


@dataclass
class TreeNode:
    label: int
    n: int
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self):
        return self.left is None


@dataclass
class TreeModel:
    root: TreeNode
    classes: np.ndarray
    max_depth: int

    def depth(self, node=None):
        node = node or self.root
        if node.is_leaf:
            return 0
        return 1 + max(self.depth(node.left), self.depth(node.right))

    def structure(self, node=None):
        """Nested tuples describing the tree, for equality checks."""
        node = node or self.root
        if node.is_leaf:
            return ("leaf", node.label, node.n)
        return (node.feature, node.threshold, self.structure(node.left), self.structure(node.right))


def _encode_labels(y):
    y = np.asarray(y)
    classes, codes = np.unique(y, return_inverse=True)
    return classes, codes.reshape(-1)


def _best_split(X, codes, k):
    """Lowest weighted-Gini split as ``(feature, threshold)``, or None.

    Candidate thresholds are midpoints between consecutive distinct values.
    Ties keep the lowest feature index, then the lowest threshold.
    """
    n = codes.size
    onehot = np.zeros((n, k))
    best, best_score = None, -np.inf
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        boundary = np.flatnonzero(xs[:-1] < xs[1:])
        if boundary.size == 0:
            continue
        onehot[...] = 0.0
        onehot[np.arange(n), codes[order]] = 1.0
        left = np.cumsum(onehot, axis=0)[boundary]
        right = np.bincount(codes, minlength=k) - left
        n_left = (boundary + 1).astype(np.float64)
        n_right = n - n_left
        # minimizing weighted Gini == maximizing sum(l^2)/n_l + sum(r^2)/n_r
        score = (left ** 2).sum(axis=1) / n_left + (right ** 2).sum(axis=1) / n_right
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = score[i]
            j = boundary[i]
            best = (f, (xs[j] + xs[j + 1]) / 2.0)
    return best


def fit_decision_tree(X, y, max_depth=8):
    """Grow a CART classifier.

    Growth stops at ``max_depth``, at a pure node, at fewer than two samples,
    or when no feature has two distinct values. Leaves predict the majority
    label, ties going to the lowest label.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit_decision_tree needs a non-empty 2-D feature matrix")
    if len(y) != X.shape[0]:
        raise ValueError("X and y have different row counts")
    if max_depth < 1:
        raise ValueError("max_depth must be positive")
    classes, codes = _encode_labels(y)
    k = classes.size

    def grow(rows, depth):
        counts = np.bincount(codes[rows], minlength=k)
        node = TreeNode(label=int(np.argmax(counts)), n=int(rows.size))
        if depth >= max_depth or rows.size < 2 or counts.max() == rows.size:
            return node
        split = _best_split(X[rows], codes[rows], k)
        if split is None:
            return node
        node.feature, node.threshold = split
        go_left = X[rows, node.feature] <= node.threshold
        node.left = grow(rows[go_left], depth + 1)
        node.right = grow(rows[~go_left], depth + 1)
        return node

    return TreeModel(grow(np.arange(X.shape[0]), 0), classes, max_depth)


def predict_tree(model, X):
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.int64)
    stack = [(model.root, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if node.is_leaf:
            out[rows] = node.label
            continue
        go_left = X[rows, node.feature] <= node.threshold
        stack.append((node.left, rows[go_left]))
        stack.append((node.right, rows[~go_left]))
    return model.classes[out]


@dataclass
class MlpModel:
    net: nn.Network
    classes: np.ndarray
    losses: list


def fit_mlp_classifier(X, y, hidden_width=64, epochs=200, lr=1e-3, seed=0):
    """One hidden layer (leaky ReLU 0.01), softmax output, cross-entropy, full-batch Adam."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit_mlp_classifier needs a non-empty 2-D feature matrix")
    classes, codes = _encode_labels(y)
    k = classes.size
    rng = np.random.default_rng(seed)
    net = nn.Network(X.shape[1], [nn.dense(hidden_width), nn.leaky_relu(0.01),
                                  nn.dense(k), nn.head([(0, k, "softmax")])], rng)
    state = nn.AdamState.for_params(net.params, lr=lr, beta1=0.9, beta2=0.999, epsilon=1e-8)
    losses = []
    for _ in range(epochs):
        probs, cache = nn.forward(net, X, "train")
        loss, grad = nn.cross_entropy_loss(probs, codes)
        losses.append(loss)
        nn.adam_step(net.params, nn.backward(net, cache, grad), state)
    return MlpModel(net, classes, losses)


def predict_mlp(model, X):
    probs, _ = nn.forward(model.net, np.asarray(X, dtype=np.float64), "infer")
    return model.classes[probs.argmax(axis=1)]
