"""Soft training targets blended from hard labels and neighborhood structure.

The propagation factor alpha in [0, 1] controls how much of the target mass
moves from the labeled class onto the normalized class histogram of the two
endpoints' incident edges. alpha = 0 reproduces plain one-hot supervision
bitwise, alpha = 1 is the pure neighborhood distribution.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidClassError, InvalidConfigError
from .graph import RETROSPECTIVE, TypedInteractionGraph


def one_hot(label: int, n_classes: int) -> np.ndarray:
    if not 0 <= label < n_classes:
        raise InvalidClassError(f"label {label} outside 0..{n_classes - 1}")
    t = np.zeros(n_classes, dtype=np.float64)
    t[label] = 1.0
    return t


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise InvalidConfigError(f"propagation factor must be in [0, 1], got {alpha}")
    return alpha


def neighborhood_distribution(graph: TypedInteractionGraph, a: int, b: int) -> np.ndarray:
    """Normalized pair class histogram of (a, b); symmetric in the pair.

    When both endpoints are isolated the histogram is all-zero and the
    fallback is the one-hot on the no-interaction class in retrospective
    mode, the uniform distribution in holdout mode.
    """
    hist = graph.pair_class_histogram(a, b).astype(np.float64)
    total = hist.sum()
    if total == 0.0:
        if graph.mode == RETROSPECTIVE:
            return one_hot(0, graph.n_classes)
        return np.full(graph.n_classes, 1.0 / graph.n_classes)
    return hist / total


def propagate_target(
    graph: TypedInteractionGraph, a: int, b: int, label: int, alpha: float
) -> np.ndarray:
    """(1 - alpha) * onehot(label) + alpha * neighborhood_distribution(a, b).

    label 0 is a legal training label in retrospective mode (sampled
    no-interaction pairs) even though it never appears as a stored edge.
    """
    alpha = check_alpha(alpha)
    hard = one_hot(label, graph.n_classes)
    if alpha == 0.0:
        return hard
    return (1.0 - alpha) * hard + alpha * neighborhood_distribution(graph, a, b)
