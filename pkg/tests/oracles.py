"""Independent reference implementations the tests compare against.

Everything here is deliberately written the slow, obvious way — plain
loops, no shared code with the package — so a bug in the implementation
cannot hide in its own oracle.
"""

import math
from fractions import Fraction

import numpy as np

EARTH_RADIUS_KM = 6371.0


def brute_force_haversine(lat1, lon1, lat2, lon2):
    """Spherical law of haversines, straight from the textbook formula."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = math.radians(lat2 - lat1), math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def gini_of(labels):
    total = len(labels)
    impurity = Fraction(1)
    for c in set(labels):
        p = Fraction(sum(1 for v in labels if v == c), total)
        impurity -= p * p
    return impurity


def exhaustive_best_split(X, y):
    """Try every (feature, midpoint) pair; return (feature, threshold) or None.

    Maximizes Gini gain; ties go to the lower feature index, then the
    lower threshold. Gains are exact rationals, so ties between splits
    with mathematically equal gains resolve by the rule, never by
    floating-point rounding noise.
    """
    n, n_features = X.shape
    parent = gini_of(list(y))
    best = None  # (-gain, feature, threshold)
    for f in range(n_features):
        values = sorted(set(X[:, f]))
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2.0
            left = [y[i] for i in range(n) if X[i, f] <= threshold]
            right = [y[i] for i in range(n) if X[i, f] > threshold]
            if not left or not right:
                continue
            weighted = Fraction(len(left) * gini_of(left) + len(right) * gini_of(right), n)
            gain = parent - weighted
            if gain <= 0:
                continue
            key = (-gain, f, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return best[1], best[2]


def walk_depth1_tree(tree):
    """Extract (feature, threshold) from a depth-1 tree node, or None for a leaf."""
    if not hasattr(tree, "feature"):
        return None
    return tree.feature, tree.threshold


def mape_percent(predictions, actuals):
    """MAPE over entries with nonzero actuals, as a percentage."""
    terms = [
        abs(p - a) / abs(a) for p, a in zip(predictions, actuals) if a != 0
    ]
    return 100.0 * sum(terms) / len(terms) if terms else float("nan")


def rmse_of(predictions, actuals):
    return math.sqrt(sum((p - a) ** 2 for p, a in zip(predictions, actuals)) / len(actuals))
