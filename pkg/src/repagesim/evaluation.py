"""Five-level social evaluations.

An evaluation is a plain 5-tuple of weights over the ordered levels
very-bad, bad, neutral, good, very-good.  Weights are nonnegative and sum
to one.  Confidence is carried separately as a strength in ``[0, 1]``.

Scalar qualities in ``[1, 100]`` map onto the levels with a triangular
(Ruspini) partition centred on ``CENTROIDS``, so fuzzification followed by
defuzzification is exact on ``[10, 90]``.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence, Tuple

Distribution = Tuple[float, float, float, float, float]

LEVELS = ("very-bad", "bad", "neutral", "good", "very-good")
CENTROIDS = (10.0, 30.0, 50.0, 70.0, 90.0)
SPACING = 20.0
QUALITY_MIN = 1.0
QUALITY_MAX = 100.0
#: total weight at which aggregated strength saturates to 1
W_SAT = 3.0
NORM_TOL = 1e-9


class EvaluationError(ValueError):
    """Invalid evaluation input."""


class NoEvaluation(EvaluationError):
    """Aggregation had nothing to aggregate (empty input or zero weight)."""


def make_distribution(weights: Iterable[float]) -> Distribution:
    """Return a normalized copy of five nonnegative weights.

    >>> make_distribution((2, 0, 0, 0, 2))
    (0.5, 0.0, 0.0, 0.0, 0.5)
    """
    w = tuple(float(x) for x in weights)
    if len(w) != 5:
        raise EvaluationError(f"expected 5 weights, got {len(w)}")
    if any(not math.isfinite(x) or x < 0 for x in w):
        raise EvaluationError(f"weights must be finite and nonnegative: {w}")
    total = math.fsum(w)
    if total <= 0:
        raise EvaluationError("weights are all zero")
    return tuple(x / total for x in w)  # type: ignore[return-value]


def is_distribution(d: Sequence[float], tol: float = NORM_TOL) -> bool:
    return (
        len(d) == 5
        and all(0.0 <= x <= 1.0 for x in d)
        and abs(math.fsum(d) - 1.0) <= tol
    )


def one_hot(level: int) -> Distribution:
    w = [0.0] * 5
    w[level] = 1.0
    return tuple(w)  # type: ignore[return-value]


def quality_to_distribution(q: float) -> Distribution:
    """Fuzzify a quality in [1, 100] into triangular level memberships."""
    if not QUALITY_MIN <= q <= QUALITY_MAX:
        raise EvaluationError(f"quality {q} outside [{QUALITY_MIN:g}, {QUALITY_MAX:g}]")
    if q <= CENTROIDS[0]:
        return one_hot(0)
    if q >= CENTROIDS[-1]:
        return one_hot(4)
    pos = (q - CENTROIDS[0]) / SPACING
    lo = min(int(pos), 3)
    upper = pos - lo
    w = [0.0] * 5
    w[lo] = 1.0 - upper
    w[lo + 1] = upper
    return tuple(w)  # type: ignore[return-value]


def expected_quality(d: Distribution) -> float:
    """Defuzzify: centroid-weighted mean of the level weights."""
    return (
        10.0 * d[0] + 30.0 * d[1] + 50.0 * d[2] + 70.0 * d[3] + 90.0 * d[4]
    )


def pool(items: Iterable[Tuple[Distribution, float]]) -> Optional[Tuple[Distribution, float]]:
    """Weighted mean of distributions and the total weight.

    Returns ``None`` when there is no positive weight to pool.
    """
    a = b = c = e = f = 0.0
    total = 0.0
    for d, w in items:
        if w <= 0.0:
            continue
        total += w
        a += w * d[0]
        b += w * d[1]
        c += w * d[2]
        e += w * d[3]
        f += w * d[4]
    if total <= 0.0:
        return None
    s = a + b + c + e + f
    return (a / s, b / s, c / s, e / s, f / s), total


def strength_of(total_weight: float, saturation: float = W_SAT) -> float:
    return min(1.0, total_weight / saturation)


def aggregate(
    items: Sequence[Tuple[Distribution, float]], saturation: float = W_SAT
) -> Tuple[Distribution, float]:
    """Pool weighted evaluations into one evaluation and its strength.

    Raises
    ------
    NoEvaluation
        If ``items`` is empty or carries no positive weight.
    """
    if any(w < 0 for _, w in items):
        raise EvaluationError("aggregation weights must be nonnegative")
    pooled = pool(items)
    if pooled is None:
        raise NoEvaluation("nothing to aggregate")
    d, total = pooled
    return d, strength_of(total, saturation)


def reverse(d: Distribution) -> Distribution:
    return (d[4], d[3], d[2], d[1], d[0])


def distance(a: Distribution, b: Distribution) -> float:
    """Total variation distance, in [0, 1]."""
    return 0.5 * (
        abs(a[0] - b[0])
        + abs(a[1] - b[1])
        + abs(a[2] - b[2])
        + abs(a[3] - b[3])
        + abs(a[4] - b[4])
    )


def format_distribution(d: Distribution, digits: int = 6) -> str:
    return "(" + ",".join(f"{x:.{digits}f}" for x in d) + ")"
