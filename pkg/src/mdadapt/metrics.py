"""Detection metrics: DET curve, EER, minimum detection cost.

The curve is the exact empirical trade-off from sweeping every distinct
score as a threshold (decide target when score >= threshold), plus the
reject-everything endpoint. EER interpolates linearly along the convex
hull of those operating points, which reduces to the achieved point
whenever an exact P_miss = P_fa threshold exists.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


@dataclass
class CostParams:
    p_target: float
    c_miss: float
    c_fa: float

    def __post_init__(self):
        if not 0.0 < self.p_target < 1.0:
            raise ConfigError("p_target must lie in (0, 1)")
        if self.c_miss <= 0 or self.c_fa <= 0:
            raise ConfigError("costs must be > 0")


# Standard operating points for the DCF10 / DCF08 reporting columns
# (NIST SRE'10 and SRE'08 conventions; the parameterization is a
# convention, not a given, and is overridable).
DCF10 = CostParams(p_target=0.001, c_miss=1.0, c_fa=1.0)
DCF08 = CostParams(p_target=0.01, c_miss=10.0, c_fa=1.0)
COST_PRESETS = {"dcf10": DCF10, "dcf08": DCF08}


@dataclass
class DetCurve:
    thresholds: np.ndarray
    p_miss: np.ndarray
    p_fa: np.ndarray
    n_targets: int
    n_nontargets: int


def compute_det(scoreset):
    """Empirical (P_miss, P_fa) at every distinct threshold."""
    scores, keys = scoreset.scores_and_keys()
    if any(k not in ("target", "nontarget") for k in keys):
        raise DataError("all trials need target/nontarget keys")
    labels = np.array([1 if k == "target" else 0 for k in keys])
    n_tgt = int(labels.sum())
    n_non = int(labels.size - n_tgt)
    if n_tgt == 0 or n_non == 0:
        raise DataError("need at least one target and one nontarget trial")

    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    # Misses below each distinct threshold; false alarms at or above it.
    distinct, first_idx = np.unique(sorted_scores, return_index=True)
    cum_targets = np.concatenate([[0], np.cumsum(sorted_labels)])
    cum_nontargets = np.concatenate([[0], np.cumsum(1 - sorted_labels)])
    p_miss = cum_targets[first_idx] / n_tgt
    p_fa = (n_non - cum_nontargets[first_idx]) / n_non

    thresholds = np.concatenate([distinct, [np.inf]])
    p_miss = np.concatenate([p_miss, [1.0]])
    p_fa = np.concatenate([p_fa, [0.0]])
    return DetCurve(thresholds, p_miss, p_fa, n_tgt, n_non)


def _lower_hull(p_fa, p_miss):
    """Lower-left convex hull of the operating points, P_fa ascending."""
    best = {}
    for fa, miss in zip(p_fa, p_miss):
        if fa not in best or miss < best[fa]:
            best[fa] = miss
    hull = []
    for pt in sorted(best.items()):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (pt[1] - y1) - (pt[0] - x1) * (y2 - y1) <= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def eer(curve):
    """Equal error rate in percent, interpolated along the curve's hull.

    P_miss - P_fa is strictly decreasing along the hull, so the diagonal
    crossing is unique.
    """
    hull = _lower_hull(curve.p_fa, curve.p_miss)
    for (fa1, miss1), (fa2, miss2) in zip(hull, hull[1:]):
        d1 = miss1 - fa1
        d2 = miss2 - fa2
        if d1 == 0.0:
            return 100.0 * miss1
        if d1 > 0.0 > d2:
            s = d1 / ((fa2 - fa1) - (miss2 - miss1))
            return 100.0 * (miss1 + s * (miss2 - miss1))
    return 100.0 * hull[-1][1]


def min_dcf(curve, params):
    """Minimum normalized detection cost over all thresholds."""
    cost = (
        params.c_miss * params.p_target * curve.p_miss
        + params.c_fa * (1.0 - params.p_target) * curve.p_fa
    )
    norm = min(params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target))
    return float(cost.min() / norm)


def evaluate(scoreset, presets=None):
    """EER plus named minDCF values; returns a flat metric dict."""
    presets = presets or COST_PRESETS
    curve = compute_det(scoreset)
    out = {"eer": eer(curve)}
    for name, params in presets.items():
        out[name] = min_dcf(curve, params)
    return out
