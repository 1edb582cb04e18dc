"""Shared test utilities: independent oracles and small builders.

Everything here is deliberately written against the math, not against the
package internals, so tests compare two independent implementations.
"""

import numpy as np

from mdadapt.data import LabeledVectorSet, Record
from mdadapt.nnet import softmax


def finite_difference(fn, arr, step=1e-5):
    """Central finite-difference gradient of a scalar function of `arr`."""
    grad = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + step
        f_plus = fn()
        arr[idx] = orig - step
        f_minus = fn()
        arr[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * step)
        it.iternext()
    return grad


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return np.abs(a - b).max() / denom


def make_set(vectors, speakers=None, domains=None, codes=None, prefix="r"):
    records = []
    for i, vec in enumerate(np.asarray(vectors, dtype=np.float64)):
        records.append(
            Record(
                id=f"{prefix}{i}",
                vector=vec,
                speaker=None if speakers is None else speakers[i],
                domain=None if domains is None else domains[i],
                code=None if codes is None else codes[i],
            )
        )
    return LabeledVectorSet(records)


def det_points_oracle(scores, labels):
    """Brute-force per-threshold recount: O(n^2) over distinct thresholds.

    Decide target when score >= threshold. Returns (thresholds, p_miss,
    p_fa) including the reject-everything endpoint.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_tgt = int((labels == 1).sum())
    n_non = int((labels == 0).sum())
    thresholds = sorted(set(scores.tolist())) + [np.inf]
    p_miss, p_fa = [], []
    for t in thresholds:
        miss = sum(1 for s, l in zip(scores, labels) if l == 1 and s < t)
        fa = sum(1 for s, l in zip(scores, labels) if l == 0 and s >= t)
        p_miss.append(miss / n_tgt)
        p_fa.append(fa / n_non)
    return np.array(thresholds), np.array(p_miss), np.array(p_fa)


def eer_oracle(scores, labels):
    """Convex-hull EER from brute-force points, hull built by exhaustion.

    A point is on the lower-left hull iff no segment between two other
    points passes strictly below it. Interpolation arithmetic matches the
    published convention (crossing of the hull with the diagonal).
    """
    _, p_miss, p_fa = det_points_oracle(scores, labels)
    best = {}
    for fa, miss in zip(p_fa, p_miss):
        if fa not in best or miss < best[fa]:
            best[fa] = miss
    pts = sorted(best.items())
    hull = []
    for i, (fa, miss) in enumerate(pts):
        dominated = False
        for j in range(len(pts)):
            for k in range(j + 1, len(pts)):
                fa1, m1 = pts[j]
                fa2, m2 = pts[k]
                # strict: fa values are deduplicated, so equality means the
                # candidate is a segment endpoint (rounding there can place
                # the interpolant one ulp below the point itself)
                if fa1 < fa < fa2:
                    interp = m1 + (fa - fa1) / (fa2 - fa1) * (m2 - m1)
                    if interp < miss:
                        dominated = True
                        break
            if dominated:
                break
        if not dominated:
            hull.append((fa, miss))
    for (fa1, miss1), (fa2, miss2) in zip(hull, hull[1:]):
        d1 = miss1 - fa1
        d2 = miss2 - fa2
        if d1 == 0.0:
            return 100.0 * miss1
        if d1 > 0.0 > d2:
            s = d1 / ((fa2 - fa1) - (miss2 - miss1))
            return 100.0 * (miss1 + s * (miss2 - miss1))
    return 100.0 * hull[-1][1]


def min_dcf_oracle(scores, labels, p_target, c_miss, c_fa):
    """Exhaustive threshold sweep for the normalized minimum cost."""
    _, p_miss, p_fa = det_points_oracle(scores, labels)
    costs = c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa
    return float(costs.min() / min(c_miss * p_target, c_fa * (1.0 - p_target)))


def linear_probe_accuracy(x, labels, speakers, seed, epochs=60, lr=0.2, batch=64):
    """Accuracy of a fresh linear softmax probe with a speaker-disjoint split.

    70% of speakers train the probe, the rest evaluate it, so speaker
    memorization cannot stand in for genuine class information.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    spk = np.array(sorted(set(speakers)))
    rng.shuffle(spk)
    train_spk = set(spk[: int(0.7 * len(spk))].tolist())
    train_mask = np.array([s in train_spk for s in speakers])

    mu = x[train_mask].mean(axis=0)
    sd = x[train_mask].std(axis=0) + 1e-8
    xs = (x - mu) / sd
    k = int(labels.max()) + 1
    weights = np.zeros((k, x.shape[1]))
    bias = np.zeros(k)
    x_train, y_train = xs[train_mask], labels[train_mask]
    order = np.arange(len(x_train))
    for _ in range(epochs):
        rng.shuffle(order)
        for start in range(0, len(order), batch):
            idx = order[start : start + batch]
            probs = softmax(x_train[idx] @ weights.T + bias)
            probs[np.arange(len(idx)), y_train[idx]] -= 1.0
            probs /= len(idx)
            weights -= lr * (probs.T @ x_train[idx])
            bias -= lr * probs.sum(axis=0)
    pred = (xs[~train_mask] @ weights.T + bias).argmax(axis=1)
    return float((pred == labels[~train_mask]).mean())


def chance_level(labels):
    """Majority-class share, the floor for any constant predictor."""
    labels = np.asarray(labels)
    _, counts = np.unique(labels, return_counts=True)
    return float(counts.max() / counts.sum())
