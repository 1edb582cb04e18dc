"""Scoring backend: whitening, length normalization, two-covariance PLDA.

The PLDA is the two-covariance Gaussian model x = y + e with speaker
factor y ~ N(mu, B) and residual e ~ N(0, W), fit by EM and scored with
the closed-form same/different-speaker log-likelihood ratio.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingSet
from .errors import ContractError, DataError, NormalizationError, ShapeError

EIGENVALUE_FLOOR_REL = 1e-8
EM_RIDGE_REL = 1e-6


@dataclass
class Whitener:
    mean: np.ndarray
    transform: np.ndarray  # T such that T Sigma T' = I on the fitting data

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        return (x - self.mean) @ self.transform.T


@dataclass
class PldaModel:
    mu: np.ndarray
    phi_between: np.ndarray
    phi_within: np.ndarray

    @property
    def dim(self):
        return self.mu.shape[0]


@dataclass
class TrialScore:
    enroll_id: str
    test_id: str
    score: float
    key: str = "unknown"


@dataclass
class TrialScoreSet:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def scores_and_keys(self):
        scores = np.array([r.score for r in self.rows])
        keys = [r.key for r in self.rows]
        return scores, keys


def fit_whitener(data):
    """Sample mean plus Sigma^(-1/2) via symmetric eigendecomposition.

    Eigenvalues are floored at EIGENVALUE_FLOOR_REL times the largest,
    with a warning, so rank-deficient fitting sets stay usable.
    """
    x = data.vectors() if isinstance(data, EmbeddingSet) else np.asarray(data, float)
    if x.shape[0] < 2:
        raise DataError("need at least 2 records to fit a whitener")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    floor = EIGENVALUE_FLOOR_REL * max(evals.max(), np.finfo(float).tiny)
    if (evals < floor).any():
        warnings.warn("whitener: flooring near-zero covariance eigenvalues")
        evals = np.maximum(evals, floor)
    transform = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    return Whitener(mean=mean, transform=transform)


def length_normalize(x, rec_id=None):
    """Scale to unit Euclidean norm."""
    x = np.asarray(x, dtype=np.float64)
    norm = np.linalg.norm(x, axis=-1, keepdims=x.ndim > 1)
    if np.any(norm == 0):
        label = f" (id {rec_id})" if rec_id is not None else ""
        raise NormalizationError(f"cannot length-normalize a zero vector{label}")
    return x / norm


def preprocess(whitener, vecset):
    """Center, whiten, length-normalize; the shared path for all sides."""
    return vecset.with_vectors(length_normalize(whitener.apply(vecset.vectors())))


def _speaker_groups(data):
    groups = {}
    for rec in data:
        if rec.speaker is None:
            raise ContractError(f"record {rec.id!r} lacks a speaker label")
        groups.setdefault(rec.speaker, []).append(rec.vector)
    return {spk: np.stack(vecs) for spk, vecs in groups.items()}


def _regularize(cov, label):
    """Ridge the diagonal until Cholesky succeeds."""
    cov = 0.5 * (cov + cov.T)
    ridge = EM_RIDGE_REL * np.trace(cov) / cov.shape[0]
    attempt = cov
    for _ in range(12):
        try:
            np.linalg.cholesky(attempt)
            return attempt
        except np.linalg.LinAlgError:
            warnings.warn(f"PLDA EM: regularizing singular {label} covariance")
            attempt = attempt + ridge * np.eye(cov.shape[0])
            ridge *= 10.0
    raise DataError(f"{label} covariance cannot be made positive definite")


def _logdet(cov):
    sign, val = np.linalg.slogdet(cov)
    if sign <= 0:
        raise DataError("covariance log-determinant undefined")
    return val


def plda_log_likelihood(mu, phi_b, phi_w, groups):
    """Total marginal log-likelihood of grouped sessions under the model."""
    d = mu.shape[0]
    b_inv = np.linalg.inv(phi_b)
    w_inv = np.linalg.inv(phi_w)
    logdet_b = _logdet(phi_b)
    logdet_w = _logdet(phi_w)
    total = 0.0
    for x in groups.values():
        n = x.shape[0]
        lam = b_inv + n * w_inv
        h = b_inv @ mu + w_inv @ x.sum(axis=0)
        m = np.linalg.solve(lam, h)
        quad = mu @ (b_inv @ mu) + np.einsum("ij,jk,ik->", x, w_inv, x) - h @ m
        total += -0.5 * (
            n * d * np.log(2 * np.pi) + logdet_b + n * logdet_w + _logdet(lam) + quad
        )
    return float(total)


def fit_plda(data, iters=20):
    """EM for the two-covariance model; returns (model, loglik trace).

    The trace holds the log-likelihood evaluated at the parameters of
    each iteration (before the update), so it is non-decreasing.
    """
    groups = _speaker_groups(data)
    if len(groups) < 2:
        raise ContractError("need at least 2 speakers to fit PLDA")
    if not any(x.shape[0] >= 2 for x in groups.values()):
        raise ContractError(
            "every speaker has a single session; within-class covariance "
            "is unidentifiable"
        )
    d = data.dim
    n_total = sum(x.shape[0] for x in groups.values())

    # Moment initialization from class means and residuals.
    mu = data.vectors().mean(axis=0)
    means = {spk: x.mean(axis=0) for spk, x in groups.items()}
    mdev = np.stack([m - mu for m in means.values()])
    phi_b = _regularize(mdev.T @ mdev / len(groups) + 1e-3 * np.eye(d), "between-class")
    resid = np.concatenate([x - means[spk] for spk, x in groups.items()])
    phi_w = _regularize(resid.T @ resid / n_total + 1e-3 * np.eye(d), "within-class")

    trace = []
    for _ in range(iters):
        trace.append(plda_log_likelihood(mu, phi_b, phi_w, groups))
        b_inv = np.linalg.inv(phi_b)
        w_inv = np.linalg.inv(phi_w)
        # E-step: posterior mean/covariance of each speaker factor.
        post = {}
        for spk, x in groups.items():
            n = x.shape[0]
            lam = b_inv + n * w_inv
            cov = np.linalg.inv(lam)
            m = cov @ (b_inv @ mu + w_inv @ x.sum(axis=0))
            post[spk] = (m, cov)
        # M-step.
        mu = np.stack([m for m, _ in post.values()]).mean(axis=0)
        acc_b = np.zeros((d, d))
        acc_w = np.zeros((d, d))
        for spk, x in groups.items():
            m, cov = post[spk]
            dev = m - mu
            acc_b += cov + np.outer(dev, dev)
            r = x - m
            acc_w += r.T @ r + x.shape[0] * cov
        phi_b = _regularize(acc_b / len(groups), "between-class")
        phi_w = _regularize(acc_w / n_total, "within-class")
    trace.append(plda_log_likelihood(mu, phi_b, phi_w, groups))
    return PldaModel(mu=mu, phi_between=phi_b, phi_within=phi_w), trace


def _scoring_terms(model):
    """Precompute the quadratic forms of the verification LLR.

    With T = B + W (total) and A = B (across-class), the LLR for
    centered sides u, v is 0.5 u'Qu + 0.5 v'Qv + u'Pv + const.
    """
    t = model.phi_between + model.phi_within
    a = model.phi_between
    t_inv = np.linalg.inv(t)
    schur = t - a @ t_inv @ a
    m1 = np.linalg.inv(schur)
    q = t_inv - m1
    p = t_inv @ a @ m1
    const = 0.5 * (_logdet(t) - _logdet(schur))
    return q, p, const


def plda_score(model, enroll, test):
    """Same-speaker vs different-speaker log-likelihood ratio."""
    enroll = np.asarray(enroll, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if enroll.shape != (model.dim,) or test.shape != (model.dim,):
        raise ShapeError("enroll/test dimensions do not match the model")
    q, p, const = _scoring_terms(model)
    u = enroll - model.mu
    v = test - model.mu
    return float(0.5 * u @ q @ u + 0.5 * v @ q @ v + u @ p @ v + const)


def score_trials(model, whitener, enroll_set, test_set, trials, do_preprocess=True):
    """Score an (enroll_id, test_id[, key]) trial list.

    Both sides go through the identical preprocessing path (center,
    whiten, length-normalize) before closed-form scoring.
    """
    if do_preprocess:
        enroll_set = preprocess(whitener, enroll_set)
        test_set = preprocess(whitener, test_set)
    q, p, const = _scoring_terms(model)

    def side_terms(vecset):
        u = vecset.vectors() - model.mu
        quad = 0.5 * np.einsum("ij,jk,ik->i", u, q, u)
        index = {rec_id: i for i, rec_id in enumerate(vecset.ids)}
        return u, quad, index

    u_enroll, quad_enroll, enroll_index = side_terms(enroll_set)
    u_test, quad_test, test_index = side_terms(test_set)
    cross_right = u_test @ p.T

    rows = []
    for trial in trials:
        enroll_id, test_id, key = trial
        if enroll_id not in enroll_index:
            raise DataError(f"trial enroll id {enroll_id!r} not in enroll set")
        if test_id not in test_index:
            raise DataError(f"trial test id {test_id!r} not in test set")
        i = enroll_index[enroll_id]
        j = test_index[test_id]
        score = quad_enroll[i] + quad_test[j] + u_enroll[i] @ cross_right[j] + const
        rows.append(TrialScore(enroll_id, test_id, float(score), key))
    return TrialScoreSet(rows)
