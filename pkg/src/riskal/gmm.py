"""Supervised Bayesian Gaussian mixture classifier.

Each health state k gets a Gaussian component whose mean and covariance
carry a Normal-inverse-Wishart prior; the mixing proportions carry a
Dirichlet prior. Component parameters are never point-estimated:
predictions integrate them out, giving a multivariate Student-t
predictive per class and a Dirichlet-multinomial ratio over labels.

Labels are 1-based throughout (see :mod:`riskal.probability`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .errors import (
    DimensionMismatch,
    EmptyInput,
    InputError,
    LabelOutOfRange,
    NonPosDefCovariance,
    NonPosDefResult,
    NonPosDefScale,
)
from .probability import DiscreteDistribution, validate_distribution

SYMMETRY_TOL = 1e-9


def _cholesky(mat: np.ndarray, err):
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise err(f"matrix is not positive definite: {exc}") from exc


@dataclass(frozen=True, eq=False)
class NiwParams:
    """Normal-inverse-Wishart parameters (m, kappa, v, S) for one class.

    ``m`` is the mean location, ``kappa`` its strength in pseudo-counts,
    ``S`` the scale matrix and ``v`` its strength; ``v`` must exceed
    D - 1 for the distribution to be proper.
    """

    m: np.ndarray
    kappa: float
    v: float
    S: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.m, dtype=float)
        S = np.ascontiguousarray(self.S, dtype=float)
        if m.ndim != 1 or m.size == 0 or not np.all(np.isfinite(m)):
            raise InputError("mean location must be a finite vector")
        d = m.shape[0]
        if S.shape != (d, d) or not np.all(np.isfinite(S)):
            raise DimensionMismatch(f"scale matrix must be finite with shape ({d}, {d})")
        if np.abs(S - S.T).max() > SYMMETRY_TOL:
            raise NonPosDefCovariance("scale matrix is not symmetric")
        _cholesky(S, NonPosDefCovariance)
        if not self.kappa > 0.0:
            raise InputError(f"kappa must be > 0, got {self.kappa!r}")
        if not self.v > d - 1:
            raise InputError(f"v must exceed D - 1 = {d - 1}, got {self.v!r}")
        m.flags.writeable = False
        S.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "v", float(self.v))

    @property
    def dim(self) -> int:
        return self.m.shape[0]


def default_prior(d: int) -> NiwParams:
    """Weakest proper prior whose component mean is zero-mean unit-variance.

    m = 0, kappa = 1, v = D + 2 and S = (v - D - 1) I = I, so the prior
    expectation of each class covariance is exactly the identity.
    """
    return NiwParams(m=np.zeros(d), kappa=1.0, v=float(d + 2), S=np.eye(d))


@dataclass(frozen=True, eq=False)
class DirichletParams:
    """Dirichlet concentration over the K mixing proportions."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.ascontiguousarray(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size == 0:
            raise EmptyInput("alpha must be a non-empty vector")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0.0):
            raise InputError("every alpha entry must be finite and > 0")
        alpha.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)

    def __len__(self) -> int:
        return self.alpha.shape[0]


def uniform_alpha(k: int) -> DirichletParams:
    """alpha = 1 everywhere: prior class probabilities of 1/K."""
    return DirichletParams(np.ones(k))


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Feature rows with 1-based integer labels. Row order is preserved
    and meaningful (sequential presentation relies on it)."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.features, dtype=float)
        y = np.ascontiguousarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise DimensionMismatch(f"features must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DimensionMismatch(
                f"{x.shape[0]} feature rows but {y.shape} labels"
            )
        if x.size and not np.all(np.isfinite(x)):
            raise InputError("features must be finite")
        if y.size and y.min() < 1:
            raise LabelOutOfRange(f"labels must be >= 1, found {int(y.min())}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "LabeledSet":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledSet(self.features[idx], self.labels[idx])


@dataclass(frozen=True, eq=False)
class GmmPosterior:
    """Posterior state of the classifier after a (possibly empty) fit.

    A class with zero observations keeps its prior block exactly, so the
    model is usable from the very first labelled point.
    """

    per_class: tuple[NiwParams, ...]
    counts: np.ndarray
    alpha: DirichletParams
    d: int

    # Student-t predictive cache, one entry per class.
    _t_mean: tuple[np.ndarray, ...] = field(init=False, repr=False)
    _t_chol: tuple[np.ndarray, ...] = field(init=False, repr=False)
    _t_dof: np.ndarray = field(init=False, repr=False)
    _t_lognorm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.per_class),):
            raise DimensionMismatch("one count per class is required")
        if np.any(counts < 0):
            raise InputError("class counts must be non-negative")
        if len(self.alpha) != len(self.per_class):
            raise DimensionMismatch("alpha length must match the class count")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

        d = self.d
        means, chols = [], []
        dofs = np.empty(len(self.per_class))
        lognorms = np.empty(len(self.per_class))
        for i, niw in enumerate(self.per_class):
            if niw.dim != d:
                raise DimensionMismatch("class block dimensionality mismatch")
            dof = niw.v - d + 1
            scale_factor = (niw.kappa + 1.0) / (niw.kappa * dof)
            if not (np.isfinite(scale_factor) and scale_factor > 0.0):
                raise NonPosDefScale(f"predictive scale factor {scale_factor!r} for class {i + 1}")
            s_chol = _cholesky(niw.S, NonPosDefResult)
            chol = np.sqrt(scale_factor) * s_chol
            logdet = 2.0 * np.log(np.diag(chol)).sum()
            lognorms[i] = (
                gammaln((dof + d) / 2.0)
                - gammaln(dof / 2.0)
                - 0.5 * d * np.log(dof * np.pi)
                - 0.5 * logdet
            )
            dofs[i] = dof
            means.append(niw.m)
            chols.append(chol)
        object.__setattr__(self, "_t_mean", tuple(means))
        object.__setattr__(self, "_t_chol", tuple(chols))
        object.__setattr__(self, "_t_dof", dofs)
        object.__setattr__(self, "_t_lognorm", lognorms)

    @property
    def n_classes(self) -> int:
        return len(self.per_class)

    @property
    def n_total(self) -> int:
        return int(self.counts.sum())

    def _check_label(self, k: int) -> None:
        if not 1 <= k <= self.n_classes:
            raise LabelOutOfRange(f"label {k} outside 1..{self.n_classes}")


def fit(data: LabeledSet, prior: NiwParams, alpha: DirichletParams, k: int) -> GmmPosterior:
    """Conjugate posterior from a labelled set, always from the fixed prior.

    Per class: with n_k observations, sample mean nu_bar and uncentered
    scatter S = sum_i nu_i nu_i^T,

        m_n = (kappa_0 m_0 + n_k nu_bar) / (kappa_0 + n_k)
        kappa_n = kappa_0 + n_k
        v_n = v_0 + n_k
        S_n = S_0 + S + kappa_0 m_0 m_0^T - kappa_n m_n m_n^T

    S_n is re-symmetrized after the rank-one subtractions before its
    Cholesky check. Retraining during active learning is always a full
    refit from the same prior on the extended labelled set; conjugacy
    makes that identical to incremental updating.
    """
    d = prior.dim
    if len(data) and data.dim != d:
        raise DimensionMismatch(f"data is {data.dim}-dimensional, prior is {d}-dimensional")
    if len(alpha) != k:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries for {k} classes")
    if len(data) and data.labels.max() > k:
        raise LabelOutOfRange(f"label {int(data.labels.max())} outside 1..{k}")

    m0, kappa0, v0, s0 = prior.m, prior.kappa, prior.v, prior.S
    prior_outer = kappa0 * np.outer(m0, m0)
    blocks = []
    counts = np.zeros(k, dtype=np.int64)
    for c in range(1, k + 1):
        rows = data.features[data.labels == c] if len(data) else np.empty((0, d))
        n_c = rows.shape[0]
        counts[c - 1] = n_c
        if n_c == 0:
            blocks.append(prior)
            continue
        nu_bar = rows.mean(axis=0)
        scatter = rows.T @ rows
        kappa_n = kappa0 + n_c
        m_n = (kappa0 * m0 + n_c * nu_bar) / kappa_n
        s_n = s0 + scatter + prior_outer - kappa_n * np.outer(m_n, m_n)
        s_n = 0.5 * (s_n + s_n.T)
        _cholesky(s_n, NonPosDefResult)
        blocks.append(NiwParams(m=m_n, kappa=kappa_n, v=v0 + n_c, S=s_n))
    return GmmPosterior(per_class=tuple(blocks), counts=counts, alpha=alpha, d=d)


def log_class_predictives(posterior: GmmPosterior, x: np.ndarray) -> np.ndarray:
    """(n, K) matrix of log p(nu | H=k, data) Student-t densities.

    The density for class k is T(m_n, (kappa_n + 1) / (kappa_n (v_n - D + 1)) S_n,
    v_n - D + 1), evaluated in log space through the cached Cholesky factor.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != posterior.d:
        raise DimensionMismatch(f"features are {x.shape[1]}-dimensional, model is {posterior.d}")
    n = x.shape[0]
    out = np.empty((n, posterior.n_classes))
    for i in range(posterior.n_classes):
        diff = x - posterior._t_mean[i]
        z = solve_triangular(posterior._t_chol[i], diff.T, lower=True, check_finite=False)
        mahal = np.einsum("ij,ij->j", z, z)
        dof = posterior._t_dof[i]
        out[:, i] = posterior._t_lognorm[i] - 0.5 * (dof + posterior.d) * np.log1p(mahal / dof)
    return out


def class_log_predictive(posterior: GmmPosterior, k: int, nu) -> float:
    """log p(nu | H = k, data) for a single feature vector."""
    posterior._check_label(k)
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (posterior.d,):
        raise DimensionMismatch(f"expected a {posterior.d}-vector, got shape {nu.shape}")
    return float(log_class_predictives(posterior, nu[None, :])[0, k - 1])


def label_predictives(posterior: GmmPosterior) -> np.ndarray:
    """P(H = k | data) = (n_k + alpha_k) / (n + alpha_0) for every k."""
    a = posterior.alpha.alpha
    return (posterior.counts + a) / (posterior.n_total + a.sum())


def class_prior_predictive(posterior: GmmPosterior, k: int) -> float:
    """P(H = k | data) with the mixing proportions integrated out."""
    posterior._check_label(k)
    return float(label_predictives(posterior)[k - 1])


def predict_many(posterior: GmmPosterior, x: np.ndarray) -> np.ndarray:
    """(n, K) matrix of posterior label probabilities, rows summing to 1.

    Bayes' rule applied in log space with a log-sum-exp normalization, so
    feature vectors far into the tails still produce valid rows.
    """
    logw = log_class_predictives(posterior, x) + np.log(label_predictives(posterior))
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    return w


def predict(posterior: GmmPosterior, nu) -> DiscreteDistribution:
    """Posterior distribution over health states for one feature vector."""
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (posterior.d,):
        raise DimensionMismatch(f"expected a {posterior.d}-vector, got shape {nu.shape}")
    return validate_distribution(predict_many(posterior, nu[None, :])[0])
