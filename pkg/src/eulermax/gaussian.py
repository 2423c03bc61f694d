"""Gaussian surrogates and the probabilistic bound evaluators.

The surrogate shares the Euler field's correlation structure: covariance
matrices are built from a :class:`~eulermax.covariance.CorrelationFunction`
at circular lag distances, factorized with an escalating diagonal jitter,
and sampled with per-trial counter-based seeds.

Three closed-form bounds are evaluated on explicit inputs, with every
otherwise-unspecified O(1) factor exposed as a parameter:

* a lower bound for the maximum of a stationary standard normal sequence
  with decreasing non-negative correlations,
* a normal comparison bound for the difference between joint orthant
  probabilities of two correlation matrices,
* an upper tail bound for sums of independent bounded variables with a
  cubic large-deviation correction,

plus the central-limit-theorem error term for smooth test statistics of
weighted sums of independent rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf
from scipy.special import ndtr

from .covariance import CorrelationFunction
from .errors import ConstructionError, NumericalError, ParameterError

_MASK64 = (1 << 64) - 1

JITTER_SCHEDULE = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def phi(z: float) -> float:
    """Standard normal CDF."""
    return float(ndtr(z))


@dataclass(frozen=True)
class CovMatrix:
    """Correlation matrix with its lower Cholesky factor and applied jitter."""

    points: np.ndarray
    matrix: np.ndarray
    factor: np.ndarray
    jitter: float


def build_cov_matrix(corr: CorrelationFunction, points: np.ndarray) -> CovMatrix:
    """Correlation matrix of the field at ``points``, factorized.

    Entries are the correlation at the plain separation |h_i - h_j|; the
    field lives on the real line, so separations past pi are evaluated
    as such (wrapping them would break positive definiteness, the
    correlation is oscillatory). Coincident points are rejected (they make
    the matrix exactly singular). Factorization retries with diagonal
    jitter 1e-12 .. 1e-6 in decade steps before giving up.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 1 or pts.size == 0:
        raise ParameterError("points must be a non-empty 1-d array")
    n = pts.size
    if np.unique(pts).size != n:
        raise ParameterError("coincident grid points: drop duplicates first")
    matrix = np.empty((n, n))
    for i in range(n):
        matrix[i, i] = 1.0
        for j in range(i + 1, n):
            r = corr(abs(float(pts[i] - pts[j])))
            matrix[i, j] = r
            matrix[j, i] = r
    last_info = 0
    for jitter in JITTER_SCHEDULE:
        attempt = matrix + jitter * np.eye(n) if jitter else matrix
        c, info = dpotrf(attempt, lower=1)
        if info == 0:
            return CovMatrix(
                points=pts, matrix=matrix, factor=np.tril(c), jitter=jitter
            )
        last_info = info
    raise NumericalError(
        f"factorization failed at jitter {JITTER_SCHEDULE[-1]:g}: "
        f"leading minor of order {last_info} not positive definite"
    )


def sample_gaussian_field(cov: CovMatrix, seed: int, n_trials: int) -> np.ndarray:
    """(n_trials, n_points) joint normal samples, one keyed stream per trial."""
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials}")
    if seed < 0:
        raise ParameterError(f"seed must be >= 0, got {seed}")
    n = cov.points.size
    draws = np.empty((n_trials, n))
    for t in range(n_trials):
        key = np.array([seed & _MASK64, t & _MASK64], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        draws[t] = gen.standard_normal(n)
    return draws @ cov.factor.T


def stationary_max_lower_bound(
    r_values: np.ndarray,
    u: float,
    n: int,
    subset_size: int | None = None,
    o_factor: float = 0.0,
) -> float:
    """Lower bound for P(max of n stationary standard normals > u).

    ``r_values`` holds the correlations r(1), ..., r(n-1) at successive lag
    multiples. Hypotheses are enforced, not clamped: u >= 1, the r sequence
    decreasing and non-negative, and r(1)(1 + 2/u^2) <= 1. ``o_factor``
    scales the unspecified O(1/(u^2 (1-r(j)))) correction inside each
    normal-CDF factor.
    """
    r = np.asarray(r_values, dtype=np.float64)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if r.size < n - 1:
        raise ParameterError(f"need r(1)..r({n - 1}), got {r.size} values")
    r = r[: n - 1]
    if u < 1.0:
        raise ConstructionError(f"hypothesis u >= 1 fails: u={u}")
    if r.size and np.any(r < 0.0):
        raise ConstructionError("hypothesis r(j) >= 0 fails")
    if r.size and np.any(np.diff(r) > 0.0):
        raise ConstructionError("hypothesis r(j) decreasing fails")
    if r.size and r[0] * (1.0 + 2.0 / (u * u)) > 1.0:
        raise ConstructionError(
            f"hypothesis r(1)(1 + 2/u^2) <= 1 fails: r(1)={r[0]:.6g}, u={u:.6g}"
        )
    if subset_size is None:
        subset_size = n
    if not (1 <= subset_size <= n):
        raise ParameterError(f"subset_size must be in [1, {n}], got {subset_size}")
    if r.size and r[0] > 0.0:
        min_term = min(1.0, math.sqrt((1.0 - r[0]) / (u * u * r[0])))
    else:
        min_term = 1.0
    product = 1.0
    for rj in r.tolist():
        gap = 1.0 - rj
        arg = u * math.sqrt(gap) * (1.0 + o_factor / (u * u * gap))
        product *= phi(arg)
    return (
        subset_size * math.exp(-0.5 * u * u) / (40.0 * u) * min_term * product
    )


def _validate_correlation_matrix(mat: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(mat, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=1e-12):
        raise ParameterError(f"{name} must be symmetric")
    if not np.allclose(np.diag(m), 1.0, atol=1e-12):
        raise ParameterError(f"{name} must have unit diagonal")
    if np.any(np.abs(m) > 1.0 + 1e-12):
        raise ParameterError(f"{name} has entries outside [-1, 1]")
    return m


def normal_comparison_bound(
    cov1: np.ndarray, cov0: np.ndarray, thresholds: np.ndarray
) -> float:
    """Bound on |P1(all X_j <= u_j) - P0(all X_j <= u_j)|.

    Sums (1/2pi) |arcsin r1_ij - arcsin r0_ij|
    exp(-(u_i^2+u_j^2) / (2 (1 + max(|r1_ij|, |r0_ij|)))) over pairs i < j.
    """
    m1 = _validate_correlation_matrix(cov1, "cov1")
    m0 = _validate_correlation_matrix(cov0, "cov0")
    u = np.asarray(thresholds, dtype=np.float64)
    if m1.shape != m0.shape:
        raise ParameterError(
            f"matrix shapes differ: {m1.shape} vs {m0.shape}"
        )
    if u.ndim != 1 or u.size != m1.shape[0]:
        raise ParameterError(
            f"thresholds length {u.size} does not match matrix order {m1.shape[0]}"
        )
    n = u.size
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            gap = abs(math.asin(m1[i, j]) - math.asin(m0[i, j]))
            if gap == 0.0:
                continue
            rmax = max(abs(m1[i, j]), abs(m0[i, j]))
            expo = -(u[i] * u[i] + u[j] * u[j]) / (2.0 * (1.0 + rmax))
            total += gap * math.exp(expo)
    return total / (2.0 * math.pi)


@dataclass(frozen=True)
class TailBoundInputs:
    """Moment data for the independent-sum upper tail bound."""

    sigma2: float
    third_moment_sum: float
    B: float
    K: float

    def __post_init__(self) -> None:
        if self.sigma2 <= 0.0:
            raise ParameterError(f"sigma2 must be positive, got {self.sigma2}")
        if self.third_moment_sum < 0.0:
            raise ParameterError("third_moment_sum must be non-negative")
        if self.B <= 0.0 or self.K <= 0.0:
            raise ParameterError("B and K must be positive")

    @property
    def validity_end(self) -> float:
        return self.sigma2 / (self.K * self.B)


def independent_sum_tail_bound(
    inputs: TailBoundInputs, t: float, c_big_oh: float = 1.0
) -> float:
    """Upper bound for P(sum >= t) with the cubic correction made explicit.

    Valid for 0 <= t <= sigma2/(K B); outside that window a parameter error
    names the validity range.
    """
    if t < 0.0 or t > inputs.validity_end:
        raise ParameterError(
            f"t={t:.6g} outside validity window [0, {inputs.validity_end:.6g}] "
            "(t <= sigma2/(K B))"
        )
    sigma = math.sqrt(inputs.sigma2)
    ratio = t / inputs.sigma2
    expo = -t * t / (2.0 * inputs.sigma2) + c_big_oh * abs(ratio) ** 3 * (
        inputs.third_moment_sum
    )
    return math.exp(expo) / (1.0 + t / sigma)


@dataclass(frozen=True)
class CltInputs:
    """Coefficient matrix and moments for the CLT error evaluation."""

    coefficients: np.ndarray
    third_moments: np.ndarray
    fourth_moments: np.ndarray
    delta: float

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients)
        if c.ndim != 2:
            raise ParameterError("coefficients must be 2-d (sources x targets)")
        if self.delta <= 0.0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        m3 = np.asarray(self.third_moments, dtype=np.float64)
        m4 = np.asarray(self.fourth_moments, dtype=np.float64)
        if m3.shape != (c.shape[0],) or m4.shape != (c.shape[0],):
            raise ParameterError("moment vectors must match the source count")
        if np.any(m3 < 0.0) or np.any(m4 < 0.0):
            raise ParameterError("moments must be non-negative")


def clt_error_bound(inputs: CltInputs) -> float:
    """Multivariate CLT error for smooth statistics of independent rotations.

    Returns (1/delta^2) sum_{g,h} sqrt(sum_i |c_ig|^2 |c_ih|^2 E|V_i|^4)
    + (1/delta^3) sum_i E|V_i|^3 (sum_h |c_ih|)^3.
    """
    c = np.abs(np.asarray(inputs.coefficients)) ** 2
    m4 = np.asarray(inputs.fourth_moments, dtype=np.float64)
    m3 = np.asarray(inputs.third_moments, dtype=np.float64)
    inner = c.T @ (c * m4[:, None])
    term1 = float(np.sum(np.sqrt(np.maximum(inner, 0.0)))) / inputs.delta**2
    row_abs = np.abs(np.asarray(inputs.coefficients)).sum(axis=1)
    term2 = float(np.sum(m3 * row_abs**3)) / inputs.delta**3
    return term1 + term2


def ks_distance_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ParameterError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_distance_to_cdf(samples: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic against ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size == 0:
        raise ParameterError("sample must be non-empty")
    n = x.size
    f = np.asarray([cdf(v) for v in x], dtype=np.float64)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))
