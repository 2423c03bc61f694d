"""Deterministic covariance structure of the random Euler-product field.

For a field built from primes P <= p <= Q with truncation height T, the lag
covariance is

    C(dh) = (1/2) * sum_{P <= p <= Q} cos(dh log p) / p * (log(T/p)/log T)^2

and everything here evaluates, normalizes, sweeps or approximates that sum.
The piecewise asymptotic has three regimes; the leading-order value is
returned with O(1) terms set to zero, together with the regime label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParameterError
from .primes import PrimeTable

# Below this argument the cosine integral switches to the alternating series.
SERIES_CUTOFF = 1e-3
_RENORM_EVERY = 1024


@dataclass(frozen=True)
class CovarianceSpec:
    """Prime window [P, Q] and truncation height T over a shared table."""

    table: PrimeTable
    P: float
    Q: float
    T: float

    def __post_init__(self) -> None:
        if not (2 <= self.P <= self.Q <= self.T):
            raise ParameterError(
                f"need 2 <= P <= Q <= T, got P={self.P}, Q={self.Q}, T={self.T}"
            )
        if self.Q > self.table.limit:
            raise ParameterError(
                f"Q={self.Q} exceeds prime table limit {self.table.limit}"
            )

    def _weights(self) -> tuple[np.ndarray, np.ndarray]:
        sl = self.table.range_slice(self.P, self.Q)
        p = self.table.primes[sl].astype(np.float64)
        lp = self.table.log_p[sl]
        log_t = math.log(self.T)
        w = 1.0 - lp / log_t
        return lp, w * w / p


def exact_covariance(spec: CovarianceSpec, dh: float) -> float:
    """Exact lag-dh covariance; compensated summation in ascending order."""
    lp, w2p = spec._weights()
    if lp.size == 0:
        return 0.0
    terms = np.cos(dh * lp) * w2p
    return 0.5 * math.fsum(terms.tolist())


def covariance_lattice(spec: CovarianceSpec, step: float, n_lags: int) -> np.ndarray:
    """Covariance at lags j*step for j = 0..n_lags-1.

    Sweeps the lag lattice with one complex rotation per prime per lag
    (no transcendental calls in the loop), renormalizing the rotors every
    1024 steps to stop drift.
    """
    if n_lags < 1:
        raise ParameterError(f"n_lags must be >= 1, got {n_lags}")
    lp, w2p = spec._weights()
    out = np.empty(n_lags, dtype=np.float64)
    if lp.size == 0:
        out[:] = 0.0
        return out
    rot = np.exp(1j * step * lp)
    z = np.ones_like(rot)
    for j in range(n_lags):
        out[j] = 0.5 * float(np.dot(w2p, z.real))
        z *= rot
        if (j + 1) % _RENORM_EVERY == 0:
            z /= np.abs(z)
    return out


@dataclass
class CorrelationFunction:
    """Covariance normalized to 1 at lag zero."""

    spec: CovarianceSpec
    normalization: float = field(init=False)

    def __post_init__(self) -> None:
        norm = exact_covariance(self.spec, 0.0)
        if norm <= 0.0:
            raise ParameterError("empty prime window: zero variance")
        self.normalization = norm

    def __call__(self, dh: float) -> float:
        if dh == 0.0:
            return 1.0
        return exact_covariance(self.spec, dh) / self.normalization


def _cos_over_v_series(a: float, b: float) -> float:
    # int_a^b cos v / v dv = log(b/a) + sum_{k>=1} (-1)^k (b^{2k}-a^{2k})/(2k (2k)!)
    total = math.log(b / a)
    sign = -1.0
    fact = 1.0
    for k in range(1, 6):
        fact *= (2 * k - 1) * (2 * k)
        total += sign * (b ** (2 * k) - a ** (2 * k)) / (2 * k * fact)
        sign = -sign
    return total


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    if depth <= 0:
        raise NumericalError(
            f"adaptive quadrature failed to converge on [{a}, {b}]"
        )
    return _adaptive_simpson(
        f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1
    ) + _adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)


def cosine_integral_segment(a: float, b: float, tol: float = 1e-10) -> float:
    """int_a^b cos(v)/v dv for 0 < a <= b.

    Uses the alternating series on arguments below 1e-3 and adaptive Simpson
    bisection above, to absolute tolerance ``tol``.
    """
    if not (0.0 < a <= b):
        raise ParameterError(f"need 0 < a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    if b <= SERIES_CUTOFF:
        return _cos_over_v_series(a, b)
    total = 0.0
    lo = a
    if a < SERIES_CUTOFF:
        total += _cos_over_v_series(a, SERIES_CUTOFF)
        lo = SERIES_CUTOFF

    def f(v: float) -> float:
        return math.cos(v) / v

    fa, fb = f(lo), f(b)
    fm = f(0.5 * (lo + b))
    whole = (b - lo) / 6.0 * (fa + 4.0 * fm + fb)
    return total + _adaptive_simpson(f, lo, b, fa, fm, fb, whole, tol, 60)


REGIME_NEAR = "near"
REGIME_LOG_WINDOW = "log_window"
REGIME_FAR = "far"


def asymptotic_covariance(P: float, Q: float, dh: float) -> tuple[float, str]:
    """Leading-order covariance value and regime label for lag ``dh``.

    Regimes: |dh| <= 1/log Q is flat at (1/2)(log log Q - log log P); up to
    1/log P the value decays like (1/2) log(1/(|dh| log P)); beyond that the
    whole value is O(1/(|dh| log P)) and the leading order returned is 0.
    """
    if not (2 <= P <= Q):
        raise ParameterError(f"need 2 <= P <= Q, got P={P}, Q={Q}")
    log_p = math.log(P)
    log_q = math.log(Q)
    if log_p <= 1.0:
        raise ParameterError("P must exceed e for log log P to make sense")
    adh = abs(dh)
    if adh * log_q <= 1.0:
        return 0.5 * (math.log(log_q) - math.log(log_p)), REGIME_NEAR
    if adh <= 1.0 / log_p:
        return 0.5 * math.log(1.0 / (adh * log_p)), REGIME_LOG_WINDOW
    return 0.0, REGIME_FAR


def fit_far_decay_constant(
    spec: CovarianceSpec, lags: np.ndarray, normalized: bool = False
) -> float:
    """Smallest C with |value(dh)| <= C/(dh log P [log log T]) on ``lags``.

    All lags must sit in the far regime (dh > 1/log P). With ``normalized``
    the correlation (covariance over variance) and an extra log log T factor
    are used, matching the normalized decay statement.
    """
    log_p = math.log(spec.P)
    lags = np.asarray(lags, dtype=np.float64)
    if np.any(lags * log_p <= 1.0):
        raise ParameterError("far-regime fit needs all lags > 1/log P")
    if normalized:
        corr = CorrelationFunction(spec)
        scale = math.log(math.log(spec.T))
        values = np.array([corr(d) for d in lags])
    else:
        scale = 1.0
        values = np.array([exact_covariance(spec, d) for d in lags])
    return float(np.max(np.abs(values) * lags * log_p * scale))


@dataclass
class MonotoneReport:
    """Lag-lattice scan for negative or non-decreasing correlation values."""

    js: np.ndarray
    values: np.ndarray
    first_negative: int | None
    first_nonmonotone: int | None

    @property
    def passed(self) -> bool:
        return self.first_negative is None and self.first_nonmonotone is None


def check_monotone_nonneg(
    corr: CorrelationFunction, E: float, K: float, j_max: int
) -> MonotoneReport:
    """Scan r(j * E/log T) for j in the separated-lag window.

    The scan covers 1 <= j <= min(j_max, log T/(K E log y)); an empty window
    (possible at small T) yields a trivially passing report.
    """
    if E <= 0 or K <= 0 or j_max < 1:
        raise ParameterError("need E > 0, K > 0, j_max >= 1")
    T = corr.spec.T
    y = corr.spec.P
    log_t = math.log(T)
    j_hi = min(j_max, math.floor(log_t / (K * E * math.log(y))))
    js = np.arange(1, j_hi + 1, dtype=np.int64)
    values = np.array([corr(j * E / log_t) for j in js])
    first_negative = None
    neg = np.flatnonzero(values < 0.0)
    if neg.size:
        first_negative = int(js[neg[0]])
    first_nonmonotone = None
    prev = 1.0
    for j, v in zip(js.tolist(), values.tolist()):
        if v > prev:
            first_nonmonotone = j
            break
        prev = v
    return MonotoneReport(
        js=js,
        values=values,
        first_negative=first_negative,
        first_nonmonotone=first_nonmonotone,
    )
