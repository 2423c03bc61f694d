"""Zeta evaluation at moderate height and prime-sum approximation checks.

zeta(1/2 + it) is computed from a truncated Dirichlet series plus
Euler-Maclaurin boundary corrections. With N summation terms and the full
second-order correction the first omitted term is of order t^5 N^{-11/2},
so the default N = max(64, ceil(0.75 t)) keeps roughly t^{-1/2} * 1.6e-4
accuracy while staying a safe factor above the t/(2 pi) oscillation limit.

The interval checks compare log|zeta| on a random sample of [T, T + 2pi]
against the weighted prime sum (plain, and shifted with the prime-square
term); the mean-value check estimates max|zeta|^2 over unit intervals
against the log^2 T1 scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .primes import PrimeTable
from .field import shifted_components

TWO_PI = 2.0 * math.pi
T_WINDOW = (10.0, 1.0e7)
ERROR_BUDGET = 1.0e-3
NEAR_ZERO = 1.0e-8
_CHUNK = 1 << 15


@dataclass(frozen=True)
class ZetaEvalParams:
    """Height, truncation length and correction order for one evaluation.

    correction_order 0 keeps the integral tail and half-term only, 1 adds
    the first Bernoulli correction, 2 (default) the second. Below order 2
    the truncation must cover the oscillation scale, n_terms >= t/(2 pi).
    """

    t: float
    n_terms: int | None = None
    correction_order: int = 2
    enforce_window: bool = True

    def __post_init__(self) -> None:
        if self.correction_order not in (0, 1, 2):
            raise ParameterError(
                f"correction_order must be 0, 1 or 2, got {self.correction_order}"
            )
        if self.n_terms is None:
            object.__setattr__(
                self, "n_terms", max(64, math.ceil(0.75 * abs(self.t)))
            )
        if self.n_terms < 8:
            raise ParameterError(f"n_terms must be >= 8, got {self.n_terms}")
        if self.correction_order < 2 and self.n_terms < math.ceil(
            abs(self.t) / TWO_PI
        ):
            raise ParameterError(
                f"accuracy guard: n_terms={self.n_terms} below ceil(t/2pi)="
                f"{math.ceil(abs(self.t) / TWO_PI)} at correction_order "
                f"{self.correction_order}"
            )
        if self.enforce_window and not (
            T_WINDOW[0] <= abs(self.t) <= T_WINDOW[1]
        ):
            raise ParameterError(
                f"|t|={abs(self.t):g} outside the supported window "
                f"[{T_WINDOW[0]:g}, {T_WINDOW[1]:g}]"
            )


def zeta_half_line(params: ZetaEvalParams) -> tuple[complex, float]:
    """zeta(1/2 + it) and an error estimate (the first omitted term).

    The estimate must stay within the 1e-3 budget, otherwise the requested
    truncation cannot support the height and a numerical error is raised.
    """
    t = params.t
    n = params.n_terms
    s = complex(0.5, t)
    total = 0.0 + 0.0j
    for lo in range(1, n + 1, _CHUNK):
        hi = min(n + 1, lo + _CHUNK)
        k = np.arange(lo, hi, dtype=np.float64)
        log_k = np.log(k)
        total += complex(
            np.sum(np.exp(-1j * t * log_k) / np.sqrt(k))
        )
    nf = float(n)
    n_pow = nf**-0.5 * complex(math.cos(t * math.log(nf)), -math.sin(t * math.log(nf)))
    value = total + nf * n_pow / (s - 1.0) - 0.5 * n_pow
    if params.correction_order >= 1:
        value += s * n_pow / (12.0 * nf)
    if params.correction_order >= 2:
        value -= s * (s + 1.0) * (s + 2.0) * n_pow / (720.0 * nf**3)
    if params.correction_order == 0:
        err = abs(s) * nf**-1.5 / 12.0
    elif params.correction_order == 1:
        err = abs(s * (s + 1.0) * (s + 2.0)) * nf**-3.5 / 720.0
    else:
        err = (
            abs(s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0))
            * nf**-5.5
            / 30240.0
        )
    if err > ERROR_BUDGET:
        raise NumericalError(
            f"error estimate {err:.2e} exceeds the {ERROR_BUDGET:g} budget; "
            f"increase n_terms (t={t:g}, n_terms={n})"
        )
    return value, err


def prop1_main_sum(t: float, T: float, table: PrimeTable) -> float:
    """Re sum over p <= T of p^(-1/2-it) log(T/p)/log T."""
    if not (2.0 <= T <= table.limit):
        raise ParameterError(
            f"need 2 <= T <= table limit {table.limit}, got T={T:g}"
        )
    sl = table.range_slice(2.0, T)
    lp = table.log_p[sl]
    coef = table.inv_sqrt_p[sl] * (1.0 - lp / math.log(T))
    return float(np.dot(coef, np.cos(t * lp)))


def prop1_upper_sum(t: float, T: float, table: PrimeTable) -> float:
    """The shifted prime sum plus the half-weighted prime-square sum.

    Equals the shifted field at offset t with all phases set to one; under
    the Riemann hypothesis this dominates log|zeta(1/2+it)| up to O(1) for
    every t near T.
    """
    if not (2.0 <= T <= table.limit):
        raise ParameterError(
            f"need 2 <= T <= table limit {table.limit}, got T={T:g}"
        )
    _, lp, lin, _, lp2, sq = shifted_components(table, T)
    total = float(np.dot(lin, np.cos(t * lp)))
    if lp2.size:
        total += float(np.dot(sq, np.cos(2.0 * t * lp2)))
    return total


@dataclass(frozen=True)
class IntervalCheckReport:
    """Sampled comparison of log|zeta| against the prime sums."""

    T: float
    n_samples: int
    slack: float
    seed: int
    ts: np.ndarray
    log_abs_zeta: np.ndarray
    main_sums: np.ndarray
    upper_sums: np.ndarray
    near_zero: np.ndarray
    fraction_approx: float
    fraction_upper: float
    n_near_zero: int


def prop1_interval_check(
    T: float,
    n_samples: int,
    slack: float,
    table: PrimeTable,
    seed: int = 0,
) -> IntervalCheckReport:
    """Sample t in [T, T+2pi]; compare log|zeta| with both prime sums.

    Samples with |zeta| below 1e-8 count toward the exceptional set and are
    excluded from the two-sided O(1) comparison (log|zeta| is unstable
    there); the one-sided upper bound is checked at every sample.
    """
    if n_samples < 10:
        raise ParameterError(f"n_samples must be >= 10, got {n_samples}")
    if not (T_WINDOW[0] <= T <= T_WINDOW[1]):
        raise ParameterError(
            f"T={T:g} outside the evaluator window [{T_WINDOW[0]:g}, {T_WINDOW[1]:g}]"
        )
    key = np.array([seed, 0], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    ts = np.sort(T + TWO_PI * gen.random(n_samples))
    log_abs = np.empty(n_samples)
    mains = np.empty(n_samples)
    uppers = np.empty(n_samples)
    near = np.zeros(n_samples, dtype=bool)
    for i, t in enumerate(ts.tolist()):
        value, _ = zeta_half_line(ZetaEvalParams(t=t))
        mod = abs(value)
        near[i] = mod < NEAR_ZERO
        log_abs[i] = math.log(mod) if mod > 0 else -math.inf
        mains[i] = prop1_main_sum(t, T, table)
        uppers[i] = prop1_upper_sum(t, T, table)
    ok = ~near
    n_ok = int(np.count_nonzero(ok))
    approx = (
        float(
            np.count_nonzero(np.abs(log_abs[ok] - mains[ok]) <= slack) / n_ok
        )
        if n_ok
        else 0.0
    )
    upper = float(np.count_nonzero(log_abs <= uppers + slack) / n_samples)
    return IntervalCheckReport(
        T=T,
        n_samples=n_samples,
        slack=slack,
        seed=seed,
        ts=ts,
        log_abs_zeta=log_abs,
        main_sums=mains,
        upper_sums=uppers,
        near_zero=near,
        fraction_approx=approx,
        fraction_upper=upper,
        n_near_zero=int(np.count_nonzero(near)),
    )


def mean_value_check(
    T1: float,
    n_intervals: int,
    seed: int = 0,
    points_per_interval: int = 32,
) -> float:
    """Average of max|zeta(1/2+it)|^2 over unit intervals, over log^2 T1.

    Intervals start uniformly in [T1, 2 T1 - 1]; the max is taken over an
    evenly spaced grid inside each interval.
    """
    if n_intervals < 1:
        raise ParameterError("n_intervals must be >= 1")
    if not (T_WINDOW[0] <= 2.0 * T1 <= T_WINDOW[1]):
        raise ParameterError(f"T1={T1:g} outside the evaluator window")
    key = np.array([seed, 1], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    starts = T1 + (T1 - 1.0) * gen.random(n_intervals)
    offsets = np.linspace(0.0, 1.0, points_per_interval)
    maxima = []
    for t0 in starts.tolist():
        best = 0.0
        for dt in offsets.tolist():
            value, _ = zeta_half_line(ZetaEvalParams(t=t0 + dt))
            best = max(best, abs(value) ** 2)
        maxima.append(best)
    return math.fsum(maxima) / n_intervals / math.log(T1) ** 2
