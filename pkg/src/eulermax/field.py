"""Sampling and evaluation of the random Euler-product field on grids.

One trial draws independent unit-modulus phases U_p (one per prime) from a
counter-based generator keyed on (seed, trial index), so phases are a pure
function of (seed, trial, prime) regardless of evaluation order or thread
count. Field values on a uniform lattice are accumulated by a numba kernel
that advances one complex rotor per prime per lattice step; the only
transcendental calls happen once per prime when the rotors are set up.

Two field variants exist:

* plain: Re sum over P <= p <= Q of U_p p^{-1/2 - ih} log(T/p)/log T
* shifted: the plain sum over p <= T with an extra p^{-1/log T} damping,
  plus the prime-square correction
  (1/2) U_p^2 p^{-1 - 2/log T - 2ih} log(T/p^2)/log T for p^2 <= T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from math import isqrt

import numpy as np
from numba import njit, prange

from .errors import ParameterError
from .primes import PrimeTable

VARIANT_PLAIN = "plain_X"
VARIANT_SHIFTED = "shifted_V"

_CHUNK = 8192
_LANES = 8
_RENORM_EVERY = 1024
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ModelParams:
    """Model scales and sampling controls.

    ``y`` and ``E`` default to max(2, exp((log log T)^2 (log log log T)^2))
    and max(1, sqrt(log log T) (log log log T)^2); those formulas need
    T > 15 (log log log T > 0), smaller T requires explicit values.
    """

    T: float
    y: float | None = None
    E: float | None = None
    grid_density: float = 8.0
    n_trials: int = 1000
    seed: int = 0
    n_grid: int | None = None

    def __post_init__(self) -> None:
        if self.T < 2:
            raise ParameterError(f"T must be >= 2, got {self.T}")
        if (self.y is None or self.E is None) and self.T <= 15:
            raise ParameterError(
                "T <= 15 makes log log log T <= 0; supply explicit y and E"
            )
        if self.y is None:
            ll = math.log(math.log(self.T))
            lll = math.log(ll)
            object.__setattr__(self, "y", max(2.0, math.exp((ll * lll * lll) * ll)))
        if self.E is None:
            ll = math.log(math.log(self.T))
            lll = math.log(ll)
            object.__setattr__(self, "E", max(1.0, math.sqrt(ll) * lll * lll))
        if not (2 <= self.y <= self.T):
            raise ParameterError(f"need 2 <= y <= T, got y={self.y}, T={self.T}")
        if self.E < 1.0:
            raise ParameterError(f"E must be >= 1, got {self.E}")
        if self.grid_density < 1.0:
            raise ParameterError(f"grid_density must be >= 1, got {self.grid_density}")
        if self.n_trials < 1:
            raise ParameterError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        if self.n_grid is not None and self.n_grid < self.min_grid_points():
            raise ParameterError(
                f"n_grid={self.n_grid} below density floor {self.min_grid_points()}"
            )

    def min_grid_points(self) -> int:
        return math.ceil(self.grid_density * math.log(self.T))

    def grid_points(self) -> int:
        if self.n_grid is not None:
            return self.n_grid
        return math.ceil(2.0 * math.pi * self.grid_density * math.log(self.T))


@dataclass(frozen=True)
class PhaseVector:
    """One unit-modulus phase per prime of ``table``."""

    table: PrimeTable
    seed: int
    trial_index: int
    phases: np.ndarray


def sample_phases(table: PrimeTable, seed: int, trial_index: int) -> PhaseVector:
    """Draw U_p i.i.d. uniform on the unit circle, keyed by (seed, trial)."""
    if seed < 0 or trial_index < 0:
        raise ParameterError("seed and trial_index must be non-negative")
    key = np.array([seed & _MASK64, trial_index & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    angles = 2.0 * math.pi * gen.random(len(table))
    phases = np.cos(angles) + 1j * np.sin(angles)
    return PhaseVector(table=table, seed=seed, trial_index=trial_index, phases=phases)


@dataclass(frozen=True)
class FieldGrid:
    """Field values on a uniform lattice of offsets."""

    variant: str
    T: float
    P: float
    Q: float
    h_values: np.ndarray
    values: np.ndarray


def grid_max(grid: FieldGrid) -> tuple[float, float]:
    """(argmax offset, max value); ties resolve to the smallest offset."""
    idx = int(np.argmax(grid.values))
    return float(grid.h_values[idx]), float(grid.values[idx])


@njit(parallel=True, cache=True, fastmath=True)
def _sweep_kernel(zr0, zi0, norm, mr, mi, partials, chunk):  # pragma: no cover
    n_chunks, n_grid = partials.shape
    for c in prange(n_chunks):
        lo = c * chunk
        acc = np.zeros((n_grid, _LANES))
        for b in range(lo, lo + chunk, _LANES):
            zr = zr0[b : b + _LANES].copy()
            zi = zi0[b : b + _LANES].copy()
            lmr = mr[b : b + _LANES]
            lmi = mi[b : b + _LANES]
            steps = 0
            for j in range(n_grid):
                for l in range(_LANES):
                    acc[j, l] += zr[l]
                for l in range(_LANES):
                    tr = zr[l] * lmr[l] - zi[l] * lmi[l]
                    zi[l] = zr[l] * lmi[l] + zi[l] * lmr[l]
                    zr[l] = tr
                steps += 1
                if steps == _RENORM_EVERY:
                    steps = 0
                    for l in range(_LANES):
                        mod = math.sqrt(zr[l] * zr[l] + zi[l] * zi[l])
                        if mod > 0.0:
                            s = norm[b + l] / mod
                            zr[l] *= s
                            zi[l] *= s
        for j in range(n_grid):
            s = 0.0
            for l in range(_LANES):
                s += acc[j, l]
            partials[c, j] = s


def _pad(arr: np.ndarray, size: int, fill: float) -> np.ndarray:
    if arr.size == size:
        return np.ascontiguousarray(arr)
    out = np.full(size, fill, dtype=np.float64)
    out[: arr.size] = arr
    return out


def rotor_sweep(
    u_re: np.ndarray,
    u_im: np.ndarray,
    coef: np.ndarray,
    log_p: np.ndarray,
    h0: float,
    dh: float,
    n_points: int,
) -> np.ndarray:
    """Sum coef_p * Re(U_p e^{-i h log p}) over the lattice h = h0 + j*dh.

    Primes are partitioned into fixed-size chunks; each chunk accumulates a
    partial lattice privately and partials are reduced in chunk order, so
    results do not depend on thread count.
    """
    n = coef.size
    if n == 0:
        return np.zeros(n_points)
    if n * n_points <= (1 << 22):
        # Small problems: direct trig evaluation beats kernel launch plus
        # chunk padding, and plain numpy is thread-count independent too.
        ang = np.outer(log_p, h0 + dh * np.arange(n_points))
        return (coef * u_re) @ np.cos(ang) + (coef * u_im) @ np.sin(ang)
    n_chunks = (n + _CHUNK - 1) // _CHUNK
    size = n_chunks * _CHUNK
    ang0 = h0 * log_p
    c0, s0 = np.cos(ang0), np.sin(ang0)
    zr0 = _pad(coef * (u_re * c0 + u_im * s0), size, 0.0)
    zi0 = _pad(coef * (u_im * c0 - u_re * s0), size, 0.0)
    step = dh * log_p
    mr = _pad(np.cos(step), size, 1.0)
    mi = _pad(-np.sin(step), size, 0.0)
    norm = _pad(coef, size, 0.0)
    partials = np.zeros((n_chunks, n_points))
    _sweep_kernel(zr0, zi0, norm, mr, mi, partials, _CHUNK)
    return partials.sum(axis=0)


def _require_table_covers(table: PrimeTable, bound: float) -> None:
    if bound > table.limit:
        raise ParameterError(
            f"prime table limit {table.limit} below required bound {bound}"
        )


def _plain_coefficients(
    table: PrimeTable, P: float, Q: float, T: float
) -> tuple[np.ndarray, np.ndarray]:
    sl = table.range_slice(P, Q)
    lp = table.log_p[sl]
    coef = table.inv_sqrt_p[sl] * (1.0 - lp / math.log(T))
    return lp, coef


def evaluate_plain_lattice(
    phases: PhaseVector,
    params: ModelParams,
    P: float | None = None,
    Q: float | None = None,
    h0: float = 0.0,
    dh: float | None = None,
    n_points: int | None = None,
) -> FieldGrid:
    """Plain field over primes [P, Q] on the lattice h0 + j*dh.

    Defaults: P=2, Q=T, and the full circle [0, 2pi) at the configured grid
    size. P > Q is rejected.
    """
    T = params.T
    P = 2.0 if P is None else P
    Q = T if Q is None else Q
    if not (2 <= P <= Q <= T):
        raise ParameterError(f"need 2 <= P <= Q <= T, got P={P}, Q={Q}, T={T}")
    _require_table_covers(phases.table, Q)
    if n_points is None:
        n_points = params.grid_points()
    if dh is None:
        dh = 2.0 * math.pi / n_points
    lp, coef = _plain_coefficients(phases.table, P, Q, T)
    sl = phases.table.range_slice(P, Q)
    u = phases.phases[sl]
    values = rotor_sweep(
        np.ascontiguousarray(u.real),
        np.ascontiguousarray(u.imag),
        coef,
        lp,
        h0,
        dh,
        n_points,
    )
    h_values = h0 + dh * np.arange(n_points)
    return FieldGrid(
        variant=VARIANT_PLAIN, T=T, P=P, Q=Q, h_values=h_values, values=values
    )


def shifted_components(
    table: PrimeTable, T: float, lo: float = 2.0, hi: float | None = None
) -> tuple[slice, np.ndarray, np.ndarray, slice, np.ndarray, np.ndarray]:
    """Coefficient arrays of the shifted field over primes lo <= p <= hi.

    Returns (slice, log p, linear coefs, square slice, log p, square coefs);
    the square term only exists for p^2 <= T.
    """
    log_t = math.log(T)
    hi = T if hi is None else min(hi, T)
    sl = table.range_slice(lo, hi)
    lp = table.log_p[sl]
    lin = table.inv_sqrt_p[sl] * np.exp(-lp / log_t) * (1.0 - lp / log_t)
    sl2 = table.range_slice(lo, min(hi, isqrt(int(T))))
    lp2 = table.log_p[sl2]
    p2 = table.primes[sl2].astype(np.float64)
    sq = 0.5 / p2 * np.exp(-2.0 * lp2 / log_t) * (1.0 - 2.0 * lp2 / log_t)
    return sl, lp, lin, sl2, lp2, sq


def evaluate_shifted_lattice(
    phases: PhaseVector,
    params: ModelParams,
    h0: float = 0.0,
    dh: float | None = None,
    n_points: int | None = None,
) -> FieldGrid:
    """Shifted field (damped linear term plus prime-square term) over p <= T."""
    T = params.T
    _require_table_covers(phases.table, T)
    if n_points is None:
        n_points = params.grid_points()
    if dh is None:
        dh = 2.0 * math.pi / n_points
    sl, lp, lin, sl2, lp2, sq = shifted_components(phases.table, T)
    u = phases.phases[sl]
    values = rotor_sweep(
        np.ascontiguousarray(u.real),
        np.ascontiguousarray(u.imag),
        lin,
        lp,
        h0,
        dh,
        n_points,
    )
    u2 = phases.phases[sl2] ** 2
    values += rotor_sweep(
        np.ascontiguousarray(u2.real),
        np.ascontiguousarray(u2.imag),
        sq,
        2.0 * lp2,
        h0,
        dh,
        n_points,
    )
    h_values = h0 + dh * np.arange(n_points)
    return FieldGrid(
        variant=VARIANT_SHIFTED, T=T, P=2.0, Q=T, h_values=h_values, values=values
    )


def evaluate_reference(
    phases: PhaseVector,
    params: ModelParams,
    variant: str,
    h_values: np.ndarray,
    P: float | None = None,
    Q: float | None = None,
) -> np.ndarray:
    """Direct per-point cosine evaluation; the slow cross-check route."""
    T = params.T
    out = np.empty(len(h_values))
    if variant == VARIANT_PLAIN:
        P = 2.0 if P is None else P
        Q = T if Q is None else Q
        lp, coef = _plain_coefficients(phases.table, P, Q, T)
        u = phases.phases[phases.table.range_slice(P, Q)]
        for j, h in enumerate(np.asarray(h_values, dtype=np.float64)):
            terms = coef * (u.real * np.cos(h * lp) + u.imag * np.sin(h * lp))
            out[j] = math.fsum(terms.tolist())
        return out
    if variant != VARIANT_SHIFTED:
        raise ParameterError(f"unknown variant {variant!r}")
    sl, lp, lin, sl2, lp2, sq = shifted_components(phases.table, T)
    u = phases.phases[sl]
    u2 = phases.phases[sl2] ** 2
    for j, h in enumerate(np.asarray(h_values, dtype=np.float64)):
        terms = lin * (u.real * np.cos(h * lp) + u.imag * np.sin(h * lp))
        terms2 = sq * (u2.real * np.cos(2.0 * h * lp2) + u2.imag * np.sin(2.0 * h * lp2))
        out[j] = math.fsum(terms.tolist()) + math.fsum(terms2.tolist())
    return out
