"""Prime enumeration and the deterministic prime sums used everywhere else.

A :class:`PrimeTable` is built once per limit and shared; the scalar sums
(`prime_reciprocal_sum`, `weighted_log_sums`) accumulate with ``math.fsum``
in ascending prime order so that results are exactly reproducible and the
relative error stays far below 1e-12.

Tables can be serialized to a small binary cache (magic ``EPSIEVE1``) so
repeated CLI runs skip the sieve.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from math import isqrt

import numpy as np

from .errors import ParameterError

DEFAULT_MAX_LIMIT = 10**9
# Above this limit the sieve switches to fixed-size segments to bound memory.
SEGMENT_THRESHOLD = 10**7
SEGMENT_SIZE = 1 << 23

CACHE_MAGIC = b"EPSIEVE1"
CACHE_ENV_VAR = "EULERMAX_CACHE"


@dataclass(eq=False)
class PrimeTable:
    """Ascending primes up to ``limit`` with cached per-prime quantities."""

    limit: int
    primes: np.ndarray
    _log_p: np.ndarray | None = field(default=None, repr=False)
    _inv_sqrt_p: np.ndarray | None = field(default=None, repr=False)

    @property
    def log_p(self) -> np.ndarray:
        if self._log_p is None:
            self._log_p = np.log(self.primes.astype(np.float64))
        return self._log_p

    @property
    def inv_sqrt_p(self) -> np.ndarray:
        if self._inv_sqrt_p is None:
            self._inv_sqrt_p = 1.0 / np.sqrt(self.primes.astype(np.float64))
        return self._inv_sqrt_p

    def __len__(self) -> int:
        return int(self.primes.size)

    def range_slice(self, P: float, Q: float) -> slice:
        """Index slice of primes p with P <= p <= Q (empty if P > Q)."""
        lo = int(np.searchsorted(self.primes, math.ceil(P)))
        hi = int(np.searchsorted(self.primes, math.floor(Q), side="right"))
        return slice(lo, max(lo, hi))


def _simple_sieve(limit: int) -> np.ndarray:
    composite = np.zeros(limit + 1, dtype=bool)
    composite[:2] = True
    for p in range(2, isqrt(limit) + 1):
        if not composite[p]:
            composite[p * p :: p] = True
    return np.flatnonzero(~composite).astype(np.int64)


def _segmented_sieve(limit: int) -> np.ndarray:
    root = isqrt(limit)
    base = _simple_sieve(root)
    chunks = [base]
    for lo in range(root + 1, limit + 1, SEGMENT_SIZE):
        hi = min(lo + SEGMENT_SIZE - 1, limit)
        seg = np.ones(hi - lo + 1, dtype=bool)
        for p in base.tolist():
            start = p * p
            if start < lo:
                start = ((lo + p - 1) // p) * p
            if start > hi:
                if p * p > hi:
                    break
                continue
            seg[start - lo :: p] = False
        chunks.append(np.flatnonzero(seg).astype(np.int64) + lo)
    return np.concatenate(chunks)


def sieve(limit: int, max_limit: int = DEFAULT_MAX_LIMIT) -> PrimeTable:
    """Enumerate all primes up to ``limit`` (inclusive).

    Parameters
    ----------
    limit : int
        Upper bound, at least 2.
    max_limit : int
        Resource guard; limits above it are rejected.
    """
    if limit < 2:
        raise ParameterError(f"sieve limit must be >= 2, got {limit}")
    if limit > max_limit:
        raise ParameterError(
            f"sieve limit {limit} exceeds configured maximum {max_limit}"
        )
    limit = int(limit)
    if limit <= SEGMENT_THRESHOLD:
        primes = _simple_sieve(limit)
    else:
        primes = _segmented_sieve(limit)
    return PrimeTable(limit=limit, primes=primes)


def prime_reciprocal_sum(table: PrimeTable, P: float, Q: float) -> float:
    """Sum of 1/p over primes P <= p <= Q, compensated accumulation.

    An empty range returns 0.0 exactly.
    """
    _check_range(table, P, Q)
    sl = table.range_slice(P, Q)
    if sl.start >= sl.stop:
        return 0.0
    recip = 1.0 / table.primes[sl].astype(np.float64)
    return math.fsum(recip.tolist())


def weighted_log_sums(
    table: PrimeTable, P: float, Q: float, T: float
) -> tuple[float, float]:
    """Return (sum log p / p, sum log^2 p / p) over primes P <= p <= Q.

    ``T`` anchors the caller's variance recombination and is validated only.
    """
    if not (P <= Q <= T):
        raise ParameterError(f"need P <= Q <= T, got P={P}, Q={Q}, T={T}")
    _check_range(table, P, Q)
    sl = table.range_slice(P, Q)
    if sl.start >= sl.stop:
        return (0.0, 0.0)
    p = table.primes[sl].astype(np.float64)
    lp = table.log_p[sl]
    first = math.fsum((lp / p).tolist())
    second = math.fsum((lp * lp / p).tolist())
    return (first, second)


def _check_range(table: PrimeTable, P: float, Q: float) -> None:
    if P < 2 and P <= Q:
        raise ParameterError(f"prime range must start at >= 2, got P={P}")
    if Q > table.limit:
        raise ParameterError(
            f"range end {Q} exceeds table limit {table.limit}; sieve further first"
        )


def save_cache(table: PrimeTable, path: str | os.PathLike) -> None:
    """Write ``table`` as a binary cache: 8-byte magic, u64 limit, u64 primes."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<Q", table.limit))
        fh.write(table.primes.astype("<u8").tobytes())


def load_cache(path: str | os.PathLike) -> PrimeTable:
    """Read a cache written by :func:`save_cache`; validates magic and size."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:8] != CACHE_MAGIC:
            raise ParameterError(f"{path}: not a prime cache (bad magic)")
        (limit,) = struct.unpack("<Q", header[8:])
        body = fh.read()
    if len(body) % 8 != 0:
        raise ParameterError(f"{path}: truncated prime cache body")
    primes = np.frombuffer(body, dtype="<u8").astype(np.int64)
    if primes.size == 0 or primes[-1] > limit:
        raise ParameterError(f"{path}: cache inconsistent with stated limit {limit}")
    return PrimeTable(limit=int(limit), primes=primes)


def cached_sieve(
    limit: int,
    cache_path: str | os.PathLike | None = None,
    max_limit: int = DEFAULT_MAX_LIMIT,
) -> PrimeTable:
    """Sieve with optional file cache.

    ``cache_path`` may point at a cache file; otherwise the directory named
    by the ``EULERMAX_CACHE`` environment variable, when set, holds one file
    per limit. A cached table with a larger limit serves smaller requests by
    slicing.
    """
    candidates = []
    if cache_path is not None:
        candidates.append(os.fspath(cache_path))
    env_dir = os.environ.get(CACHE_ENV_VAR)
    if env_dir:
        candidates.append(os.path.join(env_dir, f"primes_{limit}.bin"))
    for cand in candidates:
        if os.path.exists(cand):
            table = load_cache(cand)
            if table.limit >= limit:
                if table.limit == limit:
                    return table
                keep = table.primes[table.primes <= limit]
                return PrimeTable(limit=int(limit), primes=keep)
    table = sieve(limit, max_limit=max_limit)
    for cand in candidates:
        parent = os.path.dirname(cand) or "."
        if os.path.isdir(parent):
            save_cache(table, cand)
            break
    return table
