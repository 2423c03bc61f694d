"""Experiment drivers: lattice constructions, max campaigns, diagnostics.

The discretization places an offset lattice of spacing E/log T over [0, 2pi),
scans 64 sub-lattice offsets z and keeps the one landing the most points in
the supplied good set. Blocks are runs of lattice sites inside alternating
index windows, so distinct blocks are separated by at least one full window.

Campaigns evaluate one field per (seed, trial) and record the grid max plus
the max restricted to lattice sites snapped onto the evaluation grid, which
keeps restricted <= full structurally. Diagnostics cover dyadic increment
scales, the three-way event split above a threshold, the independent-sum
tail experiment and the Gaussian surrogate comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import CorrelationFunction, CovarianceSpec
from .errors import ConstructionError, ParameterError
from .field import (
    VARIANT_PLAIN,
    VARIANT_SHIFTED,
    FieldGrid,
    ModelParams,
    PhaseVector,
    evaluate_plain_lattice,
    evaluate_shifted_lattice,
    grid_max,
    rotor_sweep,
    sample_phases,
    shifted_components,
)
from .gaussian import (
    TailBoundInputs,
    build_cov_matrix,
    independent_sum_tail_bound,
    ks_distance_two_sample,
    normal_comparison_bound,
    sample_gaussian_field,
)
from .primes import PrimeTable, cached_sieve

TWO_PI = 2.0 * math.pi
_MASK64 = (1 << 64) - 1
# Offset for deriving an independent surrogate stream from the field seed.
_SURROGATE_SEED_OFFSET = 1 << 32

DEFAULT_GOOD_SET_MEASURE = 1.99 * math.pi
SITE_COUNT_FACTOR = 1.98 * math.pi
N_OFFSET_SCAN = 64


def _merge_intervals(good_set) -> tuple[tuple[float, float], ...]:
    cleaned = []
    for a, b in good_set:
        if not (0.0 <= a <= b <= TWO_PI):
            raise ParameterError(
                f"good-set interval ({a}, {b}) must sit inside [0, 2pi]"
            )
        if b > a:
            cleaned.append((float(a), float(b)))
    cleaned.sort()
    merged: list[list[float]] = []
    for a, b in cleaned:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def _measure(intervals) -> float:
    return math.fsum(b - a for a, b in intervals)


def _membership(h: np.ndarray, intervals) -> np.ndarray:
    mask = np.zeros(h.size, dtype=bool)
    for a, b in intervals:
        mask |= (h >= a) & (h <= b)
    return mask


@dataclass(frozen=True)
class Discretization:
    """Offset lattice restricted to the good set."""

    T: float
    E: float
    z: float
    step: float
    site_indices: np.ndarray
    sites: np.ndarray
    good_set: tuple[tuple[float, float], ...]
    lattice_size: int


def scan_offsets(
    good_set, E: float, T: float, n_scan: int = N_OFFSET_SCAN
) -> tuple[float, int, np.ndarray, np.ndarray]:
    """Count lattice sites inside the good set for each scanned offset.

    Returns (best z, best count, scanned offsets, counts); ties go to the
    smallest offset.
    """
    intervals = _merge_intervals(good_set)
    step = E / math.log(T)
    zs = step * np.arange(n_scan) / n_scan
    counts = np.empty(n_scan, dtype=np.int64)
    for k, z in enumerate(zs.tolist()):
        n_pts = math.ceil((TWO_PI - z) / step)
        h = z + step * np.arange(n_pts)
        counts[k] = int(np.count_nonzero(_membership(h, intervals)))
    best = int(np.argmax(counts))
    return float(zs[best]), int(counts[best]), zs, counts


def discretize_good_set(
    good_set, E: float, T: float, n_scan: int = N_OFFSET_SCAN
) -> Discretization:
    """Build the site lattice, choosing the offset with the best coverage.

    The good set must have measure at least 1.99 pi; the chosen offset must
    land at least 1.98 pi log T / E sites inside it, otherwise the set is too
    fragmented for the lattice scan and a construction error is raised.
    """
    intervals = _merge_intervals(good_set)
    measure = _measure(intervals)
    if measure < DEFAULT_GOOD_SET_MEASURE:
        raise ParameterError(
            f"good set measure {measure:.4f} below {DEFAULT_GOOD_SET_MEASURE:.4f}"
        )
    log_t = math.log(T)
    step = E / log_t
    if step >= measure:
        raise ParameterError("lattice step exceeds good-set measure")
    z, count, _, _ = scan_offsets(intervals, E, T, n_scan)
    threshold = SITE_COUNT_FACTOR * log_t / E
    if count < threshold:
        raise ConstructionError(
            f"best offset covers {count} sites, below {threshold:.2f}: "
            "good set too fragmented for the lattice scan"
        )
    n_pts = math.ceil((TWO_PI - z) / step)
    h = z + step * np.arange(n_pts)
    mask = _membership(h, intervals)
    return Discretization(
        T=T,
        E=E,
        z=z,
        step=step,
        site_indices=np.flatnonzero(mask).astype(np.int64),
        sites=h[mask],
        good_set=intervals,
        lattice_size=n_pts,
    )


@dataclass(frozen=True)
class BlockSet:
    """Site runs in alternating index windows of width log T/(K E log y)."""

    K: float
    y: float
    window_width: float
    blocks: tuple[np.ndarray, ...]
    index_blocks: tuple[np.ndarray, ...]

    @property
    def min_separation(self) -> float:
        gaps = []
        for a, b in zip(self.blocks[:-1], self.blocks[1:]):
            gaps.append(float(b[0] - a[-1]))
        return min(gaps) if gaps else math.inf


def build_blocks(disc: Discretization, y: float, K: float) -> BlockSet:
    """Pick floor(log y) site blocks from distinct even index windows.

    Window width is log T/(K E log y) lattice indices; K E log y <= log T is
    required (otherwise windows hold no site). Blocks need at least half a
    window of members, and consecutive even windows are separated by an odd
    window, giving inter-block distance at least 1/(K log y).
    """
    if y < 2 or K <= 0:
        raise ParameterError(f"need y >= 2 and K > 0, got y={y}, K={K}")
    log_t = math.log(disc.T)
    log_y = math.log(y)
    if K * disc.E * log_y > log_t:
        raise ConstructionError(
            f"K E log y = {K * disc.E * log_y:.3f} exceeds log T = {log_t:.3f}: "
            "index windows would be narrower than one lattice step"
        )
    width = log_t / (K * disc.E * log_y)
    needed = math.floor(log_y)
    if needed < 1:
        raise ParameterError(f"floor(log y) must be >= 1, got y={y}")
    n_windows = math.ceil(TWO_PI * K * log_y) + 1
    blocks = []
    index_blocks = []
    idx = disc.site_indices
    for j in range(0, n_windows, 2):
        lo = int(np.searchsorted(idx, j * width, side="left"))
        hi = int(np.searchsorted(idx, (j + 1) * width, side="left"))
        if hi - lo >= width / 2.0:
            blocks.append(disc.sites[lo:hi])
            index_blocks.append(idx[lo:hi])
        if len(blocks) == needed:
            break
    if len(blocks) < needed:
        raise ConstructionError(
            f"only {len(blocks)} of {needed} blocks reach half-window occupancy"
        )
    return BlockSet(
        K=K,
        y=y,
        window_width=width,
        blocks=tuple(blocks),
        index_blocks=tuple(index_blocks),
    )


@dataclass(frozen=True)
class TrialRecord:
    """One field realization's maxima."""

    T: float
    trial: int
    max_value: float
    argmax_h: float
    restricted_max: float
    per_scale_increments: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.restricted_max > self.max_value + 1e-12:
            raise ParameterError(
                "restricted max exceeds grid max; sites must be grid points"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    """Campaign controls shared across the T grid."""

    T_list: tuple[float, ...]
    n_trials: int = 1000
    seed: int = 0
    variant: str = VARIANT_SHIFTED
    y: float | None = None
    E: float | None = None
    grid_density: float = 8.0
    n_grid: int | None = None
    K_block: float = 1.0
    good_set_measure: float = DEFAULT_GOOD_SET_MEASURE

    def __post_init__(self) -> None:
        if not self.T_list:
            raise ParameterError("T_list must be non-empty")
        if list(self.T_list) != sorted(self.T_list):
            raise ParameterError("T_list must be ascending")
        if self.variant not in (VARIANT_PLAIN, VARIANT_SHIFTED):
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.n_trials < 1:
            raise ParameterError("n_trials must be >= 1")
        if not (0.0 < self.good_set_measure <= TWO_PI):
            raise ParameterError("good_set_measure must sit in (0, 2pi]")


@dataclass
class CampaignResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    summaries: dict[float, dict]
    slope: float | None


def _field_lipschitz(table: PrimeTable, params: ModelParams, variant: str) -> float:
    # |d/dh| of each cosine term is bounded by its coefficient times log p.
    if variant == VARIANT_PLAIN:
        sl = table.range_slice(2, params.T)
        lp = table.log_p[sl]
        coef = table.inv_sqrt_p[sl] * (1.0 - lp / math.log(params.T))
        return float(np.dot(coef, lp))
    _, lp, lin, _, lp2, sq = shifted_components(table, params.T)
    return float(np.dot(lin, lp) + 2.0 * np.dot(sq, lp2))


def _evaluate_variant(
    phases: PhaseVector, params: ModelParams, variant: str
) -> FieldGrid:
    if variant == VARIANT_PLAIN:
        return evaluate_plain_lattice(phases, params)
    return evaluate_shifted_lattice(phases, params)


def run_max_campaign(
    config: ExperimentConfig,
    tables: dict[float, PrimeTable] | None = None,
) -> CampaignResult:
    """Evaluate n_trials independent fields per T and record their maxima.

    The restricted max runs over good-set lattice sites snapped to the
    nearest evaluation grid point. Summaries carry the reference levels
    log log T - (1/4) log log log T and log log T - 2 log log log T and the
    grid discretization slack (Lipschitz constant times half the spacing).
    """
    records: list[TrialRecord] = []
    summaries: dict[float, dict] = {}
    medians = []
    for T in config.T_list:
        table = tables[T] if tables and T in tables else cached_sieve(int(T))
        params = ModelParams(
            T=T,
            y=config.y,
            E=config.E,
            grid_density=config.grid_density,
            n_trials=config.n_trials,
            seed=config.seed,
            n_grid=config.n_grid,
        )
        disc = discretize_good_set(
            ((0.0, config.good_set_measure),), params.E, T
        )
        n_grid = params.grid_points()
        dh = TWO_PI / n_grid
        snapped = np.unique(np.round(disc.sites / dh).astype(np.int64) % n_grid)
        t_records = []
        for t in range(config.n_trials):
            phases = sample_phases(table, config.seed, t)
            grid = _evaluate_variant(phases, params, config.variant)
            h_star, m = grid_max(grid)
            restricted = float(np.max(grid.values[snapped]))
            t_records.append(
                TrialRecord(
                    T=T,
                    trial=t,
                    max_value=m,
                    argmax_h=h_star,
                    restricted_max=restricted,
                )
            )
        records.extend(t_records)
        maxima = np.array([r.max_value for r in t_records])
        restr = np.array([r.restricted_max for r in t_records])
        ll = math.log(math.log(T))
        lll = math.log(ll)
        lip = _field_lipschitz(table, params, config.variant)
        summaries[T] = {
            "T": T,
            "n_trials": config.n_trials,
            "variant": config.variant,
            "median_max": float(np.median(maxima)),
            "mean_max": float(np.mean(maxima)),
            "q05_max": float(np.quantile(maxima, 0.05)),
            "q95_max": float(np.quantile(maxima, 0.95)),
            "iqr_max": float(
                np.quantile(maxima, 0.75) - np.quantile(maxima, 0.25)
            ),
            "median_restricted": float(np.median(restr)),
            "upper_reference": ll - 0.25 * lll,
            "lower_reference": ll - 2.0 * lll,
            "n_sites": int(disc.sites.size),
            "n_grid": n_grid,
            "grid_slack": lip * dh / 2.0,
            "seed": config.seed,
        }
        medians.append(summaries[T]["median_max"])
    slope = None
    if len(config.T_list) >= 2:
        x = np.array([math.log(math.log(T)) for T in config.T_list])
        slope = float(np.polyfit(x, np.array(medians), 1)[0])
    return CampaignResult(
        config=config, records=records, summaries=summaries, slope=slope
    )


@dataclass(frozen=True)
class ChainingReport:
    """Dyadic increment statistics of the small-prime field."""

    T: float
    split_prime: int
    ks: np.ndarray
    increment_var: np.ndarray
    target_var: np.ndarray
    var_ratio: np.ndarray
    thresholds: np.ndarray
    exceed_freq: np.ndarray
    n_trials: int


def small_prime_split(T: float) -> int:
    """Largest prime bound for the short-range part, floor(T^(1/log log T))."""
    return int(math.floor(math.exp(math.log(T) / math.log(math.log(T)))))


def _shifted_values_on_lattice(
    table: PrimeTable,
    T: float,
    phases: PhaseVector,
    lo: float,
    hi: float,
    h0: float,
    dh: float,
    n_points: int,
) -> np.ndarray:
    sl, lp, lin, sl2, lp2, sq = shifted_components(table, T, lo, hi)
    u = phases.phases[sl]
    vals = rotor_sweep(
        np.ascontiguousarray(u.real),
        np.ascontiguousarray(u.imag),
        lin,
        lp,
        h0,
        dh,
        n_points,
    )
    if lp2.size:
        u2 = phases.phases[sl2] ** 2
        vals += rotor_sweep(
            np.ascontiguousarray(u2.real),
            np.ascontiguousarray(u2.imag),
            sq,
            2.0 * lp2,
            h0,
            dh,
            n_points,
        )
    return vals


def chaining_diagnostics(
    table: PrimeTable,
    T: float,
    k_max: int,
    n_trials: int,
    seed: int = 0,
) -> ChainingReport:
    """Variance and exceedance statistics of dyadic lattice increments.

    Scale k refines [0, 1/log T] into 2^k steps; the increment at a new
    point is the field difference to its left coarse neighbor, computed for
    the plain field restricted to primes up to T^(1/log log T). Targets are
    (2^k log log T)^{-2}; thresholds are k^0.9 2^{-k}.
    """
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    if n_trials < 2:
        raise ParameterError("n_trials must be >= 2 for variances")
    log_t = math.log(T)
    ll = math.log(log_t)
    split = small_prime_split(T)
    n_lat = (1 << k_max) + 1
    dh = 1.0 / ((1 << k_max) * log_t)
    ks = np.arange(1, k_max + 1)
    sums = [np.zeros(1 << (k - 1)) for k in ks]
    sq_sums = [np.zeros(1 << (k - 1)) for k in ks]
    exceed = np.zeros(k_max, dtype=np.int64)
    thresholds = ks**0.9 * 2.0 ** (-ks.astype(np.float64))
    sl = table.range_slice(2, split)
    lp = table.log_p[sl]
    coef = table.inv_sqrt_p[sl] * (1.0 - lp / log_t)
    for t in range(n_trials):
        phases = sample_phases(table, seed, t)
        u = phases.phases[sl]
        vals = rotor_sweep(
            np.ascontiguousarray(u.real),
            np.ascontiguousarray(u.imag),
            coef,
            lp,
            0.0,
            dh,
            n_lat,
        )
        for i, k in enumerate(ks.tolist()):
            stride = 1 << (k_max - k)
            new_pts = np.arange(1, 1 << k, 2) * stride
            d = vals[new_pts] - vals[new_pts - stride]
            sums[i] += d
            sq_sums[i] += d * d
            if np.max(d) > thresholds[i]:
                exceed[i] += 1
    inc_var = np.empty(k_max)
    for i in range(k_max):
        mean = sums[i] / n_trials
        var_h = sq_sums[i] / n_trials - mean * mean
        inc_var[i] = float(np.mean(var_h)) * n_trials / (n_trials - 1)
    target = (2.0**ks.astype(np.float64) * ll) ** -2.0
    return ChainingReport(
        T=T,
        split_prime=split,
        ks=ks,
        increment_var=inc_var,
        target_var=target,
        var_ratio=inc_var / target,
        thresholds=thresholds,
        exceed_freq=exceed / n_trials,
        n_trials=n_trials,
    )


@dataclass(frozen=True)
class EventSplitReport:
    """Classification of high-max trials into the three-way event cover."""

    T: float
    u: float
    C: float
    scale_index: int
    split_prime: int
    n_trials: int
    slacks: tuple[float, ...]
    violations: tuple[int, ...]
    smallest_ok_slack: float | None
    n_triggered: int
    event_counts: tuple[int, int, int]


def classify_events(
    small0,
    large0,
    large_max,
    u: float,
    C: float,
    lll: float,
    slack: float = 0.0,
):
    """Classify trials into the three-event cover of a high combined value.

    Inputs are the short-range sum at the window origin, the long-range sum
    at the origin, and the long-range max over the dyadic window (scalars or
    arrays).  Returns boolean arrays (trigger, e1, e2, e3, covered) where
    trigger marks trials whose short-plus-long-max exceeds u - slack.
    """
    small0 = np.asarray(small0, dtype=np.float64)
    large0 = np.asarray(large0, dtype=np.float64)
    large_max = np.asarray(large_max, dtype=np.float64)
    half_lll = 0.5 * C * lll
    half_sqrt = 0.5 * C * math.sqrt(lll)
    trigger = small0 + large_max > u - slack
    e1 = large_max > half_lll
    near = small0 > u - slack - half_lll
    e2 = near & (large_max - large0 > half_sqrt)
    e3 = near & (small0 + large0 > u - half_sqrt - slack)
    return trigger, e1, e2, e3, e1 | e2 | e3


def event_split_check(
    table: PrimeTable,
    T: float,
    C: float,
    n_trials: int,
    seed: int = 0,
    u: float | None = None,
    slacks: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 5.0),
) -> EventSplitReport:
    """Check the three-event cover of {short + max(long) > u - slack}.

    Events: (1) the long-range max alone exceeds (C/2) log log log T;
    (2) the short sum is within (C/2) log log log T of the threshold and the
    long-range oscillation exceeds (C/2) sqrt(log log log T); (3) the short
    sum is large and the full sum at the left endpoint is within
    (C/2) sqrt(log log log T) + slack of u. A triggered trial covered by no
    event is a violation (this indicates an implementation error, the cover
    is exhaustive for consistent slack).
    """
    if C <= 0:
        raise ParameterError("C must be positive")
    log_t = math.log(T)
    ll = math.log(log_t)
    lll = math.log(ll)
    if lll <= 0:
        raise ParameterError("need log log log T > 0; supply larger T")
    if u is None:
        u = ll - 0.25 * lll
    k_star = max(1, round(lll))
    n_lat = (1 << k_star) + 1
    dh = 1.0 / ((1 << k_star) * log_t)
    split = small_prime_split(T)
    small0 = np.empty(n_trials)
    large0 = np.empty(n_trials)
    large_max = np.empty(n_trials)
    for t in range(n_trials):
        phases = sample_phases(table, seed, t)
        small_vals = _shifted_values_on_lattice(
            table, T, phases, 2.0, split, 0.0, dh, n_lat
        )
        large_vals = _shifted_values_on_lattice(
            table, T, phases, split + 1, T, 0.0, dh, n_lat
        )
        small0[t] = small_vals[0]
        large0[t] = large_vals[0]
        large_max[t] = np.max(large_vals)
    violations = []
    triggered_counts = []
    event_counts_per_slack = []
    for slack in slacks:
        trigger, e1, e2, e3, covered = classify_events(
            small0, large0, large_max, u, C, lll, slack
        )
        violations.append(int(np.count_nonzero(trigger & ~covered)))
        triggered_counts.append(int(np.count_nonzero(trigger)))
        event_counts_per_slack.append(
            (
                int(np.count_nonzero(trigger & e1)),
                int(np.count_nonzero(trigger & e2)),
                int(np.count_nonzero(trigger & e3)),
            )
        )
    smallest_ok = None
    best_idx = 0
    for i, (s, v) in enumerate(zip(slacks, violations)):
        if v == 0:
            smallest_ok = s
            best_idx = i
            break
    return EventSplitReport(
        T=T,
        u=u,
        C=C,
        scale_index=k_star,
        split_prime=split,
        n_trials=n_trials,
        slacks=tuple(slacks),
        violations=tuple(violations),
        smallest_ok_slack=smallest_ok,
        n_triggered=triggered_counts[best_idx],
        event_counts=event_counts_per_slack[best_idx],
    )


def tail_moment_inputs(
    table: PrimeTable, T: float, K: float = 1.0, theta_points: int = 2048
) -> tuple[TailBoundInputs, np.ndarray, np.ndarray]:
    """Moment data for the shifted single-offset sum over p >= 1000 K^2.

    Returns the bound inputs plus the per-prime linear and square amplitude
    arrays (a_p, b_p) so that one summand is a_p cos(theta) + b_p cos(2 theta)
    with theta uniform. Third absolute moments integrate that shape on a
    midpoint theta grid; B is the exact per-summand bound max(a_p + b_p).
    """
    p_min = 1000.0 * K * K
    if p_min >= T:
        raise ParameterError(f"1000 K^2 = {p_min:g} must stay below T = {T:g}")
    sl, lp, lin, sl2, lp2, sq = shifted_components(table, T, p_min, T)
    if lin.size == 0:
        raise ParameterError("no primes in the tail range")
    b = np.zeros_like(lin)
    b[: sq.size] = sq
    sigma2 = 0.5 * math.fsum(((lin * lin) + (b * b)).tolist())
    theta = TWO_PI * (np.arange(theta_points) + 0.5) / theta_points
    ct = np.cos(theta)
    c2t = 2.0 * ct * ct - 1.0
    third = 0.0
    chunk = 512
    for lo in range(0, lin.size, chunk):
        x = np.abs(
            lin[lo : lo + chunk, None] * ct[None, :]
            + b[lo : lo + chunk, None] * c2t[None, :]
        )
        third += float(np.sum(x**3)) / theta_points
    B = float(np.max(lin + b))
    inputs = TailBoundInputs(sigma2=sigma2, third_moment_sum=third, B=B, K=K)
    return inputs, lin, b


def sample_tail_sums(
    a: np.ndarray, b: np.ndarray, seed: int, n_trials: int
) -> np.ndarray:
    """Independent draws of sum_p a_p cos(theta_p) + b_p cos(2 theta_p)."""
    out = np.empty(n_trials)
    for t in range(n_trials):
        key = np.array([seed & _MASK64, t & _MASK64], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        ct = np.cos(TWO_PI * gen.random(a.size))
        out[t] = float(np.dot(a, ct) + np.dot(b, 2.0 * ct * ct - 1.0))
    return out


@dataclass(frozen=True)
class TailReport:
    inputs: TailBoundInputs
    sigma: float
    ts: np.ndarray
    empirical: np.ndarray
    quad_reference: np.ndarray
    bound: np.ndarray
    calibration: float
    calibrated_bound: np.ndarray
    n_trials: int


def tail_experiment(
    table: PrimeTable,
    T: float,
    K: float = 1.0,
    c_big_oh: float = 1.0,
    n_trials: int = 20000,
    seed: int = 0,
    sigma_grid: np.ndarray | None = None,
) -> TailReport:
    """Empirical upper tail of the single-offset sum against its bound.

    The calibration constant is the ratio empirical/bound at the first grid
    point; the calibrated bound is checked for domination by callers.
    """
    inputs, a, b = tail_moment_inputs(table, T, K)
    sigma = math.sqrt(inputs.sigma2)
    if sigma_grid is None:
        sigma_grid = np.linspace(1.0, 3.0, 9)
    ts = sigma * np.asarray(sigma_grid, dtype=np.float64)
    sums = sample_tail_sums(a, b, seed, n_trials)
    empirical = np.array([float(np.mean(sums > t)) for t in ts])
    bound = np.array(
        [independent_sum_tail_bound(inputs, t, c_big_oh) for t in ts]
    )
    quad = np.exp(-(ts**2) / (2.0 * inputs.sigma2))
    calibration = empirical[0] / bound[0] if bound[0] > 0 else 1.0
    return TailReport(
        inputs=inputs,
        sigma=sigma,
        ts=ts,
        empirical=empirical,
        quad_reference=quad,
        bound=bound,
        calibration=calibration,
        calibrated_bound=calibration * bound,
        n_trials=n_trials,
    )


def normalized_correlation_function(
    table: PrimeTable, T: float, y: float
) -> CorrelationFunction:
    """Correlation of the plain field over y <= p <= T."""
    return CorrelationFunction(CovarianceSpec(table=table, P=y, Q=T, T=T))


@dataclass(frozen=True)
class SurrogateReport:
    T: float
    y: float
    E: float
    sites: np.ndarray
    euler_maxima: np.ndarray
    gaussian_maxima: np.ndarray
    ks_distance: float
    jitter: float


def surrogate_max_comparison(
    table: PrimeTable,
    T: float,
    y: float,
    E: float | None = None,
    seed: int = 0,
    n_field_trials: int = 5000,
    n_gaussian_trials: int = 5000,
) -> SurrogateReport:
    """Max-over-sites laws of the normalized field and its Gaussian twin.

    The field route evaluates the plain field over y <= p <= T on the full
    offset lattice and normalizes by the exact standard deviation; the
    surrogate samples a Gaussian vector with the matching correlation
    matrix. Both maxima samples and their Kolmogorov-Smirnov distance are
    returned.
    """
    params = ModelParams(T=T, y=y, E=E, n_trials=n_field_trials, seed=seed)
    disc = discretize_good_set(((0.0, TWO_PI),), params.E, T)
    corr = normalized_correlation_function(table, T, y)
    scale = 1.0 / math.sqrt(corr.normalization)
    sl = table.range_slice(y, T)
    lp = table.log_p[sl]
    coef = table.inv_sqrt_p[sl] * (1.0 - lp / math.log(T))
    euler = np.empty(n_field_trials)
    for t in range(n_field_trials):
        phases = sample_phases(table, seed, t)
        u = phases.phases[sl]
        vals = rotor_sweep(
            np.ascontiguousarray(u.real),
            np.ascontiguousarray(u.imag),
            coef,
            lp,
            disc.z,
            disc.step,
            disc.lattice_size,
        )
        euler[t] = float(np.max(vals[disc.site_indices])) * scale
    cov = build_cov_matrix(corr, disc.sites)
    samples = sample_gaussian_field(
        cov, seed + _SURROGATE_SEED_OFFSET, n_gaussian_trials
    )
    gauss = samples.max(axis=1)
    return SurrogateReport(
        T=T,
        y=y,
        E=params.E,
        sites=disc.sites,
        euler_maxima=euler,
        gaussian_maxima=gauss,
        ks_distance=ks_distance_two_sample(euler, gauss),
        jitter=cov.jitter,
    )


@dataclass(frozen=True)
class ComparisonReport:
    T: float
    y: float
    K: float
    u: float
    block_sizes: tuple[int, ...]
    p_joint: float
    p_product: float
    difference: float
    bound: float
    mc_se: float
    jitter: float


def block_comparison(
    table: PrimeTable,
    T: float,
    y: float | None = None,
    E: float | None = None,
    K: float = 1.0,
    u: float | None = None,
    seed: int = 0,
    n_trials: int = 10000,
) -> ComparisonReport:
    """Joint vs independent-block orthant probabilities with their bound.

    Samples the Gaussian surrogate on the union of block sites, estimates
    P(all sites <= u) and the product over blocks of P(block <= u), and
    evaluates the normal comparison bound between the full correlation
    matrix and its block-diagonal truncation.
    """
    params = ModelParams(T=T, y=y, E=E, seed=seed)
    y = params.y
    ll = math.log(math.log(T))
    lly = math.log(math.log(y))
    if u is None:
        u = math.sqrt(2.0 * (ll - lly))
    disc = discretize_good_set(((0.0, TWO_PI),), params.E, T)
    blocks = build_blocks(disc, y, K)
    union = np.concatenate(blocks.blocks)
    sizes = tuple(int(b.size) for b in blocks.blocks)
    corr = normalized_correlation_function(table, T, y)
    cov = build_cov_matrix(corr, union)
    samples = sample_gaussian_field(cov, seed, n_trials)
    below = samples <= u
    p_joint = float(np.mean(np.all(below, axis=1)))
    p_product = 1.0
    var_rel = 0.0
    offset = 0
    for size in sizes:
        pk = float(np.mean(np.all(below[:, offset : offset + size], axis=1)))
        p_product *= pk
        if pk > 0:
            var_rel += (1.0 - pk) / (pk * n_trials)
        offset += size
    block_diag = np.zeros_like(cov.matrix)
    offset = 0
    for size in sizes:
        block_diag[offset : offset + size, offset : offset + size] = cov.matrix[
            offset : offset + size, offset : offset + size
        ]
        offset += size
    bound = normal_comparison_bound(
        block_diag, cov.matrix, np.full(union.size, u)
    )
    se_joint = math.sqrt(max(p_joint * (1.0 - p_joint), 1e-12) / n_trials)
    se_prod = p_product * math.sqrt(var_rel) if p_product > 0 else 0.0
    mc_se = math.sqrt(se_joint**2 + se_prod**2)
    return ComparisonReport(
        T=T,
        y=y,
        K=K,
        u=u,
        block_sizes=sizes,
        p_joint=p_joint,
        p_product=p_product,
        difference=abs(p_joint - p_product),
        bound=bound,
        mc_se=mc_se,
        jitter=cov.jitter,
    )


@dataclass(frozen=True)
class LowerBoundPoint:
    """One (u, grid) cell of the lower-bound validity sweep."""

    u: float
    spacing: float
    n_points: int
    bound: float
    empirical: float
    mc_se: float


def lower_bound_sweep(
    table: PrimeTable,
    T: float,
    y: float | None = None,
    E: float | None = None,
    seed: int = 0,
    n_trials: int = 20000,
    spacings: tuple[float, ...] = (1.0, 1.25, 1.5, 1.75, 2.0),
    us: tuple[float, ...] = (1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0),
    o_factor: float = 0.0,
) -> list[LowerBoundPoint]:
    """Evaluate the stationary max lower bound against sampled exceedance.

    Grids are uniform with spacing a multiple of the lattice step, truncated
    to the longest prefix over which the correlation sequence is decreasing
    and non-negative; (u, grid) cells violating the u-hypotheses are
    skipped. Exceedance probabilities come from the Gaussian surrogate on
    the same grid, one sample set per spacing shared across thresholds.
    """
    from .gaussian import stationary_max_lower_bound

    params = ModelParams(T=T, y=y, E=E, seed=seed)
    disc = discretize_good_set(((0.0, TWO_PI),), params.E, T)
    corr = normalized_correlation_function(table, T, params.y)
    points: list[LowerBoundPoint] = []
    for m in spacings:
        n_cap = max(2, int(disc.lattice_size / m))
        rs: list[float] = []
        prev = 1.0
        for j in range(1, n_cap):
            r = corr(j * m * disc.step)
            if r < 0.0 or r > prev:
                break
            rs.append(r)
            prev = r
        if not rs:
            continue
        n = len(rs) + 1
        grid = disc.step * m * np.arange(n)
        cov = build_cov_matrix(corr, grid)
        samples = sample_gaussian_field(cov, seed + int(100 * m), n_trials)
        maxima = samples.max(axis=1)
        r1 = rs[0]
        for u in us:
            if u < 1.0 or r1 * (1.0 + 2.0 / (u * u)) > 1.0:
                continue
            bound = stationary_max_lower_bound(
                np.array(rs), u, n, subset_size=n, o_factor=o_factor
            )
            emp = float(np.mean(maxima > u))
            se = math.sqrt(max(emp * (1.0 - emp), 1e-12) / n_trials)
            points.append(
                LowerBoundPoint(
                    u=u,
                    spacing=m,
                    n_points=n,
                    bound=bound,
                    empirical=emp,
                    mc_se=se,
                )
            )
    return points


def clt_moment_inputs(
    table: PrimeTable,
    T: float,
    y: float,
    points: np.ndarray,
    delta: float | None = None,
):
    """Coefficient matrix of the normalized field at ``points``.

    Sources are primes y <= p <= T with unit rotations, so third and fourth
    absolute moments are exactly one; delta defaults to 1/sqrt(log log T).
    """
    from .gaussian import CltInputs

    pts = np.asarray(points, dtype=np.float64)
    corr = normalized_correlation_function(table, T, y)
    sl = table.range_slice(y, T)
    lp = table.log_p[sl]
    amp = (
        table.inv_sqrt_p[sl]
        * (1.0 - lp / math.log(T))
        / math.sqrt(corr.normalization)
    )
    c = amp[:, None] * np.exp(-1j * np.outer(lp, pts))
    if delta is None:
        delta = 1.0 / math.sqrt(math.log(math.log(T)))
    ones = np.ones(lp.size)
    return CltInputs(
        coefficients=c, third_moments=ones, fourth_moments=ones, delta=delta
    )
