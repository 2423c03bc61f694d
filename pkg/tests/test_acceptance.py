"""Acceptance gate: twelve end-to-end criteria, one report line each.

Every test appends "ACCEPTANCE nn: PASS/FAIL - detail" to the shared list
printed by the terminal-summary hook, then asserts. Two clauses are known
to be unattainable and report honest failures rather than being weakened:

* Criterion 9's quadratic log-tail clause: at t = sigma it needs
  P(S >= sigma) >= exp(-0.575) = 0.563, but one-sided Chebyshev caps any
  centered sum at 1/2.
* Criterion 5's slope clause: the grid-max medians follow
  loglog T - (3/4) logloglog T (fit residuals < 0.02 across the T grid),
  and that law's own regression slope on T in {1e4..1e7} is 0.698, which
  the required band [0.7, 1.3] just excludes; seed noise (SE ~ 0.03 at
  2000 trials) makes individual runs land near 0.66-0.70.

Both tests implement the stated check verbatim and explain the failure in
their report line.
"""

import math
import os
import subprocess
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from eulermax.covariance import (
    CovarianceSpec,
    asymptotic_covariance,
    exact_covariance,
    fit_far_decay_constant,
)
from eulermax.experiments import (
    ExperimentConfig,
    block_comparison,
    chaining_diagnostics,
    lower_bound_sweep,
    run_max_campaign,
    surrogate_max_comparison,
    tail_experiment,
)
from eulermax.field import ModelParams, evaluate_plain_lattice, sample_phases
from eulermax.primes import sieve
from eulermax.zeta import ZetaEvalParams, prop1_interval_check, zeta_half_line

pytestmark = pytest.mark.acceptance

TWO_PI = 2.0 * math.pi


def _record(num: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def table_1e7():
    return sieve(10_000_000)


def test_criterion_01_covariance_oracle(table_1e4):
    # Reference: contract the explicit 2n x 2n second-moment matrix against
    # the coefficient vectors at two heights. This is the four-index sum
    # over (prime, component) pairs with the loops handed to BLAS; the
    # literal Python loop nest is pinned to it in test_covariance.py.
    t0 = time.monotonic()
    T = 1e4
    table = table_1e4
    spec = CovarianceSpec(table=table, P=2.0, Q=T, T=T)
    sl = table.range_slice(2.0, T)
    lp = table.log_p[sl]
    coef = (1.0 - lp / math.log(T)) * table.inv_sqrt_p[sl]
    n = lp.size
    moment = np.zeros((2 * n, 2 * n))
    np.fill_diagonal(moment, 0.5)  # E[a_i a_j] = E[b_i b_j] = delta_ij / 2

    def profile(h: float) -> np.ndarray:
        return np.concatenate((coef * np.cos(h * lp), coef * np.sin(h * lp)))

    rng = np.random.default_rng(101)
    worst = 0.0
    for dh, h1 in zip(rng.uniform(0.0, math.pi, 20), rng.uniform(0.0, TWO_PI, 20)):
        ref = float(profile(h1) @ (moment @ profile(h1 + dh)))
        worst = max(worst, abs(ref - exact_covariance(spec, float(dh))))
    elapsed = time.monotonic() - t0
    _record(
        1,
        worst <= 1e-10 and elapsed < 1.0,
        f"max |exact - moment contraction| {worst:.2e} (<= 1e-10) over 20 "
        f"random lags in {elapsed:.2f}s (< 1s)",
    )


def test_criterion_02_empirical_covariance(table_1e4):
    t0 = time.monotonic()
    T, n_grid, n_trials, n_lags = 1e4, 512, 2000, 256
    params = ModelParams(T=T)
    spec = CovarianceSpec(table=table_1e4, P=2.0, Q=T, T=T)
    vals = np.empty((n_trials, n_grid))
    for t in range(n_trials):
        ph = sample_phases(table_1e4, 202, t)
        vals[t] = evaluate_plain_lattice(
            ph, params, P=2.0, Q=T, n_points=n_grid
        ).values
    counts = np.arange(n_grid, 0, -1, dtype=np.float64)
    per_trial = np.empty((n_trials, n_lags))
    for t in range(n_trials):
        acf = np.correlate(vals[t], vals[t], mode="full")[n_grid - 1 :]
        per_trial[t] = (acf / counts)[:n_lags]
    dh = TWO_PI / n_grid
    exact = np.array([exact_covariance(spec, j * dh) for j in range(n_lags)])
    emp = per_trial.mean(axis=0)
    se = per_trial.std(axis=0, ddof=1) / math.sqrt(n_trials)
    frac = float(np.mean(np.abs(emp - exact) <= 5.0 * se))
    # Stationarity: the lag-j estimate from products starting in the first
    # half of the grid must agree with the one from the second half.
    half = n_grid // 2
    stat_ok = 0
    for j in range(n_lags):
        c1 = (vals[:, :half] * vals[:, j : half + j]).mean(axis=1)
        c2 = (vals[:, half : n_grid - j] * vals[:, half + j :]).mean(axis=1)
        d = c1 - c2
        se_d = float(d.std(ddof=1)) / math.sqrt(n_trials)
        if abs(float(d.mean())) <= 5.0 * se_d:
            stat_ok += 1
    frac_stat = stat_ok / n_lags
    elapsed = time.monotonic() - t0
    _record(
        2,
        frac >= 0.95 and frac_stat >= 0.95 and elapsed < 120.0,
        f"{100 * frac:.1f}% of {n_lags} lags within 5 SE (>= 95%), "
        f"stationarity split {100 * frac_stat:.1f}%, {elapsed:.0f}s (< 120s)",
    )


def test_criterion_03_asymptotic_band(table_1e6):
    P, Q = 1e3, 1e6
    spec = CovarianceSpec(table=table_1e6, P=P, Q=Q, T=Q)
    window = np.linspace(1.02 / math.log(Q), 0.98 / math.log(P), 60)
    worst = 0.0
    for dh in window:
        asym, regime = asymptotic_covariance(P, Q, float(dh))
        assert regime == "log_window"
        worst = max(worst, abs(exact_covariance(spec, float(dh)) - asym))
    sweep = np.geomspace(1.05 / math.log(P), math.pi, 100)
    c_fit = fit_far_decay_constant(spec, sweep)
    log_p = math.log(P)
    far_ok = all(
        abs(exact_covariance(spec, float(d))) <= c_fit / (d * log_p) + 1e-12
        for d in sweep
    )
    # The constant must not be an artifact of the sweep it was fitted on.
    alt = np.geomspace(1.07 / math.log(P), 0.97 * math.pi, 97)
    c_alt = fit_far_decay_constant(spec, alt)
    stable = c_fit <= 2.0 * c_alt and c_alt <= 2.0 * c_fit
    _record(
        3,
        worst <= 2.0 and far_ok and stable,
        f"log-window max |exact - asymptotic| {worst:.3f} (<= 2), far-decay "
        f"C {c_fit:.3f} holds on the 100-lag sweep (stability {c_alt:.3f})",
    )


def test_criterion_04_variance_law(table_1e4, table_1e6, table_1e7):
    tables = {1e4: table_1e4, 1e6: table_1e6, 1e7: table_1e7}
    worst = 0.0
    for P, Q in ((2.0, 1e4), (1e2, 1e6), (1e3, 1e7)):
        spec = CovarianceSpec(table=tables[Q], P=P, Q=Q, T=Q)
        target = 0.5 * (math.log(math.log(Q)) - math.log(math.log(P)))
        worst = max(worst, abs(exact_covariance(spec, 0.0) - target))
    _record(
        4,
        worst <= 4.0,
        f"max |variance - (1/2)(loglog Q - loglog P)| {worst:.3f} (<= 4) "
        "over three (P, Q) pairs",
    )


def test_criterion_06_surrogate_ks(table_1e5):
    rep = surrogate_max_comparison(
        table_1e5,
        1e5,
        y=112.0,
        seed=606,
        n_field_trials=5000,
        n_gaussian_trials=5000,
    )
    _record(
        6,
        rep.ks_distance <= 0.05,
        f"KS distance {rep.ks_distance:.4f} (<= 0.05) between field and "
        "surrogate maxima at T=1e5, y=112, 5000 trials each",
    )


def test_criterion_07_lower_bound_sweep(table_1e5):
    pts = lower_bound_sweep(table_1e5, 1e5, seed=707, n_trials=20_000)
    viol = sum(1 for p in pts if p.bound > p.empirical + 5.0 * p.mc_se)
    _record(
        7,
        len(pts) >= 20 and viol == 0,
        f"{len(pts)} sweep cells, {viol} violations of "
        "bound <= empirical + 5 SE",
    )


def test_criterion_08_block_product_gap(table_1e5):
    rep = block_comparison(table_1e5, 1e5, n_trials=10_000, seed=808)
    _record(
        8,
        rep.difference <= rep.bound + 5.0 * rep.mc_se,
        f"|p_product - p_joint| {rep.difference:.5f} <= bound "
        f"{rep.bound:.5f} + 5 SE {5.0 * rep.mc_se:.5f} on default blocks",
    )


def test_criterion_09_tail_shape(table_1e5):
    rep = tail_experiment(table_1e5, 1e5, n_trials=100_000, seed=909)
    quad_log = -(rep.ts**2) / (2.0 * rep.inputs.sigma2)
    sel = rep.ts <= 2.5 * rep.sigma + 1e-9
    emp = rep.empirical[sel]
    log_emp = np.log(np.maximum(emp, 1e-300))
    rel = np.abs(log_emp - quad_log[sel]) / np.abs(quad_log[sel])
    shape_ok = bool(emp.min() > 0.0 and np.all(rel <= 0.15))
    dominates = bool(np.all(rep.calibrated_bound >= rep.empirical - 1e-12))
    _record(
        9,
        shape_ok and dominates,
        f"calibrated bound dominates on [sigma, 3 sigma]: {dominates}; "
        f"quadratic log-tail clause off by {100 * float(rel.max()):.0f}% "
        "(needs <= 15%): at t = sigma it requires P(S >= sigma) >= "
        "exp(-0.575) = 0.563, but one-sided Chebyshev caps it at 1/2 for "
        "any centered sum, so the clause is unattainable",
    )


def test_criterion_10_chaining_scales(table_1e5):
    rep = chaining_diagnostics(table_1e5, 1e5, k_max=10, n_trials=10_000, seed=1010)
    sel = rep.ks >= 2
    ratios = rep.var_ratio[sel]
    ratio_ok = bool(np.all((ratios >= 0.1) & (ratios <= 10.0)))
    exceed_ok = bool(np.all(rep.exceed_freq[rep.ks >= 3] == 0.0))
    worst = float(np.max(np.maximum(ratios, 1.0 / ratios)))
    _record(
        10,
        ratio_ok and exceed_ok,
        f"increment variance within factor {worst:.2f} (<= 10) of target "
        "for k in [2, 10]; zero threshold exceedances for k >= 3",
    )


def test_criterion_11_zeta_consistency(table_1e4):
    mpmath = pytest.importorskip("mpmath")
    rep = prop1_interval_check(1e4, 200, 5.0, table_1e4, seed=1111)
    mpmath.mp.dps = 25
    rng = np.random.default_rng(1112)
    worst = 0.0
    for t in rng.uniform(100.0, 1e4, 50):
        value, _ = zeta_half_line(ZetaEvalParams(t=float(t)))
        oracle = complex(mpmath.zeta(mpmath.mpc(0.5, float(t))))
        worst = max(worst, abs(value - oracle))
    _record(
        11,
        rep.fraction_upper == 1.0 and rep.fraction_approx >= 0.9 and worst <= 1e-3,
        f"upper bound holds for {100 * rep.fraction_upper:.0f}% (= 100%), "
        f"approximation for {100 * rep.fraction_approx:.1f}% (>= 90%), "
        f"oracle max error {worst:.2e} (<= 1e-3) at 50 heights",
    )


def test_criterion_12_cli_reproducibility(tmp_path):
    env = dict(os.environ)
    env["NUMBA_NUM_THREADS"] = "2"

    def run(*argv):
        proc = subprocess.run(
            list(argv), env=env, capture_output=True, text=True, timeout=600
        )
        assert proc.returncode == 0, proc.stderr

    run(
        "eulermax", "simulate", "--T", "100000", "--trials", "3",
        "--seed", "12", "--threads", "1", "--no-figures",
        "--out", str(tmp_path / "a"),
    )
    run(
        "eulermax", "simulate", "--config", str(tmp_path / "a/manifest.json"),
        "--threads", "2", "--no-figures", "--out", str(tmp_path / "b"),
    )
    sim_ok = (tmp_path / "a/records.csv").read_bytes() == (
        tmp_path / "b/records.csv"
    ).read_bytes() and (tmp_path / "a/summary.json").read_bytes() == (
        tmp_path / "b/summary.json"
    ).read_bytes()
    run(
        "eulermax", "covariance", "--T", "10000", "--lags", "20",
        "--empirical-trials", "8", "--seed", "5", "--no-figures",
        "--out", str(tmp_path / "ca"),
    )
    run(
        "eulermax", "covariance", "--config", str(tmp_path / "ca/manifest.json"),
        "--no-figures", "--out", str(tmp_path / "cb"),
    )
    cov_ok = (tmp_path / "ca/covariance.csv").read_bytes() == (
        tmp_path / "cb/covariance.csv"
    ).read_bytes()
    _record(
        12,
        sim_ok and cov_ok,
        "manifest re-runs byte-identical across --threads 1/2 (simulate) "
        "and for the covariance table",
    )


@pytest.fixture(scope="module")
def campaign(table_1e4, table_1e5, table_1e6, table_1e7):
    tables = {1e4: table_1e4, 1e5: table_1e5, 1e6: table_1e6, 1e7: table_1e7}
    config = ExperimentConfig(
        T_list=(1e4, 1e5, 1e6, 1e7),
        n_trials=2000,
        seed=505,
        variant="shifted_V",
    )
    t0 = time.monotonic()
    result = run_max_campaign(config, tables=tables)
    return result, time.monotonic() - t0


def test_criterion_05_max_growth_bracket(campaign):
    result, elapsed = campaign
    ll = math.log(math.log(1e5))
    lll = math.log(ll)
    med = result.summaries[1e5]["median_max"]
    lo = ll - 2.0 * lll - 3.0
    hi = ll - 0.25 * lll + 3.0
    med_ok = lo <= med <= hi
    slope_ok = 0.7 <= result.slope <= 1.3
    # The stated budget assumes eight cores; scale it to this machine.
    budget = 1800.0 * 8.0 / os.cpu_count()
    time_ok = elapsed <= budget
    if slope_ok:
        slope_note = "ok"
    else:
        x = np.array([math.log(math.log(T)) for T in result.config.T_list])
        law = float(np.polyfit(x, x - 0.75 * np.log(x), 1)[0])
        slope_note = (
            f"out: the medians follow loglog T - (3/4) logloglog T, whose "
            f"own slope on this T grid is {law:.3f}, below the band's lower "
            "edge, so the requirement excludes the model's true value here"
        )
    _record(
        5,
        med_ok and slope_ok and time_ok,
        f"median at T=1e5 {med:.3f} in [{lo:.3f}, {hi:.3f}] "
        f"({'ok' if med_ok else 'out'}); slope {result.slope:.3f} vs "
        f"[0.7, 1.3] ({slope_note}); {elapsed / 60:.1f} min (budget "
        f"{budget / 60:.0f} min on {os.cpu_count()} core(s), "
        f"{'ok' if time_ok else 'over'})",
    )
