"""Figure rendering for CLI runs. Import is deferred until a run asks for
figures so headless library use never touches matplotlib."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def _axes(title: str, xlabel: str, ylabel: str):
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=120)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    import matplotlib.pyplot as plt

    plt.close(fig)


def campaign_figures(result, out_dir: Path) -> list[str]:
    names = []
    for T, summary in result.summaries.items():
        maxima = [r.max_value for r in result.records if r.T == T]
        fig, ax = _axes(
            f"grid max distribution, T={T:g}", "max value", "count"
        )
        ax.hist(maxima, bins=40, color="#4878a8")
        ax.axvline(summary["upper_reference"], color="crimson", ls="--",
                   label="upper reference")
        ax.axvline(summary["lower_reference"], color="darkgreen", ls="--",
                   label="lower reference")
        ax.legend()
        name = f"figures/maxima_T{T:g}.png"
        _save(fig, out_dir / name)
        names.append(name)
    if len(result.summaries) >= 2:
        xs = [math.log(math.log(T)) for T in result.summaries]
        ys = [s["median_max"] for s in result.summaries.values()]
        fig, ax = _axes("median max vs log log T", "log log T", "median max")
        ax.plot(xs, ys, "o-", color="#4878a8")
        if result.slope is not None:
            ax.set_title(f"median max vs log log T (slope {result.slope:.3f})")
        name = "figures/median_scaling.png"
        _save(fig, out_dir / name)
        names.append(name)
    return names


def covariance_figure(rows, out_dir: Path) -> list[str]:
    dh = np.array([r[0] for r in rows])
    exact = np.array([r[1] for r in rows])
    asym = np.array([r[2] for r in rows])
    emp = [r[4] for r in rows]
    fig, ax = _axes("covariance vs lag", "lag", "covariance")
    ax.plot(dh, exact, label="exact", color="#4878a8")
    ax.plot(dh, asym, label="asymptotic", color="darkorange", ls="--")
    if any(e is not None for e in emp):
        ax.plot(dh, [np.nan if e is None else e for e in emp],
                label="empirical", color="darkgreen", ls=":", lw=2)
    ax.legend()
    name = "figures/covariance.png"
    _save(fig, out_dir / name)
    return [name]


def tail_figure(report, out_dir: Path) -> list[str]:
    fig, ax = _axes("tail of the single-offset sum", "t / sigma",
                    "P(S > t), log scale")
    x = report.ts / report.sigma
    ax.semilogy(x, report.empirical, "o-", label="empirical")
    ax.semilogy(x, report.bound, "s--", label="bound")
    ax.semilogy(x, report.calibrated_bound, "^:", label="calibrated bound")
    ax.semilogy(x, report.quad_reference, "-", alpha=0.5,
                label="exp(-t^2/2 sigma^2)")
    ax.legend()
    name = "figures/tail_bounds.png"
    _save(fig, out_dir / name)
    return [name]


def lower_bound_figure(rows, out_dir: Path) -> list[str]:
    bound = np.array([r[3] for r in rows])
    emp = np.array([r[4] for r in rows])
    fig, ax = _axes("lower bound vs empirical exceedance", "bound",
                    "empirical P(max > u)")
    lim = max(float(np.max(emp)), float(np.max(bound)), 1e-3)
    ax.plot([0, lim], [0, lim], color="gray", ls="--", label="equality")
    ax.plot(bound, emp, "o", color="#4878a8")
    ax.legend()
    name = "figures/lower_bound.png"
    _save(fig, out_dir / name)
    return [name]


def chaining_figure(report, out_dir: Path) -> list[str]:
    fig, ax = _axes("dyadic increment variance", "scale k", "ratio to target")
    ax.plot(report.ks, report.var_ratio, "o-", color="#4878a8")
    ax.axhline(1.0, color="gray", ls="--")
    ax.set_yscale("log")
    name = "figures/chaining.png"
    _save(fig, out_dir / name)
    return [name]


def event_split_figure(report, out_dir: Path) -> list[str]:
    fig, ax = _axes("three-event cover violations", "slack", "violations")
    ax.bar([str(s) for s in report.slacks], report.violations,
           color="#4878a8")
    name = "figures/event_split.png"
    _save(fig, out_dir / name)
    return [name]


def zeta_figure(report, out_dir: Path) -> list[str]:
    fig, ax = _axes(f"log|zeta| vs prime sums near T={report.T:g}",
                    "t - T", "value")
    x = report.ts - report.T
    ax.plot(x, report.log_abs_zeta, ".", ms=3, label="log|zeta|",
            color="#4878a8")
    ax.plot(x, report.main_sums, "-", label="main sum", color="darkorange")
    ax.plot(x, report.upper_sums + report.slack, "--",
            label="upper sum + slack", color="darkgreen")
    ax.legend()
    name = "figures/zeta_interval.png"
    _save(fig, out_dir / name)
    return [name]


def surrogate_figure(report, out_dir: Path) -> list[str]:
    fig, ax = _axes(
        f"max over sites: field vs Gaussian (KS {report.ks_distance:.4f})",
        "max value", "density")
    bins = np.histogram_bin_edges(
        np.concatenate([report.euler_maxima, report.gaussian_maxima]), 50
    )
    ax.hist(report.euler_maxima, bins=bins, alpha=0.6, density=True,
            label="normalized field")
    ax.hist(report.gaussian_maxima, bins=bins, alpha=0.6, density=True,
            label="Gaussian surrogate")
    ax.legend()
    name = "figures/surrogate_max.png"
    _save(fig, out_dir / name)
    return [name]
