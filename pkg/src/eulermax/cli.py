"""Command line front end.

Every subcommand resolves its settings as flags > config file > defaults,
writes delimited tables plus a summary and a manifest into --out, and by
default renders PNG figures next to them (--no-figures for data only).
Config files are TOML with one section per subcommand; a manifest.json from
a previous run is also accepted (its config echo is reused), which is how a
run is reproduced exactly.

Exit codes: 0 success, 2 usage, 3 parameter/construction/numerical error,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import EulermaxError
from .primes import cached_sieve
from . import reporting

TWO_PI = 2.0 * math.pi
VARIANT_FLAGS = {"X": "plain_X", "V": "shifted_V"}


def _load_config(path: str | None, section: str) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"config file not found: {path}")
    if p.suffix == ".json":
        doc = json.loads(p.read_text())
        if "config" in doc and "command" in doc:
            return dict(doc["config"]) if doc["command"] == section else {}
        return dict(doc.get(section, doc))
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    doc = tomllib.loads(p.read_text())
    node = doc
    for part in section.split("."):
        node = node.get(part, {})
    return dict(node)


def _resolve(args: argparse.Namespace, cfg: dict, key: str, default):
    flag = getattr(args, key.replace(".", "_"), None)
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _parse_t_list(raw) -> tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        return tuple(sorted(float(x) for x in raw))
    return tuple(sorted(float(x) for x in str(raw).split(",")))


def _writer(args, command: str, config: dict, seed: int) -> reporting.RunWriter:
    out = args.out if args.out else f"eulermax_{command.replace(' ', '_')}"
    return reporting.RunWriter(Path(out), command, config, seed)


def _figures_enabled(args) -> bool:
    return args.figures


# --- subcommand handlers -------------------------------------------------


def cmd_simulate(args) -> int:
    from . import experiments as ex

    cfg = _load_config(args.config, "simulate")
    t_list = _resolve(args, cfg, "T", None)
    if t_list is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    t_list = _parse_t_list(t_list)
    seed = int(_resolve(args, cfg, "seed", 0))
    variant_flag = str(_resolve(args, cfg, "variant", "V"))
    if variant_flag not in VARIANT_FLAGS:
        print(f"error: unknown variant {variant_flag!r} (use X or V)",
              file=sys.stderr)
        return 2
    config = {
        "T": list(t_list),
        "trials": int(_resolve(args, cfg, "trials", 1000)),
        "seed": seed,
        "y": _resolve(args, cfg, "y", None),
        "E": _resolve(args, cfg, "E", None),
        "grid_density": float(_resolve(args, cfg, "grid_density", 8.0)),
        "n_grid": _resolve(args, cfg, "n_grid", None),
        "variant": variant_flag,
        "good_measure": float(
            _resolve(args, cfg, "good_measure", ex.DEFAULT_GOOD_SET_MEASURE)
        ),
    }
    ec = ex.ExperimentConfig(
        T_list=t_list,
        n_trials=config["trials"],
        seed=seed,
        variant=VARIANT_FLAGS[variant_flag],
        y=config["y"],
        E=config["E"],
        grid_density=config["grid_density"],
        n_grid=config["n_grid"],
        good_set_measure=config["good_measure"],
    )
    result = ex.run_max_campaign(ec)
    writer = _writer(args, "simulate", config, seed)
    writer.csv(
        "records.csv",
        ["T", "trial", "max", "argmax_h", "restricted_max"],
        (
            (r.T, r.trial, r.max_value, r.argmax_h, r.restricted_max)
            for r in result.records
        ),
    )
    writer.json(
        "summary.json",
        {
            "per_T": {("%g" % T): s for T, s in result.summaries.items()},
            "slope": result.slope,
            "config": config,
            "run_hash": reporting.run_hash("simulate", config, seed),
        },
    )
    if _figures_enabled(args):
        from . import plots

        for name in plots.campaign_figures(result, writer.out_dir):
            writer.register(name)
    writer.manifest()
    return 0


def cmd_covariance(args) -> int:
    from .covariance import (
        CovarianceSpec,
        asymptotic_covariance,
        exact_covariance,
    )
    from .field import ModelParams, evaluate_plain_lattice, sample_phases

    cfg = _load_config(args.config, "covariance")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    params = ModelParams(T=T, y=_resolve(args, cfg, "y", None))
    config = {
        "T": T,
        "y": params.y,
        "lags": int(_resolve(args, cfg, "lags", 100)),
        "max_lag": float(_resolve(args, cfg, "max_lag", math.pi)),
        "empirical_trials": int(_resolve(args, cfg, "empirical_trials", 0)),
        "empirical_grid": int(_resolve(args, cfg, "empirical_grid", 512)),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    spec = CovarianceSpec(table=table, P=params.y, Q=T, T=T)
    n_lags = config["lags"]
    lags = (
        [0.0]
        if n_lags == 1
        else [j * config["max_lag"] / (n_lags - 1) for j in range(n_lags)]
    )
    empirical = [None] * n_lags
    if config["empirical_trials"] > 0:
        n_grid = config["empirical_grid"]
        grid_dh = TWO_PI / n_grid
        acc = np.zeros(n_grid)
        counts = np.arange(n_grid, 0, -1, dtype=np.float64)
        for trial in range(config["empirical_trials"]):
            phases = sample_phases(table, seed, trial)
            vals = evaluate_plain_lattice(
                phases, params, P=params.y, Q=T, n_points=n_grid
            ).values
            acc += np.correlate(vals, vals, mode="full")[n_grid - 1 :] / counts
        mean = acc / config["empirical_trials"]
        for i, dh in enumerate(lags):
            j = int(round(dh / grid_dh))
            if j < n_grid:
                empirical[i] = float(mean[j])
    rows = []
    for i, dh in enumerate(lags):
        asym, regime = asymptotic_covariance(params.y, T, dh)
        rows.append(
            (dh, exact_covariance(spec, dh), asym, regime, empirical[i])
        )
    writer = _writer(args, "covariance", config, seed)
    writer.csv(
        "covariance.csv",
        ["dh", "exact", "asymptotic", "regime", "empirical"],
        rows,
    )
    writer.json(
        "summary.json",
        {
            "config": config,
            "variance": exact_covariance(spec, 0.0),
            "log_window_start": 1.0 / math.log(T),
            "log_window_end": 1.0 / math.log(params.y),
            "run_hash": reporting.run_hash("covariance", config, seed),
        },
    )
    if _figures_enabled(args):
        from . import plots

        for name in plots.covariance_figure(rows, writer.out_dir):
            writer.register(name)
    writer.manifest()
    return 0


def cmd_bounds_tail(args) -> int:
    from . import experiments as ex

    cfg = _load_config(args.config, "bounds.tail")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    config = {
        "T": T,
        "K": float(_resolve(args, cfg, "K", 1.0)),
        "c_big_oh": float(_resolve(args, cfg, "c_big_oh", 1.0)),
        "trials": int(_resolve(args, cfg, "trials", 20000)),
        "sigma_max": float(_resolve(args, cfg, "sigma_max", 3.0)),
        "points": int(_resolve(args, cfg, "points", 9)),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    report = ex.tail_experiment(
        table,
        T,
        K=config["K"],
        c_big_oh=config["c_big_oh"],
        n_trials=config["trials"],
        seed=seed,
        sigma_grid=np.linspace(1.0, config["sigma_max"], config["points"]),
    )
    writer = _writer(args, "bounds tail", config, seed)
    writer.calibrations = {
        "c_big_oh": config["c_big_oh"],
        "calibration": report.calibration,
    }
    writer.csv(
        "tail.csv",
        ["t", "t_over_sigma", "empirical", "bound", "calibrated_bound",
         "quad_reference"],
        (
            (
                float(report.ts[i]),
                float(report.ts[i] / report.sigma),
                float(report.empirical[i]),
                float(report.bound[i]),
                float(report.calibrated_bound[i]),
                float(report.quad_reference[i]),
            )
            for i in range(report.ts.size)
        ),
    )
    writer.json(
        "summary.json",
        {
            "config": config,
            "sigma": report.sigma,
            "sigma2": report.inputs.sigma2,
            "per_summand_bound": report.inputs.B,
            "validity_end": report.inputs.validity_end,
            "calibration": report.calibration,
            "dominates": bool(
                np.all(report.calibrated_bound >= report.empirical - 1e-12)
            ),
            "run_hash": reporting.run_hash("bounds tail", config, seed),
        },
    )
    if _figures_enabled(args):
        from . import plots

        for name in plots.tail_figure(report, writer.out_dir):
            writer.register(name)
    writer.manifest()
    return 0


def cmd_bounds_lower(args) -> int:
    from . import experiments as ex
    from .gaussian import stationary_max_lower_bound

    cfg = _load_config(args.config, "bounds.lower")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    u = _resolve(args, cfg, "u", None)
    config = {
        "T": T,
        "y": _resolve(args, cfg, "y", None),
        "u": u,
        "spacing": float(_resolve(args, cfg, "spacing", 1.0)),
        "points": _resolve(args, cfg, "points", None),
        "trials": int(_resolve(args, cfg, "trials", 20000)),
        "o_factor": float(_resolve(args, cfg, "o_factor", 0.0)),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    writer = _writer(args, "bounds lower", config, seed)
    writer.calibrations = {"o_factor": config["o_factor"]}
    if u is not None:
        # Single-cell mode: hypothesis violations surface as exit 3.
        from .field import ModelParams
        from .gaussian import build_cov_matrix, sample_gaussian_field

        params = ModelParams(T=T, y=config["y"])
        disc = ex.discretize_good_set(((0.0, TWO_PI),), params.E, T)
        corr = ex.normalized_correlation_function(table, T, params.y)
        m = config["spacing"]
        n = max(2, int(disc.lattice_size / m))
        if config["points"] is not None:
            n = max(2, min(n, int(config["points"])))
        rs = np.array([corr(j * m * disc.step) for j in range(1, n)])
        bound = stationary_max_lower_bound(
            rs, float(u), n, subset_size=n, o_factor=config["o_factor"]
        )
        grid = disc.step * m * np.arange(n)
        cov = build_cov_matrix(corr, grid)
        samples = sample_gaussian_field(
            cov, seed + int(100 * m), config["trials"]
        )
        emp = float(np.mean(samples.max(axis=1) > float(u)))
        se = math.sqrt(max(emp * (1.0 - emp), 1e-12) / config["trials"])
        rows = [(float(u), m, n, bound, emp, se)]
    else:
        sweep = ex.lower_bound_sweep(
            table,
            T,
            y=config["y"],
            seed=seed,
            n_trials=config["trials"],
            o_factor=config["o_factor"],
        )
        rows = [
            (p.u, p.spacing, p.n_points, p.bound, p.empirical, p.mc_se)
            for p in sweep
        ]
    writer.csv(
        "lower_bound.csv",
        ["u", "spacing", "n_points", "bound", "empirical", "mc_se"],
        rows,
    )
    violations = sum(1 for r in rows if r[3] > r[4] + 5.0 * r[5])
    writer.json(
        "summary.json",
        {
            "config": config,
            "n_cells": len(rows),
            "violations": violations,
            "run_hash": reporting.run_hash("bounds lower", config, seed),
        },
    )
    if _figures_enabled(args) and rows:
        from . import plots

        for name in plots.lower_bound_figure(rows, writer.out_dir):
            writer.register(name)
    writer.manifest()
    return 0


def cmd_bounds_comparison(args) -> int:
    from . import experiments as ex
    from .gaussian import normal_comparison_bound

    cfg = _load_config(args.config, "bounds.comparison")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    config = {
        "T": T,
        "y": _resolve(args, cfg, "y", None),
        "K": float(_resolve(args, cfg, "K", 1.0)),
        "u": _resolve(args, cfg, "u", None),
        "trials": int(_resolve(args, cfg, "trials", 10000)),
        "identical": bool(args.identical),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    writer = _writer(args, "bounds comparison", config, seed)
    if config["identical"]:
        # Self-check: comparing a matrix against itself zeroes the bound.
        from .field import ModelParams
        from .gaussian import build_cov_matrix

        params = ModelParams(T=T, y=config["y"])
        disc = ex.discretize_good_set(((0.0, TWO_PI),), params.E, T)
        corr = ex.normalized_correlation_function(table, T, params.y)
        blocks = ex.build_blocks(disc, params.y, config["K"])
        union = np.concatenate(blocks.blocks)
        cov = build_cov_matrix(corr, union)
        ll = math.log(math.log(T))
        u = config["u"] if config["u"] is not None else math.sqrt(
            2.0 * (ll - math.log(math.log(params.y)))
        )
        bound = normal_comparison_bound(
            cov.matrix, cov.matrix, np.full(union.size, float(u))
        )
        rows = [(float(u), config["K"], union.size, 0.0, 0.0, 0.0, bound)]
        header = ["u", "K", "n_sites", "p_joint", "p_product", "difference",
                  "bound"]
        summary = {"config": config, "bound": bound,
                   "run_hash": reporting.run_hash(
                       "bounds comparison", config, seed)}
    else:
        report = ex.block_comparison(
            table,
            T,
            y=config["y"] if config["y"] is not None else None,
            K=config["K"],
            u=config["u"],
            seed=seed,
            n_trials=config["trials"],
        )
        rows = [
            (
                report.u,
                report.K,
                sum(report.block_sizes),
                report.p_joint,
                report.p_product,
                report.difference,
                report.bound,
            )
        ]
        header = ["u", "K", "n_sites", "p_joint", "p_product", "difference",
                  "bound"]
        summary = {
            "config": config,
            "u": report.u,
            "block_sizes": list(report.block_sizes),
            "p_joint": report.p_joint,
            "p_product": report.p_product,
            "difference": report.difference,
            "bound": report.bound,
            "mc_se": report.mc_se,
            "within_bound": bool(
                report.difference <= report.bound + 5.0 * report.mc_se
            ),
            "run_hash": reporting.run_hash("bounds comparison", config, seed),
        }
    writer.csv("comparison.csv", header, rows)
    writer.json("summary.json", summary)
    writer.manifest()
    return 0


def cmd_bounds_clt(args) -> int:
    from . import experiments as ex
    from .field import ModelParams
    from .gaussian import clt_error_bound

    cfg = _load_config(args.config, "bounds.clt")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    config = {
        "T": T,
        "y": _resolve(args, cfg, "y", None),
        "points": int(_resolve(args, cfg, "points", 8)),
        "delta": _resolve(args, cfg, "delta", None),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    params = ModelParams(T=T, y=config["y"])
    disc = ex.discretize_good_set(((0.0, TWO_PI),), params.E, T)
    pts = disc.sites[: config["points"]]
    inputs = ex.clt_moment_inputs(
        table, T, params.y, pts, delta=config["delta"]
    )
    bound = clt_error_bound(inputs)
    writer = _writer(args, "bounds clt", config, seed)
    writer.calibrations = {"delta": inputs.delta}
    writer.csv(
        "clt.csv",
        ["n_points", "n_sources", "delta", "error_bound"],
        [(pts.size, inputs.coefficients.shape[0], inputs.delta, bound)],
    )
    writer.json(
        "summary.json",
        {
            "config": config,
            "delta": inputs.delta,
            "n_sources": inputs.coefficients.shape[0],
            "error_bound": bound,
            "run_hash": reporting.run_hash("bounds clt", config, seed),
        },
    )
    writer.manifest()
    return 0


def cmd_zeta(args) -> int:
    from . import zeta as zz

    cfg = _load_config(args.config, "zeta")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    config = {
        "T": T,
        "samples": int(_resolve(args, cfg, "samples", 200)),
        "slack": float(_resolve(args, cfg, "slack", 5.0)),
        "mean_intervals": int(_resolve(args, cfg, "mean_intervals", 0)),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    report = zz.prop1_interval_check(
        T, config["samples"], config["slack"], table, seed=seed
    )
    writer = _writer(args, "zeta", config, seed)
    writer.csv(
        "zeta_samples.csv",
        ["t", "log_abs_zeta", "main_sum", "upper_sum", "within_slack",
         "upper_ok", "near_zero"],
        (
            (
                float(report.ts[i]),
                float(report.log_abs_zeta[i]),
                float(report.main_sums[i]),
                float(report.upper_sums[i]),
                bool(
                    abs(report.log_abs_zeta[i] - report.main_sums[i])
                    <= report.slack
                ),
                bool(
                    report.log_abs_zeta[i]
                    <= report.upper_sums[i] + report.slack
                ),
                bool(report.near_zero[i]),
            )
            for i in range(report.n_samples)
        ),
    )
    summary = {
        "config": config,
        "approximation_fraction": report.fraction_approx,
        "upper_bound_fraction": report.fraction_upper,
        "n_near_zero": report.n_near_zero,
        "run_hash": reporting.run_hash("zeta", config, seed),
    }
    if config["mean_intervals"] > 0:
        summary["mean_value_ratio"] = zz.mean_value_check(
            T, config["mean_intervals"], seed=seed
        )
    writer.json("summary.json", summary)
    if _figures_enabled(args):
        from . import plots

        for name in plots.zeta_figure(report, writer.out_dir):
            writer.register(name)
    writer.manifest()
    return 0


def cmd_diagnostics(args) -> int:
    from . import experiments as ex

    cfg = _load_config(args.config, "diagnostics")
    T = _resolve(args, cfg, "T", None)
    if T is None:
        print("error: --T is required", file=sys.stderr)
        return 2
    T = float(T)
    seed = int(_resolve(args, cfg, "seed", 0))
    slacks_raw = _resolve(args, cfg, "slacks", "0,0.5,1,2,5")
    slacks = tuple(float(s) for s in str(slacks_raw).split(","))
    config = {
        "T": T,
        "k_max": int(_resolve(args, cfg, "k_max", 10)),
        "trials": int(_resolve(args, cfg, "trials", 1000)),
        "C": float(_resolve(args, cfg, "C", 2.0)),
        "u": _resolve(args, cfg, "u", None),
        "slacks": list(slacks),
        "seed": seed,
    }
    table = cached_sieve(int(T))
    chain = ex.chaining_diagnostics(
        table, T, k_max=config["k_max"], n_trials=config["trials"], seed=seed
    )
    split = ex.event_split_check(
        table,
        T,
        C=config["C"],
        n_trials=config["trials"],
        seed=seed,
        u=config["u"],
        slacks=slacks,
    )
    writer = _writer(args, "diagnostics", config, seed)
    writer.csv(
        "scales.csv",
        ["k", "increment_var", "target_var", "ratio", "threshold",
         "exceed_freq"],
        (
            (
                int(chain.ks[i]),
                float(chain.increment_var[i]),
                float(chain.target_var[i]),
                float(chain.var_ratio[i]),
                float(chain.thresholds[i]),
                float(chain.exceed_freq[i]),
            )
            for i in range(chain.ks.size)
        ),
    )
    writer.json(
        "summary.json",
        {
            "config": config,
            "split_prime": chain.split_prime,
            "event_split": {
                "u": split.u,
                "C": split.C,
                "scale_index": split.scale_index,
                "slacks": list(split.slacks),
                "violations": list(split.violations),
                "smallest_ok_slack": split.smallest_ok_slack,
                "n_triggered": split.n_triggered,
                "event_counts": list(split.event_counts),
            },
            "run_hash": reporting.run_hash("diagnostics", config, seed),
        },
    )
    if _figures_enabled(args):
        from . import plots

        for name in plots.chaining_figure(chain, writer.out_dir):
            writer.register(name)
        for name in plots.event_split_figure(split, writer.out_dir):
            writer.register(name)
    writer.manifest()
    return 0


# --- parser --------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int, default=None, help="base RNG seed")
    sp.add_argument("--out", default=None, help="output directory")
    sp.add_argument("--config", default=None,
                    help="TOML config or manifest.json to reuse")
    sp.add_argument("--threads", type=int, default=None,
                    help="cap kernel worker threads (results unchanged)")
    sp.add_argument("--prime-cache", default=None,
                    help="prime cache directory (else $EULERMAX_CACHE)")
    fig = sp.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true",
                     default=True, help="render PNG figures (default)")
    fig.add_argument("--no-figures", dest="figures", action="store_false",
                     help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eulermax",
        description="Monte Carlo laboratory for the random Euler-product "
        "model of extreme values on short intervals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="max-distribution campaign")
    sp.add_argument("--T", default=None,
                    help="model size, comma-separated for a scaling study")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--y", type=float, default=None)
    sp.add_argument("--E", type=float, default=None)
    sp.add_argument("--grid-density", dest="grid_density", type=float,
                    default=None)
    sp.add_argument("--n-grid", dest="n_grid", type=int, default=None)
    sp.add_argument("--variant", choices=("X", "V"), default=None,
                    help="X plain field, V shifted field (default V)")
    sp.add_argument("--good-measure", dest="good_measure", type=float,
                    default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("covariance", help="exact/asymptotic/empirical table")
    sp.add_argument("--T", default=None)
    sp.add_argument("--y", type=float, default=None)
    sp.add_argument("--lags", type=int, default=None)
    sp.add_argument("--max-lag", dest="max_lag", type=float, default=None)
    sp.add_argument("--empirical-trials", dest="empirical_trials", type=int,
                    default=None)
    sp.add_argument("--empirical-grid", dest="empirical_grid", type=int,
                    default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_covariance)

    bounds = sub.add_parser("bounds", help="analytic bound experiments")
    bsub = bounds.add_subparsers(dest="bounds_command", required=True)

    sp = bsub.add_parser("tail", help="independent-sum tail bound")
    sp.add_argument("--T", default=None)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--c", dest="c_big_oh", type=float, default=None,
                    help="cubic-term constant in the exponent")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--sigma-max", dest="sigma_max", type=float, default=None)
    sp.add_argument("--points", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_bounds_tail)

    sp = bsub.add_parser("lower", help="stationary max lower bound sweep")
    sp.add_argument("--T", default=None)
    sp.add_argument("--y", type=float, default=None)
    sp.add_argument("--u", type=float, default=None,
                    help="single-cell mode at this threshold")
    sp.add_argument("--spacing", type=float, default=None)
    sp.add_argument("--points", type=int, default=None,
                    help="cap grid size in single-cell mode")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--o-factor", dest="o_factor", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_bounds_lower)

    sp = bsub.add_parser("comparison", help="joint vs block-product check")
    sp.add_argument("--T", default=None)
    sp.add_argument("--y", type=float, default=None)
    sp.add_argument("--K", type=float, default=None)
    sp.add_argument("--u", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--identical", action="store_true",
                    help="compare the matrix against itself (bound is zero)")
    _add_common(sp)
    sp.set_defaults(func=cmd_bounds_comparison)

    sp = bsub.add_parser("clt", help="normal-approximation error bound")
    sp.add_argument("--T", default=None)
    sp.add_argument("--y", type=float, default=None)
    sp.add_argument("--points", type=int, default=None)
    sp.add_argument("--delta", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_bounds_clt)

    sp = sub.add_parser("zeta", help="zeta vs prime-sum interval checks")
    sp.add_argument("--T", default=None)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--slack", type=float, default=None)
    sp.add_argument("--mean-intervals", dest="mean_intervals", type=int,
                    default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_zeta)

    sp = sub.add_parser("diagnostics",
                        help="chaining scales and three-event split")
    sp.add_argument("--T", default=None)
    sp.add_argument("--k-max", dest="k_max", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--C", type=float, default=None)
    sp.add_argument("--u", type=float, default=None)
    sp.add_argument("--slacks", default=None,
                    help="comma-separated slack values for the event split")
    _add_common(sp)
    sp.set_defaults(func=cmd_diagnostics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.prime_cache:
        os.environ["EULERMAX_CACHE"] = args.prime_cache
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        import numba

        numba.set_num_threads(args.threads)
    try:
        return args.func(args)
    except EulermaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
