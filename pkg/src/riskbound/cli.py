"""Command-line interface: seeded experiment runs and SVG reports.

``riskbound run <config>`` executes the single experiment described by
a flat dotted-key JSON config and writes a CSV of per-trial rows plus a
JSON summary; ``riskbound plot <summary.json>`` renders a summary into
a standalone SVG.  Identical configs and seeds produce byte-identical
artifacts.  Exit codes: 0 success, 2 validation failure (malformed or
inconsistent config, nothing written), 3 numerical failure during an
experiment.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .bounds import BoundConstants
from .scenarios import (METHODS, ExperimentPlan, Scenario, cube_scenario,
                        finite_dim_regression, nested_regression_family,
                        run_coverage_experiment, run_ordering_experiment,
                        run_prop2_experiment, run_rate_experiment,
                        run_selection_experiment, tsybakov_scenario)


class ConfigError(ValueError):
    """The run config is malformed or inconsistent."""


class MissingField(ConfigError):
    """A summary lacks a field the requested plot needs."""


EXPERIMENTS = ("rate", "prop2", "ordering", "coverage", "selection")

_SCENARIO_KEYS = {
    "cube": {"scenario.N"},
    "tsybakov": {"scenario.kappa", "scenario.rho", "scenario.class_size"},
    "finite-dim": {"scenario.d", "scenario.values"},
    "nested-regression": {"scenario.levels", "scenario.t"},
}
_CONSTANT_KEYS = {
    "constants.q": "q", "constants.K_bar": "K_bar",
    "constants.K_hat": "K_hat", "constants.K_tilde": "K_tilde",
    "constants.c_hat": "c_hat", "constants.c_tilde": "c_tilde",
    "constants.K_check": "K_check", "constants.family_level": "family_level",
}
_COMMON_KEYS = {"experiment", "seed", "scenario.name", "plan.n_sweep",
                "plan.replicates", "plan.t", "mc.replicates", "mc.draws",
                "out.csv", "out.summary"} | set(_CONSTANT_KEYS)


@dataclass(frozen=True)
class RunConfig:
    """A validated single-experiment configuration."""

    experiment: str
    scenario_name: str
    method: str
    plan: ExperimentPlan
    constants: BoundConstants
    scenario: Scenario = field(repr=False, default=None)
    N_list: Tuple[int, ...] = ()
    mc_replicates: int = 300
    mc_draws: int = 256
    out_csv: str = "experiment.csv"
    out_summary: str = "experiment.summary.json"
    echo: dict = field(default_factory=dict)


def _need(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"missing required key {key!r}")
    return raw[key]


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number")
    if float(value) != int(value):
        raise ConfigError(f"{key} must be an integer")
    return int(value)


def _as_float(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number")
    return float(value)


def parse_config(path: str, seed_override: Optional[int] = None) -> RunConfig:
    """Load and fully validate a flat dotted-key JSON config.

    Every key must be recognized and applicable to the declared
    experiment and scenario; the scenario, plan, and constants are all
    constructed here so that a bad config fails before any computation.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object of dotted keys")

    experiment = _need(raw, "experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"one of {EXPERIMENTS}")
    name = _need(raw, "scenario.name")
    if name not in _SCENARIO_KEYS:
        raise ConfigError(f"unknown scenario {name!r}; "
                          f"one of {tuple(_SCENARIO_KEYS)}")

    allowed = set(_COMMON_KEYS) | _SCENARIO_KEYS[name]
    if experiment in ("rate", "selection"):
        allowed.add("method")
    if experiment == "prop2":
        if name != "cube":
            raise ConfigError("prop2 experiments run on cube scenarios")
        allowed = (allowed | {"scenario.N_list"}) - {"scenario.N"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown or inapplicable keys: {unknown}")

    method = raw.get("method", "erm" if experiment == "rate"
                     else "penalized-v1")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; one of {METHODS}")
    if experiment == "selection" and method == "erm":
        raise ConfigError("selection experiments need a selection method")

    sweep = _need(raw, "plan.n_sweep")
    if not isinstance(sweep, list) or not sweep:
        raise ConfigError("plan.n_sweep must be a nonempty list")
    sweep = tuple(_as_int(v, "plan.n_sweep") for v in sweep)
    if experiment != "rate" and len(sweep) != 1:
        raise ConfigError(f"{experiment} experiments run at a single sample "
                          "size; plan.n_sweep must have exactly one entry")
    seed = _as_int(raw.get("seed", 0), "seed")
    if seed_override is not None:
        seed = seed_override
    try:
        plan = ExperimentPlan(
            n_sweep=sweep,
            replicates=_as_int(_need(raw, "plan.replicates"),
                               "plan.replicates"),
            t=_as_float(raw.get("plan.t", 1.0), "plan.t"),
            seed=seed,
        )
        overrides = {attr: _as_float(raw[key], key)
                     for key, attr in _CONSTANT_KEYS.items() if key in raw}
        constants = BoundConstants(t=plan.t, **overrides)
        scenario = (None if experiment == "prop2"
                    else _build_scenario(name, raw, plan))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if experiment == "selection" and scenario.family is None:
        raise ConfigError("selection experiments need a scenario with a "
                          "model family (nested-regression)")

    N_list = ()
    if experiment == "prop2":
        values = _need(raw, "scenario.N_list")
        if not isinstance(values, list) or not values:
            raise ConfigError("scenario.N_list must be a nonempty list")
        N_list = tuple(_as_int(v, "scenario.N_list") for v in values)

    stem = os.path.splitext(os.path.basename(path))[0]
    out_csv = raw.get("out.csv", f"{stem}.csv")
    out_summary = raw.get("out.summary", f"{stem}.summary.json")
    if not isinstance(out_csv, str) or not isinstance(out_summary, str):
        raise ConfigError("output paths must be strings")

    return RunConfig(
        experiment=experiment,
        scenario_name=name,
        method=method,
        plan=plan,
        constants=constants,
        scenario=scenario,
        N_list=N_list,
        mc_replicates=_as_int(raw.get("mc.replicates", 300), "mc.replicates"),
        mc_draws=_as_int(raw.get("mc.draws", 256), "mc.draws"),
        out_csv=out_csv,
        out_summary=out_summary,
        echo=dict(raw),
    )


def _build_scenario(name: str, raw: dict, plan: ExperimentPlan) -> Scenario:
    n_ref = plan.n_sweep[-1]
    if name == "cube":
        return cube_scenario(_as_int(_need(raw, "scenario.N"), "scenario.N"))
    if name == "tsybakov":
        return tsybakov_scenario(
            _as_float(_need(raw, "scenario.kappa"), "scenario.kappa"),
            _as_float(_need(raw, "scenario.rho"), "scenario.rho"),
            _as_int(_need(raw, "scenario.class_size"), "scenario.class_size"),
            n=n_ref)
    if name == "finite-dim":
        values = raw.get("scenario.values")
        if values is not None and not isinstance(values, list):
            raise ConfigError("scenario.values must be a list")
        return finite_dim_regression(
            _as_int(_need(raw, "scenario.d"), "scenario.d"),
            values=values, n=n_ref)
    return nested_regression_family(
        levels=_as_int(raw.get("scenario.levels", 4), "scenario.levels"),
        t=_as_float(raw.get("scenario.t", 2.0), "scenario.t"))


def _run_experiment(cfg: RunConfig):
    plan = cfg.plan
    n = plan.n_sweep[0]
    if cfg.experiment == "rate":
        return run_rate_experiment(cfg.scenario, plan, cfg.method,
                                   consts=cfg.constants)
    if cfg.experiment == "prop2":
        return run_prop2_experiment(cfg.N_list, n=n, t=plan.t,
                                    trials=plan.replicates, seed=plan.seed,
                                    replicates=cfg.mc_replicates)
    if cfg.experiment == "ordering":
        return run_ordering_experiment(cfg.scenario, n=n, t=plan.t,
                                       trials=plan.replicates, seed=plan.seed,
                                       replicates=cfg.mc_replicates,
                                       draws=cfg.mc_draws)
    if cfg.experiment == "coverage":
        return run_coverage_experiment(cfg.scenario, n=n, t=plan.t,
                                       trials=plan.replicates, seed=plan.seed,
                                       replicates=cfg.mc_replicates)
    return run_selection_experiment(cfg.scenario, n=n, trials=plan.replicates,
                                    method=cfg.method, seed=plan.seed,
                                    replicates=cfg.mc_replicates,
                                    draws=cfg.mc_draws)


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: str, header, rows):
    """Write trial rows with a header and 17-significant-digit floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def write_summary(path: str, summary: dict):
    """Write a summary as sorted, indented JSON."""
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(config_path: str, seed: Optional[int] = None,
        out_dir: Optional[str] = None, threads: int = 1) -> dict:
    """Execute one config: validates, runs, writes CSV and JSON summary.

    Raises ConfigError for anything wrong with the config itself
    (before any computation or file output) and lets computation
    errors propagate for the caller to map to exit code 3.
    """
    cfg = parse_config(config_path, seed_override=seed)
    report = _run_experiment(cfg)
    # relative artifact paths resolve next to the config unless overridden
    base = out_dir if out_dir is not None else (os.path.dirname(
        os.path.abspath(config_path)))
    os.makedirs(base, exist_ok=True)
    csv_path = os.path.join(base, cfg.out_csv)
    summary_path = os.path.join(base, cfg.out_summary)
    summary = report.to_json_dict()
    summary["seed"] = cfg.plan.seed
    summary["threads"] = threads
    summary["config"] = cfg.echo
    write_csv(csv_path, report.csv_header(), report.csv_rows())
    write_summary(summary_path, summary)
    tag = (f" method={cfg.method}" if cfg.experiment in ("rate", "selection")
           else "")
    line = (f"{cfg.experiment} {cfg.scenario_name}{tag} "
            f"seed={cfg.plan.seed}: {_headline(summary)} "
            f"-> {csv_path} {summary_path}")
    print(line)
    return summary


def _headline(summary: dict) -> str:
    kind = summary["experiment"]
    if kind == "rate":
        if summary["degenerate"]:
            return "slope=degenerate"
        return f"slope={summary['slope']:.4f}"
    if kind == "prop2":
        return (f"final_freq={summary['final_freq']:.3f} "
                f"monotone={summary['delta_monotone']}")
    if kind == "ordering":
        return f"freq_ordered={summary['freq_ordered']:.3f}"
    if kind == "coverage":
        return (f"frequency={summary['frequency']:.4f} "
                f"budget={summary['budget']:.4f}")
    return (f"k_star={summary['k_star']} "
            f"freq_k_within={summary['freq_k_within']:.3f}")


def _summary_fields(summary: dict, fields) -> list:
    missing = [f for f in fields if f not in summary]
    if missing:
        raise MissingField(f"summary lacks fields {missing}")
    return [summary[f] for f in fields]


def emit_plot(summary_path: str, out_path: Optional[str] = None) -> str:
    """Render a run summary into a standalone SVG.

    Rate summaries get a log-log excess plot with the fitted line;
    ordering summaries get grouped radius bars.  The byte stream is a
    pure function of the summary contents.
    """
    try:
        with open(summary_path) as fh:
            summary = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read summary: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"summary is not valid JSON: {exc}") from exc
    if not isinstance(summary, dict) or not summary:
        raise MissingField("summary is empty")
    (kind,) = _summary_fields(summary, ["experiment"])
    if out_path is None:
        stem = summary_path
        for suffix in (".summary.json", ".json"):
            if stem.endswith(suffix):
                stem = stem[: -len(suffix)]
                break
        out_path = stem + ".svg"

    import matplotlib
    matplotlib.rcParams["svg.hashsalt"] = "riskbound"
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    fig = Figure(figsize=(6.4, 4.4))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot()
    if kind == "rate":
        _plot_rate(ax, summary)
    elif kind == "ordering":
        _plot_ordering(ax, summary)
    else:
        raise ConfigError(f"no plot defined for {kind!r} summaries; "
                          "plot a rate or ordering summary")
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    return out_path


def _plot_rate(ax, summary: dict):
    ns, means, slope, degenerate = _summary_fields(
        summary, ["n_sweep", "means", "slope", "degenerate"])
    if degenerate or slope is None:
        raise ConfigError("rate summary is degenerate (zero means); "
                          "nothing to plot on log-log axes")
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    if np.any(means <= 0):
        raise ConfigError("rate summary has nonpositive means")
    ax.loglog(ns, means, "o-", label="mean excess risk")
    half = len(ns) // 2
    x = np.log(ns[half:])
    intercept = float(np.mean(np.log(means[half:])) - slope * np.mean(x))
    fit = np.exp(intercept) * ns[half:] ** slope
    label = f"fitted slope {slope:.3f}"
    ci = summary.get("slope_ci")
    if ci is not None:
        label += f" ± {ci:.3f}"
    ax.loglog(ns[half:], fit, "--", label=label)
    ax.set_xlabel("sample size n")
    ax.set_ylabel("mean excess risk")
    ax.set_title(f"{summary.get('scenario', 'scenario')} / "
                 f"{summary.get('method', 'erm')}")
    ax.legend()


def _plot_ordering(ax, summary: dict):
    bar, hat, tilde = _summary_fields(
        summary, ["delta_bar", "delta_hat_mean", "delta_tilde"])
    values = [bar, hat, tilde]
    labels = ["oracle radius", "empirical radius (mean)", "inflated radius"]
    ax.bar(range(3), values, color=["#4878d0", "#ee854a", "#6acc64"])
    ax.set_xticks(range(3))
    ax.set_xticklabels(labels)
    ax.set_ylabel("critical radius")
    ax.set_title(f"{summary.get('scenario', 'scenario')}, "
                 f"n={summary.get('n', '?')}: ordered "
                 f"{summary.get('freq_ordered', float('nan')):.0%} of trials")
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.4g}", ha="center", va="bottom")


def _resolve_threads(flag: Optional[int]) -> int:
    if flag is not None:
        value = flag
    else:
        env = os.environ.get("RISKBOUND_THREADS")
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"RISKBOUND_THREADS must be an integer, "
                              f"got {env!r}") from exc
    if value < 1:
        raise ConfigError("thread count must be at least 1")
    return value


def main(argv=None) -> int:
    """Entry point for the ``riskbound`` console script."""
    parser = argparse.ArgumentParser(
        prog="riskbound",
        description="Run seeded bound/selection experiments and plot them.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config")
    runp.add_argument("config", help="flat dotted-key JSON config file")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config's master seed")
    runp.add_argument("--out-dir", default=None,
                      help="directory for the CSV and summary artifacts")
    runp.add_argument("--threads", type=int, default=None,
                      help="worker threads (default: RISKBOUND_THREADS or 1); "
                           "orchestration itself stays single-threaded")
    plotp = sub.add_parser("plot", help="render a summary JSON to SVG")
    plotp.add_argument("summary", help="summary JSON written by `run`")
    plotp.add_argument("--out-dir", default=None,
                       help="directory for the SVG (default: beside the "
                            "summary)")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            threads = _resolve_threads(args.threads)
            run(args.config, seed=args.seed, out_dir=args.out_dir,
                threads=threads)
        else:
            out_path = None
            if args.out_dir is not None:
                os.makedirs(args.out_dir, exist_ok=True)
                stem = os.path.basename(args.summary)
                for suffix in (".summary.json", ".json"):
                    if stem.endswith(suffix):
                        stem = stem[: -len(suffix)]
                        break
                out_path = os.path.join(args.out_dir, stem + ".svg")
            path = emit_plot(args.summary, out_path)
            print(f"plot -> {path}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical or environment failure
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
