"""Scenario runner and preset registry.

`simulate` runs one scenario and writes record.csv, metrics.json and static
SVG plots of the output response and the control signal.  `tune` searches a
parameter box with the genetic algorithm and writes the best candidate as a
loadable preset file plus a fitness-history CSV.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path


from .config import Preset, build_preset, parse_kv, parse_search_space, preset_to_text
from .controller import NlsefConfig
from .errors import ConfigError, DivergenceError
from .metrics import OpiWeights, compute_metrics
from .odesim import NoiseSpec, RunRecord, run_closed_loop
from .tuner import GaConfig, evaluate, ga_optimize

PRESET_NAMES = ("s1-leso", "s1-inleso", "s2-leso", "s2-inleso", "s3-leso", "s3-inleso")


def preset(name: str) -> Preset:
    """Load one of the bundled presets by name."""
    if name not in PRESET_NAMES:
        raise ConfigError(
            f"unknown preset {name!r}; available presets: {', '.join(PRESET_NAMES)}")
    text = (resources.files("adrclab") / "presets" / f"{name}.cfg").read_text()
    return build_preset(parse_kv(text), name)


def load_config_file(path) -> Preset:
    """Load a user config file with the same schema as the bundled presets."""
    path = Path(path)
    return build_preset(parse_kv(path.read_text()), path.stem)


def _resolve_preset(args) -> Preset:
    if args.config:
        p = load_config_file(args.config)
    else:
        p = preset(args.preset)
    scenario = p.scenario
    if args.dt is not None or args.tf is not None:
        scenario = replace(scenario,
                           dt=args.dt if args.dt is not None else scenario.dt,
                           tf=args.tf if args.tf is not None else scenario.tf)
    if args.seed is not None and scenario.noise is not None:
        scenario = replace(scenario, noise=NoiseSpec(
            mean=scenario.noise.mean, variance=scenario.noise.variance,
            seed=args.seed))
    return replace(p, scenario=scenario)


def _write_plots(record: RunRecord, out: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(record.t, record.r, "k--", lw=1.0, label="reference")
    ax.plot(record.t, record.y, lw=1.2, label="output")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("output")
    ax.legend(loc="upper right")
    ax.grid(alpha=0.4)
    fig.tight_layout()
    fig.savefig(out / "output.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(record.t, record.u, lw=0.8, color="tab:red")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("control input [V]")
    ax.grid(alpha=0.4)
    fig.tight_layout()
    fig.savefig(out / "control.svg")
    plt.close(fig)


def simulate_command(args) -> int:
    try:
        p = _resolve_preset(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        record = run_closed_loop(p.scenario, p.plant, p.observer, p.controller,
                                 p.differentiator)
    except DivergenceError as exc:
        if exc.record is not None and len(exc.record) > 0:
            exc.record.to_csv(out / "record.csv")
        print(f"error: run {p.name!r} diverged at t={exc.time:.4f} s; "
              "partial record written", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    record.to_csv(out / "record.csv")
    report = compute_metrics(record, OpiWeights(), horizon=p.scenario.tf)
    with open(out / "metrics.json", "w") as fh:
        json.dump({"itae": report.itae, "isu": report.isu, "iau": report.iau,
                   "opi": report.opi}, fh, indent=2)
        fh.write("\n")
    for key, value in (("itae", report.itae), ("isu", report.isu),
                       ("iau", report.iau), ("opi", report.opi)):
        print(f"{key}={value:.10g}")
    if not args.no_plots:
        _write_plots(record, out)
    return 0


def tune_command(args) -> int:
    try:
        p = _resolve_preset(args)
        space = parse_search_space(Path(args.space).read_text())
        ga_cfg = GaConfig(population=args.population, seed=args.seed or 0,
                          evaluation_budget=args.budget)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    group = "nlsef" if isinstance(p.controller, NlsefConfig) else "inlsef"
    configs = {"plant": p.plant, "observer": p.observer, group: p.controller,
               "td": p.differentiator}
    weights = OpiWeights()
    scenario = replace(p.scenario, tf=min(p.scenario.tf, weights.tf))
    if args.tf is not None:
        scenario = replace(scenario, tf=args.tf)
    weights = replace(weights, tf=scenario.tf)

    def objective(candidate):
        return evaluate(candidate, scenario, space, configs, weights)

    try:
        best, best_f, history = ga_optimize(objective, space, ga_cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    from .tuner import apply_candidate
    tuned = apply_candidate(space, best, configs)
    best_preset = Preset(f"{p.name}-tuned", p.scenario, tuned["plant"],
                         tuned["observer"], tuned[group], tuned["td"])
    (out / "best.cfg").write_text(preset_to_text(best_preset))
    with open(out / "history.csv", "w", newline="\n") as fh:
        fh.write("generation,best_fitness\n")
        for gen, fit in enumerate(history):
            fh.write(f"{gen},{fit:.17g}\n")
    print(f"best fitness {best_f:.6g} after {len(history) - 1} generations")
    for (path, _, _), value in zip(space.entries, best):
        print(f"  {path} = {value:.6g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="adrclab",
        description="Closed-loop simulation and tuning for observer-based "
                    "active feedback linearization")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write results")
    _common_flags(sim)
    sim.set_defaults(func=simulate_command)

    tune = sub.add_parser("tune", help="GA search over a parameter box")
    _common_flags(tune)
    tune.add_argument("--space", required=True, help="search-space file: path = lo hi")
    tune.add_argument("--budget", type=int, default=5000,
                      help="evaluation budget (default 5000)")
    tune.add_argument("--population", type=int, default=50)
    tune.set_defaults(func=tune_command)

    args = parser.parse_args(argv)
    if not args.config and not args.preset:
        parser.error("one of --preset or --config is required")
    return args.func(args)


def _common_flags(cmd):
    cmd.add_argument("--preset", choices=PRESET_NAMES, help="bundled preset name")
    cmd.add_argument("--config", help="config file path (overrides --preset)")
    cmd.add_argument("--out", default="out", help="output directory")
    cmd.add_argument("--seed", type=int, default=None, help="noise seed override")
    cmd.add_argument("--dt", type=float, default=None, help="integration step [s]")
    cmd.add_argument("--tf", type=float, default=None, help="horizon override [s]")
    cmd.add_argument("--no-plots", action="store_true", help="skip SVG plots")


if __name__ == "__main__":
    sys.exit(main())
