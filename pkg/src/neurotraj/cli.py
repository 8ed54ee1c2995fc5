"""Command-line entry point.

Subcommands:
    generate  write a synthetic dataset (CSV + manifest)
    run       execute a preset or config-file experiment
    analyze   summarize one experiment or compare two
    presets   list the 13 built-in experiment definitions

Exit codes: 0 success, 2 usage, 3 I/O failure, 4 engine failure,
5 malformed records. NEUROTRAJ_SEED overrides the run base seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import hypervolume, kde_density, spearman
from .errors import (
    ConfigurationError,
    ContractError,
    MalformedRecordsError,
    NeurotrajError,
    UndefinedCorrelationError,
)
from .experiment import (
    ExperimentConfig,
    PRESETS,
    RunRecord,
    load_records,
    preset_config,
    run_experiment,
    scale_config,
    summarize,
)
from .trajectory import ScenarioConfig, generate_scenario, save_dataset, window_and_split

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ENGINE = 4
EXIT_MALFORMED = 5

ENV_SEED = "NEUROTRAJ_SEED"


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[Path] = field(default_factory=list)


def _parse_ratio(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigurationError(f"ratio needs three comma-separated shares, got {text!r}")
    return tuple(parts)


def cmd_generate(args: argparse.Namespace) -> CommandOutcome:
    try:
        ratio = _parse_ratio(args.ratios)
        path = generate_scenario(ScenarioConfig(
            duration_s=args.duration,
            lane_change_rate=args.lane_change_rate,
            seed=args.seed,
        ))
        dataset = window_and_split(path, tau=args.tau, ratio=ratio, seed=args.seed)
    except NeurotrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_USAGE)
    try:
        written = save_dataset(dataset, args.out)
    except OSError as exc:
        print(f"error: cannot write dataset: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_IO)
    for p in written.values():
        print(p)
    return CommandOutcome(EXIT_OK, list(written.values()))


def _resolve_run_config(args: argparse.Namespace) -> ExperimentConfig:
    env_seed = os.environ.get(ENV_SEED)
    seed = int(env_seed) if env_seed is not None else args.seed
    if args.preset:
        return preset_config(args.preset, scale=args.scale,
                             base_seed=1 if seed is None else seed)
    with open(args.config, encoding="utf-8") as fh:
        cfg = ExperimentConfig.from_dict(json.load(fh))
    if seed is not None and seed != cfg.base_seed:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "base_seed": seed})
    return scale_config(cfg, args.scale)


def cmd_run(args: argparse.Namespace) -> CommandOutcome:
    try:
        cfg = _resolve_run_config(args)
    except (NeurotrajError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_USAGE)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_IO)

    out_dir = Path(args.out)
    try:
        records = run_experiment(cfg, out_dir=out_dir, jobs=args.jobs)
    except NeurotrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_USAGE)
    except OSError as exc:
        print(f"error: cannot write experiment outputs: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_IO)
    failed = [rec for rec in records if rec.error]
    artifacts = sorted(out_dir.glob("*"))
    for p in artifacts:
        print(p)
    if failed:
        for rec in failed:
            print(f"error: run {rec.run_index} (seed {rec.run_seed}) failed: {rec.error}",
                  file=sys.stderr)
        return CommandOutcome(EXIT_ENGINE, artifacts)
    return CommandOutcome(EXIT_OK, artifacts)


def _generation_fronts(cfg: ExperimentConfig, rec: RunRecord) -> list[list[tuple[float, ...]]]:
    """Per-generation non-dominated front values from persisted snapshots."""
    fronts = []
    for snap in rec.snapshots:
        if cfg.algorithm == "nsga2":
            pts = [tuple(ind["objectives"]) for ind in snap["population"] if ind["rank"] == 0]
        else:
            pts = [tuple(ind["objectives"]) for ind in snap["archive"]]
        fronts.append(pts)
    return fronts


def _final_front_values(records: list[RunRecord]) -> list[list[tuple[float, ...]]]:
    return [[e.objectives for e in rec.final_front] for rec in records]


def cmd_analyze(args: argparse.Namespace) -> CommandOutcome:
    primary_dir = Path(args.dirs[0])
    against_dir = Path(args.dirs[1]) if len(args.dirs) > 1 else None
    try:
        cfg, records = load_records(primary_dir)
        against_cfg = against_records = None
        if against_dir is not None:
            against_cfg, against_records = load_records(against_dir)
            if [o.token for o in against_cfg.objective_ids] != [o.token for o in cfg.objective_ids]:
                raise MalformedRecordsError(
                    "experiments optimize different objectives and cannot be compared")
    except MalformedRecordsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_MALFORMED)

    out_dir = Path(args.out) if args.out else primary_dir
    artifacts: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)

        # Shared hypervolume reference: componentwise max over every front
        # involved in the comparison, plus a 10% margin.
        all_points: list[tuple[float, ...]] = []
        gen_fronts = {"primary": [(rec, _generation_fronts(cfg, rec)) for rec in records]}
        if against_records is not None:
            gen_fronts["against"] = [(rec, _generation_fronts(against_cfg, rec))
                                     for rec in against_records]
        for group in gen_fronts.values():
            for _, fronts in group:
                for front in fronts:
                    all_points.extend(front)
        if not all_points:
            raise MalformedRecordsError("no front points found in the experiment records")
        m = len(cfg.objective_ids)
        ref = tuple(max(1e-9, 1.1 * max(p[j] for p in all_points)) for j in range(m))

        for label, group in gen_fronts.items():
            name = "hypervolume.csv" if label == "primary" else "hypervolume_against.csv"
            hv_path = out_dir / name
            with open(hv_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["generation", "run", "value"])
                for rec, fronts in group:
                    for gen, front in enumerate(fronts, start=1):
                        writer.writerow([gen, rec.run_index, repr(hypervolume(front, ref))])
            artifacts.append(hv_path)

        # Per-run KDE over final-front objective values, evaluated at the
        # front points themselves (density estimated independently per run).
        kde_path = out_dir / "kde_front.csv"
        tokens = [oid.token for oid in cfg.objective_ids]
        with open(kde_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run"] + tokens + ["density"])
            for rec, front_values in zip(records, _final_front_values(records)):
                if len(front_values) < 2:
                    continue
                try:
                    dens = kde_density(front_values, front_values)
                except NeurotrajError:
                    continue
                for point, d in zip(front_values, dens):
                    writer.writerow([rec.run_index] + [repr(v) for v in point] + [repr(float(d))])
        artifacts.append(kde_path)

        # Pairwise rank correlations over pooled final-front values.
        pooled = [p for front in _final_front_values(records) for p in front]
        correlations = []
        for i in range(m):
            for j in range(i + 1, m):
                entry = {"pair": [tokens[i], tokens[j]], "n": len(pooled)}
                try:
                    res = spearman([p[i] for p in pooled], [p[j] for p in pooled])
                    entry.update(res.to_dict())
                except (UndefinedCorrelationError, ContractError) as exc:
                    entry.update({"coefficient": None, "p_value": None, "note": str(exc)})
                correlations.append(entry)
        corr_path = out_dir / "correlations.json"
        with open(corr_path, "w", encoding="utf-8") as fh:
            json.dump(correlations, fh, indent=2)
            fh.write("\n")
        artifacts.append(corr_path)

        summary = summarize(records, against=against_records, alpha=args.alpha,
                            comparisons=args.comparisons)
        doc = summary.to_dict()
        doc["hypervolume_reference"] = list(ref)
        if against_dir is not None:
            doc["against"] = str(against_dir)
        summary_path = out_dir / "summary.json"
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        artifacts.append(summary_path)
    except NeurotrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_MALFORMED)
    except OSError as exc:
        print(f"error: cannot write analysis outputs: {exc}", file=sys.stderr)
        return CommandOutcome(EXIT_IO)

    for p in artifacts:
        print(p)
    return CommandOutcome(EXIT_OK, artifacts)


def cmd_presets(args: argparse.Namespace) -> CommandOutcome:
    rows = []
    for name, entry in PRESETS.items():
        rows.append((name, f"batch {entry['batch']}", entry["algorithm"],
                     "+".join(entry["objectives"]),
                     f"pop {entry['population']}", f"{entry['generations']} gens",
                     f"{entry['runs']} runs"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return CommandOutcome(EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurotraj",
        description="Multi-objective evolutionary search over trajectory-prediction "
                    "hyperparameters on synthetic highway data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset")
    gen.add_argument("--duration", type=float, default=600.0, help="scenario length in seconds")
    gen.add_argument("--lane-change-rate", type=float, default=0.02,
                     help="lane-change events per second")
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--tau", type=int, default=8, help="window length in samples")
    gen.add_argument("--ratios", default="0.6,0.2,0.2", help="train,val,test shares")
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="execute an experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="one of exp1..exp13")
    src.add_argument("--config", help="path to a config.json")
    run.add_argument("--scale", type=float, default=1.0,
                     help="shrink population/generations/runs proportionally")
    run.add_argument("--seed", type=int, default=None,
                     help="base seed for the independent runs (default 1 for presets)")
    run.add_argument("--jobs", type=int, default=1, help="parallel runs")
    run.add_argument("--out", required=True, help="experiment directory")
    run.set_defaults(func=cmd_run)

    ana = sub.add_parser("analyze", help="summarize one experiment or compare two")
    ana.add_argument("dirs", nargs="+", help="one or two experiment directories")
    ana.add_argument("--alpha", type=float, default=0.05)
    ana.add_argument("--comparisons", type=int, default=2,
                     help="comparison count for the Bonferroni correction")
    ana.add_argument("--out", help="write analysis files here instead of the first directory")
    ana.set_defaults(func=cmd_analyze)

    pre = sub.add_parser("presets", help="list the built-in experiment definitions")
    pre.set_defaults(func=cmd_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "command", None) == "analyze" and len(args.dirs) > 2:
        print("error: analyze takes one or two experiment directories", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args).exit_code


def entrypoint() -> None:  # console-script shim
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
