"""Command-line benchmark harness.

Loads a MovingAI map/scenario pair, runs the Cartesian product of
(mode x t_max x seed) episodes, and writes per-episode records plus
per-(mode, t_max) aggregates as JSON or CSV.  Optionally emits a
factorization table (group count and largest-group ratio at the episode's
half-makespan step).

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal defect.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .controller import ControllerConfig, FleetController, MODES
from .grid import MapFormatError, load_map, load_scenario
from .simulate import MovementDefect, run_episode

SCHEMA_VERSION = 1


class UsageError(ValueError):
    pass


@dataclass
class RunSpec:
    map_path: str
    scen_path: str
    agents: int
    modes: list[str] = field(default_factory=lambda: ["daccbs"])
    t_max_ms: list[float] = field(default_factory=lambda: [100.0])
    h_max: int = 128
    slack_threshold: int = 1
    backup: str = "lacam-ref"
    seeds: list[int] = field(default_factory=lambda: [0])
    serial: bool = False
    out: str = "results.json"
    fmt: str = "json"
    step_cap: int | None = None
    factorization_report: str | None = None

    def validate(self) -> None:
        if self.agents < 0:
            raise UsageError("--agents must be >= 0")
        if not self.t_max_ms or not self.seeds:
            raise UsageError("at least one --tmax-ms and one --seed are required")
        for mode in self.modes:
            if mode not in MODES:
                raise UsageError(f"unknown mode {mode!r}")
        if self.fmt not in ("json", "csv"):
            raise UsageError(f"unknown format {self.fmt!r}")


def _episode_record(spec: RunSpec, mode: str, t_max: float, seed: int, instance) -> dict:
    config = ControllerConfig(
        h_max=spec.h_max,
        t_max_ms=t_max,
        slack_threshold=spec.slack_threshold,
        backup=spec.backup,
        mode=mode,
        seed=seed,
        parallel_groups=not spec.serial,
    )
    controller = FleetController(instance, config)
    result = run_episode(instance, controller, step_cap=spec.step_cap)
    record = {"mode": mode, "t_max_ms": t_max, "seed": seed}
    record.update(result.to_dict())
    return record


def run_suite(spec: RunSpec) -> dict:
    """Run every episode of the RunSpec and return the suite document."""
    spec.validate()
    graph = load_map(spec.map_path)
    instance = load_scenario(spec.scen_path, graph, spec.agents)

    jobs = [
        (mode, t_max, seed)
        for mode in spec.modes
        for t_max in spec.t_max_ms
        for seed in spec.seeds
    ]
    workers = int(os.environ.get("DACCBS_WORKERS", "0")) or (os.cpu_count() or 1)
    if spec.serial or workers <= 1 or len(jobs) <= 1:
        episodes = [_episode_record(spec, m, t, s, instance) for m, t, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            episodes = list(
                pool.map(lambda j: _episode_record(spec, *j, instance), jobs)
            )

    aggregates = []
    for mode in spec.modes:
        for t_max in spec.t_max_ms:
            increments = [
                ep["soc_increment"]
                for ep in episodes
                if ep["mode"] == mode
                and ep["t_max_ms"] == t_max
                and ep["soc_increment"] is not None
            ]
            terminated = len(increments)
            total = len(spec.seeds)
            mean = sum(increments) / terminated if terminated else None
            std = (
                math.sqrt(sum((x - mean) ** 2 for x in increments) / terminated)
                if terminated
                else None
            )
            aggregates.append(
                {
                    "mode": mode,
                    "t_max_ms": t_max,
                    "episodes": total,
                    "terminated": terminated,
                    "mean_soc_increment": mean,
                    "std_soc_increment": std,
                }
            )

    return {
        "schema_version": SCHEMA_VERSION,
        "spec": {
            "map": spec.map_path,
            "scen": spec.scen_path,
            "agents": spec.agents,
            "modes": spec.modes,
            "t_max_ms": spec.t_max_ms,
            "h_max": spec.h_max,
            "slack_threshold": spec.slack_threshold,
            "backup": spec.backup,
            "seeds": spec.seeds,
            "serial": spec.serial,
            "step_cap": spec.step_cap,
        },
        "episodes": episodes,
        "aggregates": aggregates,
    }


def report_factorization(suite: dict) -> list[dict]:
    """Per-episode (N, K, max group size / N) at the half-makespan step.

    Non-terminated episodes are excluded with a note.
    """
    rows = []
    n = suite["spec"]["agents"]
    for ep in suite["episodes"]:
        if ep["mode"] != "daccbs":
            continue
        if ep["termination"] != "all-at-goals":
            rows.append(
                {"seed": ep["seed"], "t_max_ms": ep["t_max_ms"], "excluded": "not terminated"}
            )
            continue
        half = math.ceil(ep["makespan"] / 2)
        groups = groups_at_step(ep, half)
        k = len(groups)
        ratio = max(groups, default=n or 1) / n if n else 0.0
        rows.append(
            {
                "seed": ep["seed"],
                "t_max_ms": ep["t_max_ms"],
                "n_agents": n,
                "step": half,
                "k_groups": k,
                "max_group_ratio": ratio,
            }
        )
    return rows


def groups_at_step(episode: dict, step: int) -> list[int]:
    """Group sizes in effect at `step`, replayed from the factorization trace."""
    for telem in episode.get("telemetry", []):
        if telem.get("t") == step and "groups" in telem:
            return [g["size"] for g in telem["groups"]]
    # Fall back to the last telemetry entry at or before the step.
    best = None
    for telem in episode.get("telemetry", []):
        if "groups" in telem and telem.get("t", 0) <= step:
            best = telem
    if best is not None:
        return [g["size"] for g in best["groups"]]
    return []


def write_output(suite: dict, path: str, fmt: str) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        out.write_text(json.dumps(suite, indent=2) + "\n")
        return
    # CSV: one row per episode; structured traces are JSON-encoded cells so
    # both encodings carry identical values.
    fields = [
        "mode",
        "t_max_ms",
        "seed",
        "soc",
        "soc_increment",
        "makespan",
        "termination",
        "initial_budget",
        "gamma_sum",
        "budget_trace",
        "factorization_trace",
    ]
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for ep in suite["episodes"]:
            row = {k: ep.get(k) for k in fields}
            row["budget_trace"] = json.dumps(ep.get("budget_trace", []))
            row["factorization_trace"] = json.dumps(ep.get("factorization_trace", []))
            writer.writerow(row)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daccbs-bench",
        description="Closed-loop MAPF benchmark harness.",
    )
    parser.add_argument("--map", required=True, help="MovingAI .map file")
    parser.add_argument("--scen", required=True, help="MovingAI .scen file")
    parser.add_argument("--agents", type=int, required=True, help="number of agents")
    parser.add_argument(
        "--mode", action="append", choices=MODES, help="controller mode (repeatable)"
    )
    parser.add_argument(
        "--tmax-ms", action="append", type=float, help="per-step budget in ms (repeatable)"
    )
    parser.add_argument("--hmax", type=int, default=128, help="nominal horizon")
    parser.add_argument("--slack-threshold", type=int, default=1)
    parser.add_argument("--backup", default="lacam-ref")
    parser.add_argument("--seed", action="append", type=int, help="seed (repeatable)")
    parser.add_argument("--serial", action="store_true", help="deterministic serial mode")
    parser.add_argument("--step-cap", type=int, default=None)
    parser.add_argument("--out", default="results.json")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument(
        "--factorization-report", default=None, help="also write a factorization table here"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    spec = RunSpec(
        map_path=args.map,
        scen_path=args.scen,
        agents=args.agents,
        modes=args.mode or ["daccbs"],
        t_max_ms=args.tmax_ms or [100.0],
        h_max=args.hmax,
        slack_threshold=args.slack_threshold,
        backup=args.backup,
        seeds=args.seed or [0],
        serial=args.serial,
        out=args.out,
        fmt=args.format,
        step_cap=args.step_cap,
        factorization_report=args.factorization_report,
    )
    try:
        spec.validate()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        suite = run_suite(spec)
    except (MapFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (MovementDefect, AssertionError) as exc:
        print(f"internal defect: {exc}", file=sys.stderr)
        return 3
    write_output(suite, spec.out, spec.fmt)
    if spec.factorization_report:
        rows = report_factorization(suite)
        Path(spec.factorization_report).write_text(json.dumps(rows, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
