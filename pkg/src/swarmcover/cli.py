"""Command line: ``swarmcover run | plot | compare``.

Exit status is 0 on success, 2 for an invalid scenario (parse, schema or
invariant failure) and 3 for I/O errors. ``plot`` also exits 2 when the
run directory is missing or malformed.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, artifacts, plots
from .errors import MalformedLog, MissingRun, ScenarioInvalid
from .geometry import CIRCLE, Obstacle
from .scenario_io import load_scenario, scenario_to_dict
from .sim import FILTER_MODES, Scenario, run

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

COMPARE_FILE = "compare.json"
COMPARE_SVG = "compare.svg"


def parse_scenario(path) -> Scenario:
    return load_scenario(path)


def _thread_cap(default: int = 2) -> int:
    raw = os.environ.get("SWARMCOVER_THREADS")
    if raw is None:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _apply_overrides(sc: Scenario, filter_mode=None, steps=None, seed=None) -> tuple[Scenario, dict]:
    sc = copy.deepcopy(sc)
    overrides = {}
    if filter_mode is not None:
        overrides["filter"] = {"cli": filter_mode, "file": sc.filter_mode}
        sc.filter_mode = filter_mode
    if steps is not None:
        overrides["steps"] = {"cli": steps, "file": sc.steps}
        sc.steps = steps
    if seed is not None:
        overrides["seed"] = {"cli": seed, "file": sc.seed}
        sc.seed = seed
    return sc, overrides


def execute(sc: Scenario, out_dir, overrides: dict | None = None):
    """Simulate, audit and write the run directory. Returns the metrics."""
    log, metrics = run(sc)
    provenance = {
        "version": __version__,
        "scenario": scenario_to_dict(sc),
        "overrides": overrides or {},
    }
    artifacts.write_run(out_dir, log, metrics, sc.field, provenance)
    return log, metrics


def _report(exc: Exception) -> None:
    print(f"swarmcover: {type(exc).__name__}: {exc}", file=sys.stderr)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        sc = parse_scenario(args.scenario)
        sc, overrides = _apply_overrides(sc, args.filter, args.steps, args.seed)
        _, metrics = execute(sc, args.out, overrides)
    except ScenarioInvalid as exc:
        _report(exc)
        return EXIT_INVALID
    except OSError as exc:
        _report(exc)
        return EXIT_IO
    print(artifacts.to_json(metrics.as_dict()), end="")
    return EXIT_OK


def _obstacles_from(doc: dict) -> list[Obstacle]:
    obs = []
    for o in doc["provenance"]["scenario"].get("obstacles", []):
        if o["type"] == CIRCLE:
            obs.append(Obstacle.circle(o["center"], o["radius"], id=o["id"]))
        else:
            obs.append(Obstacle.rect(o["center"], o["length"], o["width"], id=o["id"]))
    return obs


def render_run(run_dir) -> str:
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise MissingRun(f"{run_dir} is not a directory")
    logged = artifacts.read_trajectories(run_dir / artifacts.TRAJ_FILE)
    doc = artifacts.read_metrics(run_dir / artifacts.METRICS_FILE)
    points, w0, _ = artifacts.read_field(run_dir / artifacts.FIELD_FILE)
    try:
        obstacles = _obstacles_from(doc)
    except (KeyError, TypeError) as exc:
        raise MalformedLog(f"{run_dir}: provenance lacks obstacle data ({exc})") from exc
    return plots.coverage_svg(obstacles, points, w0, logged.positions())


def render_safeset(run_dir=None, obstacle: int = 0) -> str:
    """Safe-set slice; with a run directory, uses that run's obstacle and K_v."""
    if run_dir is None:
        return plots.safeset_svg()
    doc = artifacts.read_metrics(Path(run_dir) / artifacts.METRICS_FILE)
    try:
        scen = doc["provenance"]["scenario"]
        o = scen["obstacles"][obstacle]
        K_v = scen["safety"]["K_v"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedLog(f"{run_dir}: no obstacle {obstacle} in provenance") from exc
    # slice along the +x ray from the center
    r = o["radius"] if o["type"] == CIRCLE else o["length"] / 2
    return plots.safeset_svg(r=r, K_v=K_v, y_max=max(5.0, 2.5 * r))


def cmd_plot(args: argparse.Namespace) -> int:
    try:
        if args.mode == "safeset":
            svg = render_safeset(args.run, args.obstacle)
        else:
            if args.run is None:
                raise MissingRun("--run is required for trajectory plots")
            svg = render_run(args.run)
    except (MissingRun, MalformedLog) as exc:
        _report(exc)
        return EXIT_INVALID
    try:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        artifacts.write_text(out, svg)
    except OSError as exc:
        _report(exc)
        return EXIT_IO
    return EXIT_OK


def compare(sc: Scenario, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for mode in ("cbf", "apf"):
        variant, overrides = _apply_overrides(sc, filter_mode=mode)
        jobs.append((mode, variant, overrides))
    with ThreadPoolExecutor(max_workers=min(2, _thread_cap())) as pool:
        futures = [pool.submit(execute, v, out_dir / mode, o) for mode, v, o in jobs]
        results = [f.result() for f in futures]
    (log_c, m_c), (log_a, m_a) = results
    doc = {
        "wasserstein_cbf": m_c.wasserstein_coverage,
        "wasserstein_apf": m_a.wasserstein_coverage,
        "min_dist_cbf": m_c.min_inter_agent_distance,
        "min_dist_apf": m_a.min_inter_agent_distance,
        "obstacle_violations_cbf": m_c.obstacle_violations,
        "obstacle_violations_apf": m_a.obstacle_violations,
        "minimal_violation_steps_cbf": m_c.minimal_violation_steps,
    }
    artifacts.write_text(out_dir / COMPARE_FILE, artifacts.to_json(doc))
    panels = [
        (f"cbf  W2={m_c.wasserstein_coverage:.2f} m", sc.obstacles, sc.field.points, sc.field.weights, log_c.positions()),
        (f"apf  W2={m_a.wasserstein_coverage:.2f} m", sc.obstacles, sc.field.points, sc.field.weights, log_a.positions()),
    ]
    artifacts.write_text(out_dir / COMPARE_SVG, plots.compare_svg(panels))
    return doc


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        sc = parse_scenario(args.scenario)
        doc = compare(sc, args.out)
    except ScenarioInvalid as exc:
        _report(exc)
        return EXIT_INVALID
    except OSError as exc:
        _report(exc)
        return EXIT_IO
    print(artifacts.to_json(doc), end="")
    return EXIT_OK


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmcover", description="Multi-agent coverage with safety filters.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write a run directory")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--filter", choices=FILTER_MODES, help="override the file's safety mode")
    p.add_argument("--steps", type=_nonneg_int, help="override the episode length")
    p.add_argument("--seed", type=int, help="override the recorded seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render a run directory or a safe-set slice to SVG")
    p.add_argument("--run", help="run directory written by 'run'")
    p.add_argument("--out", required=True, help="SVG file to write")
    p.add_argument("--mode", choices=("paths", "safeset"), default="paths")
    p.add_argument("--obstacle", type=_nonneg_int, default=0, help="obstacle index for --mode safeset")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("compare", help="run a scenario under cbf and apf side by side")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
