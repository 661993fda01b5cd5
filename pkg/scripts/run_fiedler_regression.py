from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor, as_completed
import hashlib
import json
import os
from pathlib import Path
import sys
import traceback

REPO_ROOT = Path(__file__).resolve().parents[1]
SRC_ROOT = REPO_ROOT / "src"
if str(SRC_ROOT) not in sys.path:
    sys.path.insert(0, str(SRC_ROOT))

import numpy as np

from inertiaforge.dynamics import FaultScenario
from inertiaforge.grid import synth_two_cluster
from inertiaforge.placement import SweepSettings, run_sweeps, severity_correlation, sweep_inertia

PROCEDURES = ("fiedler", "uniform", "non_fiedler")


def _cache_key(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _correlation_case(seed: int, delta_p: float) -> dict:
    grid = synth_two_cluster(16, 1.0, 0.05, seed, band=2)
    faults = [FaultScenario(bus=b, delta_p=delta_p) for b in grid.generator_ids()]
    result = sweep_inertia(grid, "uniform", [grid.system_inertia()], faults, seed)
    return {"spearman": severity_correlation(result.points), "faults": len(faults)}


def _placement_case(seed: int, delta_p: float) -> dict:
    grid = synth_two_cluster(8, 4.0, 0.05, seed, second_cluster_size=40, band=4)
    faults = [FaultScenario(bus=b, delta_p=delta_p) for b in grid.generator_ids() if grid.bus(b).region == "A"]
    target = 0.6 * grid.system_inertia()
    results = run_sweeps(grid, PROCEDURES, [target], faults, [seed], SweepSettings())
    return {r.procedure: float(np.mean([p.magnitude for p in r.points])) for r in results}


def _run_seed_task(seed: int, delta_p: float, cache_dir: Path | None) -> dict:
    payload = {"seed": seed, "delta_p": delta_p, "version": 1}
    cache_path = None
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        cache_path = cache_dir / f"{_cache_key(payload)}.json"
        if cache_path.exists():
            try:
                cached = json.loads(cache_path.read_text(encoding="utf-8"))
                cached["from_cache"] = True
                return cached
            except Exception:
                pass
    try:
        correlation = _correlation_case(seed, delta_p)
        placement = _placement_case(seed, delta_p)
        ordered = placement["fiedler"] > placement["uniform"] > placement["non_fiedler"]
        result = {
            "seed": seed,
            "success": correlation["spearman"] >= 0.8 and ordered,
            "spearman": correlation["spearman"],
            "placement": placement,
            "ordered": ordered,
            "from_cache": False,
        }
        if cache_path is not None:
            cache_path.write_text(json.dumps(result), encoding="utf-8")
        return result
    except Exception as exc:
        return {"seed": seed, "success": False, "error": str(exc), "trace": traceback.format_exc()}


def run_regression(seeds: list[int], delta_p: float, output_dir: Path, jobs: int, use_cache: bool) -> dict:
    output_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = output_dir / ".cache" if use_cache else None
    results: list[dict] = []
    if jobs <= 1:
        for seed in seeds:
            results.append(_run_seed_task(seed, delta_p, cache_dir))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            future_map = {pool.submit(_run_seed_task, seed, delta_p, cache_dir): seed for seed in seeds}
            for fut in as_completed(future_map):
                results.append(fut.result())
    results.sort(key=lambda r: r["seed"])

    ok = [r for r in results if "placement" in r]
    means = {p: float(np.mean([r["placement"][p] for r in ok])) if ok else None for p in PROCEDURES}
    success_count = sum(1 for r in results if r.get("success"))
    return {
        "total": len(results),
        "success": success_count,
        "failed": len(results) - success_count,
        "cached": sum(1 for r in results if r.get("from_cache")),
        "mean_magnitude": means,
        "delta_p": delta_p,
        "jobs": jobs,
        "results": results,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description="Check Fiedler-severity correlation and placement ordering on barbell grids.")
    parser.add_argument("--seeds", type=int, nargs="+", default=list(range(1, 21)))
    parser.add_argument("--delta-p", type=float, default=0.02)
    parser.add_argument("--output", type=Path, default=Path("tests/artifacts/fiedler_regression"))
    parser.add_argument("--jobs", type=int, default=max(1, min(4, (os.cpu_count() or 2) // 2)))
    parser.add_argument("--no-cache", action="store_true")
    args = parser.parse_args()

    report = run_regression(args.seeds, args.delta_p, args.output, args.jobs, not args.no_cache)
    summary_path = args.output / "summary.json"
    summary_path.write_text(json.dumps(report, indent=2), encoding="utf-8")

    print(f"Total: {report['total']}  Success: {report['success']}  Failed: {report['failed']}")
    print(f"Mean M_b: {report['mean_magnitude']}")
    print(f"Cached: {report['cached']} / {report['total']}  Jobs: {report['jobs']}")
    print(f"Summary: {summary_path}")
    return 0 if report["failed"] == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
