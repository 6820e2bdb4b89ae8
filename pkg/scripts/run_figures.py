#!/usr/bin/env python3
"""
Figure runner: every grid config in configs/ through the maxlin CLI.

Each config gets its own output directory with grid.csv, trials.csv and
the SVG figures; a summary of boundaries and timings goes to summary.json.

Usage:
    python scripts/run_figures.py --workers 8
    python scripts/run_figures.py --only fix_k noise_sweep --trials 10
    python scripts/run_figures.py --out-dir results/quick --trials 5 --master-seed 3
"""

import argparse
import json
import sys
import time
from multiprocessing import cpu_count
from pathlib import Path

# Add project root for imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from maxlin.config import GridConfig, GridMode  # noqa: E402
from maxlin.main import main as maxlin_main  # noqa: E402


def build_argv(config_path: Path, mode: GridMode, out_dir: Path, args: argparse.Namespace) -> list:
    command = "noise-sweep" if mode is GridMode.NOISE_SWEEP else "phase"
    argv = [command, "--config", str(config_path), "--out-dir", str(out_dir),
            "--workers", str(args.workers)]
    if args.trials is not None:
        argv += ["--trials", str(args.trials)]
    if args.master_seed is not None:
        argv += ["--master-seed", str(args.master_seed)]
    if args.progress:
        argv.append("--progress")
    return argv


def main():
    parser = argparse.ArgumentParser(description="Run every grid config and render its figures")
    parser.add_argument("--configs", default=str(project_root / "configs"), help="Config directory")
    parser.add_argument("--only", nargs="+", default=None, help="Config names (without .json) to run")
    parser.add_argument("--out-dir", default="results", help="Output root")
    parser.add_argument("--workers", type=int, default=max(1, cpu_count() - 2), help="Worker processes")
    parser.add_argument("--trials", type=int, default=None, help="Override trials per cell")
    parser.add_argument("--master-seed", type=int, default=None, help="Override master seed")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")
    args = parser.parse_args()

    paths = sorted(Path(args.configs).glob("*.json"))
    if args.only:
        paths = [p for p in paths if p.stem in set(args.only)]
    if not paths:
        print(f"  ERROR: no configs found in {args.configs}")
        return 2

    out_root = Path(args.out_dir)
    summary = {}
    failed = 0
    for path in paths:
        config = GridConfig.from_json(path)
        out_dir = out_root / path.stem
        print(f"\n>> {path.stem}: {config.mode.value}, {len(config.n_values)} x {len(config.axis_values)} cells")
        started = time.time()
        code = maxlin_main(build_argv(path, config.mode, out_dir, args))
        elapsed = time.time() - started
        entry = {"exit_code": code, "elapsed_s": round(elapsed, 1), "out_dir": str(out_dir)}
        boundaries = out_dir / "boundaries.json"
        if code == 0 and boundaries.exists():
            entry["boundaries"] = json.loads(boundaries.read_text(encoding="utf-8"))
        summary[path.stem] = entry
        failed += code != 0

    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
    print(f"\n  {len(paths) - failed}/{len(paths)} configs finished, summary in {out_root / 'summary.json'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
