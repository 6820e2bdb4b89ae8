"""
maxlin command line.

Usage:
    python -m maxlin synth --n 500 --p 5 --k 3 --sigma 0.1 --seed 7 --out-dir run/
    python -m maxlin fit --method ce --data run/data.csv --init run/init.csv --eta oracle --out run/beta_hat.csv
    python -m maxlin phase --config configs/fix_k.json --workers 4 --out-dir results/fix_k
    python -m maxlin noise-sweep --config configs/noise_sweep.json --out-dir results/noise_sweep
    python -m maxlin theory --truth run/truth.csv --init run/init.csv --samples 1000000 --out run/theory.json
    python -m maxlin render --grid results/fix_k/grid.csv --out results/fix_k/heatmap.svg
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from maxlin.config import AppConfig, ConfigError, GridConfig, GridMode, Method, SynthConfig
from maxlin.core.model import DimensionError, normalized_error
from maxlin.core.synth import compute_eta, make_instance
from maxlin.estimators.anchored import fit_ce
from maxlin.estimators.lspa import fit_lspa
from maxlin.theory.diagnostics import build_theory_report, error_bound_rhs
from maxlin.utils.io import (FormatError, read_dataset, read_param_blocks, write_dataset,
                             write_grid_csv, write_json, write_param_blocks)
from maxlin.utils.logger import setup_logger

logger = logging.getLogger("maxlin")

EXIT_OK = 0
EXIT_USAGE = 2


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="maxlin",
        description="maxlin: anchored max-linear regression, LSPA baseline and phase-transition experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Log level (DEBUG/INFO/WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Generate one synthetic instance")
    p.add_argument("--config", default=None, help="JSON file with SynthConfig fields")
    p.add_argument("--n", type=int, default=None, help="Sample size")
    p.add_argument("--p", type=int, default=None, help="Dimension")
    p.add_argument("--k", type=int, default=None, help="Number of linear components")
    p.add_argument("--truth", default=None, choices=["basis", "gaussian"], help="Ground-truth kind")
    p.add_argument("--sigma", type=float, default=None, help="Noise standard deviation")
    p.add_argument("--scale", type=float, default=None, help="Initial-estimate perturbation (default 1/(1000kp))")
    p.add_argument("--seed", type=int, default=None, help="Instance seed")
    p.add_argument("--constant-column", action="store_true", default=False,
                   help="Fix the last regressor coordinate to 1")
    p.add_argument("--out-dir", required=True, help="Directory for data.csv, truth.csv, init.csv, instance.json")

    p = sub.add_parser("fit", help="Fit CE or LSPA to a dataset")
    p.add_argument("--method", default="ce", choices=["ce", "lspa"], help="Estimator")
    p.add_argument("--data", required=True, help="Dataset CSV (x1..xp,y[,w])")
    p.add_argument("--init", required=True, help="Initial estimate CSV (component,coord1..coordp)")
    p.add_argument("--eta", default="oracle",
                   help="Residual budget for CE, or 'oracle' to compute it from the w column")
    p.add_argument("--truth", default=None, help="Ground truth CSV; reports the normalized error")
    p.add_argument("--max-iter", type=int, default=200, help="LSPA iteration cap")
    p.add_argument("--out", required=True, help="Output CSV for the estimate")
    p.add_argument("--diagnostics", default=None, help="Optional JSON with fit diagnostics")

    for name, help_text in (("phase", "Run a phase-transition grid"),
                            ("noise-sweep", "Run a noise-sweep grid")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON grid config")
        p.add_argument("--trials", type=int, default=None, help="Trials per cell (overrides config)")
        p.add_argument("--master-seed", type=int, default=None, help="Master seed (overrides config)")
        p.add_argument("--threshold", type=float, default=None, help="Recovery threshold (overrides config)")
        p.add_argument("--methods", nargs="+", default=None, choices=["ce", "lspa"],
                       help="Methods to run (overrides config)")
        p.add_argument("--workers", type=int, default=None, help="Worker processes (default MAXLIN_WORKERS)")
        p.add_argument("--out-dir", default=None, help="Output directory (default MAXLIN_OUTPUT_DIR)")
        p.add_argument("--no-render", action="store_true", default=False, help="Skip SVG output")
        p.add_argument("--progress", action="store_true", default=False, help="Show a progress bar")

    p = sub.add_parser("theory", help="Monte Carlo diagnostics for a (truth, init) pair")
    p.add_argument("--truth", required=True, help="Ground truth CSV")
    p.add_argument("--init", required=True, help="Initial estimate CSV")
    p.add_argument("--samples", type=int, default=None, help="Gaussian draws (default MAXLIN_MC_SAMPLES)")
    p.add_argument("--directions", type=int, default=0, help="Random directions for the margin search (0 skips it)")
    p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    p.add_argument("--delta", type=float, default=0.05, help="Failure probability for the sample-size threshold")
    p.add_argument("--c", type=float, default=1.0, help="Constant of the sample-size threshold")
    p.add_argument("--data", default=None, help="Dataset CSV with a w column; adds the noise error bound")
    p.add_argument("--out", required=True, help="Output JSON")

    p = sub.add_parser("render", help="Render a grid CSV to SVG")
    p.add_argument("--grid", required=True, help="Grid CSV")
    p.add_argument("--out", required=True, help="Output SVG")
    p.add_argument("--method", default="ce", choices=["ce", "lspa"], help="Method for heatmaps")
    p.add_argument("--threshold", type=float, default=1e-5, help="Recovery threshold")

    return parser.parse_args(argv)


def _print_banner(title: str, lines: Dict[str, Any]):
    print("=" * 50)
    print(f"  {title}")
    print("=" * 50)
    for key, value in lines.items():
        print(f"  {key:<18} {value}")
    print("=" * 50)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace, app: AppConfig) -> int:
    data: Dict[str, Any] = {}
    if args.config:
        data = _load_json(args.config)
    overrides = {"n": args.n, "p": args.p, "k": args.k, "truth_kind": args.truth, "sigma": args.sigma,
                 "perturbation_scale": args.scale, "seed": args.seed}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.constant_column:
        data["constant_column"] = True
    missing = [key for key in ("n", "p", "k") if key not in data]
    if missing:
        raise ConfigError(f"synth needs {', '.join(missing)} (flags or --config)")
    config = SynthConfig.from_dict(data)

    instance = make_instance(config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(instance.data, out / "data.csv")
    write_param_blocks(instance.beta_star, out / "truth.csv")
    write_param_blocks(instance.beta_tilde, out / "init.csv")
    meta = {"n": config.n, "p": config.p, "k": config.k, "truth_kind": config.truth_kind.value,
            "sigma": config.sigma, "perturbation_scale": config.perturbation_scale, "seed": config.seed,
            "constant_column": config.constant_column, "eta": instance.eta}
    write_json(meta, out / "instance.json")
    logger.info("Wrote synthetic instance to %s", out)
    _print_banner("SYNTHETIC INSTANCE", {"n x p x k": f"{config.n} x {config.p} x {config.k}",
                                         "truth": config.truth_kind.value, "sigma": config.sigma,
                                         "eta": f"{instance.eta:.6g}", "seed": config.seed})
    return EXIT_OK


def _resolve_eta(raw: str, data) -> float:
    if raw == "oracle":
        if data.w is None:
            raise FormatError("--eta oracle needs a w column in the dataset")
        return compute_eta(data.w)
    try:
        eta = float(raw)
    except ValueError as exc:
        raise ConfigError(f"--eta must be a number or 'oracle', got {raw!r}") from exc
    if eta < 0:
        raise ConfigError(f"--eta must be >= 0, got {eta}")
    return eta


def cmd_fit(args: argparse.Namespace, app: AppConfig) -> int:
    data = read_dataset(args.data)
    beta_init = read_param_blocks(args.init)
    if beta_init.p != data.p:
        raise DimensionError(f"initial estimate has p={beta_init.p}, dataset has p={data.p}")

    if args.method == Method.CE.value:
        eta = _resolve_eta(args.eta, data)
        fit = fit_ce(data.X, data.y, beta_init, eta, tol=app.solver.tol, params=app.solver)
        beta_hat, summary = fit.beta_hat, fit.to_dict()
    else:
        fit = fit_lspa(data.X, data.y, beta_init, max_iter=args.max_iter)
        beta_hat, summary = fit.beta_hat, fit.to_dict()

    if args.truth and beta_hat is not None:
        summary["normalized_error"] = normalized_error(beta_hat, read_param_blocks(args.truth))
    if beta_hat is not None:
        write_param_blocks(beta_hat, args.out)
        logger.info("Wrote estimate to %s", args.out)
    else:
        logger.warning("Fit failed (%s); no estimate written", summary.get("status"))
    if args.diagnostics:
        write_json(summary, args.diagnostics)
    _print_banner(f"FIT ({args.method.upper()})", summary)
    return EXIT_OK if beta_hat is not None else 1


def _grid_config(args: argparse.Namespace) -> GridConfig:
    data = GridConfig.from_json(args.config).to_dict()
    overrides = {"trials": args.trials, "master_seed": args.master_seed,
                 "threshold": args.threshold, "methods": args.methods}
    data.update({k: v for k, v in overrides.items() if v is not None})
    return GridConfig.from_dict(data)


def _run_grid_command(args: argparse.Namespace, app: AppConfig, sweep: bool) -> int:
    # Lazy: pulls in matplotlib
    from maxlin.experiments.grid import noise_sweep, run_grid
    from maxlin.experiments.plots import render_heatmap, render_noise_sweep

    config = _grid_config(args)
    if sweep and config.mode is not GridMode.NOISE_SWEEP:
        raise ConfigError(f"noise-sweep needs mode=noise_sweep, got {config.mode.value}")
    if not sweep and config.mode is GridMode.NOISE_SWEEP:
        raise ConfigError("phase needs a fix_k_vary_p or fix_p_vary_k config; use noise-sweep")
    workers = args.workers if args.workers is not None else app.workers
    out = Path(args.out_dir or app.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    runner = noise_sweep if sweep else run_grid
    result = runner(config, workers=max(1, workers), solver_params=app.solver, progress=args.progress)
    frame = result.to_frame()
    write_grid_csv(frame, out / "grid.csv")
    result.trials_frame().to_csv(out / "trials.csv", index=False)
    write_json(config.to_dict(), out / "config.json")

    summary: Dict[str, Any] = {"cells": len(frame), "grid": str(out / "grid.csv")}
    if sweep:
        if not args.no_render:
            render_noise_sweep(frame, out / "noise_sweep.svg")
    else:
        boundaries = {m.value: result.boundaries(m.value) for m in config.methods}
        write_json({m: {str(k): v for k, v in b.items()} for m, b in boundaries.items()},
                   out / "boundaries.json")
        for method, b in boundaries.items():
            summary[f"boundary ({method})"] = ", ".join(f"{config.column_name}={k}: {v}" for k, v in b.items())
        if not args.no_render:
            for m in config.methods:
                render_heatmap(frame, out / f"heatmap_{m.value}.svg", m.value, config.threshold)
    _print_banner("NOISE SWEEP" if sweep else "PHASE TRANSITION", summary)
    return EXIT_OK


def cmd_theory(args: argparse.Namespace, app: AppConfig) -> int:
    beta_star = read_param_blocks(args.truth)
    beta_tilde = read_param_blocks(args.init)
    samples = args.samples or app.monte_carlo.samples
    report = build_theory_report(beta_star, beta_tilde, samples=samples, seed=args.seed, delta=args.delta,
                                 c=args.c, directions=args.directions or None,
                                 chunk_size=app.monte_carlo.chunk_size)
    payload = report.to_dict()
    if args.data:
        data = read_dataset(args.data)
        if data.w is None:
            raise FormatError(f"{args.data}: the noise error bound needs a w column")
        payload["error_bound"] = (error_bound_rhs(report.zeta_hat.value, data.w)
                                  if report.zeta_hat.value > 0 else None)
    write_json(payload, args.out)
    _print_banner("THEORY DIAGNOSTICS", {
        "pi_min": f"{report.pi_min:.5f}",
        "zeta_hat": f"{report.zeta_hat.value:.5f} ± {report.zeta_hat.std_error:.1e}",
        "varrho_lb": f"{report.varrho_lower_bound:.5f}",
        "sample_size": report.sample_complexity,
    })
    return EXIT_OK


def cmd_render(args: argparse.Namespace, app: AppConfig) -> int:
    from maxlin.experiments.grid import column_axis
    from maxlin.experiments.plots import render_heatmap, render_noise_sweep
    from maxlin.utils.io import read_grid_csv

    frame = read_grid_csv(args.grid)
    if frame.empty:
        raise FormatError(f"{args.grid}: grid is empty")
    if column_axis(frame) == "sigma":
        render_noise_sweep(frame, args.out)
    else:
        render_heatmap(frame, args.out, args.method, args.threshold)
    logger.info("Wrote %s", args.out)
    return EXIT_OK


def _load_json(path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "phase": lambda args, app: _run_grid_command(args, app, sweep=False),
    "noise-sweep": lambda args, app: _run_grid_command(args, app, sweep=True),
    "theory": cmd_theory,
    "render": cmd_render,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    try:
        app = AppConfig.load()
    except ConfigError as exc:
        setup_logger(level=logging.INFO).error("Configuration error: %s", exc)
        return EXIT_USAGE

    level = getattr(logging, (args.log_level or app.log_level).upper(), logging.INFO)
    setup_logger(level=level, log_file=app.log_file or None)

    started = time.time()
    try:
        code = COMMANDS[args.command](args, app)
    except (ConfigError, FormatError, DimensionError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_USAGE
    logger.debug("%s finished in %.1fs", args.command, time.time() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
