"""Batch front end.

Subcommands::

    fairnoise evaluate     --config cfg [--seed S] [--out DIR] [--jobs N]
    fairnoise theory-check --config cfg [--out DIR]
    fairnoise inspect      --config cfg

``evaluate`` writes the per-repetition fairness values
(``fairness_raw.csv``), the aggregated robustness ratios
(``robustness.csv``) and a JSON summary; every file embeds the config hash
and master seed, and files are written atomically after aggregation.  Plot
rendering is out of scope: the CSVs carry the k / M / R axes directly.

Exit codes: 0 success, 2 config error, 3 data error, 4 validator failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from fairnoise import __version__, theory
from fairnoise.config import (ConfigError, RunConfig, canonical_text,
                              config_hash, load_config)
from fairnoise.dataset import (DataError, Dataset, SplitSpec, balance_classes,
                               load_csv, split, synth_biased)
from fairnoise.models import DEFAULT_HYPER
from fairnoise.robustness import RobustnessError, SweepConfig, sweep
from fairnoise.strategies.threshold import ThresholdPolicy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_VALIDATOR = 4


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_dataset(config: RunConfig) -> Dataset:
    ds_cfg = config.dataset
    if ds_cfg.source == "synthetic":
        ds = synth_biased(ds_cfg.n, ds_cfg.bias, ds_cfg.group_ratio, ds_cfg.generator_seed)
    else:
        ds = load_csv(ds_cfg.csv, ds_cfg.schema)
    if ds_cfg.balance:
        ds = balance_classes(ds, ds_cfg.balance_seed)
    return ds


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def cmd_evaluate(config: RunConfig, out_dir: Path) -> int:
    ds = _load_dataset(config)
    train, test = split(ds, SplitSpec(config.dataset.train_fraction, config.dataset.split_seed))
    run = config.run
    k_grid = tuple(np.linspace(0.0, run.k_max, run.k_points)) if run.k_points > 1 else (0.0,)
    sweep_config = SweepConfig(
        strategies=tuple(run.strategies), metrics=tuple(run.metrics),
        learner=run.learner, k_grid=k_grid, repetitions=run.repetitions,
        master_seed=run.master_seed, delta_floor=run.delta_floor,
        fit_on_noisy=run.fit_on_noisy, seed=run.model_seed,
        expgrad_options={
            "eta": config.expgrad.eta, "max_iter": config.expgrad.max_iter,
            "eps_tol": config.expgrad.eps_tol, "dual_bound": config.expgrad.dual_bound,
        },
        jobs=run.jobs,
    )
    result = sweep(sweep_config, train, test)

    stamp = f"# config_hash={config_hash(config)} master_seed={run.master_seed}\n"
    raw_lines = [stamp, "strategy,metric,learner,k,repetition,value\n"]
    for strategy, metric, learner, k, rep, value in result.fairness_rows():
        raw_lines.append(f"{strategy},{metric},{learner},{_fmt(k)},{rep},{_fmt(value)}\n")
    agg_lines = [stamp, "strategy,metric,learner,k,R\n"]
    for strategy, metric, learner, k, ratio in result.ratio_rows():
        agg_lines.append(f"{strategy},{metric},{learner},{_fmt(k)},{_fmt(ratio)}\n")

    summary = {
        "version": __version__,
        "config_hash": config_hash(config),
        "config": canonical_text(config),
        "master_seed": run.master_seed,
        "model_seed": run.model_seed,
        "learner_defaults": {k: dict(v) for k, v in DEFAULT_HYPER.items()},
        "rows": {"train": train.n_rows, "test": test.n_rows},
        "discarded_repetitions": result.total_discarded,
        "curves": {
            f"{s}/{m}": {
                "base_metric": curve.base_metric,
                "floor_bound": curve.floor_bound,
                "behavior": curve.behavior,
                "R": list(curve.estimates),
                "k": list(curve.k_grid),
                "mean_fairness": [float(np.nanmean(curve.values[i]))
                                  for i in range(len(curve.k_grid))],
                "discarded": [int(d) for d in curve.discarded],
            }
            for (s, m), curve in sorted(result.curves.items())
        },
    }
    _atomic_write(out_dir / "fairness_raw.csv", "".join(raw_lines))
    _atomic_write(out_dir / "robustness.csv", "".join(agg_lines))
    _atomic_write(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir}/fairness_raw.csv, robustness.csv, summary.json")
    return EXIT_OK


def _theory_validators(config: RunConfig):
    tol = config.theory
    reference = (theory.GaussianSpec(0.0, 1.0), theory.GaussianSpec(1.0, 1.0))

    def closed_form_values():
        d0 = theory.bhattacharyya_gaussian(*reference, k=0.0)
        d1 = theory.bhattacharyya_gaussian(*reference, k=1.0)
        return max(abs(d0 - 0.125), abs(d1 - 0.0625))

    def quadrature_agreement():
        worst = 0.0
        for mu_p, mu_q, sp, sq, k in (
            (0.0, 1.0, 1.0, 1.0, 0.0), (0.0, 1.0, 1.0, 1.0, 1.0),
            (-5.0, 5.0, 0.5, 3.0, 0.0), (-2.0, 3.0, 2.0, 0.5, 10.0),
            (1.5, -1.5, 3.0, 1.0, 4.0),
        ):
            p = theory.GaussianSpec(mu_p, sp)
            q = theory.GaussianSpec(mu_q, sq)
            closed = theory.bhattacharyya_gaussian(p, q, k)
            wp, wq = p.widened(k), q.widened(k)
            _, quad = theory.bhattacharyya(wp.pdf, wq.pdf, *theory.gaussian_quad_domain(wp, wq))
            worst = max(worst, abs(closed - quad))
        return worst

    def convergence():
        report = theory.verify_convergence(*reference, np.arange(0.0, 101.0, 1.0),
                                           final_tol=tol.convergence_final_tol,
                                           quad_tol=tol.quadrature_tol)
        return 0.0 if report.passed else 1.0

    def inner_product():
        import math as _math
        phi = theory.GaussianSpec(0.0, 1.0).pdf
        value = theory.l2_inner_product(phi, phi, -10.0, 10.0)
        return abs(value - 1.0 / (2.0 * _math.sqrt(_math.pi)))

    def bias_bounds():
        p = ((0.3, 0.5), (0.7, 0.5))
        worst = 0.0
        report = theory.eo_bias_bounds(p, 1.0, (0.25, 0.25), 0.2)
        worst = max(worst, abs(report.lower))
        report = theory.eo_bias_bounds(p, 0.0, (0.25, 0.25), 0.2)
        worst = max(worst, abs(report.exact - report.upper))
        flat = theory.eo_bias_bounds(((0.5, 0.5), (0.5, 0.5)), 0.3, (0.25, 0.25), 0.2)
        worst = max(worst, abs(flat.upper), abs(flat.lower))
        return worst

    def max_dp_example():
        policy = ThresholdPolicy("dp", (0.2, 0.3), (0.6, 0.5), (0.3, 0.5), (0.7, 0.5))
        return abs(theory.max_dp_under_noise(policy) - 0.08)

    def max_dp_monte_carlo():
        policy = ThresholdPolicy("dp", (0.2, 0.3), (0.6, 0.5), (0.3, 0.5), (0.7, 0.5))
        closed = theory.max_dp_under_noise(policy)
        sim = theory.simulate_max_dp(policy, theory.ScoreRange(0.0, 1.0),
                                     tol.monte_carlo_n, seed=2024)
        return abs(closed - sim)

    return (
        ("bhattacharyya_closed_form", closed_form_values, tol.closed_form_tol),
        ("bhattacharyya_quadrature_agreement", quadrature_agreement, tol.quadrature_tol),
        ("noise_convergence", convergence, 0.5),
        ("l2_inner_product_oracle", inner_product, tol.quadrature_tol),
        ("bias_bounds_identities", bias_bounds, tol.closed_form_tol),
        ("max_dp_worked_example", max_dp_example, tol.closed_form_tol),
        ("max_dp_monte_carlo", max_dp_monte_carlo, tol.monte_carlo_tol),
    )


def cmd_theory_check(config: RunConfig, out_dir: Path) -> int:
    results = []
    all_ok = True
    for name, fn, tolerance in _theory_validators(config):
        error = float(fn())
        ok = error <= tolerance
        all_ok &= ok
        results.append({"validator": name, "error": error,
                        "tolerance": tolerance, "passed": bool(ok)})
    report = {
        "config_hash": config_hash(config),
        "master_seed": config.run.master_seed,
        "validators": results,
        "passed": bool(all_ok),
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_dir is not None:
        _atomic_write(out_dir / "theory_report.json", text)
    print(text, end="")
    return EXIT_OK if all_ok else EXIT_VALIDATOR


def cmd_inspect(config: RunConfig) -> int:
    ds = _load_dataset(config)
    print(f"rows: {ds.n_rows}")
    print(f"features: {ds.n_features}")
    for name, kind in zip(ds.names, ds.kinds):
        extra = f" ({len(kind.categories)} categories)" if kind.categories else ""
        print(f"  {name}: {kind.tag}{extra}")
    label_counts = np.bincount(ds.labels, minlength=2)
    print(f"labels: Y=0 {label_counts[0]}, Y=1 {label_counts[1]} "
          f"(base rate {label_counts[1] / ds.n_rows:.4f})")
    if ds.protected_is_binary:
        group_counts = np.bincount(ds.protected, minlength=2)
        print(f"groups: A=0 {group_counts[0]}, A=1 {group_counts[1]}")
        for a in (0, 1):
            mask = ds.protected == a
            if mask.any():
                print(f"  P(Y=1 | A={a}) = {ds.labels[mask].mean():.4f}")
    else:
        print(f"protected values: {ds.protected_values} (not yet binarised)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairnoise",
                                     description="fairness-robustness evaluation under noise")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("evaluate", "theory-check", "inspect"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "theory-check"),
                       help="path to the run configuration")
        p.add_argument("--seed", type=int, default=None, help="override run.master_seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="parallel sweep workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            config.run.master_seed = args.seed
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            config.run.jobs = args.jobs
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "evaluate":
            return cmd_evaluate(config, Path(args.out))
        if args.command == "theory-check":
            return cmd_theory_check(config, Path(args.out))
        return cmd_inspect(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, RobustnessError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
