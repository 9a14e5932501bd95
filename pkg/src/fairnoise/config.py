"""Run configuration: a flat, sectioned key=value file.

The sweep grid is a cross-product of strategies, metrics and noise
strengths, so a config file beats positional flags.  Parsing is strict
(unknown keys are errors) and every parsed config canonicalises to a stable
text form whose SHA-256 prefix stamps all output files; re-running from the
canonical form embedded in a summary reproduces the run byte for byte.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields

from fairnoise.robustness import DELTA_FLOOR
from fairnoise.strategies.expgrad import (DEFAULT_DUAL_BOUND, DEFAULT_EPS_TOL,
                                          DEFAULT_ETA, DEFAULT_MAX_ITER)


class ConfigError(ValueError):
    pass


@dataclass
class DatasetConfig:
    source: str = "synthetic"
    csv: str = ""
    schema: str = ""
    n: int = 2000
    bias: float = 1.0
    group_ratio: float = 0.5
    generator_seed: int = 7
    train_fraction: float = 0.7
    split_seed: int = 13
    balance: bool = False
    balance_seed: int = 11


@dataclass
class RunSection:
    learner: str = "logreg"
    strategies: tuple = ("baseline", "correlation_remover", "expgrad", "threshold_optimizer")
    metrics: tuple = ("dp", "eo", "fp", "tp")
    k_max: float = 10.0
    k_points: int = 21
    repetitions: int = 10
    master_seed: int = 12345
    model_seed: int = 0
    delta_floor: float = DELTA_FLOOR
    fit_on_noisy: bool = False
    jobs: int = 1


@dataclass
class ExpGradSection:
    eta: float = DEFAULT_ETA
    max_iter: int = DEFAULT_MAX_ITER
    eps_tol: float = DEFAULT_EPS_TOL
    dual_bound: float = DEFAULT_DUAL_BOUND


@dataclass
class TheorySection:
    closed_form_tol: float = 1e-9
    quadrature_tol: float = 1e-6
    convergence_final_tol: float = 1e-4
    monte_carlo_tol: float = 2e-3
    monte_carlo_n: int = 1_000_000


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    run: RunSection = field(default_factory=RunSection)
    expgrad: ExpGradSection = field(default_factory=ExpGradSection)
    theory: TheorySection = field(default_factory=TheorySection)


_SECTIONS = {
    "dataset": DatasetConfig,
    "run": RunSection,
    "expgrad": ExpGradSection,
    "theory": TheorySection,
}


def _parse_value(current, text, key):
    if isinstance(current, bool):
        lowered = text.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(current, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if isinstance(current, float):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if isinstance(current, tuple):
        return tuple(v.strip() for v in text.split(",") if v.strip())
    return text.strip()


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    config = RunConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        target = getattr(config, section)
        known = {f.name for f in fields(target)}
        for key, value in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            setattr(target, key, _parse_value(getattr(target, key), value, f"{section}.{key}"))
    _validate(config)
    return config


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None


def _validate(config: RunConfig):
    from fairnoise.fairness import METRICS
    from fairnoise.models import LEARNERS
    from fairnoise.strategies import STRATEGIES

    ds = config.dataset
    if ds.source not in ("synthetic", "csv"):
        raise ConfigError(f"dataset.source must be synthetic or csv, got {ds.source!r}")
    if ds.source == "csv":
        if not ds.csv:
            raise ConfigError("dataset.csv: missing dataset path")
        if not ds.schema:
            raise ConfigError("dataset.schema: missing schema path")
    run = config.run
    if run.learner not in LEARNERS:
        raise ConfigError(f"run.learner must be one of {LEARNERS}, got {run.learner!r}")
    for s in run.strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"run.strategies: unknown strategy {s!r}")
    for m in run.metrics:
        if m not in METRICS:
            raise ConfigError(f"run.metrics: unknown metric {m!r}")
    if not run.strategies or not run.metrics:
        raise ConfigError("run.strategies and run.metrics must be non-empty")
    if run.k_points < 1 or run.k_max < 0:
        raise ConfigError("run.k_points must be >= 1 and run.k_max >= 0")
    if run.repetitions < 1:
        raise ConfigError("run.repetitions must be >= 1")
    if run.jobs < 1:
        raise ConfigError("run.jobs must be >= 1")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return ",".join(value)
    return str(value)


# jobs only parallelises the computation; it never changes results, so it
# stays out of the canonical form and the config hash
_EXECUTION_ONLY = {("run", "jobs")}


def canonical_text(config: RunConfig) -> str:
    out = io.StringIO()
    for section, cls in _SECTIONS.items():
        out.write(f"[{section}]\n")
        target = getattr(config, section)
        for f in fields(cls):
            if (section, f.name) in _EXECUTION_ONLY:
                continue
            out.write(f"{f.name} = {_format_value(getattr(target, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(canonical_text(config).encode("utf-8")).hexdigest()[:16]
