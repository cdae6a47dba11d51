"""Batch experiment runner behind the command-line interface.

Turns a JSON experiment description into chains, diagnostics, and CSV/JSON
artifacts: scaling grids over sample size (``run``), head-to-head scheme
comparisons on one dataset (``compare``), the joint density surface of the
heavy-tailed chain (``figure6``), and the brute-force conditional checks
(``validate``).

Determinism contract: every chain seed is a pure function of the config
seed and the cell coordinates, and rows are emitted in sorted cell order no
matter how the worker pool schedules them, so rerunning a config reproduces
results.csv byte for byte.  Timings are real and therefore live only in
summary.json, never in results.csv.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .diagnostics import (
    EscapeSummary,
    diagnostics_report,
    escape_time,
    scaling_fit,
)
from .engine import SamplerConfig, run_chain, run_interleaved, sweep_kernel
from .errors import (
    ConfigError,
    ConstraintViolationError,
    DegenerateConditionalError,
    GibbsLabError,
    InsufficientGridError,
    InvalidParameterError,
)
from .model import GibbsModel
from .models import MODEL_REGISTRY, get_model
from .models.heavy_tail import HeavyTailHmmModel, figure_surface
from .reparam import CENTERED, NONCENTERED, Parametrization
from .rng import RngStream

__all__ = [
    "CompareSettings",
    "DataSettings",
    "EscapeSettings",
    "ExperimentConfig",
    "SamplerSettings",
    "cmd_compare",
    "cmd_figure6",
    "cmd_run",
    "cmd_validate",
    "figure6_grid",
    "load_config",
]

_MASK64 = (1 << 64) - 1

RESULT_COLUMNS = (
    "model",
    "parametrization",
    "n",
    "replicate",
    "seed",
    "iat",
    "ess",
    "lag1",
    "gamma_hat_lower",
    "accept_latent",
    "accept_theta",
)

COMPARE_COLUMNS = (
    "model",
    "parametrization",
    "n",
    "replicates",
    "median_iat",
    "median_ess",
    "median_lag1",
    "ess_per_sec",
    "escape_median",
    "escape_censored",
    "winner",
)


def _mix(*parts: int) -> int:
    """Fold integers into one 64-bit seed (splitmix64 finalizer per part)."""
    h = 0
    for p in parts:
        h = (h + int(p) + 0x9E3779B97F4A7C15) & _MASK64
        z = h
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        h = z ^ (z >> 31)
    return h


def _fmt(value) -> str:
    """17 significant digits, enough to round-trip a double exactly."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


_REQUIRED = object()


def _expect(mapping: dict, key: str, kinds, where: str, default=_REQUIRED):
    """Pull ``key`` out of ``mapping`` checking its JSON type.

    ``where`` prefixes the key path in error messages so a nested mistake
    still names the exact offending key.
    """
    label = f"{where}.{key}" if where else key
    if key not in mapping:
        if default is not _REQUIRED:
            return default
        raise ConfigError(f"config key '{label}': missing")
    value = mapping[key]
    allowed = kinds if isinstance(kinds, tuple) else (kinds,)
    if kinds is not None and not isinstance(value, allowed):
        names = "/".join(k.__name__ for k in allowed)
        raise ConfigError(
            f"config key '{label}': expected {names}, got {type(value).__name__}"
        )
    if isinstance(value, bool) and kinds is not None and bool not in allowed:
        # bool is an int subclass; reject it where a number is wanted
        raise ConfigError(f"config key '{label}': expected a number, got bool")
    return value


def _reject_unknown(mapping: dict, allowed: Sequence[str], where: str) -> None:
    for key in mapping:
        if key not in allowed:
            label = f"{where}.{key}" if where else key
            raise ConfigError(f"config key '{label}': unknown key")


@dataclass(frozen=True)
class DataSettings:
    """Where observations come from: a seeded generator, a literal list, a file, or nothing."""

    kind: str = "synthetic"
    theta_star: float = 1.0
    seed: int = 0
    values: Tuple[float, ...] = ()
    path: str = ""

    @staticmethod
    def from_dict(raw: dict, where: str = "data") -> "DataSettings":
        kind = _expect(raw, "kind", str, where, default="synthetic")
        if kind == "synthetic":
            _reject_unknown(raw, ("kind", "theta_star", "seed"), where)
            return DataSettings(
                kind=kind,
                theta_star=float(_expect(raw, "theta_star", (int, float), where, default=1.0)),
                seed=int(_expect(raw, "seed", int, where, default=0)),
            )
        if kind == "inline":
            _reject_unknown(raw, ("kind", "values"), where)
            values = _expect(raw, "values", list, where)
            try:
                values = tuple(float(v) for v in values)
            except (TypeError, ValueError):
                raise ConfigError(f"config key '{where}.values': entries must be numbers")
            return DataSettings(kind=kind, values=values)
        if kind == "file":
            _reject_unknown(raw, ("kind", "path"), where)
            return DataSettings(kind=kind, path=str(_expect(raw, "path", str, where)))
        if kind == "none":
            _reject_unknown(raw, ("kind",), where)
            return DataSettings(kind=kind)
        raise ConfigError(
            f"config key '{where}.kind': expected one of synthetic/inline/file/none, got {kind!r}"
        )

    def to_dict(self) -> dict:
        if self.kind == "synthetic":
            return {"kind": self.kind, "theta_star": self.theta_star, "seed": self.seed}
        if self.kind == "inline":
            return {"kind": self.kind, "values": list(self.values)}
        if self.kind == "file":
            return {"kind": self.kind, "path": self.path}
        return {"kind": self.kind}

    def load_values(self) -> np.ndarray:
        if self.kind == "inline":
            return np.asarray(self.values, dtype=float)
        if self.kind == "file":
            try:
                return np.atleast_1d(np.loadtxt(self.path, dtype=float))
            except OSError as exc:
                raise ConfigError(f"config key 'data.path': cannot read {self.path!r} ({exc})")
        raise ConfigError(f"config key 'data.kind': {self.kind!r} carries no literal values")


@dataclass(frozen=True)
class SamplerSettings:
    iterations: int = 100_000
    burn_in: int = 10_000
    thin: int = 1

    @staticmethod
    def from_dict(raw: dict, where: str, base: "SamplerSettings") -> "SamplerSettings":
        _reject_unknown(raw, ("iterations", "burn_in", "thin"), where)
        out = SamplerSettings(
            iterations=int(_expect(raw, "iterations", int, where, default=base.iterations)),
            burn_in=int(_expect(raw, "burn_in", int, where, default=base.burn_in)),
            thin=int(_expect(raw, "thin", int, where, default=base.thin)),
        )
        if out.iterations < 1:
            raise ConfigError(f"config key '{where}.iterations': must be at least 1")
        if out.burn_in < 0:
            raise ConfigError(f"config key '{where}.burn_in': must be nonnegative")
        if out.thin < 1:
            raise ConfigError(f"config key '{where}.thin': must be at least 1")
        return out

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "burn_in": self.burn_in, "thin": self.thin}


@dataclass(frozen=True)
class EscapeSettings:
    theta0: float = 50.0
    radius: float = 5.0
    max_iters: int = 5000
    replicates: int = 31

    @staticmethod
    def from_dict(raw: dict, where: str) -> "EscapeSettings":
        _reject_unknown(raw, ("theta0", "radius", "max_iters", "replicates"), where)
        out = EscapeSettings(
            theta0=float(_expect(raw, "theta0", (int, float), where, default=50.0)),
            radius=float(_expect(raw, "radius", (int, float), where, default=5.0)),
            max_iters=int(_expect(raw, "max_iters", int, where, default=5000)),
            replicates=int(_expect(raw, "replicates", int, where, default=31)),
        )
        if out.radius <= 0:
            raise ConfigError(f"config key '{where}.radius': must be positive")
        if out.max_iters < 1:
            raise ConfigError(f"config key '{where}.max_iters': must be at least 1")
        if out.replicates < 31 or out.replicates % 2 == 0:
            raise ConfigError(f"config key '{where}.replicates': must be odd and at least 31")
        return out

    def to_dict(self) -> dict:
        return {
            "theta0": self.theta0,
            "radius": self.radius,
            "max_iters": self.max_iters,
            "replicates": self.replicates,
        }


@dataclass(frozen=True)
class CompareSettings:
    """Row plan for head-to-head runs: which schemes beyond plain CA/NCA."""

    weights: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    data_based: bool = True
    interleaved: bool = True
    escape: Optional[EscapeSettings] = None

    @staticmethod
    def from_dict(raw: dict, where: str = "compare") -> "CompareSettings":
        _reject_unknown(raw, ("weights", "data_based", "interleaved", "escape"), where)
        weights = _expect(raw, "weights", list, where, default=[0.0, 0.25, 0.5, 0.75, 1.0])
        try:
            weights = tuple(float(w) for w in weights)
        except (TypeError, ValueError):
            raise ConfigError(f"config key '{where}.weights': entries must be numbers")
        for w in weights:
            if not 0.0 <= w <= 1.0:
                raise ConfigError(f"config key '{where}.weights': weight {w} outside [0, 1]")
        escape_raw = raw.get("escape")
        if escape_raw is not None and not isinstance(escape_raw, dict):
            raise ConfigError(f"config key '{where}.escape': expected object or null")
        return CompareSettings(
            weights=weights,
            data_based=bool(_expect(raw, "data_based", bool, where, default=True)),
            interleaved=bool(_expect(raw, "interleaved", bool, where, default=True)),
            escape=None if escape_raw is None else EscapeSettings.from_dict(escape_raw, f"{where}.escape"),
        )

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "data_based": self.data_based,
            "interleaved": self.interleaved,
            "escape": None if self.escape is None else self.escape.to_dict(),
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    ``to_dict`` emits the canonical form that is hashed, embedded in
    summary.json, and accepted back by ``from_dict`` unchanged, which is
    what makes "rerun the embedded config" reproduce the artifacts.
    """

    model_name: str
    model_params: Dict[str, object] = field(default_factory=dict)
    data: DataSettings = DataSettings()
    parametrizations: Tuple[str, ...] = ("centered", "noncentered")
    sampler: SamplerSettings = SamplerSettings()
    overrides: Dict[str, SamplerSettings] = field(default_factory=dict)
    grid: Tuple[int, ...] = (10, 100, 1000)
    replicates: int = 5
    seed: int = 0
    out_dir: str = "results"
    compare: CompareSettings = CompareSettings()

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root: expected a JSON object")
        _reject_unknown(
            raw,
            (
                "model",
                "data",
                "parametrizations",
                "sampler",
                "grid",
                "replicates",
                "seed",
                "out_dir",
                "compare",
            ),
            "",
        )
        model_raw = _expect(raw, "model", dict, "")
        _reject_unknown(model_raw, ("name", "params"), "model")
        name = _expect(model_raw, "name", str, "model")
        if name not in MODEL_REGISTRY:
            known = ", ".join(sorted(MODEL_REGISTRY))
            raise ConfigError(f"config key 'model.name': unknown model {name!r} (known: {known})")
        params = _expect(model_raw, "params", dict, "model", default={})

        labels_raw = _expect(raw, "parametrizations", list, "", default=["centered", "noncentered"])
        labels = []
        for i, text in enumerate(labels_raw):
            if not isinstance(text, str):
                raise ConfigError(f"config key 'parametrizations[{i}]': expected string label")
            try:
                Parametrization.from_string(text)
            except InvalidParameterError as exc:
                raise ConfigError(f"config key 'parametrizations[{i}]': {exc}")
            labels.append(text.strip())
        if not labels:
            raise ConfigError("config key 'parametrizations': must list at least one scheme")
        if len(set(labels)) != len(labels):
            raise ConfigError("config key 'parametrizations': duplicate scheme label")

        sampler_raw = dict(_expect(raw, "sampler", dict, "", default={}))
        per_raw = sampler_raw.pop("per_parametrization", {})
        base = SamplerSettings.from_dict(sampler_raw, "sampler", SamplerSettings())
        if not isinstance(per_raw, dict):
            raise ConfigError("config key 'sampler.per_parametrization': expected object")
        overrides = {}
        for key, sub in per_raw.items():
            if key not in labels:
                raise ConfigError(
                    f"config key 'sampler.per_parametrization.{key}': not in 'parametrizations'"
                )
            if not isinstance(sub, dict):
                raise ConfigError(
                    f"config key 'sampler.per_parametrization.{key}': expected object"
                )
            overrides[key] = SamplerSettings.from_dict(
                sub, f"sampler.per_parametrization.{key}", base
            )

        grid_raw = _expect(raw, "grid", list, "", default=[10, 100, 1000])
        grid = []
        for i, n in enumerate(grid_raw):
            if isinstance(n, bool) or not isinstance(n, int):
                raise ConfigError(f"config key 'grid[{i}]': expected integer size")
            if n < 1:
                raise ConfigError(f"config key 'grid[{i}]': size must be at least 1, got {n}")
            grid.append(n)
        if not grid:
            raise ConfigError("config key 'grid': must list at least one size")

        replicates = int(_expect(raw, "replicates", int, "", default=5))
        if replicates < 1:
            raise ConfigError("config key 'replicates': must be at least 1")

        seed = _expect(raw, "seed", int, "", default=0)
        if seed < 0 or seed > _MASK64:
            raise ConfigError("config key 'seed': must fit in an unsigned 64-bit integer")

        return ExperimentConfig(
            model_name=name,
            model_params=dict(params),
            data=DataSettings.from_dict(_expect(raw, "data", dict, "", default={"kind": "synthetic"})),
            parametrizations=tuple(labels),
            sampler=base,
            overrides=overrides,
            grid=tuple(grid),
            replicates=replicates,
            seed=int(seed),
            out_dir=str(_expect(raw, "out_dir", str, "", default="results")),
            compare=CompareSettings.from_dict(_expect(raw, "compare", dict, "", default={})),
        )

    def to_dict(self) -> dict:
        sampler = self.sampler.to_dict()
        sampler["per_parametrization"] = {
            key: val.to_dict() for key, val in sorted(self.overrides.items())
        }
        return {
            "model": {"name": self.model_name, "params": dict(self.model_params)},
            "data": self.data.to_dict(),
            "parametrizations": list(self.parametrizations),
            "sampler": sampler,
            "grid": list(self.grid),
            "replicates": self.replicates,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "compare": self.compare.to_dict(),
        }

    def sampler_for(self, label: str) -> SamplerSettings:
        return self.overrides.get(label, self.sampler)

    def content_hash(self) -> str:
        """Hash of everything that affects the numbers (the output base does not)."""
        body = self.to_dict()
        body.pop("out_dir")
        blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}")
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------


def build_model_for_cell(cfg: ExperimentConfig, n: int, data_seed: int) -> GibbsModel:
    """Instantiate the configured model at grid size ``n``.

    ``n`` is the model's size knob: the number of observations for most
    models, the discretization level for the process models, and the
    lattice side for the intrinsic-field model.  Prior-only models ignore
    the data source.
    """
    cls = get_model(cfg.model_name)
    params = dict(cfg.model_params)
    name = cfg.model_name

    if name == "stick_breaking":
        return cls(n=n, **params)

    data = cfg.data
    if data.kind == "synthetic":
        if name == "gmrf_hybrid":
            return cls.synthesize(side=n, theta_star=data.theta_star, data_seed=data_seed, **params)
        if name == "latent_poisson":
            return cls.synthesize(theta_star=data.theta_star, data_seed=data_seed, **params)
        return cls.synthesize(n=n, theta_star=data.theta_star, data_seed=data_seed, **params)

    values = data.load_values()
    if name == "latent_poisson":
        return cls(n_obs=int(values[0]), **params)
    if name == "observed_diffusion":
        return cls(float(values[0]), n=n, **params)
    if name == "discretized_sv":
        return cls(values, n=int(values.size), **params)
    if name == "gmrf_hybrid":
        observed = params.pop("observed", None)
        if observed is None:
            raise ConfigError(
                "config key 'model.params.observed': required for inline intrinsic-field data"
            )
        return cls(values, side=n, observed=np.asarray(observed, dtype=int), **params)
    return cls(values, **params)


# ---------------------------------------------------------------------------
# cell execution
# ---------------------------------------------------------------------------


def _run_cell(payload) -> dict:
    """Worker body: one (parametrization, n, replicate) cell to one row dict.

    Takes plain JSON-safe values so it can cross a process boundary, and
    wraps any model failure with the cell identity before re-raising.
    """
    config_dict, label, n, replicate = payload
    cfg = ExperimentConfig.from_dict(config_dict)
    where = f"cell model={cfg.model_name} parametrization={label} n={n} replicate={replicate}"
    try:
        p = Parametrization.from_string(label)
        data_seed = _mix(cfg.data.seed, n, replicate)
        chain_seed = _mix(cfg.seed, n, replicate)
        model = build_model_for_cell(cfg, n, data_seed)
        s = cfg.sampler_for(label)
        trace = run_chain(
            model,
            SamplerConfig(
                iterations=s.iterations,
                burn_in=s.burn_in,
                thin=s.thin,
                seed=chain_seed,
                parametrization=p,
            ),
        )
        report = diagnostics_report(
            trace.theta,
            {"identity": lambda v: v, "square": np.square, "abs": np.abs},
        )
    except GibbsLabError as exc:
        raise RuntimeError(f"{where}: {type(exc).__name__}: {exc}") from None
    return {
        "model": cfg.model_name,
        "parametrization": label,
        "n": n,
        "replicate": replicate,
        "seed": chain_seed,
        "iat": report.iat,
        "ess": report.ess,
        "lag1": report.lag1,
        "gamma_hat_lower": report.gamma_hat,
        "accept_latent": trace.acceptance_rates.get("latent", 1.0),
        "accept_theta": trace.acceptance_rates.get("theta", 1.0),
        "wall_time": trace.wall_time,
    }


def _check_support(cfg: ExperimentConfig) -> None:
    """Config invariant: every listed scheme is supported by the model."""
    data_seed = _mix(cfg.data.seed, cfg.grid[0], 0)
    try:
        probe = build_model_for_cell(cfg, cfg.grid[0], data_seed)
    except GibbsLabError as exc:
        raise ConfigError(f"config key 'model': cannot build probe instance: {exc}")
    for i, label in enumerate(cfg.parametrizations):
        p = Parametrization.from_string(label)
        if not probe.supports(p):
            raise ConfigError(
                f"config key 'parametrizations[{i}]': {cfg.model_name} does not support {label!r}"
            )


def _execute(payloads: List[tuple], threads: Optional[int]) -> List[dict]:
    workers = (os.cpu_count() or 1) if threads is None else max(1, int(threads))
    if workers == 1 or len(payloads) <= 1:
        return [_run_cell(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output order never depends on timing
        return list(pool.map(_run_cell, payloads))


def _write_csv(path: Path, columns: Sequence[str], rows: List[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell_text(row.get(c, "")) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell_text(value) -> str:
    if isinstance(value, str):
        return value
    return _fmt(value)


def _median(rows: List[dict], key: str) -> float:
    return float(np.median([row[key] for row in rows]))


def _out_dir_for(cfg: ExperimentConfig) -> Path:
    # same config, same directory: a rerun rewrites identical bytes, while
    # a different experiment can never clobber this one
    target = Path(cfg.out_dir) / f"run-{cfg.content_hash()}"
    target.mkdir(parents=True, exist_ok=True)
    return target


def _apply_cli_overrides(
    cfg: ExperimentConfig, seed: Optional[int], out_dir: Optional[str]
) -> ExperimentConfig:
    raw = cfg.to_dict()
    if seed is not None:
        raw["seed"] = int(seed)
    if out_dir is not None:
        raw["out_dir"] = str(out_dir)
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# run: scaling grid
# ---------------------------------------------------------------------------


def cmd_run(
    cfg: ExperimentConfig,
    threads: Optional[int] = None,
    out_dir: Optional[str] = None,
    seed: Optional[int] = None,
) -> Path:
    """Run the full (parametrization x n x replicate) grid and write artifacts.

    Returns the stamped output directory containing results.csv and
    summary.json.  Chain seeds depend on (config seed, n, replicate) only,
    so schemes share common random numbers within a cell.
    """
    cfg = _apply_cli_overrides(cfg, seed, out_dir)
    _check_support(cfg)
    config_dict = cfg.to_dict()

    payloads = [
        (config_dict, label, n, replicate)
        for label in cfg.parametrizations
        for n in cfg.grid
        for replicate in range(cfg.replicates)
    ]
    t0 = time.perf_counter()
    rows = _execute(payloads, threads)
    total_wall = time.perf_counter() - t0

    target = _out_dir_for(cfg)
    _write_csv(target / "results.csv", RESULT_COLUMNS, rows)

    cells = []
    fits = {}
    for label in cfg.parametrizations:
        points = []
        for n in cfg.grid:
            group = [r for r in rows if r["parametrization"] == label and r["n"] == n]
            med_iat = _median(group, "iat")
            cells.append(
                {
                    "model": cfg.model_name,
                    "parametrization": label,
                    "n": n,
                    "replicates": cfg.replicates,
                    "median_iat": med_iat,
                    "median_ess": _median(group, "ess"),
                    "median_lag1": _median(group, "lag1"),
                    "median_gamma_hat_lower": _median(group, "gamma_hat_lower"),
                    "wall_time_s": float(sum(r["wall_time"] for r in group)),
                }
            )
            points.append((n, med_iat))
        try:
            fit = scaling_fit(points)
            fits[label] = {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "points": [[float(n), float(t)] for n, t in points],
            }
        except (InsufficientGridError, InvalidParameterError) as exc:
            fits[label] = {"error": str(exc)}

    summary = {
        "artifact": "scaling-run",
        "config": config_dict,
        "config_hash": cfg.content_hash(),
        "cells": cells,
        "scaling": fits,
        "wall_time_s": total_wall,
    }
    with open(target / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return target


# ---------------------------------------------------------------------------
# compare: one dataset, many schemes
# ---------------------------------------------------------------------------


def _compare_plan(cfg: ExperimentConfig, model: GibbsModel) -> List[str]:
    """Row labels: CA, NCA, the weight sweep, tagged schemes, interleaving."""
    labels = ["centered", "noncentered"]
    for w in sorted(set(cfg.compare.weights)):
        p = Parametrization.partial(w)
        if model.supports(p):
            labels.append(p.label())
    for p in model.supported_parametrizations():
        if p.kind == "partial" and p.tag is not None:
            labels.append(p.label())
        if p.kind == "data_based" and cfg.compare.data_based:
            labels.append(p.label())
    if cfg.compare.interleaved:
        labels.append("interleaved")
    return labels


def _interleaved_escape(
    model: GibbsModel,
    theta0: float,
    radius: float,
    max_iters: int,
    replicates: int,
    rng: RngStream,
) -> EscapeSummary:
    """Escape clock for the alternating kernel (one CA+NCA pair per tick)."""
    if replicates < 31 or replicates % 2 == 0:
        raise InvalidParameterError("replicates must be odd and at least 31")
    init, step_c = sweep_kernel(model, SamplerConfig(iterations=0, parametrization=CENTERED))
    _, step_n = sweep_kernel(model, SamplerConfig(iterations=0, parametrization=NONCENTERED))
    center = model.data_center()
    times = np.empty(replicates, dtype=np.int64)
    censored = 0
    for r in range(replicates):
        sub = rng.substream(r)
        theta = float(theta0)
        if abs(theta - center) < radius:
            times[r] = 0
            continue
        latent = init(theta, sub)
        hit = max_iters
        for i in range(1, max_iters + 1):
            theta, latent = step_c(theta, latent, sub)
            if abs(theta - center) < radius:
                hit = i
                break
            theta, latent = step_n(theta, latent, sub)
            if abs(theta - center) < radius:
                hit = i
                break
        else:
            censored += 1
        times[r] = hit
    return EscapeSummary(
        times=tuple(int(t) for t in times),
        median=float(np.median(times)),
        censored=censored,
        max_iters=max_iters,
    )


def _compare_chain(model, label: str, settings: SamplerSettings, chain_seed: int):
    base = SamplerConfig(
        iterations=settings.iterations,
        burn_in=settings.burn_in,
        thin=settings.thin,
        seed=chain_seed,
    )
    if label == "interleaved":
        return run_interleaved(
            model,
            replace(base, parametrization=CENTERED),
            replace(base, parametrization=NONCENTERED),
        )
    return run_chain(model, replace(base, parametrization=Parametrization.from_string(label)))


def cmd_compare(
    cfg: ExperimentConfig,
    threads: Optional[int] = None,
    out_dir: Optional[str] = None,
    seed: Optional[int] = None,
) -> Path:
    """Head-to-head scheme comparison on one dataset (the first grid size).

    Every row of compare.csv reuses the same per-replicate chain seeds, so
    schemes that coincide mathematically (weight-1 centering and plain CA)
    produce identical chains and identical statistics.  The winner column
    marks the scheme with the highest effective samples per second.
    """
    cfg = _apply_cli_overrides(cfg, seed, out_dir)
    n = cfg.grid[0]
    data_seed = _mix(cfg.data.seed, n, 0)
    model = build_model_for_cell(cfg, n, data_seed)
    labels = _compare_plan(cfg, model)

    rows = []
    for label in labels:
        settings = cfg.sampler_for(label if label in cfg.parametrizations else "")
        reports = []
        walls = []
        try:
            for replicate in range(cfg.replicates):
                chain_seed = _mix(cfg.seed, n, replicate)
                trace = _compare_chain(model, label, settings, chain_seed)
                reports.append(diagnostics_report(trace.theta))
                walls.append(trace.wall_time)
        except (ConstraintViolationError, DegenerateConditionalError) as exc:
            # schemes a model refuses by construction get noted, not rows
            print(f"note: {cfg.model_name} refuses {label}: {exc}")
            continue
        med_ess = float(np.median([r.ess for r in reports]))
        rows.append(
            {
                "model": cfg.model_name,
                "parametrization": label,
                "n": n,
                "replicates": cfg.replicates,
                "median_iat": float(np.median([r.iat for r in reports])),
                "median_ess": med_ess,
                "median_lag1": float(np.median([r.lag1 for r in reports])),
                "ess_per_sec": float(
                    np.median([r.ess / w for r, w in zip(reports, walls) if w > 0])
                ),
                "escape_median": "",
                "escape_censored": "",
                "winner": "0",
            }
        )

    esc = cfg.compare.escape
    if esc is not None:
        for idx, row in enumerate(rows):
            label = row["parametrization"]
            rng = RngStream(_mix(cfg.seed, 0xE5CA, idx), 0)
            if label == "interleaved":
                summary = _interleaved_escape(
                    model, esc.theta0, esc.radius, esc.max_iters, esc.replicates, rng
                )
            else:
                summary = escape_time(
                    model,
                    Parametrization.from_string(label),
                    esc.theta0,
                    esc.radius,
                    esc.max_iters,
                    esc.replicates,
                    rng,
                )
            row["escape_median"] = _fmt(summary.median)
            row["escape_censored"] = str(summary.censored)

    best = max(range(len(rows)), key=lambda i: rows[i]["ess_per_sec"])
    rows[best]["winner"] = "1"

    target = _out_dir_for(cfg)
    _write_csv(target / "compare.csv", COMPARE_COLUMNS, rows)
    return target


# ---------------------------------------------------------------------------
# figure6: joint density surface of the heavy-tailed chain
# ---------------------------------------------------------------------------

_FIG_LO, _FIG_HI, _FIG_STEP = -40.0, 40.0, 0.25


def figure6_grid():
    """Anchored log-posterior surface for the one-step heavy-tailed chain.

    The model is the Cauchy-observation direction with one observation at
    zero, unit observation scale, and prior variance five.  Values are the
    unnormalized log posterior shifted so the (0, 0) cell reads exactly
    zero.  Returns (axis, surface) with surface[i, j] at latent axis[i] and
    parameter axis[j].
    """
    model = HeavyTailHmmModel(
        [0.0], direction="cauchy-obs", sigma_x=math.sqrt(5.0), sigma_y=1.0
    )
    axis, surface = figure_surface(model, _FIG_LO, _FIG_HI, _FIG_STEP)
    anchor = int(np.flatnonzero(axis == 0.0)[0])
    return model, axis, surface - surface[anchor, anchor]


def figure6_checks(model, axis, surface) -> List[Tuple[str, bool, str]]:
    """Self-checks on the emitted grid; all must hold for a zero exit."""
    checks = []
    anchor = int(np.flatnonzero(axis == 0.0)[0])
    checks.append(
        (
            "anchor-zero",
            surface[anchor, anchor] == 0.0,
            f"value at origin cell = {float(surface[anchor, anchor])!r}",
        )
    )
    sym = float(np.max(np.abs(surface - surface[::-1, ::-1])))
    checks.append(("point-symmetry", sym <= 1e-10, f"max |f(x,t) - f(-x,-t)| = {sym:.3g}"))

    i30 = int(np.flatnonzero(axis == 30.0)[0])
    # ridge location: along the parameter axis the only theta-dependent term
    # is the Gaussian level prior, so the maximizer at latent 30 is theta=30
    ridge = float(axis[int(np.argmax(surface[i30, :]))])
    checks.append(
        ("ridge-at-30", abs(ridge - 30.0) <= 0.1, f"argmax over theta at x=30 is {ridge}")
    )
    # the latent conditional at theta=30 sits near 30 but is tilted toward
    # the data by the Cauchy term; compare against the exact mode, not 30
    mode_grid = float(axis[int(np.argmax(surface[:, i30]))])
    mode_exact = float(model.conditional_x_mode(30.0))
    checks.append(
        (
            "latent-mode",
            abs(mode_grid - mode_exact) <= _FIG_STEP,
            f"grid mode {mode_grid} vs exact conditional mode {mode_exact:.4f}",
        )
    )
    return checks


def cmd_figure6(out_path) -> int:
    """Write the density grid as tidy CSV and self-check it; 0 iff all pass."""
    model, axis, surface = figure6_grid()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["x,theta,log_density"]
    for i, x in enumerate(axis):
        xi = _fmt(x)
        row = surface[i]
        for j, t in enumerate(axis):
            lines.append(f"{xi},{_fmt(t)},{_fmt(row[j])}")
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    failed = 0
    for name, ok, detail in figure6_checks(model, axis, surface):
        print(f"[{'PASS' if ok else 'FAIL'}] figure6 {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# validate: brute-force conditional checks
# ---------------------------------------------------------------------------


def cmd_validate(seed: int = 0) -> int:
    """Print the pass/fail table of every fast oracle check; 0 iff clean."""
    from .validation import validate_all

    results = validate_all(seed=seed)
    failed = 0
    for res in results:
        print(res.line())
        failed += 1 if res.failed else 0
    print(f"{len(results)} checks, {failed} failed")
    return 0 if failed == 0 else 1
