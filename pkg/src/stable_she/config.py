"""Experiment configuration: JSON parsing, defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .model import GaussianBump, GridSpec, ModelParams

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "parse_config", "load_config_document"]

EXPERIMENTS = (
    "noise-check",
    "she-mean",
    "pde-convergence",
    "sampler-check",
    "duality-gap",
    "moments-martingale",
    "gronwall",
)

_DEFAULT_TIMES = {
    "she-mean": (0.1, 0.25),
    "duality-gap": (0.25,),
    "moments-martingale": (0.1, 0.2, 0.3, 0.4),
}

_DEFAULT_REPLICAS = {"noise-check": 100_000, "sampler-check": 100_000}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class NoiseSettings:
    lambdas: tuple[float, ...] = (0.25, 0.5, 1.0)
    eps: float = 1e-4
    t: float = 1.0
    area: float = 1.0


@dataclass(frozen=True)
class Allowances:
    gap: float = 0.02
    mean_field: float = 0.01
    abort_fraction: float = 0.01


@dataclass(frozen=True)
class GronwallSettings:
    gammas: tuple[float, ...] = (0.3, 0.6, 0.9)
    cs: tuple[float, ...] = (0.5, 1.0, 2.0)
    horizon: float = 1.0
    points: int = 100
    iterations: int = 50


@dataclass(frozen=True)
class PdeSettings:
    dts: tuple[float, ...] = (1e-3, 5e-4, 2.5e-4)
    duration: float = 0.25
    pairs: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 1
    replicas: int = 2000
    out: str = "results"
    model: ModelParams = field(default_factory=ModelParams)
    n_list: tuple[int, ...] = (4, 16, 64)
    output_times: tuple[float, ...] = (0.25,)
    phi: GaussianBump = field(default_factory=GaussianBump)
    psi: GaussianBump = field(default_factory=GaussianBump)
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    q: float = 1.3
    allowance: Allowances = field(default_factory=Allowances)
    gronwall: GronwallSettings = field(default_factory=GronwallSettings)
    pde: PdeSettings = field(default_factory=PdeSettings)

    def to_dict(self) -> dict:
        m = self.model
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "replicas": self.replicas,
            "out": self.out,
            "model": {
                "alpha": m.alpha,
                "beta": m.beta,
                "n": m.n,
                "eps_jump": m.eps_jump,
                "dt": m.dt,
                "horizon": m.horizon,
                "dual_scale": m.dual_scale,
                "grid": {"left": m.grid.left, "right": m.grid.right, "cells": m.grid.cells},
            },
            "n_list": list(self.n_list),
            "output_times": list(self.output_times),
            "phi": _bump_dict(self.phi),
            "psi": _bump_dict(self.psi),
            "noise": {
                "lambdas": list(self.noise.lambdas),
                "eps": self.noise.eps,
                "t": self.noise.t,
                "area": self.noise.area,
            },
            "q": self.q,
            "allowance": {
                "gap": self.allowance.gap,
                "mean_field": self.allowance.mean_field,
                "abort_fraction": self.allowance.abort_fraction,
            },
            "gronwall": {
                "gammas": list(self.gronwall.gammas),
                "cs": list(self.gronwall.cs),
                "horizon": self.gronwall.horizon,
                "points": self.gronwall.points,
                "iterations": self.gronwall.iterations,
            },
            "pde": {"dts": list(self.pde.dts), "duration": self.pde.duration, "pairs": self.pde.pairs},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def with_overrides(self, seed: int | None = None, replicas: int | None = None, out: str | None = None):
        doc = self.to_dict()
        if seed is not None:
            doc["seed"] = seed
        if replicas is not None:
            doc["replicas"] = replicas
        if out is not None:
            doc["out"] = out
        return _build(doc)


def _bump_dict(b: GaussianBump) -> dict:
    return {"shape": "gaussian", "center": b.center, "width": b.width, "mass": b.mass}


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _table(doc, path: str, allowed: set[str]) -> dict:
    if not isinstance(doc, dict):
        _fail(path or "<root>", "expected an object")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        _fail(f"{path + '.' if path else ''}{unknown[0]}", "unknown key")
    return doc


def _number(doc: dict, key: str, path: str, default, *, integer=False, positive=False, nonneg=False):
    p = f"{path}.{key}" if path else key
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(p, f"expected a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            _fail(p, f"expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
        if not math.isfinite(v):
            _fail(p, "must be finite")
    if positive and not v > 0:
        _fail(p, f"must be positive, got {v}")
    if nonneg and v < 0:
        _fail(p, f"must be nonnegative, got {v}")
    return v


def _number_list(doc: dict, key: str, path: str, default, *, integer=False, positive=False, nonneg=False):
    p = f"{path}.{key}" if path else key
    v = doc.get(key, default)
    if not isinstance(v, (list, tuple)) or len(v) == 0:
        _fail(p, "expected a nonempty list")
    return tuple(
        _number({f"{key}[{i}]": x}, f"{key}[{i}]", path, None, integer=integer, positive=positive, nonneg=nonneg)
        for i, x in enumerate(v)
    )


def _bump(doc, path: str) -> GaussianBump:
    d = _table(doc, path, {"shape", "center", "width", "mass"})
    shape = d.get("shape", "gaussian")
    if shape != "gaussian":
        _fail(f"{path}.shape", f"unsupported shape {shape!r}; only 'gaussian' is available")
    center = _number(d, "center", path, 0.0)
    width = _number(d, "width", path, 1.0, positive=True)
    mass = _number(d, "mass", path, 1.0, nonneg=True)
    return GaussianBump(center, width, mass)


def _build(doc) -> ExperimentConfig:
    top = _table(
        doc,
        "",
        {
            "experiment", "seed", "replicas", "out", "model", "n_list", "output_times", "phi", "psi",
            "noise", "q", "allowance", "gronwall", "pde",
        },
    )
    if "experiment" not in top:
        _fail("experiment", "missing")
    exp = top["experiment"]
    if exp not in EXPERIMENTS:
        _fail("experiment", f"unknown experiment {exp!r}; expected one of {', '.join(EXPERIMENTS)}")
    seed = _number(top, "seed", "", 1, integer=True, nonneg=True)
    if seed >= 2**64:
        _fail("seed", "must fit in 64 bits")
    replicas = _number(top, "replicas", "", _DEFAULT_REPLICAS.get(exp, 2000), integer=True, positive=True)
    out = top.get("out", "results")
    if not isinstance(out, str) or not out:
        _fail("out", "expected a nonempty string")
    times = _number_list(top, "output_times", "", _DEFAULT_TIMES.get(exp, (0.25,)), nonneg=True)
    if list(times) != sorted(set(times)):
        _fail("output_times", "must be strictly increasing")

    md = _table(top.get("model", {}), "model", {"alpha", "beta", "n", "eps_jump", "dt", "horizon", "dual_scale", "grid"})
    gd = _table(md.get("grid", {}), "model.grid", {"left", "right", "cells"})
    try:
        grid = GridSpec(
            _number(gd, "left", "model.grid", -10.0),
            _number(gd, "right", "model.grid", 10.0),
            _number(gd, "cells", "model.grid", 400, integer=True),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        _fail("model.grid", str(e))
    fields = {
        "alpha": _number(md, "alpha", "model", 1.5),
        "beta": _number(md, "beta", "model", 0.8),
        "n": _number(md, "n", "model", 16, integer=True),
        "eps_jump": _number(md, "eps_jump", "model", 1e-3),
        "dt": _number(md, "dt", "model", 1e-3),
        "horizon": _number(md, "horizon", "model", max(max(times), 0.25)),
        "dual_scale": _number(md, "dual_scale", "model", 1.0),
    }
    try:
        model = ModelParams(grid=grid, **fields)
    except ValueError as e:
        msg = str(e)
        key = next((k for k in ("alpha*beta", "alpha", "beta", "eps_jump", "dt", "horizon", "dual_scale", "n") if msg.startswith(k)), None)
        path = {"alpha*beta": "model.alpha", None: "model"}.get(key, f"model.{key}")
        _fail(path, msg)
    for i, t in enumerate(times):
        if t > model.horizon + 1e-12:
            _fail(f"output_times[{i}]", f"{t} exceeds model.horizon {model.horizon}")
        k = round(t / model.dt)
        if abs(k * model.dt - t) > 1e-9 * max(1.0, t):
            _fail(f"output_times[{i}]", f"{t} is not a multiple of model.dt {model.dt}")

    n_list = _number_list(top, "n_list", "", (4, 16, 64), integer=True, positive=True)
    if list(n_list) != sorted(set(n_list)):
        _fail("n_list", "must be strictly increasing")

    nd = _table(top.get("noise", {}), "noise", {"lambdas", "eps", "t", "area"})
    noise = NoiseSettings(
        _number_list(nd, "lambdas", "noise", (0.25, 0.5, 1.0), nonneg=True),
        _number(nd, "eps", "noise", 1e-4, positive=True),
        _number(nd, "t", "noise", 1.0, positive=True),
        _number(nd, "area", "noise", 1.0, positive=True),
    )
    q = _number(top, "q", "", 1.3)
    if not 1.0 < q < model.alpha:
        _fail("q", f"must lie in (1, alpha = {model.alpha}), got {q}")
    ad = _table(top.get("allowance", {}), "allowance", {"gap", "mean_field", "abort_fraction"})
    allowance = Allowances(
        _number(ad, "gap", "allowance", 0.02, nonneg=True),
        _number(ad, "mean_field", "allowance", 0.01, nonneg=True),
        _number(ad, "abort_fraction", "allowance", 0.01, nonneg=True),
    )
    grd = _table(top.get("gronwall", {}), "gronwall", {"gammas", "cs", "horizon", "points", "iterations"})
    gron = GronwallSettings(
        _number_list(grd, "gammas", "gronwall", (0.3, 0.6, 0.9), positive=True),
        _number_list(grd, "cs", "gronwall", (0.5, 1.0, 2.0), positive=True),
        _number(grd, "horizon", "gronwall", 1.0, positive=True),
        _number(grd, "points", "gronwall", 100, integer=True, positive=True),
        _number(grd, "iterations", "gronwall", 50, integer=True, positive=True),
    )
    for i, g in enumerate(gron.gammas):
        if not g < 1:
            _fail(f"gronwall.gammas[{i}]", f"must lie in (0, 1), got {g}")
    pdd = _table(top.get("pde", {}), "pde", {"dts", "duration", "pairs"})
    pde = PdeSettings(
        _number_list(pdd, "dts", "pde", (1e-3, 5e-4, 2.5e-4), positive=True),
        _number(pdd, "duration", "pde", 0.25, positive=True),
        _number(pdd, "pairs", "pde", 100, integer=True, positive=True),
    )
    if len(pde.dts) < 3:
        _fail("pde.dts", "self-convergence needs at least three step sizes")

    return ExperimentConfig(
        experiment=exp,
        seed=seed,
        replicas=replicas,
        out=out,
        model=model,
        n_list=n_list,
        output_times=times,
        phi=_bump(top.get("phi", {}), "phi"),
        psi=_bump(top.get("psi", {}), "psi"),
        noise=noise,
        q=q,
        allowance=allowance,
        gronwall=gron,
        pde=pde,
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration.

    Raises
    ------
    ConfigError
        On malformed JSON, unknown keys or constraint violations; the message
        names the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"<document>: malformed JSON ({e})") from None
    return _build(doc)


def load_config_document(text: str) -> ExperimentConfig:
    """Accept either a configuration or a run manifest (whose ``config`` entry is used)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"<document>: malformed JSON ({e})") from None
    if isinstance(doc, dict) and "manifest_version" in doc:
        if "config" not in doc:
            _fail("config", "manifest carries no config")
        doc = doc["config"]
    return _build(doc)
