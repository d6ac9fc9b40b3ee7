"""Euler scheme for the stable-noise heat equation in thinned mild form.

Each step draws, per cell, a Poisson number of Levy jumps above ``eps`` with
intensity proportional to ``y^(alpha beta)`` (value at the start of the step),
deposits them as cell densities, subtracts the matching compensator, clamps
at zero and applies the heat flow for one step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .heat import SemigroupPlan
from .model import Field, GaussianBump, ModelParams, integrate
from .noise import m0_first_moment_tail, m0_tail_mass
from .summary import MCSummary

__all__ = [
    "PathSample",
    "simulate_y_step",
    "simulate_y_path",
    "exp_pairing_estimator",
    "step_count",
    "BLOWUP_FACTOR",
]

BLOWUP_FACTOR = 1e6


def step_count(t: float, dt: float) -> int:
    """Number of steps of size ``dt`` reaching ``t``; ``t`` must be a multiple of ``dt``."""
    k = int(round(t / dt))
    if abs(k * dt - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"time {t} is not a multiple of the step {dt}")
    return k


class _StepKernel:
    """Per-grid constants for the Euler step, computed once per path."""

    def __init__(self, params: ModelParams, dt: float, eps: float, plan: SemigroupPlan | None = None):
        self.dt = dt
        self.dx = params.grid.dx
        self.cells = params.grid.cells
        self.alpha = params.alpha
        self.ab = params.alphabeta
        self.eps = eps
        self.rate = dt * self.dx * m0_tail_mass(eps, self.alpha) if math.isfinite(eps) else 0.0
        self.drift = dt * m0_first_moment_tail(eps, self.alpha) if math.isfinite(eps) else 0.0
        self.plan = plan or SemigroupPlan(params.grid)

    def advance(self, y: NDArray[np.float64], rng: np.random.Generator) -> tuple[NDArray[np.float64], float]:
        """One step; returns the new values and the clamped (removed) mass."""
        thin = y**self.ab
        work = y.copy()
        if self.rate > 0.0:
            counts = rng.poisson(self.rate * thin)
            total = int(counts.sum())
            if total:
                u = 1.0 - rng.random(total)
                sizes = self.eps * u ** (-1.0 / self.alpha)
                cells = np.repeat(np.arange(self.cells), counts)
                work += np.bincount(cells, weights=sizes, minlength=self.cells) / self.dx
            work -= self.drift * thin
        neg = work < 0.0
        clamped = 0.0
        if neg.any():
            clamped = -float(work[neg].sum()) * self.dx
            work[neg] = 0.0
        return self.plan.apply(work, self.dt), clamped


def simulate_y_step(
    y: Field,
    dt: float,
    eps: float,
    rng: np.random.Generator,
    params: ModelParams | None = None,
) -> Field:
    """One explicit step of the thinned mild form.

    Parameters
    ----------
    y : Field
        Current nonnegative state.
    dt : float
        Step length.
    eps : float
        Jump cutoff; ``inf`` switches the noise off.
    rng : numpy.random.Generator
        Stream for this replica.
    params : ModelParams, optional
        Supplies ``alpha`` and ``beta``; defaults to the standard model on ``y.grid``.

    Returns
    -------
    Field
    """
    if params is None:
        params = ModelParams(grid=y.grid, dt=min(1e-3, 0.5 * y.grid.dx**2))
    if np.any(y.values < 0):
        raise ValueError("state must be nonnegative")
    out, _ = _StepKernel(params, dt, eps).advance(np.array(y.values), rng)
    return Field(y.grid, out)


@dataclass
class PathSample:
    """Snapshots of one replica of the stable-noise heat equation.

    ``drift_integral[j]`` is the left-point Riemann sum of
    ``exp(-<Y,psi>)(-<Y, psi''/2> + <Y^(alpha beta), psi^alpha>)`` up to
    ``times[j]`` when a test function was tracked; empty otherwise.
    ``clamp_fraction`` is the largest per-step clamped mass relative to the
    mass at the start of that step.
    """

    params: ModelParams
    times: NDArray[np.float64]
    fields: list[Field]
    clamp_log: NDArray[np.float64]
    aborted: bool = False
    abort_step: int = -1
    drift_integral: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    clamp_fraction: float = 0.0

    def field_at(self, t: float) -> Field:
        idx = np.nonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))[0]
        if idx.size == 0:
            raise KeyError(f"time {t} was not stored; stored times are {list(self.times)}")
        return self.fields[int(idx[0])]

    def martingale_residual(self, psi: Field, t: float) -> float:
        """``M_t(psi) = e^{-<Y_t,psi>} - e^{-<Y_0,psi>} - drift integral up to t``."""
        j = int(np.nonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))[0][0])
        y0 = np.dot(self.fields[0].values, psi.values) * psi.grid.dx
        yt = np.dot(self.fields[j].values, psi.values) * psi.grid.dx
        return math.exp(-yt) - math.exp(-y0) - float(self.drift_integral[j])


def simulate_y_path(
    phi: Field,
    params: ModelParams,
    rng: np.random.Generator,
    output_times=None,
    psi: GaussianBump | None = None,
    plan: SemigroupPlan | None = None,
) -> PathSample:
    """Run one replica from ``phi`` to the last output time.

    Parameters
    ----------
    phi : Field
        Nonnegative initial density.
    params : ModelParams
        Model; ``params.dt`` and ``params.eps_jump`` drive the scheme.
    rng : numpy.random.Generator
        Stream owned by this replica.
    output_times : sequence of float, optional
        Snapshot times, multiples of ``dt``; defaults to ``[horizon]``. Time 0 is always stored.
    psi : GaussianBump, optional
        Test function whose martingale drift integral is accumulated.

    Returns
    -------
    PathSample
        Aborted (and truncated at the abort step) when the total mass exceeds
        ``BLOWUP_FACTOR`` times the initial mass.
    """
    if np.any(phi.values < 0):
        raise ValueError("initial condition must be nonnegative")
    grid = phi.grid
    dt = params.dt
    if output_times is None:
        output_times = [params.horizon]
    times = sorted({0.0, *map(float, output_times)})
    steps = [step_count(t, dt) for t in times]
    kernel = _StepKernel(params, dt, params.eps_jump, plan)
    y = np.array(phi.values)
    limit = BLOWUP_FACTOR * integrate(phi)
    dx = grid.dx
    tracking = psi is not None
    if tracking:
        psi_v = psi.density(grid.centers)
        half_lap = 0.5 * psi.laplacian(grid.centers)
        psi_pow = psi_v**params.alpha
    fields = [Field(grid, y)]
    drift = [0.0]
    acc = 0.0
    clamp_log = np.zeros(steps[-1])
    next_out = 1
    aborted = False
    abort_step = -1
    worst_clamp = 0.0
    for k in range(steps[-1]):
        mass = float(np.sum(y)) * dx
        if tracking:
            pair = float(np.dot(y, psi_v)) * dx
            gen = -float(np.dot(y, half_lap)) * dx + float(np.dot(y**params.alphabeta, psi_pow)) * dx
            acc += dt * math.exp(-pair) * gen
        y, clamp_log[k] = kernel.advance(y, rng)
        if clamp_log[k] > 0.0:
            worst_clamp = max(worst_clamp, clamp_log[k] / mass)
        if np.sum(y) * dx > limit:
            aborted, abort_step = True, k + 1
            break
        while next_out < len(steps) and steps[next_out] == k + 1:
            fields.append(Field(grid, y))
            drift.append(acc)
            next_out += 1
    stored = len(fields)
    return PathSample(
        params=params,
        times=np.array(times[:stored]),
        fields=fields,
        clamp_log=clamp_log if not aborted else clamp_log[:abort_step],
        aborted=aborted,
        abort_step=abort_step,
        drift_integral=np.array(drift) if tracking else np.zeros(0),
        clamp_fraction=worst_clamp,
    )


def exp_pairing_estimator(paths, psi: Field, t: float, seed: int = 0):
    """Monte Carlo estimate of ``E exp(-<Y_t, psi>)`` over non-aborted replicas."""
    paths = list(paths)
    good = [p for p in paths if not p.aborted]
    vals = np.array([math.exp(-np.dot(p.field_at(t).values, psi.values) * psi.grid.dx) for p in good])
    return MCSummary.from_samples(vals, seed=seed, aborted=len(paths) - len(good))
