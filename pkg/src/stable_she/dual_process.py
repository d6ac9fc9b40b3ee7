"""Paths of the truncated dual jump process.

Between jumps the state follows the dual flow. An internal clock
``tau(r) = kappa int_0^r ||Z_s||_alpha^alpha ds`` (``kappa = dual_scale``)
is compared against partial sums of exponential waiting times; when it
crosses one, the crossing time is located inside the current step, the flow
is advanced to it, and an atom of Pareto height at an ``alpha``-weighted
location is added. Paths stop at ``t_end`` or when the internal clock
reaches ``k_n = ln n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .dual_pde import PdeSegment, _strang
from .heat import SemigroupPlan
from .model import Field, ModelParams
from .summary import MCSummary

__all__ = [
    "sample_waiting_time",
    "sample_jump_height",
    "jump_height_from_uniform",
    "sample_jump_location",
    "location_probabilities",
    "simulate_dual_path",
    "dual_exp_pairing_estimator",
    "DualTrajectory",
    "JumpRecord",
    "EXTINCTION_MASS",
]

EXTINCTION_MASS = 1e-12


def sample_waiting_time(params: ModelParams, rng: np.random.Generator) -> float:
    """Exponential internal-clock waiting time with rate ``params.clock_rate``."""
    return float(rng.exponential(1.0 / params.clock_rate))


def jump_height_from_uniform(n: int, alphabeta: float, u):
    """Inverse tail ``(1/n) u^(-1/(alpha beta))``, so that ``P(S >= b) = (n b)^(-alpha beta)``."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u > 1.0)):
        raise ValueError("uniforms must lie in (0, 1]")
    out = u ** (-1.0 / alphabeta) / n
    return float(out) if out.ndim == 0 else out


def sample_jump_height(params: ModelParams, rng: np.random.Generator) -> float:
    """Pareto jump height supported on ``[1/n, inf)``."""
    return jump_height_from_uniform(params.n, params.alphabeta, 1.0 - rng.random())


def location_probabilities(z: Field, alpha: float) -> NDArray[np.float64]:
    w = np.abs(z.values) ** alpha
    total = w.sum()
    if not total > 0:
        raise ValueError("location law is undefined for a zero field")
    return w / total


def _location_index(values: NDArray[np.float64], alpha: float, rng: np.random.Generator) -> int:
    w = np.abs(values) ** alpha
    cdf = np.cumsum(w)
    total = cdf[-1]
    if not total > 0:
        raise ValueError("location law is undefined for a zero field")
    u = rng.random() * total
    idx = int(np.searchsorted(cdf, u, side="right"))
    # guards u landing on the last edge through roundoff
    return min(idx, values.size - 1)


def sample_jump_location(z: Field, rng: np.random.Generator, alpha: float = 1.5) -> float:
    """Cell centre drawn with probability proportional to ``z_i^alpha``."""
    return float(z.grid.centers[_location_index(z.values, alpha, rng)])


@dataclass(frozen=True)
class JumpRecord:
    time: float
    tau: float
    clock: float
    height: float
    location: float
    cell: int


@dataclass
class DualTrajectory:
    """One dual path. ``tau_times``/``tau_values`` sample the internal clock after every step."""

    params: ModelParams
    t_end: float
    jumps: list[JumpRecord]
    tau_times: NDArray[np.float64]
    tau_values: NDArray[np.float64]
    max_norm: float
    stopped: bool
    stop_time: float
    extinct: bool
    final: Field
    segments: list[PdeSegment] = field(default_factory=list)

    @property
    def jump_count(self) -> int:
        return len(self.jumps)

    def tau_at_jumps(self) -> NDArray[np.float64]:
        return np.array([j.tau for j in self.jumps])

    def clocks(self) -> NDArray[np.float64]:
        return np.array([j.clock for j in self.jumps])


class _ClockStream:
    def __init__(self, params: ModelParams, rng: np.random.Generator, waits=None):
        self.params = params
        self.rng = rng
        self.waits = None if waits is None else iter(waits)
        self.value = self._draw()

    def _draw(self) -> float:
        if self.waits is not None:
            return float(next(self.waits))
        return sample_waiting_time(self.params, self.rng)

    def advance(self):
        self.value += self._draw()


def _crossing_fraction(a0: float, a1: float, h: float, kappa: float, need: float) -> float:
    """Smallest ``s`` in ``(0, h]`` with ``kappa (a0 s + (a1 - a0) s^2 / (2h)) = need``.

    The integrand is the linear interpolant of the norm, matching the
    trapezoidal trace; the quadratic is solved in closed form.
    """
    need = need / kappa
    if need <= 0.0:
        return 0.0
    qa = (a1 - a0) / (2.0 * h)
    if abs(qa) * h < 1e-14 * max(a0, 1e-300):
        s = need / a0 if a0 > 0 else h
    else:
        disc = max(a0 * a0 + 4.0 * qa * need, 0.0)
        # cancellation-free root of qa s^2 + a0 s - need = 0
        s = 2.0 * need / (a0 + math.sqrt(disc))
    return min(max(s, 0.0), h)


def simulate_dual_path(
    psi: Field,
    t_end: float,
    params: ModelParams,
    rng: np.random.Generator,
    plan: SemigroupPlan | None = None,
    record_segments: bool = False,
    waits=None,
) -> DualTrajectory:
    """Simulate one dual trajectory from ``psi`` up to ``min(t_end, gamma(k_n))``.

    Parameters
    ----------
    psi : Field
        Nonnegative initial state.
    t_end : float
        Real-time horizon.
    params : ModelParams
        Supplies ``n``, ``dt``, ``alpha``, ``beta`` and ``dual_scale``.
    rng : numpy.random.Generator
        Stream owned by this trajectory.
    record_segments : bool
        Keep every jump-free segment (start field and step list) for replay checks.
    waits : iterable of float, optional
        Override the exponential waiting times (testing hook).

    Returns
    -------
    DualTrajectory
    """
    if np.any(psi.values < 0):
        raise ValueError("initial state must be nonnegative")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    plan = plan or SemigroupPlan(psi.grid)
    grid = psi.grid
    dx = grid.dx
    alpha = params.alpha
    kappa = params.dual_scale
    sink = params.sink
    dt = params.dt
    k_n = params.k_n
    clock = _ClockStream(params, rng, waits)

    v = np.array(psi.values)
    a0 = float(np.sum(v**alpha)) * dx
    r = 0.0
    tau = 0.0
    jumps: list[JumpRecord] = []
    tau_times = [0.0]
    tau_values = [0.0]
    max_norm = a0
    stopped = False
    extinct = float(np.sum(v)) * dx < EXTINCTION_MASS
    stop_time = t_end
    segments: list[PdeSegment] = []
    seg_start = Field(grid, v)
    seg_steps: list[float] = []
    seg_norms: list[float] = []

    def close_segment(end_values):
        if record_segments:
            steps = np.array(seg_steps)
            segments.append(
                PdeSegment(
                    start=seg_start,
                    duration=float(np.sum(steps)),
                    steps=steps,
                    times=np.cumsum(steps),
                    norms=np.array(seg_norms),
                    initial_norm=float(np.sum(seg_start.values**alpha)) * dx,
                    final=Field(grid, end_values),
                )
            )

    while not extinct and t_end - r > 1e-14 * max(1.0, t_end):
        h = min(dt, t_end - r)
        v1 = _strang(v, h, sink, alpha, plan)
        a1 = float(np.sum(v1**alpha)) * dx
        inc = kappa * 0.5 * h * (a0 + a1)
        target = min(clock.value, k_n)
        if tau + inc < target:
            r += h
            v, a0, tau = v1, a1, tau + inc
            seg_steps.append(h)
            seg_norms.append(a1)
        else:
            s = _crossing_fraction(a0, a1, h, kappa, target - tau)
            if s > 0.0:
                vs = _strang(v, s, sink, alpha, plan)
                a_s = float(np.sum(vs**alpha)) * dx
                tau += kappa * 0.5 * s * (a0 + a_s)
                r += s
                v, a0 = vs, a_s
                seg_steps.append(s)
                seg_norms.append(a_s)
            tau_times.append(r)
            tau_values.append(tau)
            max_norm = max(max_norm, a0)
            if clock.value > k_n:
                stopped, stop_time = True, r
                break
            if float(np.sum(v)) * dx < EXTINCTION_MASS or not np.any(v > 0.0):
                extinct = True
                break
            close_segment(v)
            cell = _location_index(v, alpha, rng)
            height = sample_jump_height(params, rng)
            jumps.append(JumpRecord(r, tau, clock.value, height, float(grid.centers[cell]), cell))
            v = np.array(v)
            v[cell] += height / dx
            a0 = float(np.sum(v**alpha)) * dx
            max_norm = max(max_norm, a0)
            clock.advance()
            seg_start = Field(grid, v)
            seg_steps = []
            seg_norms = []
            continue
        tau_times.append(r)
        tau_values.append(tau)
        max_norm = max(max_norm, a0)
        if float(np.sum(v)) * dx < EXTINCTION_MASS:
            extinct = True
    close_segment(v)
    return DualTrajectory(
        params=params,
        t_end=float(t_end),
        jumps=jumps,
        tau_times=np.array(tau_times),
        tau_values=np.array(tau_values),
        max_norm=max_norm,
        stopped=stopped,
        stop_time=stop_time if stopped else float(t_end),
        extinct=extinct,
        final=Field(grid, v),
        segments=segments,
    )


def dual_exp_pairing_estimator(trajectories, phi: Field, seed: int = 0) -> MCSummary:
    """Monte Carlo estimate of ``E exp(-<phi, Z_final>)``."""
    vals = np.array([math.exp(-np.dot(tr.final.values, phi.values) * phi.grid.dx) for tr in trajectories])
    return MCSummary.from_samples(vals, seed=seed)
