"""Monte Carlo experiments, worker fan-out and the analytic utilities they report.

Every replica owns one RNG stream ``(seed, stream)``. Stream ranges are
disjoint between experiment roles, so the stable-noise replicas and the dual
replicas are independent. Results are gathered in replica-index order, which
makes every reduction independent of the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats

from .config import ExperimentConfig
from .dual_pde import reaction_substep, segment_steps, solve_segment
from .dual_process import (
    DualTrajectory,
    dual_exp_pairing_estimator,
    location_probabilities,
    sample_jump_height,
    sample_jump_location,
    sample_waiting_time,
    simulate_dual_path,
)
from .heat import SemigroupPlan, apply_semigroup
from .model import Field, GaussianBump, GridSpec, ModelParams, RngStream
from .noise import laplace_bias_bound, laplace_functional_target, sample_noise_increment
from .she import PathSample, exp_pairing_estimator, simulate_y_path
from .summary import MCSummary

__all__ = [
    "MCSummary",
    "GapReport",
    "GapExperiment",
    "NoiseRow",
    "CheckRow",
    "GronwallBound",
    "gronwall_bound",
    "picard_oracle",
    "g_function",
    "g_bound",
    "theory_scale",
    "parallel_map",
    "simulate_y_ensemble",
    "simulate_dual_ensemble",
    "noise_samples",
    "run_noise_check",
    "run_she_mean",
    "run_pde_convergence",
    "run_sampler_check",
    "run_gap_experiment",
    "run_moment_and_martingale_suite",
    "run_gronwall_check",
    "Y_STREAMS",
    "Z_STREAMS",
]

# disjoint stream ranges per role
Y_STREAMS = 0
Z_STREAMS = 1 << 40
NOISE_STREAMS = 1 << 48
SAMPLER_STREAMS = 1 << 50
TIME_CHANGE_STREAMS = 1 << 52
PDE_STREAMS = 1 << 54

_CHUNK = 25


def parallel_map(func, tasks, workers: int = 1) -> list:
    """``[func(t) for t in tasks]``, optionally on a process pool; order is preserved."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def _chunks(count: int, size: int = _CHUNK):
    return [(a, min(a + size, count)) for a in range(0, count, size)]


def _flatten(parts):
    return [x for part in parts for x in part]


# ---------------------------------------------------------------- ensembles


def _y_chunk(task):
    phi, psi, params, times, seed, base, a, b = task
    grid = params.grid
    plan = SemigroupPlan(grid)
    phi_f = phi.field(grid)
    return [
        simulate_y_path(phi_f, params, RngStream(seed, base + i).generator(), times, psi=psi, plan=plan)
        for i in range(a, b)
    ]


def simulate_y_ensemble(
    phi: GaussianBump,
    params: ModelParams,
    output_times,
    replicas: int,
    seed: int,
    workers: int = 1,
    psi: GaussianBump | None = None,
) -> list[PathSample]:
    """Replicas ``0..replicas-1`` of the stable-noise heat equation, in index order."""
    times = tuple(float(t) for t in output_times)
    tasks = [(phi, psi, params, times, seed, Y_STREAMS, a, b) for a, b in _chunks(replicas)]
    return _flatten(parallel_map(_y_chunk, tasks, workers))


def _z_chunk(task):
    psi, params, t_end, seed, base, a, b = task
    grid = params.grid
    plan = SemigroupPlan(grid)
    psi_f = psi.field(grid)
    return [simulate_dual_path(psi_f, t_end, params, RngStream(seed, base + i).generator(), plan=plan) for i in range(a, b)]


def dual_stream_base(index: int) -> int:
    """First stream of the dual replicas for the ``index``-th truncation level."""
    return Z_STREAMS + (index << 32)


def simulate_dual_ensemble(
    psi: GaussianBump,
    params: ModelParams,
    t_end: float,
    replicas: int,
    seed: int,
    stream_base: int,
    workers: int = 1,
) -> list[DualTrajectory]:
    tasks = [(psi, params, t_end, seed, stream_base, a, b) for a, b in _chunks(replicas)]
    return _flatten(parallel_map(_z_chunk, tasks, workers))


def _noise_chunk(task):
    volume, eps, alpha, seed, a, b = task
    return np.array(
        [sample_noise_increment(volume, eps, RngStream(seed, NOISE_STREAMS + i).generator(), alpha) for i in range(a, b)]
    )


def noise_samples(volume: float, eps: float, alpha: float, replicas: int, seed: int, workers: int = 1) -> np.ndarray:
    """Independent truncated noise increments, one stream per replica."""
    tasks = [(volume, eps, alpha, seed, a, b) for a, b in _chunks(replicas, 1000)]
    return np.concatenate(parallel_map(_noise_chunk, tasks, workers))


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class CheckRow:
    """One named assertion: ``value`` compared against ``threshold``."""

    check: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NoiseRow:
    lam: float
    empirical: float
    target: float
    se: float
    bias_bound: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def theory_scale(n: int, alpha: float, beta: float) -> float:
    """Gap envelope shape ``n^(-(alpha - alpha beta)/2) ln n``."""
    return n ** (-(alpha - alpha * beta) / 2.0) * math.log(n)


@dataclass(frozen=True)
class GapReport:
    n: int
    y_side: MCSummary
    z_side: MCSummary
    gap: float
    combined_se: float
    theory_scale: float
    passed: bool

    @classmethod
    def build(cls, n, y_side: MCSummary, z_side: MCSummary, alpha, beta, allowance) -> GapReport:
        gap = abs(y_side.estimate - z_side.estimate)
        cse = math.hypot(y_side.std_error, z_side.std_error)
        return cls(n, y_side, z_side, gap, cse, theory_scale(n, alpha, beta), gap <= 3.0 * cse + allowance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["y_side"] = self.y_side.to_dict()
        d["z_side"] = self.z_side.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GapReport:
        return cls(
            int(d["n"]),
            MCSummary.from_dict(d["y_side"]),
            MCSummary.from_dict(d["z_side"]),
            float(d["gap"]),
            float(d["combined_se"]),
            float(d["theory_scale"]),
            bool(d["passed"]),
        )


@dataclass
class GapExperiment:
    """Gap reports across ``n`` plus the cross-``n`` checks."""

    reports: list[GapReport]
    monotone: bool
    y_identical: bool
    dual_trajectories: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.monotone and self.y_identical and all(r.passed for r in self.reports)


# ---------------------------------------------------------------- noise law


def run_noise_check(cfg: ExperimentConfig, workers: int = 1, samples: np.ndarray | None = None) -> list[NoiseRow]:
    """Empirical Laplace transform of the truncated noise against ``exp(lam^alpha t |A|)``.

    ``samples`` may carry precomputed increments for the configured box.
    """
    alpha = cfg.model.alpha
    volume = cfg.noise.t * cfg.noise.area
    if samples is None:
        samples = noise_samples(volume, cfg.noise.eps, alpha, cfg.replicas, cfg.seed, workers)
    rows = []
    for lam in cfg.noise.lambdas:
        vals = np.exp(-lam * samples)
        s = MCSummary.from_samples(vals, seed=cfg.seed)
        target = laplace_functional_target(lam, cfg.noise.t, cfg.noise.area, alpha)
        bias = laplace_bias_bound(lam, volume, cfg.noise.eps, alpha)
        ok = abs(s.estimate - target) <= 3.0 * s.std_error + bias
        rows.append(NoiseRow(lam, s.estimate, target, s.std_error, bias, bool(ok)))
    return rows


# ---------------------------------------------------------------- mean field


def mean_field_rows(paths: list[PathSample], phi: Field, times, allowance: float) -> list[CheckRow]:
    """Cell-wise ``|mean Y_t - P_t phi| <= 3 SE + allowance``; value is the worst excess."""
    good = [p for p in paths if not p.aborted]
    rows = []
    for t in times:
        stack = np.stack([p.field_at(t).values for p in good])
        mean = stack.mean(axis=0)
        se = stack.std(axis=0, ddof=1) / math.sqrt(stack.shape[0])
        ref = apply_semigroup(phi, t).values
        excess = np.abs(mean - ref) - 3.0 * se
        worst = float(excess.max())
        rows.append(CheckRow(f"mean_field_t={t:g}", worst, allowance, worst <= allowance))
    return rows


def clamp_fraction(paths: list[PathSample]) -> float:
    """Largest per-step clamped mass relative to the current mass, over all replicas."""
    return max((p.clamp_fraction for p in paths), default=0.0)


def run_she_mean(cfg: ExperimentConfig, workers: int = 1, paths=None) -> tuple[list[CheckRow], list[PathSample]]:
    params = cfg.model
    if paths is None:
        paths = simulate_y_ensemble(cfg.phi, params, cfg.output_times, cfg.replicas, cfg.seed, workers, psi=cfg.psi)
    phi = cfg.phi.field(params.grid)
    return mean_field_rows(paths, phi, cfg.output_times, cfg.allowance.mean_field), paths


# ---------------------------------------------------------------- PDE checks


def _rk4_reaction(v0: float, c: float, dt: float, alpha: float, substeps: int) -> float:
    h = dt / substeps
    v = v0
    f = lambda x: -c * max(x, 0.0) ** alpha  # noqa: E731
    for _ in range(substeps):
        k1 = f(v)
        k2 = f(v + 0.5 * h * k1)
        k3 = f(v + 0.5 * h * k2)
        k4 = f(v + h * k3)
        v += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return v


def heat_path_error(v0: Field, duration: float, dt: float, alpha: float, plan: SemigroupPlan) -> float:
    """Sup distance between the zero-sink solver path and the heat flow, step by step.

    Both are advanced over the same step sequence; the solver is restarted
    from the heat iterate at each step so that every step is compared.
    """
    v = v0
    worst = 0.0
    for h in segment_steps(duration, dt):
        a = solve_segment(v, h, dt, 0.0, alpha, plan).final
        b = apply_semigroup(v, h, plan)
        worst = max(worst, float(np.abs(a.values - b.values).max()))
        v = b
    return worst


def observed_orders(solutions) -> list[float]:
    """Richardson orders ``log2(|u_h - u_h/2| / |u_h/2 - u_h/4|)`` in sup norm."""
    diffs = [float(np.abs(a - b).max()) for a, b in zip(solutions[:-1], solutions[1:])]
    return [math.log2(d0 / d1) for d0, d1 in zip(diffs[:-1], diffs[1:])]


def run_pde_convergence(cfg: ExperimentConfig) -> list[CheckRow]:
    """Solver checks: heat degeneration, exact reaction, Strang order, comparison and positivity."""
    params = cfg.model
    grid = params.grid
    alpha = params.alpha
    plan = SemigroupPlan(grid)
    sink = params.sink
    v0 = cfg.psi.field(grid)
    rows = []

    err = heat_path_error(v0, cfg.pde.duration, params.dt, alpha, plan)
    rows.append(CheckRow("heat_degeneration_sup", err, 1e-10, err <= 1e-10))

    worst = 0.0
    for v, c, h in [(1.0, 1.0, 1.0), (0.3, 2.5, 0.01), (5.0, sink, params.dt), (2.0, 0.7, 0.2)]:
        exact = reaction_substep(Field(grid, np.full(grid.cells, v)), c, h, alpha).values[0]
        worst = max(worst, abs(float(exact) - _rk4_reaction(v, c, h, alpha, 1000)))
    rows.append(CheckRow("reaction_vs_rk4", worst, 1e-8, worst <= 1e-8))

    sols = [solve_segment(v0, cfg.pde.duration, h, sink, alpha, plan).final.values for h in cfg.pde.dts]
    order = min(observed_orders(sols))
    rows.append(CheckRow("strang_order", order, 1.8, order >= 1.8))

    rng = RngStream(cfg.seed, PDE_STREAMS).generator()
    violations = 0
    for _ in range(cfg.pde.pairs):
        lo, hi = random_ordered_pair(grid, rng)
        a = solve_segment(Field(grid, lo), 0.05, params.dt, sink, alpha, plan).final.values
        b = solve_segment(Field(grid, hi), 0.05, params.dt, sink, alpha, plan).final.values
        violations += int(np.any(a > b) or np.any(a < 0) or np.any(b < 0))
    rows.append(CheckRow("comparison_violations", float(violations), 0.0, violations == 0))
    return rows


def random_ordered_pair(grid: GridSpec, rng: np.random.Generator):
    """Two nonnegative fields with ``lo <= hi`` cell-wise: random bumps plus random cell noise."""
    x = grid.centers
    hi = np.zeros(grid.cells)
    for _ in range(3):
        c = rng.uniform(-4, 4)
        w = rng.uniform(0.2, 1.5)
        hi += rng.uniform(0.1, 3.0) * np.exp(-0.5 * ((x - c) / w) ** 2)
    hi += rng.uniform(0, 0.5, grid.cells) * (np.abs(x) < 5)
    lo = hi * rng.uniform(0.0, 1.0, grid.cells)
    return lo, hi


# ---------------------------------------------------------------- samplers


def run_sampler_check(cfg: ExperimentConfig, workers: int = 1, time_change_trajectories: int = 200) -> list[CheckRow]:
    """Dual samplers against their closed-form laws, plus the time-change inverse identity."""
    params = cfg.model
    draws = cfg.replicas
    rows = []
    rng = RngStream(cfg.seed, SAMPLER_STREAMS).generator()
    n, ab = params.n, params.alphabeta
    heights = np.array([sample_jump_height(params, rng) for _ in range(draws)])
    ks = scipy.stats.kstest(heights, lambda b: 1.0 - np.clip(n * b, 1.0, None) ** (-ab))
    rows.append(CheckRow("jump_height_ks_p", float(ks.pvalue), 0.01, ks.pvalue > 0.01))
    rows.append(CheckRow("jump_height_min_times_n", float(heights.min() * n), 1.0, heights.min() * n >= 1.0))

    rng = RngStream(cfg.seed, SAMPLER_STREAMS + 1).generator()
    waits = np.array([sample_waiting_time(params, rng) for _ in range(draws)])
    mean_ref = math.gamma(2.0 - ab) / (n**ab * (ab - 1.0))
    z = abs(waits.mean() - mean_ref) / (waits.std(ddof=1) / math.sqrt(draws))
    rows.append(CheckRow("waiting_time_mean_z", float(z), 3.0, z <= 3.0))

    grid = params.grid
    two = np.zeros(grid.cells)
    two[grid.cells // 2] = 1.0
    two[grid.cells // 2 + 1] = 2.0
    zf = Field(grid, two)
    rng = RngStream(cfg.seed, SAMPLER_STREAMS + 2).generator()
    locs = np.array([sample_jump_location(zf, rng, params.alpha) for _ in range(draws)])
    second = int(np.sum(locs == grid.centers[grid.cells // 2 + 1]))
    probs = location_probabilities(zf, params.alpha)[grid.cells // 2 : grid.cells // 2 + 2]
    chi = scipy.stats.chisquare([draws - second, second], draws * probs)
    rows.append(CheckRow("location_chi2_p", float(chi.pvalue), 0.01, chi.pvalue > 0.01))

    worst = time_change_worst_ratio(cfg, time_change_trajectories, workers)
    rows.append(CheckRow("time_change_worst_ratio", worst, 1.0, worst <= 1.0))
    return rows


def time_change_ratios(trajectories) -> list[float]:
    """``|tau(gamma(T_k)) - T_k| / (dt max ||Z||_alpha^alpha)`` for every recorded jump."""
    out = []
    for tr in trajectories:
        tol = tr.params.dt * tr.max_norm
        out.extend(abs(j.tau - j.clock) / tol for j in tr.jumps)
    return out


def time_change_worst_ratio(cfg: ExperimentConfig, count: int, workers: int = 1, trajectories=None) -> float:
    if trajectories is None:
        params = cfg.model.replace(n=max(cfg.n_list))
        trajectories = simulate_dual_ensemble(
            cfg.psi, params, max(cfg.output_times), count, cfg.seed, TIME_CHANGE_STREAMS, workers
        )
    ratios = time_change_ratios(trajectories)
    return max(ratios) if ratios else 0.0


# ---------------------------------------------------------------- duality gap


def run_gap_experiment(
    cfg: ExperimentConfig, workers: int = 1, y_paths=None, keep_trajectories: bool = False
) -> GapExperiment:
    """Both sides of the approximate duality at ``t = output_times[-1]`` for every ``n``.

    The stable-noise replicas are simulated once and reused for every ``n``.
    Monotone decrease is judged within combined confidence intervals:
    ``gap(n') <= gap(n) + 3 sqrt(cse(n)^2 + cse(n')^2)`` for consecutive levels.
    """
    params = cfg.model
    t = cfg.output_times[-1]
    grid = params.grid
    phi = cfg.phi.field(grid)
    psi = cfg.psi.field(grid)
    if y_paths is None:
        y_paths = simulate_y_ensemble(cfg.phi, params, [t], cfg.replicas, cfg.seed, workers, psi=cfg.psi)
    reports = []
    kept = {}
    for j, n in enumerate(cfg.n_list):
        y_side = exp_pairing_estimator(y_paths, psi, t, seed=cfg.seed)
        pn = params.replace(n=n)
        trajs = simulate_dual_ensemble(cfg.psi, pn, t, cfg.replicas, cfg.seed, dual_stream_base(j), workers)
        z_side = dual_exp_pairing_estimator(trajs, phi, seed=cfg.seed)
        reports.append(GapReport.build(n, y_side, z_side, params.alpha, params.beta, cfg.allowance.gap))
        if keep_trajectories:
            kept[n] = trajs
    monotone = all(
        b.gap <= a.gap + 3.0 * math.hypot(a.combined_se, b.combined_se) for a, b in zip(reports[:-1], reports[1:])
    )
    first = reports[0].y_side
    y_identical = all(r.y_side == first for r in reports)
    return GapExperiment(reports, monotone, y_identical, kept)


# ---------------------------------------------------------------- moments and martingale


@dataclass(frozen=True)
class MomentRow:
    t: float
    moment_max: float
    envelope: float
    martingale_mean: float
    martingale_se: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def run_moment_and_martingale_suite(cfg: ExperimentConfig, workers: int = 1, y_paths=None):
    """Cell-max ``q``-th moments with a log-linear envelope and martingale residual z-scores.

    Returns ``(rows, envelope)`` with ``envelope = (C1, C2)`` such that
    ``C1 exp(C2 t)`` dominates every positive-time moment; the fit is least
    squares on ``log m(t)`` lifted by its largest residual.
    """
    params = cfg.model
    grid = params.grid
    times = [t for t in cfg.output_times if t > 0]
    if y_paths is None:
        y_paths = simulate_y_ensemble(cfg.phi, params, times, cfg.replicas, cfg.seed, workers, psi=cfg.psi)
    good = [p for p in y_paths if not p.aborted]
    psi = cfg.psi.field(grid)
    q = cfg.q
    moments = []
    for t in times:
        stack = np.stack([p.field_at(t).values for p in good])
        moments.append(float((stack**q).mean(axis=0).max()))
    moments = np.array(moments)
    finite = bool(np.all(np.isfinite(moments)) and np.all(moments > 0))
    if finite and len(times) >= 2:
        slope, icpt = np.polyfit(times, np.log(moments), 1)
        lift = float(np.max(np.log(moments) - (icpt + slope * np.array(times))))
        c1, c2 = math.exp(icpt + lift), float(slope)
    else:
        c1, c2 = (float(moments[0]) if finite else math.inf), 0.0
    rows = [MomentRow(0.0, float(np.max(cfg.phi.density(grid.centers) ** q)), c1, 0.0, 0.0, True)]
    for t, m in zip(times, moments):
        res = np.array([p.martingale_residual(psi, t) for p in good])
        s = MCSummary.from_samples(res, seed=cfg.seed)
        env = c1 * math.exp(c2 * t)
        ok = finite and m <= env * (1 + 1e-12) and abs(s.estimate) <= 3.0 * s.std_error
        rows.append(MomentRow(float(t), float(m), env, s.estimate, s.std_error, bool(ok)))
    return rows, (c1, c2)


# ---------------------------------------------------------------- Gronwall


@dataclass(frozen=True)
class GronwallBound:
    """Iterated bound for ``f(t) <= c + c int_0^t (t-r)^(-gamma) f(r) dr`` on ``[0, T]``.

    After ``k`` substitutions of the hypothesis into itself,
    ``f(t) <= c_k(t) + c'_k int_0^t (t-r)^(e_k) f(r) dr`` with
    ``e_k = k - (k+1) gamma > 0``, where
    ``c_{j+1}(t) = c_j(t) + c'_j c t^(e_j+1) / (e_j+1)`` and
    ``c'_{j+1} = c'_j c B(e_j+1, 1-gamma)``, starting from ``c_0 = c'_0 = c``,
    ``e_0 = -gamma``. Bounding ``(t-r)^(e_k) <= T^(e_k)`` and applying the
    classical Gronwall inequality gives ``f(t) <= c_k(t) exp(c'_k T^(e_k) t)``.
    """

    c: float
    gamma: float
    horizon: float
    k: int
    log_terms: tuple[tuple[float, float], ...]  # (log coefficient, power) of c_k(t)
    log_rate: float  # log of c'_k T^(e_k)

    def log(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon * (1 + 1e-12)):
            raise ValueError("bound is defined on [0, T]")
        parts = [np.full(t.shape, lc) for lc, _ in self.log_terms[:1]]
        with np.errstate(divide="ignore"):
            logt = np.log(t)
        for lc, p in self.log_terms[1:]:
            parts.append(lc + p * logt)
        out = scipy.special.logsumexp(np.stack(parts), axis=0) + math.exp(self.log_rate) * t
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self.log(t))


def gronwall_steps(gamma: float) -> int:
    """Smallest integer ``k >= 1`` with ``gamma < k/(k+1)``."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    k = 1
    while not gamma < k / (k + 1):
        k += 1
    return k


def gronwall_bound(c: float, gamma: float, T: float) -> GronwallBound:
    """Construct the iterated Gronwall bound; see ``GronwallBound``."""
    if not c > 0 or not T > 0:
        raise ValueError("c and T must be positive")
    k = gronwall_steps(gamma)
    log_terms = [(math.log(c), 0.0)]
    log_cp = math.log(c)
    e = -gamma
    for _ in range(k):
        log_terms.append((log_cp + math.log(c) - math.log(e + 1.0), e + 1.0))
        log_cp += math.log(c) + math.log(scipy.special.beta(e + 1.0, 1.0 - gamma))
        e += 1.0 - gamma
    log_rate = log_cp + e * math.log(T)
    return GronwallBound(c, gamma, T, k, tuple(log_terms), log_rate)


def _product_trapezoid_weights(t: np.ndarray, gamma: float) -> np.ndarray:
    """``W[i, j]`` with ``sum_j W[i, j] f(t_j) = int_0^{t_i} (t_i - r)^(-gamma) f_lin(r) dr``.

    ``f_lin`` is the piecewise-linear interpolant of ``f`` on the grid; the
    singular weight is integrated exactly on each cell.
    """
    m = t.size
    W = np.zeros((m, m))
    g1, g2 = 1.0 - gamma, 2.0 - gamma
    for i in range(1, m):
        tj = t[: i + 1]
        a = t[i] - tj[1:]
        b = t[i] - tj[:-1]
        h = tj[1:] - tj[:-1]
        i0 = (b**g1 - a**g1) / g1
        i1 = (b**g2 - a**g2) / g2
        W[i, :i] += (i1 - a * i0) / h
        W[i, 1 : i + 1] += (b * i0 - i1) / h
    return W


def picard_oracle(c: float, gamma: float, T: float, points: int = 100, iterations: int = 50, refine: int = 10):
    """Picard iterates of ``f = c + c int_0^t (t-r)^(-gamma) f(r) dr``.

    Runs ``iterations`` sweeps from ``f = c`` on a grid ``refine`` times finer
    than the ``points`` report points ``t_i = i T / points``, ``i = 1..points``.

    Returns
    -------
    (times, values) at the report points.
    """
    fine = np.linspace(0.0, T, points * refine + 1)
    W = _product_trapezoid_weights(fine, gamma)
    f = np.full(fine.size, c)
    for _ in range(iterations):
        f = c + c * (W @ f)
    idx = np.arange(refine, fine.size, refine)
    return fine[idx], f[idx]


@dataclass(frozen=True)
class GronwallRow:
    gamma: float
    c: float
    k: int
    min_log_margin: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def run_gronwall_check(cfg: ExperimentConfig) -> list[GronwallRow]:
    """Bound versus Picard oracle; the margin is ``min_t log bound(t) - log oracle(t)``."""
    g = cfg.gronwall
    rows = []
    for gamma in g.gammas:
        for c in g.cs:
            bound = gronwall_bound(c, gamma, g.horizon)
            t, f = picard_oracle(c, gamma, g.horizon, g.points, g.iterations)
            margin = float(np.min(bound.log(t) - np.log(f)))
            rows.append(GronwallRow(gamma, c, bound.k, margin, margin >= 0.0))
    return rows


# ---------------------------------------------------------------- g function


def _h(x):
    # e^{-x} - 1 + x without cancellation at small x
    x = np.asarray(x, dtype=float)
    small = x < 1e-3
    out = np.empty_like(x)
    xs = x[small]
    out[small] = xs * xs * (0.5 - xs * (1.0 / 6.0 - xs * (1.0 / 24.0 - xs / 120.0)))
    xl = x[~small]
    out[~small] = np.expm1(-xl) + xl
    return out


def g_function(r: float, y: float, alphabeta: float) -> float:
    """``int_0^r (e^{-lam y} - 1 + lam y) lam^(-alphabeta - 1) dlam`` by adaptive quadrature.

    The integrable singularity ``lam^(1 - alphabeta)`` at 0 is handled by an
    algebraic quadrature weight.
    """
    if not r > 0 or y < 0:
        raise ValueError("need r > 0 and y >= 0")
    if y == 0:
        return 0.0

    def smooth(lam):
        if lam == 0.0:
            return 0.5 * y * y
        return float(_h(np.array([lam * y]))[0]) / (lam * lam)

    val, _ = scipy.integrate.quad(smooth, 0.0, r, weight="alg", wvar=(1.0 - alphabeta, 0.0), epsabs=0.0, epsrel=1e-11, limit=200)
    return float(val)


def g_bound(n: int, y: float, alpha: float, beta: float) -> float:
    """Closed-form bound on ``g(1/n, y)`` from ``e^{-x} - 1 + x <= x^p / p`` with ``p = alpha(beta+1)/2``."""
    p = alpha * (beta + 1.0) / 2.0
    return (1.0 / p) * y**p * (2.0 / (alpha - alpha * beta)) * n ** (-(alpha - alpha * beta) / 2.0)
