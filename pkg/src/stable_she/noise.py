"""One-sided stable Levy measure and the truncated Poisson construction of the noise.

The Levy density is ``c_alpha z^(-1-alpha)`` on ``z > 0`` with
``c_alpha = alpha (alpha - 1) / Gamma(2 - alpha)``. Jumps below a cutoff
``eps`` are dropped and the remaining compensated sum is returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LevyMeasure",
    "JumpEvent",
    "m0_tail_mass",
    "m0_first_moment_tail",
    "small_jump_variance",
    "sample_pareto_jump_size",
    "sample_noise_increment",
    "sample_thinned_increment",
    "sample_prm_atoms",
    "laplace_functional_target",
    "laplace_bias_bound",
]


@dataclass(frozen=True)
class LevyMeasure:
    alpha: float = 1.5

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (1, 2), got {self.alpha}")

    @property
    def normalizer(self) -> float:
        a = self.alpha
        return a * (a - 1.0) / math.gamma(2.0 - a)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(z > 0, self.normalizer * np.abs(z) ** (-1.0 - self.alpha), 0.0)
        return float(out) if out.ndim == 0 else out

    def tail_mass(self, eps: float) -> float:
        return m0_tail_mass(eps, self.alpha)

    def first_moment_tail(self, eps: float) -> float:
        return m0_first_moment_tail(eps, self.alpha)

    def small_second_moment(self, eps: float = 1.0) -> float:
        """``int_0^eps z^2 m0(dz)``."""
        return self.normalizer * eps ** (2.0 - self.alpha) / (2.0 - self.alpha)


def m0_tail_mass(eps: float, alpha: float = 1.5) -> float:
    """Total Levy mass above ``eps``: ``(alpha-1)/Gamma(2-alpha) eps^(-alpha)``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return (alpha - 1.0) / math.gamma(2.0 - alpha) * eps ** (-alpha)


def m0_first_moment_tail(eps: float, alpha: float = 1.5) -> float:
    """``int_eps^inf z m0(dz) = alpha/Gamma(2-alpha) eps^(1-alpha)``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return alpha / math.gamma(2.0 - alpha) * eps ** (1.0 - alpha)


def small_jump_variance(volume: float, eps: float, alpha: float = 1.5) -> float:
    """Variance of the dropped compensated small-jump part over a box of size ``volume``."""
    return volume * LevyMeasure(alpha).small_second_moment(eps)


def sample_pareto_jump_size(eps: float, u, alpha: float = 1.5):
    """Inverse-CDF draw ``eps * u^(-1/alpha)`` from the Levy measure restricted to ``[eps, inf)``.

    ``u`` may be a scalar or an array of uniforms in the open interval (0, 1).
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)):
        raise ValueError("uniforms must lie strictly inside (0, 1)")
    out = eps * u_arr ** (-1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def _open_uniforms(rng: np.random.Generator, k: int):
    # Generator.random is on [0, 1); 1 - u is on (0, 1]
    u = 1.0 - rng.random(k)
    # u == 1 is a measure-zero boundary of the inverse CDF and maps to eps
    return u


def _compensated_sum(count: int, eps: float, alpha: float, rng, compensator: float) -> float:
    if count == 0:
        return -compensator
    # in place: this loop dominates the cost of the noise check
    buf = rng.random(count)
    np.subtract(1.0, buf, out=buf)
    np.power(buf, -1.0 / alpha, out=buf)
    return eps * float(np.sum(buf)) - compensator


def sample_noise_increment(volume: float, eps: float, rng: np.random.Generator, alpha: float = 1.5) -> float:
    """Noise mass of a space-time box of Lebesgue measure ``volume``, jumps below ``eps`` dropped.

    Parameters
    ----------
    volume : float
        Space-time measure of the box.
    eps : float
        Jump cutoff.
    rng : numpy.random.Generator
        Caller-owned stream.
    alpha : float
        Stability index.

    Returns
    -------
    float
        Sum of ``Poisson(volume M(eps))`` Pareto jumps minus ``volume * int_eps^inf z m0(dz)``.
    """
    if not volume > 0:
        raise ValueError(f"volume must be positive, got {volume}")
    count = int(rng.poisson(volume * m0_tail_mass(eps, alpha)))
    return _compensated_sum(count, eps, alpha, rng, volume * m0_first_moment_tail(eps, alpha))


@dataclass(frozen=True)
class JumpEvent:
    """One atom of a Poisson random measure on time x size x space x mark."""

    time: float
    size: float
    location: float
    mark: float = 0.0


def sample_prm_atoms(
    t0: float,
    t1: float,
    left: float,
    right: float,
    eps: float,
    mark_max: float,
    rng: np.random.Generator,
    alpha: float = 1.5,
) -> list[JumpEvent]:
    """Atoms of the PRM with intensity ``ds m0(dz) dy dv`` on ``[t0,t1] x [eps,inf) x [left,right] x [0,mark_max]``."""
    box = (t1 - t0) * (right - left) * mark_max
    count = int(rng.poisson(box * m0_tail_mass(eps, alpha)))
    times = rng.uniform(t0, t1, count)
    sizes = eps * _open_uniforms(rng, count) ** (-1.0 / alpha)
    locs = rng.uniform(left, right, count)
    marks = rng.uniform(0.0, mark_max, count)
    order = np.argsort(times, kind="stable")
    return [JumpEvent(float(times[i]), float(sizes[i]), float(locs[i]), float(marks[i])) for i in order]


def sample_thinned_increment(
    volume: float, rate: float, eps: float, rng: np.random.Generator, alpha: float = 1.5, mark_max: float | None = None
) -> float:
    """Compensated jump sum of a unit-intensity PRM thinned to intensity ``rate``.

    Atoms are drawn on a box of measure ``volume`` with marks uniform on
    ``[0, mark_max]`` and kept when the mark lies below ``rate``; the
    compensator is ``volume * rate * int_eps^inf z m0(dz)``.
    """
    mark_max = rate if mark_max is None else mark_max
    if mark_max < rate:
        raise ValueError("mark range must cover the thinning rate")
    atoms = sample_prm_atoms(0.0, volume, 0.0, 1.0, eps, mark_max, rng, alpha)
    kept = sum(a.size for a in atoms if a.mark < rate)
    return kept - volume * rate * m0_first_moment_tail(eps, alpha)


def laplace_functional_target(lam: float, t: float, area: float, alpha: float = 1.5) -> float:
    """``E exp(-lam L_t(A)) = exp(lam^alpha t |A|)`` for the spectrally positive stable noise."""
    if lam < 0 or t < 0 or area < 0:
        raise ValueError("lambda, t and area must be nonnegative")
    return math.exp(lam**alpha * t * area)


def laplace_bias_bound(lam: float, volume: float, eps: float, alpha: float = 1.5) -> float:
    """Bound on ``|E exp(-lam L_eps) - exp(lam^alpha volume)|`` caused by dropping jumps below ``eps``.

    The truncated exponent differs from ``lam^alpha volume`` by
    ``D = volume int_0^eps (e^{-lam z} - 1 + lam z) m0(dz)``, with
    ``0 <= D <= lam^2 sigma^2 / 2``, ``sigma^2`` the small-jump variance.
    Hence the error is at most ``target (1 - exp(-lam^2 sigma^2 / 2))``,
    which is bounded by ``target lam^2 sigma^2 / 2``; the latter is returned.
    """
    target = laplace_functional_target(lam, 1.0, volume, alpha)
    return target * lam * lam * small_jump_variance(volume, eps, alpha) / 2.0
