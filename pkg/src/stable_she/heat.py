"""Gaussian heat kernel and its action on grid fields.

Two discrete kernels are used. Below one grid diffusion time (``t < dx^2``)
the sampled Gaussian is under-resolved and loses variance, so the exact
kernel of the lattice heat equation, ``exp(-s) I_k(s)`` with ``s = t/dx^2``,
is used instead: it is positive, has variance ``t`` and composes exactly.
From ``t >= dx^2`` on, the Gaussian sampled at cell offsets and renormalised
to unit discrete mass is used. Convolution is linear with zero padding, so
mass leaving the domain is lost (absorbing boundary).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
import scipy.special
from numpy.typing import NDArray

from .model import Field, GridSpec

__all__ = ["heat_kernel", "apply_semigroup", "SemigroupPlan", "kernel_weights", "DT_MIN"]

DT_MIN = 1e-8
# weights below this fraction of the centre weight are dropped
_WEIGHT_CUTOFF = 1e-20
# kernels with at most this many taps per side are applied by direct summation
_DIRECT_TAPS = 64


def heat_kernel(t: float, x):
    """Gaussian transition density ``p_t(x) = (2 pi t)^(-1/2) exp(-x^2 / 2t)``.

    Parameters
    ----------
    t : float
        Time, strictly positive.
    x : float or array_like
        Displacement.
    """
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    out = np.exp(-(x * x) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=256)
def kernel_weights(dx: float, t: float, max_taps: int) -> NDArray[np.float64]:
    """One-sided discrete kernel ``w[0..K]`` (symmetric, ``w[-k] = w[k]``), unit total mass.

    ``max_taps`` caps ``K``; taps beyond the domain width never act.
    """
    if t < DT_MIN:
        w = np.ones(1)
        w.flags.writeable = False
        return w
    s = t / dx**2
    if s < 1.0:
        # exact lattice kernel; ive(k, s) = exp(-s) I_k(s)
        k_hi = int(20 + 8 * s + 20 * math.sqrt(s))
        w = scipy.special.ive(np.arange(k_hi + 1), s)
    else:
        half = int(math.ceil(40.0 * math.sqrt(s))) + 1
        k = np.arange(half + 1)
        w = np.exp(-0.5 * (k * k) / s)
    keep = np.nonzero(w >= _WEIGHT_CUTOFF * w[0])[0]
    w = w[: keep[-1] + 1]
    w = w / (w[0] + 2.0 * np.sum(w[1:]))
    w = np.array(w[: max_taps + 1])
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class SemigroupPlan:
    """Convolution plan for one grid: padded FFT length and kernel caches.

    Kernel weights and their transforms are cached per ``t`` in module-level
    LRU caches, which keeps the plan itself immutable and picklable.
    """

    grid: GridSpec

    @property
    def padded_length(self) -> int:
        return 1 << int(math.ceil(math.log2(2 * self.grid.cells)))

    def weights(self, t: float) -> NDArray[np.float64]:
        return kernel_weights(self.grid.dx, float(t), self.grid.cells - 1)

    def apply(self, values: NDArray[np.float64], t: float) -> NDArray[np.float64]:
        """Apply ``P_t`` to raw cell values; returns a new array."""
        values = np.asarray(values, dtype=np.float64)
        w = self.weights(t)
        taps = w.size - 1
        if taps == 0:
            return np.array(values)
        if taps <= _DIRECT_TAPS:
            full = np.concatenate((w[:0:-1], w))
            # mode="same" would return the kernel length when the kernel is longer than the field
            return np.convolve(values, full)[taps : taps + values.size]
        spec = _kernel_spectrum(self.grid.cells, self.padded_length, self.grid.dx, float(t))
        m = self.padded_length
        out = scipy.fft.irfft(scipy.fft.rfft(values, m) * spec, m)
        out = out[: self.grid.cells]
        # roundoff can leave tiny negatives where the exact result is >= 0
        np.maximum(out, 0.0, out=out)
        return out


@lru_cache(maxsize=256)
def _kernel_spectrum(cells: int, m: int, dx: float, t: float):
    w = kernel_weights(dx, t, cells - 1)
    buf = np.zeros(m)
    buf[: w.size] = w
    buf[m - w.size + 1 :] = w[:0:-1]
    spec = scipy.fft.rfft(buf)
    spec.flags.writeable = False
    return spec


def apply_semigroup(f: Field, t: float, plan: SemigroupPlan | None = None) -> Field:
    """Heat flow ``P_t f`` on the truncated domain.

    Parameters
    ----------
    f : Field
        Input density.
    t : float
        Elapsed time, ``t >= 0``. Times below ``DT_MIN`` act as the identity.
    plan : SemigroupPlan, optional
        Reusable plan for ``f.grid``.

    Returns
    -------
    Field
    """
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    if t < DT_MIN:
        return f
    plan = plan or SemigroupPlan(f.grid)
    return Field(f.grid, plan.apply(f.values, t))
