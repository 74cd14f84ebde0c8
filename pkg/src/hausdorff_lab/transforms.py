"""Hilbert transforms along axes, star norm, Poisson extension and the smooth maximal function.

Every operator here is a Fourier multiplier applied with the FFT on the grid's
own period 2L, so the grid phase factors of ``gridfn.fourier`` cancel and plain
``numpy.fft`` is used.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .gridfn import GridFunction, lp_norm
from .kernel import bump_profile, bump_mass


@dataclass(frozen=True)
class AxisMask:
    e: tuple

    def __post_init__(self):
        e = tuple(int(b) for b in self.e)
        if any(b not in (0, 1) for b in e):
            raise ValueError("mask entries must be 0 or 1")
        object.__setattr__(self, "e", e)

    @property
    def n(self) -> int:
        return len(self.e)

    @classmethod
    def all_masks(cls, n: int) -> list["AxisMask"]:
        return [cls(bits) for bits in itertools.product((0, 1), repeat=n)]


def _freq(g: GridFunction, j: int) -> np.ndarray:
    return np.fft.fftfreq(g.spec.N[j], d=g.spec.h[j])


def _bcast(v, j, n):
    shape = [1] * n
    shape[j] = len(v)
    return v.reshape(shape)


def hilbert_multiplier(N: int, h: float) -> np.ndarray:
    """-i sign(xi) in FFT order.  Zero at xi = 0 and at the Nyquist bin, whose
    sign is ambiguous on a periodic grid; this keeps real input real."""
    xi = np.fft.fftfreq(N, d=h)
    m = -1j * np.sign(xi)
    m[N // 2] = 0.0
    return m


def hilbert_axis(g: GridFunction, j: int) -> GridFunction:
    """Hilbert transform in the j-th variable via its spectral multiplier."""
    if not 0 <= j < g.n:
        raise ValueError("axis out of range")
    m = hilbert_multiplier(g.spec.N[j], g.spec.h[j])
    a = np.fft.ifft(np.fft.fft(g.samples, axis=j) * _bcast(m, j, g.n), axis=j)
    if np.isrealobj(g.samples) or not np.any(g.samples.imag):
        a = a.real
    return GridFunction(g.spec, a)


def multi_hilbert(g: GridFunction, e) -> GridFunction:
    """Composition of hilbert_axis over the axes selected by ``e``."""
    e = e if isinstance(e, AxisMask) else AxisMask(e)
    if e.n != g.n:
        raise ValueError("mask length must equal the dimension")
    out = g
    for j, bit in enumerate(e.e):
        if bit:
            out = hilbert_axis(out, j)
    return out


def all_hilbert(g: GridFunction) -> dict:
    """H_e g for every mask, sharing one forward FFT."""
    n = g.n
    G = np.fft.fftn(g.samples)
    mults = [_bcast(hilbert_multiplier(g.spec.N[j], g.spec.h[j]), j, n) for j in range(n)]
    real = not np.any(g.samples.imag)
    out = {}
    for mask in AxisMask.all_masks(n):
        F = G
        for j, bit in enumerate(mask.e):
            if bit:
                F = F * mults[j]
        a = np.fft.ifftn(F)
        out[mask.e] = GridFunction(g.spec, a.real if real else a)
    return out


def star_norm(g: GridFunction) -> float:
    """Sum over all 2^n masks of the grid L^1 norm of H_e g."""
    return float(sum(lp_norm(h, 1) for h in all_hilbert(g).values()))


def star_terms(g: GridFunction) -> dict:
    """Per-mask L^1 norms that make up the star norm."""
    return {e: lp_norm(h, 1) for e, h in all_hilbert(g).items()}


def poisson_extend(g: GridFunction, y) -> GridFunction:
    """Convolution with prod_j (1/(pi y_j)) / (1 + (u_j/y_j)^2), computed as the
    multiplier prod_j exp(-2 pi y_j |xi_j|)."""
    y = np.broadcast_to(np.asarray(y, dtype=float), (g.n,))
    if np.any(y <= 0):
        raise ValueError("Poisson parameter must be positive")
    F = np.fft.fftn(g.samples)
    for j in range(g.n):
        F = F * _bcast(np.exp(-2 * np.pi * y[j] * np.abs(_freq(g, j))), j, g.n)
    a = np.fft.ifftn(F)
    return GridFunction(g.spec, a.real if not np.any(g.samples.imag) else a)


# ---------------------------------------------------------------------------
# smooth maximal function


def _standard_bump(x):
    return bump_profile(x) / bump_mass()


class BumpTransform:
    """Fourier transform of an even profile supported in [-1, 1], tabulated once.

    The transform is sampled on [0, xi_max] and interpolated with a cubic
    spline; beyond xi_max it is taken as zero.
    """

    def __init__(self, profile: Callable = _standard_bump, xi_max: float = 200.0,
                 step: float = 1 / 128, nodes: int = 4000):
        x, w = np.polynomial.legendre.leggauss(nodes)
        px = profile(x) * w
        self.mass = float(px.sum())
        xi = np.arange(0.0, xi_max + step, step)
        vals = np.empty_like(xi)
        for s in range(0, len(xi), 2048):
            vals[s:s + 2048] = np.cos(2 * np.pi * np.outer(xi[s:s + 2048], x)) @ px
        self.xi_max = xi_max
        self._spline = CubicSpline(xi, vals)

    def __call__(self, xi):
        a = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(a)
        inside = a <= self.xi_max
        out[inside] = self._spline(a[inside])
        return out


_DEFAULT_BUMP = None


def default_bump() -> BumpTransform:
    global _DEFAULT_BUMP
    if _DEFAULT_BUMP is None:
        _DEFAULT_BUMP = BumpTransform()
    return _DEFAULT_BUMP


@dataclass
class MaximalConfig:
    """Bump per axis and the geometric dilation lattice t = rho^k, k_min <= k <= k_max."""

    rho: float = 2 ** 0.25
    k_min: int = -20
    k_max: int = 20
    bumps: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.rho > 1 or self.k_min > self.k_max:
            raise ValueError("need rho > 1 and k_min <= k_max")

    @property
    def lattice(self) -> np.ndarray:
        return self.rho ** np.arange(self.k_min, self.k_max + 1, dtype=float)

    def bump(self, j: int) -> BumpTransform:
        if self.bumps is None:
            return default_bump()
        return self.bumps[j]

    def refined(self) -> "MaximalConfig":
        """Same scale range with rho replaced by sqrt(rho)."""
        return MaximalConfig(np.sqrt(self.rho), 2 * self.k_min, 2 * self.k_max, self.bumps)


def smooth_maximal(g: GridFunction, cfg: MaximalConfig = None) -> GridFunction:
    """max over the lattice of |g * (Phi_{t_1} x ... x Phi_{t_n})| at every node."""
    cfg = cfg or MaximalConfig()
    n = g.n
    G = np.fft.fftn(g.samples)
    ts = cfg.lattice
    tables = []
    for j in range(n):
        xi = _freq(g, j)
        tables.append([_bcast(cfg.bump(j)(t * xi), j, n) for t in ts])
    best = np.zeros(g.spec.shape)
    for combo in itertools.product(range(len(ts)), repeat=n):
        F = G
        for j, k in enumerate(combo):
            F = F * tables[j][k]
        np.maximum(best, np.abs(np.fft.ifftn(F)), out=best)
    return GridFunction(g.spec, best)


def h1_norm_maximal(g: GridFunction, cfg: MaximalConfig = None) -> float:
    return lp_norm(smooth_maximal(g, cfg), 1)
