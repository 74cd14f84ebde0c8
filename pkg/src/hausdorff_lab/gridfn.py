"""Uniform tensor grids on R^n, grid norms, tensor products and the Fourier bridge.

Spatial grids are cell-centred: x_k = -L + (k + 1/2) h with h = 2L/N, so the
origin is never a node.  Fourier transforms land on the dual grid
xi_m = (m - N/2) / (2L), which does contain xi = 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

SPACE_SHIFT = 0.5
FREQ_SHIFT = 0.0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    L: tuple
    N: tuple
    shift: float = SPACE_SHIFT

    def __post_init__(self):
        L = tuple(float(x) for x in np.atleast_1d(self.L))
        N = tuple(int(x) for x in np.atleast_1d(self.N))
        if len(L) != len(N):
            raise GridError("L and N need one entry per axis")
        if any(x <= 0 for x in L):
            raise GridError("half-widths must be positive")
        if any(x <= 0 or x % 2 for x in N):
            raise GridError("point counts must be positive and even")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", N)

    @classmethod
    def uniform(cls, n: int, L: float, N: int) -> "GridSpec":
        return cls((L,) * n, (N,) * n)

    @property
    def n(self) -> int:
        return len(self.N)

    @property
    def h(self) -> tuple:
        return tuple(2 * L / N for L, N in zip(self.L, self.N))

    @property
    def shape(self) -> tuple:
        return self.N

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axis(self, j: int) -> np.ndarray:
        L, N, h = self.L[j], self.N[j], self.h[j]
        return -L + (np.arange(N) + self.shift) * h

    def axes(self) -> list:
        return [self.axis(j) for j in range(self.n)]

    def mesh(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        """All nodes as an array of shape (prod N, n), row-major."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def dual(self) -> "GridSpec":
        return GridSpec(tuple(N / (4 * L) for L, N in zip(self.L, self.N)), self.N, FREQ_SHIFT)

    def primal(self) -> "GridSpec":
        """Spatial grid whose dual is this (frequency) grid."""
        return GridSpec(tuple(N / (4 * L) for L, N in zip(self.L, self.N)), self.N, SPACE_SHIFT)

    def dilated(self, m: float) -> "GridSpec":
        return GridSpec(tuple(m * L for L in self.L), self.N, self.shift)


@dataclass(frozen=True)
class GridFunction:
    spec: GridSpec
    samples: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        a = np.array(self.samples, dtype=complex).reshape(self.spec.shape)
        if not np.all(np.isfinite(a)):
            raise GridError("grid function samples must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def real(self) -> np.ndarray:
        return self.samples.real

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.spec, fn(self.samples))

    def __add__(self, other):
        _check_same(self, other)
        return GridFunction(self.spec, self.samples + other.samples)

    def __sub__(self, other):
        _check_same(self, other)
        return GridFunction(self.spec, self.samples - other.samples)

    def __mul__(self, c):
        return GridFunction(self.spec, self.samples * c)

    __rmul__ = __mul__

    def save(self, path) -> None:
        write_binary(self, path)

    @classmethod
    def load(cls, path) -> "GridFunction":
        return read_binary(path)


def _check_same(a: GridFunction, b: GridFunction):
    if a.spec != b.spec:
        raise GridError("grid functions live on different grids")


def sample(f: Callable, spec: GridSpec) -> GridFunction:
    """Evaluate ``f(x_1, ..., x_n)`` at every node of ``spec``."""
    vals = np.asarray(f(*spec.mesh()), dtype=complex)
    vals = np.broadcast_to(vals, spec.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.unravel_index(np.flatnonzero(bad)[0], spec.shape)
        node = tuple(float(spec.axis(j)[i]) for j, i in enumerate(idx))
        raise GridError(f"non-finite value at node index {idx}, x = {node}")
    return GridFunction(spec, vals)


def zeros(spec: GridSpec) -> GridFunction:
    return GridFunction(spec, np.zeros(spec.shape, dtype=complex))


def lp_norm(g: GridFunction, p: float) -> float:
    """Riemann-sum L^p norm; p = inf gives the max modulus."""
    if not p >= 1:
        raise GridError("p must be >= 1")
    a = np.abs(g.samples)
    if np.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum() * g.spec.cell_volume)
    return float((np.sum(a ** p) * g.spec.cell_volume) ** (1.0 / p))


def inner(f: GridFunction, g: GridFunction) -> complex:
    """Bilinear grid pairing sum f g h^n (no conjugation)."""
    _check_same(f, g)
    return complex(np.sum(f.samples * g.samples) * f.spec.cell_volume)


def tensor_product(parts: Sequence[GridFunction]) -> GridFunction:
    if not parts:
        raise GridError("need at least one factor")
    if any(p.n != 1 for p in parts):
        raise GridError("tensor_product takes one-dimensional factors")
    if len({p.spec.shift for p in parts}) != 1:
        raise GridError("factors must share the grid offset")
    spec = GridSpec(tuple(p.spec.L[0] for p in parts), tuple(p.spec.N[0] for p in parts),
                    parts[0].spec.shift)
    out = parts[0].samples
    for p in parts[1:]:
        out = np.multiply.outer(out, p.samples)
    return GridFunction(spec, out)


def _phase(spec: GridSpec, j: int) -> np.ndarray:
    N = spec.N[j]
    m = np.arange(N) - N // 2
    return np.exp(1j * np.pi * m) * np.exp(-2j * np.pi * spec.shift * m / N)


def fourier(g: GridFunction) -> GridFunction:
    """Approximate g_hat(xi) = int g(x) exp(-2 pi i x xi) dx on the dual grid."""
    spec = g.spec
    a = np.fft.fftshift(np.fft.fftn(g.samples), axes=tuple(range(spec.n)))
    for j in range(spec.n):
        shape = [1] * spec.n
        shape[j] = spec.N[j]
        a = a * (spec.h[j] * _phase(spec, j)).reshape(shape)
    return GridFunction(spec.dual(), a)


def inverse_fourier(G: GridFunction, target: GridSpec | None = None) -> GridFunction:
    """Exact inverse of ``fourier``; ``target`` defaults to the cell-centred primal grid."""
    spec = target or G.spec.primal()
    if spec.dual() != G.spec:
        raise GridError("target grid is not dual to the frequency grid")
    a = G.samples
    for j in range(spec.n):
        shape = [1] * spec.n
        shape[j] = spec.N[j]
        a = a / (spec.h[j] * _phase(spec, j)).reshape(shape)
    a = np.fft.ifftn(np.fft.ifftshift(a, axes=tuple(range(spec.n))))
    return GridFunction(spec, a)


def frequencies(spec: GridSpec, j: int) -> np.ndarray:
    """Continuous frequencies (in the e^{-2 pi i x xi} convention) of FFT bins along axis j."""
    return np.fft.fftfreq(spec.N[j], d=spec.h[j])


def interpolant(g: GridFunction) -> Callable:
    """Multilinear interpolant of ``g`` with zero extension outside the grid.

    The returned callable carries ``error_estimate``, a bound h^2/8 * max|second
    difference| / h^2 summed over axes.
    """
    from scipy.interpolate import RegularGridInterpolator

    spec = g.spec
    interp = RegularGridInterpolator(tuple(spec.axes()), g.samples, method="linear",
                                     bounds_error=False, fill_value=0.0)

    def f(*xs):
        xs = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in xs])
        pts = np.stack([x.ravel() for x in xs], axis=-1)
        return interp(pts).reshape(xs[0].shape)

    est = 0.0
    for j in range(spec.n):
        if spec.N[j] >= 3:
            d2 = np.abs(np.diff(g.samples, n=2, axis=j))
            est += d2.max() / 8.0
    f.error_estimate = float(est)
    f.breaks = tuple(() for _ in range(spec.n))
    return f


_HEADER_INT = "<q"
_HEADER_FLOAT = "<d"


def write_binary(g: GridFunction, path) -> None:
    """Header: n, N_1..N_n (int64), L_1..L_n (float64), all little-endian; then
    interleaved real/imaginary float64 samples in row-major order."""
    if g.spec.shift != SPACE_SHIFT:
        raise GridError("only cell-centred spatial grids can be serialized")
    spec = g.spec
    with open(Path(path), "wb") as fh:
        fh.write(struct.pack(_HEADER_INT, spec.n))
        for N in spec.N:
            fh.write(struct.pack(_HEADER_INT, N))
        for L in spec.L:
            fh.write(struct.pack(_HEADER_FLOAT, L))
        fh.write(np.ascontiguousarray(g.samples, dtype="<c16").tobytes())


def read_binary(path) -> GridFunction:
    raw = Path(path).read_bytes()
    (n,) = struct.unpack_from(_HEADER_INT, raw, 0)
    off = 8
    N = struct.unpack_from("<" + "q" * n, raw, off)
    off += 8 * n
    L = struct.unpack_from("<" + "d" * n, raw, off)
    off += 8 * n
    spec = GridSpec(L, N)
    data = np.frombuffer(raw, dtype="<c16", offset=off)
    if data.size != int(np.prod(N)):
        raise GridError("sample count does not match header")
    return GridFunction(spec, data.reshape(spec.shape))
