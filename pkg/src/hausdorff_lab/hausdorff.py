"""Evaluation of H_phi f and its adjoint by quadrature in s = log t.

H_phi f(x)  = int f(x e^{-s}) phi(e^s) ds
H*_phi f(x) = int f(x e^{s}) phi(e^s) e^{s_1 + ... + s_n} ds

The integrals are done per node with the vectorized adaptive rule from
``quadrature``; discontinuities of f are mapped to per-node breakpoints in s.
A log-radial grid representation gives an FFT fast path for separable kernels.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .battery import ARG_CLIP, Pointwise, TensorFunction
from .gridfn import GridFunction, GridSpec, interpolant
from .kernel import Kernel, KernelError
from .quadrature import QuadratureError, axis_pieces, integrate_1d, integrate_nodes


@dataclass(frozen=True)
class QuadConfig:
    tolerance: float = 1e-10
    max_subdivisions: int = 2000
    log_domain: bool = True
    block_nodes: int = 4096
    threads: int = 0  # 0: read HAUSDORFF_LAB_THREADS, default 1

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")

    def worker_count(self) -> int:
        if self.threads > 0:
            return self.threads
        return max(1, int(os.environ.get("HAUSDORFF_LAB_THREADS", "1")))


def _function_breaks(f, n):
    """Per-axis discontinuity locations of f, if it advertises any."""
    brk = getattr(f, "breaks", ())
    if not brk:
        return tuple(() for _ in range(n))
    if n == 1 and not isinstance(brk[0], (tuple, list)):
        return (tuple(brk),)
    return tuple(tuple(b) for b in brk)


def _kernel_pieces(k: Kernel, log_domain: bool):
    pieces = []
    for (a, b), brk in zip(k.support, k.breaks):
        if log_domain:
            lo = math.log(a) if a > 0 else -math.inf
            hi = math.log(b) if math.isfinite(b) else math.inf
            pts = [math.log(x) for x in brk if a < x < b]
        else:
            lo, hi, pts = a, b, [x for x in brk if a < x < b]
        pieces.append(axis_pieces(lo, hi, pts))
    return pieces


def _node_breaks(X, fbreaks, adjoint, log_domain):
    """Per node and axis, the s where the integrand jumps because f does, plus the
    scales where |x_j / t_j| is 1, e^{+-3}, e^{+-9}, e^{+-27} or e^{+-81}.

    The geometric scale breaks bracket the unit-scale features of f at every
    node, including nodes so close to 0 or so far out that those features sit
    at the edge of a long kernel piece the adaptive rule would otherwise skip.
    """
    K, n = X.shape
    scales = (1.0,) + tuple(math.exp(sign * 3.0 ** m) for m in range(1, 5) for sign in (-1, 1))
    width = max(len(b) for b in fbreaks) + len(scales)
    out = np.full((K, n, width), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(n):
            cols = [(X[:, j], b) for b in fbreaks[j]] + [(np.abs(X[:, j]), c) for c in scales]
            for c, (xj, b) in enumerate(cols):
                # x_j/t_j = b, or t_j x_j = b for the adjoint
                t = b / xj if adjoint else xj / b
                v = np.where(np.isfinite(t) & (t > 0), t, np.nan)
                out[:, j, c] = np.log(v) if log_domain else v
    return out


def evaluate_at(k: Kernel, f, X: np.ndarray, q: QuadConfig = QuadConfig(), *,
                adjoint: bool = False):
    """Values of H_phi f (or H*_phi f) at the rows of ``X`` (shape (K, n)).

    Returns ``(values, errors)``.  Raises ``QuadratureError`` naming the first
    node whose integral does not reach ``q.tolerance``.  Node coordinates are
    meant to be 0 or of modulus within [1e-250, 1e250]; the log-domain
    substitution clamps |log t| at 700.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != k.n:
        raise KernelError("point dimension does not match the kernel")
    pieces = _kernel_pieces(k, q.log_domain)
    fbreaks = _function_breaks(f, k.n)
    ev = k.evaluator

    def run(block_start):
        Xb = X[block_start:block_start + q.block_nodes]

        def integrand(s, node):
            x = Xb[node]
            if q.log_domain:
                t = np.exp(s)
                with np.errstate(over="ignore"):
                    y = x * t if adjoint else x / t
                weight = ev(t)
                if adjoint:
                    nz = weight != 0
                    weight = weight.astype(float)
                    weight[nz] = weight[nz] * np.exp(s[nz].sum(axis=1))
            else:
                t = s
                y = x * t if adjoint else x / t
                weight = ev(t) if adjoint else ev(t) / np.prod(t, axis=1)
            y = np.clip(y, -ARG_CLIP, ARG_CLIP)
            with np.errstate(over="ignore", under="ignore", invalid="ignore"):
                fv = np.asarray(f(*y.T), dtype=complex)
            return np.where(weight != 0, fv * weight, 0.0)

        nb = _node_breaks(Xb, fbreaks, adjoint, q.log_domain)
        return integrate_nodes(integrand, pieces, len(Xb), q.tolerance, node_breaks=nb,
                               max_cells=q.max_subdivisions, node_offset=block_start)

    starts = list(range(0, len(X), q.block_nodes))
    workers = q.worker_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    if not parts:
        return np.zeros(0, complex), np.zeros(0)
    values = np.concatenate([p[0] for p in parts])
    errors = np.concatenate([p[1] for p in parts])
    return values, errors


def _apply(k: Kernel, f, spec: GridSpec, q: QuadConfig, adjoint: bool) -> GridFunction:
    if spec.n != k.n:
        raise KernelError("grid dimension does not match the kernel")
    meta = {"adjoint": adjoint}
    if isinstance(f, GridFunction):
        f = interpolant(f)
        meta["interpolation_error"] = f.error_estimate

    if k.n > 1 and k.separable and isinstance(f, TensorFunction):
        # H(f_1 x ... x f_n) = (H_1 f_1) x ... x (H_n f_n) for product kernels
        out, err = None, 0.0
        for j in range(k.n):
            xj = spec.axis(j)[:, None]
            v, e = evaluate_at(k.factor_kernel(j), f.factor(j), xj, q, adjoint=adjoint)
            out = v if out is None else np.multiply.outer(out, v)
            err = max(err, float(e.max()))
        meta.update(path="tensor", max_error=err)
        return GridFunction(spec, out, meta)

    v, e = evaluate_at(k, f, spec.points(), q, adjoint=adjoint)
    meta.update(path="direct", max_error=float(e.max()))
    return GridFunction(spec, v.reshape(spec.shape), meta)


def apply_hausdorff(k: Kernel, f, spec: GridSpec, q: QuadConfig = QuadConfig()) -> GridFunction:
    """H_phi f sampled on ``spec``.

    ``f`` is a callable of n coordinate arrays (battery functions carry their
    discontinuities in ``breaks``) or a GridFunction, which is then linearly
    interpolated with zero extension and the interpolation error recorded in
    ``meta``.
    """
    return _apply(k, f, spec, q, adjoint=False)


def apply_adjoint(k: Kernel, f, spec: GridSpec, q: QuadConfig = QuadConfig()) -> GridFunction:
    """H*_phi f(x) = int f(t x) phi(t) dt sampled on ``spec``."""
    return _apply(k, f, spec, q, adjoint=True)


# ---------------------------------------------------------------------------
# log-radial fast path


class LogGridAliasingError(RuntimeError):
    """The input does not decay inside the log-radial window."""


@dataclass(frozen=True)
class LogRadialGrid:
    """Cells of width du on [u_min, u_max] in u = log|x|, on both half-lines.

    Index i < M is the cell at x = -exp(u_i); index M + i is x = +exp(u_i).
    """

    u_min: float
    u_max: float
    M: int

    def __post_init__(self):
        if not self.u_min < self.u_max or self.M < 2:
            raise ValueError("need u_min < u_max and at least two cells")

    @property
    def du(self) -> float:
        return (self.u_max - self.u_min) / self.M

    @property
    def edges(self) -> np.ndarray:
        return self.u_min + self.du * np.arange(self.M + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.u_min + self.du * (np.arange(self.M) + 0.5)

    def points(self) -> np.ndarray:
        c = np.exp(self.centers)
        return np.concatenate([-c, c])

    def dx_weights(self) -> np.ndarray:
        """Quadrature weights |x| du for integrals in x over the window."""
        c = np.exp(self.centers) * self.du
        return np.concatenate([c, c])

    def averages(self, f, order: int = 8) -> np.ndarray:
        """Cell averages over u of f(-e^u) and f(e^u)."""
        x, w = np.polynomial.legendre.leggauss(order)
        e = self.edges
        u = 0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * self.du * x[None, :]
        pos = np.exp(u)
        vals = np.concatenate([np.asarray(f(-pos), dtype=complex),
                               np.asarray(f(pos), dtype=complex)])
        return 0.5 * vals @ w


@dataclass(frozen=True)
class LogRadialFunction:
    """Samples on a tensor of log-radial grids.

    ``kind`` is "average" (cell averages in u) or "point" (values at centers).
    """

    grids: tuple
    data: np.ndarray = field(repr=False)
    kind: str = "average"

    def __post_init__(self):
        object.__setattr__(self, "grids", tuple(self.grids))
        shape = tuple(2 * g.M for g in self.grids)
        a = np.array(self.data, dtype=complex).reshape(shape)
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def n(self) -> int:
        return len(self.grids)

    @classmethod
    def from_callable(cls, f, grids, order: int = 8) -> "LogRadialFunction":
        grids = tuple(grids)
        if isinstance(f, TensorFunction) or (len(grids) == 1 and isinstance(f, Pointwise)):
            out = None
            for j, g in enumerate(grids):
                a = g.averages(f.factor(j), order)
                out = a if out is None else np.multiply.outer(out, a)
            return cls(grids, out)
        if len(grids) == 1:
            return cls(grids, grids[0].averages(f, order))
        # generic n-dimensional f: tensor Gauss rule per cell
        x, w = np.polynomial.legendre.leggauss(order)
        axes, wts = [], []
        for g in grids:
            e = g.edges
            u = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * g.du * x[None, :]).ravel()
            axes.append(np.concatenate([-np.exp(u), np.exp(u)]))
            wts.append(0.5 * w)
        vals = np.asarray(f(*np.meshgrid(*axes, indexing="ij")), dtype=complex)
        for j, g in enumerate(grids):
            vals = np.moveaxis(vals, j, -1)
            vals = vals.reshape(vals.shape[:-1] + (2 * g.M, order)) @ wts[j]
            vals = np.moveaxis(vals, -1, j)
        return cls(grids, vals)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*[g.points() for g in self.grids], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def _convolution_weights(factor, support, breaks, du, M):
    """Exact moments of K(s) = phi_j(e^s) over the cells ((d - 1/2) du, (d + 1/2) du).

    Returns (w0, w1, tail) with w0[d + M - 1] = int K, w1[d + M - 1] =
    int (d du - s) K(s) ds for |d| < M, and tail = int_{(M - 1/2) du}^inf K.
    """
    a, b = support
    kinks = [math.log(x) for x in (a, b, *breaks) if 0 < x < math.inf]
    lo, hi = -(M - 0.5) * du, (M - 0.5) * du
    edges = np.union1d(du * (np.arange(-M + 1, M) - 0.5), [lo, hi])
    edges = np.union1d(edges, [s for s in kinks if lo < s < hi])
    x, w = np.polynomial.legendre.leggauss(10)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    s = mids[:, None] + half[:, None] * x[None, :]
    Ks = factor(np.exp(s).ravel()).reshape(s.shape)
    d = np.rint(mids / du).astype(int)
    w0 = np.zeros(2 * M - 1)
    w1 = np.zeros(2 * M - 1)
    np.add.at(w0, d + M - 1, (Ks * w).sum(axis=1) * half)
    np.add.at(w1, d + M - 1, ((d[:, None] * du - s) * Ks * w).sum(axis=1) * half)

    def g(sv):
        return factor(np.exp(sv))
    tail, _, ok = integrate_1d(g, hi, math.inf, 1e-15, breaks=[k for k in kinks if k > hi],
                               raise_on_failure=False)
    tail = float(tail.real)
    if not ok or not math.isfinite(tail):
        tail = math.inf
    return w0, w1, tail


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _log_slope(mag, end, inner, ds):
    """Exponential rate of ``mag`` toward index ``end`` per unit of u; None if a value is 0."""
    if mag[end] > 0 and mag[inner] > 0:
        return (math.log(mag[end]) - math.log(mag[inner])) / ds
    return None


def _tilt_rate(w0, G, du):
    """Rate gamma <= 0 used to flatten the convolution before the FFT.

    With w~_d = w_d e^{-gamma d du} the sum becomes
    e^{gamma u_i} sum_k (A_k e^{-gamma u_k}) w~_{i-k}, an exact identity.  A
    negative gamma damps the lower end of the window and amplifies the upper
    end, so it pays off when the kernel table grows toward s -> -inf or decays
    toward s -> +inf.  It is capped by half the decay rate of G at the top, so
    the tilted input stays bounded, and by a total amplification of e^20 across
    the window.
    """
    M = G.shape[-1]
    span = max(2, M // 4)
    mag = np.abs(w0)
    n = len(w0)
    grow_neg = _log_slope(mag, 0, span, span * du)
    grow_pos = _log_slope(mag, n - 1, n - 1 - span, span * du)
    gamma = min(0.0, -(grow_neg or 0.0), grow_pos or 0.0)
    gmag = np.abs(G).reshape(-1, M).max(axis=0)
    g_slope = _log_slope(gmag, M - 1, M - 1 - span, span * du)
    if g_slope is not None:
        gamma = max(gamma, 0.5 * g_slope)
    gamma = max(gamma, -20.0 / (M * du))
    return float(min(gamma, 0.0))


def _axis_action(G, w0, w1, tail, du, gamma=0.0):
    """Apply the convolution along the last axis of G (cell averages, M cells)."""
    M = G.shape[-1]
    below = G[..., :1]
    above = np.zeros_like(below)
    ext = np.concatenate([below, G, above], axis=-1)
    fwd = (ext[..., 2:] - ext[..., 1:-1]) / du
    bwd = (ext[..., 1:-1] - ext[..., :-2]) / du
    slope = _minmod(fwd.real, bwd.real) + 1j * _minmod(fwd.imag, bwd.imag)

    c = gamma * du
    idx = np.arange(M)
    d = np.arange(-M + 1, M)
    shape = (1,) * (G.ndim - 1) + (2 * M - 1,)
    wt = np.exp(-c * d).reshape(shape)
    ain = np.exp(-c * idx)
    out = fftconvolve(G * ain, w0.reshape(shape) * wt, axes=-1) \
        + fftconvolve(slope * ain, w1.reshape(shape) * wt, axes=-1)
    out = out[..., M - 1:2 * M - 1] * np.exp(c * idx)
    if np.any(G[..., 0] != 0):
        # f is taken constant below u_min: mass of K beyond (i + 1/2) du
        if not math.isfinite(tail):
            raise LogGridAliasingError("kernel tail is not integrable; f(0) must vanish")
        T = np.cumsum(w0[::-1])[::-1]
        Ti = np.append(T[M:2 * M - 1], 0.0) + tail  # sum over d >= i + 1
        out = out + G[..., :1] * Ti
    return out


def apply_separable_fast(k: Kernel, g: LogRadialFunction, *,
                         alias_threshold: float = 1e-9) -> LogRadialFunction:
    """H_phi g for a separable kernel, one FFT convolution per axis and half-line.

    After x = +-e^u and t = e^s each axis action is the ordinary convolution
    G(u) -> int G(u - s) phi_j(e^s) ds.  The input holds cell averages; inside
    each cell G is reconstructed linearly with minmod slopes and integrated
    exactly against K, so the output holds point values at cell centers.
    Below the window G is extended by its first cell and above it by zero; a
    top cell above ``alias_threshold`` times max|G| raises LogGridAliasingError.
    """
    if not k.separable:
        raise KernelError("fast path requires a separable kernel")
    if g.n != k.n:
        raise KernelError("dimension mismatch")
    data = np.array(g.data)
    scale = np.abs(data).max()
    for j, grid in enumerate(g.grids):
        M, du = grid.M, grid.du
        a = np.moveaxis(data, j, -1)
        top = max(np.abs(a[..., M - 1]).max(), np.abs(a[..., 2 * M - 1]).max())
        if scale > 0 and top > alias_threshold * scale:
            raise LogGridAliasingError(
                f"axis {j}: top-cell magnitude {top:.3g} exceeds {alias_threshold:g} x max; "
                "enlarge u_max")
        w0, w1, tail = _convolution_weights(k.factors[j], k.support[j], k.breaks[j], du, M)
        gamma = _tilt_rate(w0, a, du)
        neg = _axis_action(a[..., :M], w0, w1, tail, du, gamma)
        pos = _axis_action(a[..., M:], w0, w1, tail, du, gamma)
        data = np.moveaxis(np.concatenate([neg, pos], axis=-1), -1, j)
    return LogRadialFunction(g.grids, data, "point")


def relative_l2(a: np.ndarray, b: np.ndarray, weights: np.ndarray | None = None) -> float:
    """||a - b|| / ||b|| with optional quadrature weights."""
    w = 1.0 if weights is None else weights
    num = np.sqrt(np.sum(w * np.abs(a - b) ** 2))
    den = np.sqrt(np.sum(w * np.abs(b) ** 2))
    return float(num / den) if den > 0 else float(num)


__all__ = [
    "QuadConfig", "QuadratureError", "evaluate_at", "apply_hausdorff", "apply_adjoint",
    "LogGridAliasingError", "LogRadialGrid", "LogRadialFunction", "apply_separable_fast",
    "relative_l2",
]
