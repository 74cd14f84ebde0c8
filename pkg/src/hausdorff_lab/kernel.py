"""Kernels on (0, inf)^n, the named registry, moments, reflection and truncations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import S_CLAMP, axis_pieces, integrate_1d, integrate_nodes

Factor = Callable[[np.ndarray], np.ndarray]


class KernelError(ValueError):
    """Unknown kernel family, bad parameters, or a violated precondition."""


def _prod_factors(factors):
    def evaluator(t):
        t = np.atleast_2d(t)
        out = np.ones(t.shape[0])
        for j, fj in enumerate(factors):
            out = out * fj(t[:, j])
        return out
    return evaluator


@dataclass(frozen=True)
class Kernel:
    """A kernel phi on (0, inf)^n.

    ``evaluator`` maps an array of shape (K, n) to K values.  ``support`` is a
    tuple of per-axis intervals (a_j, b_j) with 0 <= a_j < b_j <= inf outside of
    which phi vanishes.  ``breaks`` lists per-axis interior points where phi is
    not smooth; quadrature splits there.
    """

    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    support: tuple
    factors: tuple | None = None
    nonnegative: bool = True
    breaks: tuple = ()
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise KernelError("kernel dimension must be positive")
        if len(self.support) != self.n:
            raise KernelError("support must have one interval per axis")
        for a, b in self.support:
            if not (0 <= a < b):
                raise KernelError(f"invalid support interval ({a}, {b})")
        if self.factors is not None and len(self.factors) != self.n:
            raise KernelError("need exactly n separable factors")
        if not self.breaks:
            object.__setattr__(self, "breaks", tuple(() for _ in range(self.n)))

    @property
    def separable(self) -> bool:
        return self.factors is not None

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.n == 1 and t.ndim <= 1:
            return self.evaluator(t.reshape(-1, 1))
        return self.evaluator(t.reshape(-1, self.n))

    def factor_kernel(self, j: int) -> "Kernel":
        """The j-th separable factor as a one-dimensional kernel."""
        if not self.separable:
            raise KernelError("kernel is not separable")
        fj = self.factors[j]
        return Kernel(1, lambda t: fj(t[:, 0]), (self.support[j],), (fj,), self.nonnegative,
                      (self.breaks[j],), f"{self.name}[{j}]", self.params)

    def __add__(self, other: "Kernel") -> "Kernel":
        if other.n != self.n:
            raise KernelError("cannot add kernels of different dimension")
        sup = tuple((min(a1, a2), max(b1, b2))
                    for (a1, b1), (a2, b2) in zip(self.support, other.support))
        brk = tuple(tuple(sorted((set(b1) | set(b2) | {a1, b1_, a2, b2_}) - {0.0, math.inf}))
                    for b1, b2, (a1, b1_), (a2, b2_) in
                    zip(self.breaks, other.breaks, self.support, other.support))
        e1, e2 = self.evaluator, other.evaluator
        factors = None
        if self.n == 1:
            f1, f2 = self.factors[0], other.factors[0]
            factors = (lambda t: f1(t) + f2(t),)
        return Kernel(self.n, lambda t: e1(t) + e2(t), sup, factors,
                      self.nonnegative and other.nonnegative, brk,
                      f"({self.name}+{other.name})")

    def scaled(self, c: float) -> "Kernel":
        ev = self.evaluator
        factors = None
        if self.separable:
            factors = (lambda t, f0=self.factors[0]: c * f0(t),) + self.factors[1:]
        return Kernel(self.n, lambda t: c * ev(t), self.support, factors,
                      self.nonnegative and c >= 0, self.breaks, f"{c}*{self.name}", self.params)


def _separable(name, params, n, factor, support, breaks=()):
    factors = tuple(factor for _ in range(n))
    return Kernel(n, _prod_factors(factors), tuple(support for _ in range(n)), factors,
                  True, tuple(tuple(breaks) for _ in range(n)), name, tuple(params))


def bump_profile(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


_BUMP_MASS = None


def bump_mass() -> float:
    """Integral of exp(-1/(1-x^2)) over (-1, 1)."""
    global _BUMP_MASS
    if _BUMP_MASS is None:
        val, _, _ = integrate_1d(bump_profile, -1.0, 1.0, 1e-15)
        _BUMP_MASS = float(val.real)
    return _BUMP_MASS


def _box(params):
    if params:
        raise KernelError("box takes no parameters")
    return lambda t: ((t > 0) & (t <= 1)).astype(float), (0.0, 1.0), ()


def _hardy(params):
    if params:
        raise KernelError("hardy takes no parameters")

    def f(t):
        out = np.zeros_like(t, dtype=float)
        m = t >= 1
        out[m] = 1.0 / t[m]
        return out
    return f, (1.0, math.inf), ()


def _exp(params):
    rate = float(params[0]) if params else 1.0
    if len(params) > 1 or not rate > 0:
        raise KernelError("exp takes one positive rate parameter")
    return lambda t: np.exp(-rate * t), (0.0, math.inf), ()


def _power_box(params):
    if len(params) != 1:
        raise KernelError("power_box takes exactly one exponent parameter")
    beta = float(params[0])
    if not beta > -1:
        raise KernelError("power_box exponent must exceed -1 (local integrability)")

    def f(t):
        out = np.zeros_like(t, dtype=float)
        m = (t > 0) & (t <= 1)
        out[m] = t[m] ** beta
        return out
    return f, (0.0, 1.0), ()


def _bump(params):
    width = float(params[0]) if params else 0.1
    if len(params) > 1 or not 0 < width < 1:
        raise KernelError("bump width must lie in (0, 1)")
    c = 1.0 / (width * bump_mass())
    return lambda t: c * bump_profile((t - 1.0) / width), (1.0 - width, 1.0 + width), ()


def _zero(params):
    if params:
        raise KernelError("zero takes no parameters")
    return lambda t: np.zeros_like(t, dtype=float), (0.0, 1.0), ()


REGISTRY = {
    "box": _box,
    "adjoint_hardy": _box,
    "hardy": _hardy,
    "exp": _exp,
    "power_box": _power_box,
    "bump": _bump,
    "zero": _zero,
}


def make_named_kernel(name: str, params: Sequence[float] = (), n: int = 1) -> Kernel:
    """Instantiate a registry kernel as the n-fold separable product of its 1-D factor.

    >>> make_named_kernel("box", [], 1).support
    ((0.0, 1.0),)
    """
    if name not in REGISTRY:
        raise KernelError(f"unknown kernel {name!r}; known: {sorted(REGISTRY)}")
    if int(n) != n or n < 1:
        raise KernelError("n must be a positive integer")
    factor, support, breaks = REGISTRY[name](list(params))
    return _separable(name, params, int(n), factor, support, breaks)


@dataclass
class MomentReport:
    value: float
    error_estimate: float
    alpha: tuple
    converged: bool
    tol: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return math.isinf(self.value)


def _log_break_points(support, breaks):
    a, b = support
    lo = math.log(a) if a > 0 else -math.inf
    hi = math.log(b) if math.isfinite(b) else math.inf
    pts = [math.log(x) for x in breaks if a < x < b and x > 0]
    return lo, hi, pts


def moment_1d(factor: Factor, support, alpha: float, tol: float, breaks=()) -> MomentReport:
    """Moment of a one-dimensional factor with tail doubling in s = log t."""
    lo, hi, pts = _log_break_points(support, breaks)
    weight = 1.0 - alpha

    def g(s):
        return factor(np.exp(s)) * np.exp(weight * s)

    c_lo = lo if math.isfinite(lo) else min(0.0, hi)
    c_hi = hi if math.isfinite(hi) else max(0.0, lo)
    budget = tol / 4
    total, err = 0.0, 0.0
    diag = {"pieces": 0}
    if c_hi > c_lo:
        v, e, ok = integrate_1d(g, c_lo, c_hi, budget / 2, breaks=pts, raise_on_failure=False)
        total += v.real
        err += e
        diag["pieces"] += 1

    converged = True
    for direction, start, active in ((-1, c_lo, not math.isfinite(lo)),
                                     (+1, c_hi, not math.isfinite(hi))):
        if not active:
            continue
        contribs = []
        width, edge = 1.0, start
        tail_ok = False
        while abs(edge) < S_CLAMP:
            nxt = edge + direction * width
            nxt = max(min(nxt, S_CLAMP), -S_CLAMP)
            a, b = sorted((edge, nxt))
            v, e, _ = integrate_1d(g, a, b, budget / 40, breaks=pts, raise_on_failure=False)
            c = float(v.real)
            contribs.append(abs(c))
            total += c
            err += e
            diag["pieces"] += 1
            edge, width = nxt, 2 * width
            if len(contribs) >= 3 and abs(c) < tol / 10 and contribs[-1] <= contribs[-2]:
                tail_ok = True
                err += abs(c)
                break
        if not tail_ok:
            # classify by the exponential decay rate of the integrand at the cap
            converged = False
            diag["partial"] = total
            mid = edge - direction * width / 4
            g_end, g_mid = abs(float(g(np.array([edge]))[0])), abs(float(g(np.array([mid]))[0]))
            rate = math.log(g_mid / g_end) / abs(edge - mid) if g_end > 0 and g_mid > 0 else math.inf
            if g_end > 0 and rate <= 1e-12:
                return MomentReport(math.inf, math.inf, (alpha,), False, tol,
                                    {**diag, "reason": "divergent tail"})
            remainder = g_end / rate if g_end > 0 else 0.0
            total += remainder
            err += remainder
            diag["reason"] = "tail decays too slowly; remainder extrapolated"
    if err > tol:
        converged = False
    return MomentReport(total, err, (alpha,), converged, tol, diag)


def _moment_nd(k: Kernel, alpha, tol) -> MomentReport:
    pieces = []
    for j in range(k.n):
        lo, hi, pts = _log_break_points(k.support[j], k.breaks[j])
        pieces.append(axis_pieces(lo, hi, pts))
    w = 1.0 - np.asarray(alpha)

    def g(s, node):
        return k.evaluator(np.exp(s)) * np.exp(s @ w)

    vals, errs, conv = integrate_nodes(g, pieces, 1, tol, max_cells=20000,
                                       raise_on_failure=False)
    if not conv[0] or not np.isfinite(vals[0]):
        return MomentReport(math.inf, math.inf, tuple(alpha), False, tol,
                            {"reason": "n-dimensional quadrature did not converge",
                             "partial": float(np.real(vals[0]))})
    return MomentReport(float(vals[0].real), float(errs[0]), tuple(alpha), True, tol,
                        {"path": "nd"})


def moment(k: Kernel, alpha=0.0, tol: float = 1e-10, *, force_nd: bool = False) -> MomentReport:
    """M_alpha(phi) = integral of phi(t) prod t_j^{-alpha_j} over (0, inf)^n.

    Separable kernels are computed as a product of one-dimensional moments.
    A divergent moment is reported as ``value=inf`` with ``converged=False``.
    """
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (k.n,))
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise KernelError("alpha components must lie in [0, 1]")
    if not tol > 0:
        raise KernelError("tolerance must be positive")
    if not k.separable or force_nd:
        return _moment_nd(k, alpha, tol)

    sub_tol = tol / (2 * k.n)
    for _ in range(4):
        reps = [moment_1d(f, k.support[j], float(alpha[j]), sub_tol, k.breaks[j])
                for j, f in enumerate(k.factors)]
        if any(r.diverged for r in reps):
            bad = next(r for r in reps if r.diverged)
            return MomentReport(math.inf, math.inf, tuple(alpha), False, tol, bad.diagnostics)
        vals = np.array([r.value for r in reps])
        errs = np.array([r.error_estimate for r in reps])
        value = float(np.prod(vals))
        err = float(sum(errs[j] * np.prod(np.delete(np.abs(vals) + errs, j))
                        for j in range(k.n)))
        if err <= tol or sub_tol < 1e-15:
            break
        sub_tol /= max(2.0, err / tol)
    converged = all(r.converged for r in reps) and err <= tol
    return MomentReport(value, err, tuple(alpha), converged, tol, {"path": "separable"})


def _invert_interval(a, b):
    return (0.0 if math.isinf(b) else 1.0 / b, math.inf if a == 0 else 1.0 / a)


def reflect(k: Kernel) -> Kernel:
    """phi_bar(t) = phi(1/t_1, ..., 1/t_n) / (t_1 ... t_n)."""
    ev = k.evaluator

    def evaluator(t):
        t = np.atleast_2d(t)
        return ev(1.0 / t) / np.prod(t, axis=1)

    factors = None
    if k.separable:
        factors = tuple((lambda t, f=f: f(1.0 / t) / t) for f in k.factors)
    support = tuple(_invert_interval(a, b) for a, b in k.support)
    breaks = tuple(tuple(sorted(1.0 / x for x in brk if x > 0)) for brk in k.breaks)
    return Kernel(k.n, evaluator, support, factors, k.nonnegative, breaks,
                  f"reflect({k.name})", k.params)


def truncate_inner(k: Kernel, delta: float) -> Kernel:
    """phi_delta = phi * indicator of [delta, 1]^n, for phi supported in (0, 1]^n."""
    if not 0 < delta < 1:
        raise KernelError("delta must lie in (0, 1)")
    if any(b > 1 for _, b in k.support):
        raise KernelError("truncate_inner requires support inside (0, 1]^n")
    ev = k.evaluator

    def evaluator(t):
        t = np.atleast_2d(t)
        inside = np.all((t >= delta) & (t <= 1), axis=1)
        return np.where(inside, ev(t), 0.0)

    factors = None
    if k.separable:
        factors = tuple((lambda t, f=f: np.where((t >= delta) & (t <= 1), f(t), 0.0))
                        for f in k.factors)
    support = tuple((max(a, delta), min(b, 1.0)) for a, b in k.support)
    return Kernel(k.n, evaluator, support, factors, k.nonnegative, k.breaks,
                  f"{k.name}_delta{delta:g}", k.params)


def truncate_scaled(k: Kernel, m: float) -> Kernel:
    """phi_m(t) = phi(m t) * indicator of (0, 1)^n."""
    if not m > 0:
        raise KernelError("scale m must be positive")
    ev = k.evaluator

    def evaluator(t):
        t = np.atleast_2d(t)
        inside = np.all((t > 0) & (t < 1), axis=1)
        return np.where(inside, ev(m * t), 0.0)

    factors = None
    if k.separable:
        factors = tuple((lambda t, f=f: np.where((t > 0) & (t < 1), f(m * t), 0.0))
                        for f in k.factors)
    support = []
    for a, b in k.support:
        lo, hi = a / m, min(b / m, 1.0)
        if not lo < hi:
            lo, hi = 0.0, 1.0  # empty overlap: kernel vanishes, keep a valid box
        support.append((lo, hi))
    breaks = tuple(tuple(x / m for x in brk if 0 < x / m < 1) for brk in k.breaks)
    return Kernel(k.n, evaluator, tuple(support), factors, k.nonnegative, breaks,
                  f"{k.name}_scaled{m:g}", k.params)
