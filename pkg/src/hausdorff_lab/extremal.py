"""Extremal families and the sweeps that turn them into lower bounds for operator norms."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import battery
from .gridfn import GridFunction, GridSpec, lp_norm, sample
from .hausdorff import QuadConfig, apply_hausdorff, evaluate_at
from .kernel import Kernel, KernelError, moment, truncate_inner
from .quadrature import axis_pieces, integrate_1d, integrate_nodes
from .report import CheckReport
from .transforms import star_norm


class SweepError(RuntimeError):
    """A sweep could not be run (divergent target, failed quadrature, bad schedule)."""


@dataclass
class SweepEntry:
    epsilon: float
    ratio: float
    lower_bound: float
    upper_bound: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    kind: str
    entries: list
    extrapolated: float
    target: float
    converged: bool
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        eps = [e.epsilon for e in self.entries]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise SweepError("epsilons must be strictly decreasing")

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([e.epsilon for e in self.entries])

    @property
    def ratios(self) -> np.ndarray:
        return np.array([e.ratio for e in self.entries])

    def to_csv(self, path, preamble: str | None = None) -> None:
        """Columns epsilon, ratio, lower_bound, upper_bound, diagnostics (JSON).

        ``preamble`` is written first as a ``#`` comment line (run metadata
        such as a timestamp stays out of the table body).
        """
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if preamble:
                fh.write(f"# {preamble}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "ratio", "lower_bound", "upper_bound", "diagnostics"])
            for e in self.entries:
                w.writerow([fmt(e.epsilon), fmt(e.ratio), fmt(e.lower_bound),
                            fmt(e.upper_bound), json.dumps(_jsonable(e.diagnostics), sort_keys=True)])


def fmt(x) -> str:
    """Twelve significant digits; infinities as 'inf'."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _jsonable(d):
    if isinstance(d, dict):
        return {str(k): _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, (float, np.floating)):
        return fmt(d) if not math.isfinite(d) else float(fmt(d))
    if isinstance(d, np.integer):
        return int(d)
    if isinstance(d, np.bool_):
        return bool(d)
    return d


def _check_schedule(eps_schedule):
    eps = [float(e) for e in eps_schedule]
    if not eps:
        raise SweepError("empty epsilon schedule")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise SweepError("epsilon schedule must be positive and strictly decreasing")
    return eps


def extrapolate(eps: Sequence[float], values: Sequence[float]) -> float:
    """Limit as eps -> 0 under the model v(eps) = v0 + a eps log(1/eps),
    fitted through the two smallest epsilons."""
    if len(eps) == 1:
        return float(values[0])
    (e1, v1), (e2, v2) = sorted(zip(eps, values))[:2][::-1]
    c1, c2 = e1 * math.log(1 / e1), e2 * math.log(1 / e2)
    if c1 == c2:
        return float(v2)
    a = (v1 - v2) / (c1 - c2)
    return float(v2 - a * c2)


# ---------------------------------------------------------------------------
# L^p family


def lp_extremal(epsilon: float, p: float, n: int = 1):
    """f(x) = prod_j |x_j|^{-1/p - eps} on {|x_j| >= 1}, and its exact L^p norm (2/(p eps))^{n/p}."""
    if not epsilon > 0 or not p >= 1 or math.isinf(p):
        raise ValueError("need epsilon > 0 and 1 <= p < inf")
    a = 1.0 / p + epsilon

    def f1(x):
        ax = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(ax)
        m = ax >= 1
        out[m] = ax[m] ** (-a)
        return out

    factor = battery.Pointwise(f"lp_extremal({epsilon:g},{p:g})", f1, breaks=(-1.0, 1.0))
    func = factor if n == 1 else battery.TensorFunction([factor] * n)
    return func, (2.0 / (p * epsilon)) ** (n / p)


def _factor_of(k: Kernel, j: int):
    if k.separable:
        return k.factors[j]
    if k.n == 1:
        return lambda t: k.evaluator(np.asarray(t).reshape(-1, 1))
    raise KernelError("sweeps need a separable kernel when n > 1")


def _log_window(support, breaks):
    a, b = support
    lo = math.log(a) if a > 0 else -math.inf
    hi = math.log(b) if math.isfinite(b) else math.inf
    return lo, hi, [math.log(x) for x in breaks if a < x < b]


def partial_moment(factor, support, breaks, alpha: float, y=None, *, log_y=None,
                   tol: float = 1e-13):
    """P(y) = int_0^y phi(t) t^{-alpha} dt for every entry of ``y`` (vectorized).

    ``log_y`` may be given instead of ``y`` for arguments beyond double range.
    """
    v = np.log(np.asarray(y, dtype=float)).ravel() if log_y is None else \
        np.asarray(log_y, dtype=float).ravel()
    lo, hi, pts = _log_window(support, breaks)
    pieces = [axis_pieces(lo, hi, pts)]
    w = 1.0 - alpha

    def g(s, node):
        s = s[:, 0]
        val = factor(np.exp(s)) * np.exp(w * s)
        return np.where(s <= v[node], val, 0.0)

    nb = np.where((v > lo) & (v < hi), v, np.nan).reshape(-1, 1, 1)
    vals, errs, conv = integrate_nodes(g, pieces, len(v), tol, node_breaks=nb,
                                       raise_on_failure=False)
    return vals.real, errs, conv


def _lp_axis_ratio(factor, support, breaks, p, eps, tol, R=None):
    """(p eps int_{y>0} y^{-1-p eps} P(y)^p dy)^{1/p} for one axis, with its error.

    With y = exp(w / (p eps)) the integral is int e^{-w} P^p dw, whose decay
    scale no longer depends on eps.
    """
    alpha = 1.0 - 1.0 / p - eps
    lo, hi, pts = _log_window(support, breaks)
    c = p * eps
    failures = []

    def outer(wv):
        P, _, conv = partial_moment(factor, support, breaks, alpha, log_y=wv / c)
        if not conv.all():
            failures.append(int((~conv).sum()))
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(-wv) * np.maximum(P, 0.0) ** p

    marks = {0.0, 1.0, 4.0, *[c * x for x in (lo, hi, *pts) if math.isfinite(x)]}
    w_lo, w_hi = (-math.inf, math.inf) if R is None else (0.0, c * math.log(R))
    marks = sorted(m for m in marks if w_lo < m < w_hi)
    val, err, ok = integrate_1d(outer, w_lo, w_hi, tol, breaks=marks, raise_on_failure=False,
                                max_cells=4000)
    val = float(val.real)
    if not ok or failures or not math.isfinite(val):
        raise SweepError(f"numerator quadrature failed at eps={eps:g} "
                         f"(value={val:.6g}, error={err:.3g})")
    ratio = val ** (1.0 / p)
    return ratio, err * ratio / (p * val) if val > 0 else err


def lp_lower_bound_sweep(k: Kernel, p: float, eps_schedule: Sequence[float], *,
                         R: float | None = None, slack: float = 0.02,
                         tol: float = 1e-10) -> SweepResult:
    """Ratios ||H f_eps||_p / ||f_eps||_p along the schedule.

    The numerator uses the reduction H f_eps(x) = prod_j |x_j|^{-1/p-eps} P_j(|x_j|)
    with P_j the partial moment of order 1 - 1/p - eps, so the ratio is a
    product of one-dimensional integrals over y in (0, inf) (or [1, R] when R
    is given; the neglected part is then bounded by M^p R^{-p eps}).
    """
    eps_list = _check_schedule(eps_schedule)
    if not (1 <= p < math.inf):
        raise SweepError("p must lie in [1, inf)")
    alpha_t = 1.0 - 1.0 / p
    target_rep = moment(k, alpha_t, 1e-12)
    if target_rep.diverged:
        raise SweepError(f"divergent target moment M_{alpha_t:g} for {k.name}")
    target = target_rep.value
    entries = []
    for eps in eps_list:
        ratio, err, lower = 1.0, 0.0, eps ** (k.n * eps)
        axis_diag = []
        for j in range(k.n):
            f = _factor_of(k, j)
            r_j, e_j = _lp_axis_ratio(f, k.support[j], k.breaks[j], p, eps, tol, R)
            err = err * r_j + e_j * ratio + err * e_j
            ratio *= r_j
            P, Pe, _ = partial_moment(f, k.support[j], k.breaks[j], 1.0 - 1.0 / p - eps,
                                      [1.0 / eps])
            lower *= P[0]
            axis_diag.append({"axis_ratio": r_j, "axis_error": e_j, "partial_moment": P[0]})
        diag = {"quad_error": err, "axes": axis_diag}
        if R is not None:
            m = moment(k, 1.0 - 1.0 / p - eps, 1e-12).value
            diag["tail_bound"] = (m ** p * R ** (-p * eps)) ** (1 / p)
        entries.append(SweepEntry(eps, ratio, lower, target * (1 + slack), diag))
    extrap = extrapolate(eps_list, [e.ratio for e in entries])
    converged = math.isfinite(extrap) and all(
        e.lower_bound - e.diagnostics["quad_error"] <= e.ratio <= e.upper_bound for e in entries)
    return SweepResult("lp", entries, extrap, target, converged,
                       {"kernel": k.name, "n": k.n, "p": p, "R": R})


# ---------------------------------------------------------------------------
# H^1 family


def h1_extremal(epsilon: float, n: int = 1):
    """Boundary values prod_j (x_j^2 + 1)^{-(1+eps)/2} exp(-i (1+eps) arg(x_j + i)),
    with arg in (0, pi)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = 1.0 + epsilon

    def f1(x):
        x = np.asarray(x, dtype=float)
        theta = np.arctan2(1.0, x)  # arg(x + i) in (0, pi)
        return (x * x + 1.0) ** (-c / 2) * np.exp(-1j * c * theta)

    factor = battery.Pointwise(f"h1_extremal({epsilon:g})", f1)
    return factor if n == 1 else battery.TensorFunction([factor] * n)


def h1_residual(k: Kernel, delta: float, epsilon: float, spec: GridSpec,
                q: QuadConfig = QuadConfig()) -> dict:
    """r = star(H_{phi_delta} f - M_0(phi_delta) f) / star(f) on ``spec``."""
    kd = truncate_inner(k, delta)
    m0 = moment(kd, 0.0, 1e-12).value
    f = h1_extremal(epsilon, k.n)
    fg = sample(f, spec)
    hf = apply_hausdorff(kd, f, spec, q)
    diff = GridFunction(spec, hf.samples - m0 * fg.samples)
    num, den = star_norm(diff), star_norm(fg)
    return {"r": num / den if den > 0 else 0.0, "numerator": num, "denominator": den,
            "m0": m0, "quad_error": hf.meta.get("max_error", 0.0)}


def h1_lower_bound_sweep(k: Kernel, delta: float, eps_schedule: Sequence[float],
                         spec: GridSpec, q: QuadConfig = QuadConfig()) -> SweepResult:
    """Residual of H_{phi_delta} f_eps against M_0(phi_delta) f_eps in the star norm.

    Each entry stores r(eps) as ``ratio``, the implied bound M_0 (1 - r) as
    ``lower_bound`` and M_0 as ``upper_bound``.  ``converged`` requires r to
    decrease strictly along the schedule; a failure is reported, not hidden.
    """
    eps_list = _check_schedule(eps_schedule)
    if any(b > 1 for _, b in k.support):
        raise SweepError("kernel must be supported in (0, 1]^n")
    if spec.n != k.n:
        raise SweepError("grid dimension does not match the kernel")
    entries = []
    m0 = None
    for eps in eps_list:
        d = h1_residual(k, delta, eps, spec, q)
        m0 = d["m0"]
        entries.append(SweepEntry(eps, d["r"], m0 * (1 - d["r"]), m0,
                                  {k_: v for k_, v in d.items() if k_ != "r"}))
    rs = [e.ratio for e in entries]
    decreasing = all(b < a for a, b in zip(rs, rs[1:]))
    extrap_r = extrapolate(eps_list, rs)
    extrap = m0 * (1 - max(extrap_r, 0.0))
    ctx = {"kernel": k.name, "n": k.n, "delta": delta, "L": spec.L, "N": spec.N,
           "r_decreasing": decreasing, "r_extrapolated": extrap_r}
    if not decreasing:
        ctx["note"] = "r not decreasing along the schedule: grid resolution floor reached"
    return SweepResult("h1", entries, extrap, m0, decreasing and math.isfinite(extrap), ctx)


# ---------------------------------------------------------------------------
# identities used in the proofs


def necessary_condition_witness(k: Kernel, spec: GridSpec | None = None,
                                q: QuadConfig = QuadConfig()):
    """(lhs, rhs): lhs integrates H(f x ... x f), f = x/(1+x^2)^2, over the positive
    orthant of the grid; rhs = (1/2)^n M_0(phi)."""
    if spec is None:
        spec = GridSpec.uniform(k.n, 512.0, 2 ** 16) if k.n == 1 else GridSpec.uniform(k.n, 64.0, 2 ** 12)
    m0 = moment(k, 0.0, 1e-12)
    rhs = 0.5 ** k.n * m0.value
    f = battery.odd_rational()
    func = f if k.n == 1 else battery.TensorFunction([f] * k.n)
    if k.n > 1 and k.separable:
        # the orthant integral factorizes over axes
        lhs = 1.0
        for j in range(k.n):
            sub = GridSpec((spec.L[j],), (spec.N[j],))
            half = _positive_half(sub)
            v, _ = evaluate_at(k.factor_kernel(j), f, half[:, None], q)
            lhs *= float(v.real.sum() * sub.h[0])
        return lhs, rhs
    hf = apply_hausdorff(k, func, spec, q)
    mask = np.ones(spec.shape, dtype=bool)
    for j in range(spec.n):
        sel = (spec.axis(j) > 0).reshape([-1 if i == j else 1 for i in range(spec.n)])
        mask = mask & sel
    return float(hf.samples.real[mask].sum() * spec.cell_volume), rhs


def _positive_half(spec: GridSpec) -> np.ndarray:
    x = spec.axis(0)
    return x[x > 0]


def scaling_check(g, m: int, spec: GridSpec | None = None, tolerance: float = 0.01) -> CheckReport:
    """Check ||g(./m)||_1 = m^n ||g||_1 and the same for the star norm.

    g(./m) is sampled on the grid with half-width mL and the same point count,
    whose nodes are m times the original nodes, so the samples are reused.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    m = int(m)
    if not isinstance(g, GridFunction):
        g = sample(g, spec)
    dil = GridFunction(g.spec.dilated(m), g.samples)
    n = g.n
    l1_ratio = lp_norm(dil, 1) / lp_norm(g, 1) if lp_norm(g, 1) > 0 else m ** n
    s0 = star_norm(g)
    star_ratio = star_norm(dil) / s0 if s0 > 0 else m ** n
    l1_res = abs(l1_ratio - m ** n) / m ** n
    star_res = abs(star_ratio - m ** n) / m ** n
    # the L^1 identity holds exactly in grid arithmetic; any drift fails the check
    residual = star_res if l1_res <= 1e-12 else math.inf
    return CheckReport("scaling", residual, tolerance, {"m": m, "n": n, "l1_ratio": l1_ratio, "star_ratio": star_ratio,
                                   "l1_residual": l1_res, "star_residual": star_res})
