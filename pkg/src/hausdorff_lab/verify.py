"""Identity checks tying the modules together, and the report generator.

Pairing residuals carry a +1 regularizer in the denominator, so zero inputs
give zero residuals rather than 0/0.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import battery as B
from .gridfn import GridSpec, fourier, lp_norm, sample
from .hausdorff import QuadConfig, apply_adjoint, apply_hausdorff, evaluate_at
from .kernel import Kernel, moment
from .quadrature import graded_rule
from .report import CheckReport
from .transforms import hilbert_axis, star_norm

METHODS = ("graded", "grid")


@dataclass(frozen=True)
class Tolerances:
    duality: float = 1e-6
    fourier: float = 1e-3
    hilbert: float = 1e-3
    upper_lp: float = 0.02
    upper_star: float = 0.05
    sup: float = 0.02

    @classmethod
    def for_dimension(cls, n: int) -> "Tolerances":
        if n == 1:
            return cls()
        return cls(duality=1e-5, fourier=5e-3, hilbert=5e-3)


def _rel_l2(a, b, w=None) -> float:
    w = 1.0 if w is None else w
    num = np.sqrt(np.sum(w * np.abs(a - b) ** 2))
    den = np.sqrt(np.sum(w * np.abs(b) ** 2))
    return float(num / den) if den > 0 else float(num)


def _is_zero_kernel(k: Kernel) -> bool:
    return k.name == "zero"


def _axis_rule(L: float, xi_max: float = 0.0):
    """Composite Gauss rule on [-L, L], graded toward 0, with panels no wider
    than a quarter period of exp(-2 pi i x xi) when |xi| <= xi_max."""
    return graded_rule(L, max_width=1 / (4 * xi_max) if xi_max > 0 else None)


def _tensor_parts(k: Kernel, f):
    """Per-axis (kernel, function) pairs when both factor, else None."""
    if k.n == 1:
        return [(k, f)]
    if k.separable and isinstance(f, B.TensorFunction):
        return [(k.factor_kernel(j), f.factor(j)) for j in range(k.n)]
    return None


def _weights_nd(rules):
    w = rules[0][1]
    for r in rules[1:]:
        w = np.multiply.outer(w, r[1])
    return w


def _values_on_rule(k, f, rules, q, adjoint=False):
    """H f (or H* f) at the tensor nodes of ``rules``."""
    parts = _tensor_parts(k, f)
    if parts is not None and k.n > 1:
        out = None
        for (kj, fj), (x, _) in zip(parts, rules):
            v, _ = evaluate_at(kj, fj, x[:, None], q, adjoint=adjoint)
            out = v if out is None else np.multiply.outer(out, v)
        return out
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    v, _ = evaluate_at(k, f, X, q, adjoint=adjoint)
    return v.reshape(mesh[0].shape)


def _f_on_rule(f, rules):
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    return np.asarray(f(*mesh), dtype=complex)


def check_duality(k: Kernel, f, g, spec: GridSpec, *, method: str = "graded",
                  q: QuadConfig = QuadConfig(), tolerance: float | None = None) -> CheckReport:
    """|<H f, g> - <f, H* g>| / (1 + ||f||_2 ||g||_2).

    ``method="grid"`` pairs samples on ``spec`` with the midpoint rule;
    ``method="graded"`` uses a Gauss rule on [-L, L] graded toward the origin,
    where H f of a function with f(0) != 0 can have a logarithmic singularity.
    """
    tol = tolerance or Tolerances.for_dimension(k.n).duality
    ctx = {"kernel": k.name, "f": getattr(f, "name", "f"), "g": getattr(g, "name", "g"),
           "method": method, "L": spec.L, "N": spec.N}
    if method == "grid":
        hf = apply_hausdorff(k, f, spec, q)
        hg = apply_adjoint(k, g, spec, q)
        fs, gs = sample(f, spec), sample(g, spec)
        dv = spec.cell_volume
        lhs = np.sum(hf.samples * gs.samples) * dv
        rhs = np.sum(fs.samples * hg.samples) * dv
        norm = lp_norm(fs, 2) * lp_norm(gs, 2)
    elif method == "graded":
        rules = [_axis_rule(L) for L in spec.L]
        w = _weights_nd(rules)
        hf = _values_on_rule(k, f, rules, q)
        hg = _values_on_rule(k, g, rules, q, adjoint=True)
        fv, gv = _f_on_rule(f, rules), _f_on_rule(g, rules)
        lhs, rhs = np.sum(w * hf * gv), np.sum(w * fv * hg)
        norm = math.sqrt(np.sum(w * np.abs(fv) ** 2) * np.sum(w * np.abs(gv) ** 2))
    else:
        raise ValueError(f"method must be one of {METHODS}")
    ctx.update(lhs=complex(lhs), rhs=complex(rhs))
    return CheckReport("duality", abs(lhs - rhs) / (1 + norm), tol, ctx)


def _band(spec: GridSpec):
    """Dual-grid frequencies per axis and the anti-aliasing mask |xi_j| <= N_j/(8 L_j)."""
    dual = spec.dual()
    axes = dual.axes()
    keep = [np.abs(a) <= N / (8 * L) + 1e-12 for a, N, L in zip(axes, spec.N, spec.L)]
    return dual, axes, keep


def check_fourier_commutation(k: Kernel, f, spec: GridSpec, *, method: str = "graded",
                              q: QuadConfig = QuadConfig(),
                              tolerance: float | None = None) -> CheckReport:
    """Relative L^2 distance between the Fourier transform of H f and H* applied
    to the closed-form transform of f, on the band |xi_j| <= N_j/(8 L_j)."""
    tol = tolerance or Tolerances.for_dimension(k.n).fourier
    fhat = f.fourier_function()
    dual, axes, keep = _band(spec)
    band_axes = [a[m] for a, m in zip(axes, keep)]
    ctx = {"kernel": k.name, "f": getattr(f, "name", "f"), "method": method,
           "L": spec.L, "N": spec.N, "band": [float(a.max()) for a in band_axes]}
    band_spec_pts = np.meshgrid(*band_axes, indexing="ij")
    Xb = np.stack([m.ravel() for m in band_spec_pts], axis=1)

    parts = _tensor_parts(k, f)
    if parts is not None:
        rhs = None
        for (kj, _), fj, xi in zip(parts, fhat.factors, band_axes):
            v, _ = evaluate_at(kj, fj, xi[:, None], q, adjoint=True)
            rhs = v if rhs is None else np.multiply.outer(rhs, v)
    else:
        rhs = evaluate_at(k, fhat, Xb, q, adjoint=True)[0].reshape(band_spec_pts[0].shape)

    if method == "grid":
        Fh = fourier(apply_hausdorff(k, f, spec, q)).samples
        lhs = Fh[np.ix_(*keep)]
    elif method == "graded":
        if parts is None:
            raise ValueError("graded Fourier check needs a separable kernel and a tensor "
                             "(or one-dimensional) function; use method='grid'")
        lhs, windows = None, []
        for (kj, fj), L, xi in zip(parts, spec.L, band_axes):
            x, w, hv, X = _transform_window(kj, fj, L, float(np.abs(xi).max()), q)
            windows.append(X)
            v = _dft(x, w * hv, xi)
            lhs = v if lhs is None else np.multiply.outer(lhs, v)
        ctx["windows"] = windows
    else:
        raise ValueError(f"method must be one of {METHODS}")
    if _is_zero_kernel(k):
        return CheckReport("fourier_commutation", 0.0, tol, ctx)
    return CheckReport("fourier_commutation", _rel_l2(lhs, rhs), tol, ctx)


def _transform_window(k, f, L, xi_max, q, floor=1e-17):
    """Graded rule for int H f(x) exp(-2 pi i x xi) dx.

    H f is first evaluated on a coarse graded rule over [-L, L]; the window is
    then cut to the part where |H f| exceeds ``floor`` times its maximum, and
    the outer panels are refined so each covers at most a quarter period at
    frequency ``xi_max``.
    """
    x0, _ = _axis_rule(L)
    h0, _ = evaluate_at(k, f, x0[:, None], q)
    mag = np.abs(h0)
    big = np.abs(x0[mag > floor * mag.max()]) if mag.max() > 0 else np.array([1.0])
    X = min(L, 1.25 * float(big.max()))
    x, w = _axis_rule(X, xi_max)
    hv, _ = evaluate_at(k, f, x[:, None], q)
    return x, w, hv, X


def _dft(x, wv, xi, block=256):
    """sum_i wv_i exp(-2 pi i x_i xi) for every xi.

    Evenly spaced xi (the dual-grid band) reuse one block of exponentials,
    advanced block to block by a per-node phase factor.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty(len(xi), dtype=complex)
    d = np.diff(xi)
    if len(xi) <= block or not np.allclose(d, d[0], rtol=1e-12, atol=0):
        for s in range(0, len(xi), block):
            out[s:s + block] = np.exp(-2j * np.pi * np.outer(xi[s:s + block], x)) @ wv
        return out
    E = np.exp(-2j * np.pi * np.outer(xi[:block], x))
    step = np.exp(-2j * np.pi * block * d[0] * x)
    for s in range(0, len(xi), block):
        if s:
            # restart from an exact block now and then to keep the phase error at roundoff
            E = E * step if (s // block) % 16 else np.exp(-2j * np.pi * np.outer(xi[s:s + block], x))
        m = min(block, len(xi) - s)
        out[s:s + m] = E[:m] @ wv
    return out


def check_hilbert_commutation(k: Kernel, f, j: int, spec: GridSpec, *,
                              q: QuadConfig = QuadConfig(),
                              tolerance: float | None = None) -> CheckReport:
    """Relative L^2 distance between H_j(H_phi f) on the grid and H_phi applied to
    the closed-form (or, failing that, interpolated grid) Hilbert transform of f."""
    tol = tolerance or Tolerances.for_dimension(k.n).hilbert
    hf = apply_hausdorff(k, f, spec, q)
    a = hilbert_axis(hf, j)
    if isinstance(f, B.TensorFunction):
        hil = f.hilbert_axis(j)
        source = "closed form"
    elif isinstance(f, B.Pointwise) and f.hilbert is not None:
        hil = f.hilbert_function()
        source = "closed form"
    else:
        hil = hilbert_axis(sample(f, spec), j)
        source = "interpolated grid transform"
    b = apply_hausdorff(k, hil, spec, q)
    ctx = {"kernel": k.name, "f": getattr(f, "name", "f"), "axis": j, "L": spec.L,
           "N": spec.N, "source": source}
    if _is_zero_kernel(k):
        return CheckReport("hilbert_commutation", 0.0, tol, ctx)
    return CheckReport("hilbert_commutation", _rel_l2(a.samples, b.samples), tol, ctx)


def check_upper_bound(k: Kernel, p: float, battery: Sequence, norm_kind: str, spec: GridSpec, *,
                      q: QuadConfig = QuadConfig(), tolerance: float | None = None) -> list:
    """Grid ratios ||H f|| / ||f|| against the sharp bound, one report per battery member.

    ``norm_kind="lp"`` compares with M_{1-1/p}; ``"star"`` with M_0.  The
    residual max(0, ratio - target)/target is zero whenever the bound holds.
    """
    if norm_kind == "lp":
        alpha, tol = 1.0 - 1.0 / p, tolerance or Tolerances().upper_lp
    elif norm_kind == "star":
        alpha, tol = 0.0, tolerance or Tolerances().upper_star
    else:
        raise ValueError("norm_kind must be 'lp' or 'star'")
    target = moment(k, alpha, 1e-12).value
    reports = []
    for f in battery:
        fs = sample(f, spec)
        hf = apply_hausdorff(k, f, spec, q)
        if norm_kind == "lp":
            num, den = lp_norm(hf, p), lp_norm(fs, p)
        else:
            num, den = star_norm(hf), star_norm(fs)
        ratio = num / den if den > 0 else 0.0
        if math.isinf(target) or target == 0:
            residual = 0.0 if (math.isinf(target) or ratio == 0) else math.inf
        else:
            residual = max(0.0, ratio - target) / target
        reports.append(CheckReport(f"upper_bound_{norm_kind}", residual, tol,
                                   {"kernel": k.name, "f": getattr(f, "name", "f"), "p": p,
                                    "ratio": ratio, "target": target}))
    return reports


def check_sup_norm(k: Kernel, battery: Sequence, spec: GridSpec, *,
                   q: QuadConfig = QuadConfig(), tolerance: float | None = None) -> list:
    """||H f||_inf <= M_1(phi) ||f||_inf on the grid.

    Pointwise |H f(x)| <= ||f||_inf int phi(t) dt/t, and int phi(t)/t dt is the
    moment of order 1 (it is what H_phi does to the constant 1).
    """
    tol = tolerance or Tolerances().sup
    target = moment(k, 1.0, 1e-12).value
    reports = []
    for f in battery:
        fs = sample(f, spec)
        hf = apply_hausdorff(k, f, spec, q)
        den = lp_norm(fs, math.inf)
        ratio = lp_norm(hf, math.inf) / den if den > 0 else 0.0
        if math.isinf(target):
            residual = 0.0
        elif target == 0:
            residual = 0.0 if ratio == 0 else math.inf
        else:
            residual = max(0.0, ratio - target) / target
        reports.append(CheckReport("sup_norm", residual, tol,
                                   {"kernel": k.name, "f": getattr(f, "name", "f"),
                                    "ratio": ratio, "target": target}))
    return reports


# ---------------------------------------------------------------------------
# report


def config_hash(cfg_dict: dict) -> str:
    blob = json.dumps(cfg_dict, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def check_witness(k: Kernel, spec: GridSpec | None = None, *,
                  q: QuadConfig = QuadConfig(), tolerance: float | None = None) -> CheckReport:
    """|lhs/rhs - 1| for the positive-orthant integral of H applied to odd f."""
    from .extremal import necessary_condition_witness

    tol = tolerance or (1e-3 if k.n == 1 else 5e-3)
    lhs, rhs = necessary_condition_witness(k, spec, q)
    if rhs == 0:
        residual = 0.0 if abs(lhs) < 1e-12 else math.inf
    else:
        residual = abs(lhs / rhs - 1)
    return CheckReport("witness", residual, tol, {"kernel": k.name, "lhs": lhs, "rhs": rhs})


def run_checks(cfg) -> tuple:
    """Run the identity suite of an ExperimentConfig.

    Returns (reports, skipped).  A check whose moment hypothesis fails is
    listed in ``skipped`` with the reason; a check that raises becomes a
    failed report carrying the error text.
    """
    from .config import build_kernel
    from .extremal import scaling_check

    k = build_kernel(cfg)
    n = k.n
    spec = cfg.grid_spec()
    q = QuadConfig(tolerance=cfg.tolerances.quadrature, threads=cfg.threads)
    tols = cfg.resolved_tolerances()
    rng = np.random.default_rng(cfg.seed)
    fam = B.battery_for(n, B.standard_battery())
    hardy_fam = B.battery_for(n, B.hardy_battery())
    gauss = B.battery_for(n, [B.gaussian()])[0]
    odd = B.battery_for(n, [B.odd_rational()])[0]
    # a random complex multiple keeps the pairing check from relying on one scaling
    c = complex(*rng.uniform(0.5, 2.0, size=2))
    gauss_c = B.battery_for(n, [B.gaussian().scaled(c)])[0]

    def finite(alpha):
        return math.isfinite(moment(k, alpha, 1e-12).value)

    m0, m1 = finite(0.0), finite(1.0)
    jobs, skipped = [], []

    def add(name, ok, reason, job):
        if ok:
            jobs.append((name, job))
        else:
            skipped.append({"name": name, "reason": reason})

    add("duality", m0 or m1, "moments of order 0 and 1 both infinite",
        lambda: [check_duality(k, gauss, gauss_c, spec, q=q, tolerance=tols.duality)])
    add("fourier_commutation", m0, "moment of order 0 infinite",
        lambda: [check_fourier_commutation(k, gauss, spec, q=q, tolerance=tols.fourier)])
    add("hilbert_commutation", m0, "moment of order 0 infinite",
        lambda: [check_hilbert_commutation(k, odd, 0, spec, q=q, tolerance=tols.hilbert)])
    add("upper_bound_star", m0, "moment of order 0 infinite",
        lambda: check_upper_bound(k, 1.0, hardy_fam, "star", spec, q=q,
                                  tolerance=tols.upper_star))
    add("witness", m0, "moment of order 0 infinite", lambda: [check_witness(k, spec, q=q)])
    add("sup_norm", True, "", lambda: check_sup_norm(k, fam, spec, q=q, tolerance=tols.sup))
    for p in cfg.p_list:
        if math.isinf(p):
            continue
        add(f"upper_bound_lp[p={p:g}]", finite(1 - 1 / p), f"moment of order {1 - 1 / p:g} infinite",
            lambda p=p: check_upper_bound(k, p, fam, "lp", spec, q=q, tolerance=tols.upper_lp))
    add("scaling", True, "", lambda: [scaling_check(odd, 2, spec)])

    out = []
    for name, job in jobs:
        try:
            out.extend(job())
        except Exception as exc:  # recorded per item; the report is always written
            out.append(CheckReport(name, math.inf, 1.0, {"error": f"{type(exc).__name__}: {exc}"}))
    return out, skipped


def run_report(cfg, path=None) -> dict:
    """Execute the configured checks and write the JSON report; returns the report dict."""
    reports, skipped = run_checks(cfg)
    spec = cfg.grid_spec()
    doc = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config_hash": config_hash(cfg.to_dict()),
        "grid": {"n": spec.n, "L": list(spec.L), "N": list(spec.N), "h": list(spec.h)},
        "passed": all(r.passed for r in reports),
        "checks": [_clean(r.to_dict()) for r in reports],
        "skipped": skipped,
    }
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return doc


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, complex):
        return [float(f"{v.real:.12g}"), float(f"{v.imag:.12g}")]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v
