"""Vectorized adaptive Gauss-Kronrod quadrature.

Many independent integrals ("nodes") over a common n-dimensional box are
refined together: every node owns its own subdivision tree, but the cells of
all nodes are evaluated in one batched call per refinement round.  Infinite
axes are mapped onto [0, 1) with s = c +/- u / (1 - u).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

# QUADPACK qk15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point rule ordered from -1 to 1
KRONROD_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[[1, 3, 5, 13, 11, 9]] = _WG[:3][[0, 1, 2, 0, 1, 2]]
GAUSS_W[7] = _WG[3]

FINITE, UPPER, LOWER = 0, 1, -1
S_CLAMP = 700.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance at a node."""

    def __init__(self, message, node=None, partial=None, error=None):
        super().__init__(message)
        self.node = node
        self.partial = partial
        self.error = error


@dataclass(frozen=True)
class AxisPiece:
    """One piece of an integration axis: finite [lo, hi] or a half-line at ``anchor``."""

    kind: int
    lo: float
    hi: float
    anchor: float = 0.0


def axis_pieces(lo: float, hi: float, breaks=()) -> list[AxisPiece]:
    """Split ``[lo, hi]`` (either end may be infinite) at the given breakpoints."""
    if not lo < hi:
        raise ValueError(f"empty axis interval [{lo}, {hi}]")
    inner = sorted(b for b in set(breaks) if lo < b < hi)
    pts = [lo, *inner, hi]
    pieces = []
    for a, b in zip(pts[:-1], pts[1:]):
        if np.isinf(a) and np.isinf(b):
            pieces.append(AxisPiece(LOWER, 0.0, 1.0, 0.0))
            pieces.append(AxisPiece(UPPER, 0.0, 1.0, 0.0))
        elif np.isinf(a):
            pieces.append(AxisPiece(LOWER, 0.0, 1.0, b))
        elif np.isinf(b):
            pieces.append(AxisPiece(UPPER, 0.0, 1.0, a))
        else:
            pieces.append(AxisPiece(FINITE, a, b))
    return pieces


def _map_axis(u, kind, anchor):
    """Map unit-interval coordinates to s and return (s, jacobian)."""
    s = u.copy()
    jac = np.ones_like(u)
    half = kind != FINITE
    if np.any(half):
        uh = u[half]
        r = uh / (1.0 - uh)
        sgn = kind[half].astype(float)
        s[half] = anchor[half] + sgn * r
        jac[half] = 1.0 / (1.0 - uh) ** 2
    return np.clip(s, -S_CLAMP, S_CLAMP), jac


class _Cells:
    __slots__ = ("node", "lo", "hi", "kind", "anchor")

    def __init__(self, node, lo, hi, kind, anchor):
        self.node, self.lo, self.hi, self.kind, self.anchor = node, lo, hi, kind, anchor

    def __len__(self):
        return self.node.shape[0]

    def take(self, idx):
        return _Cells(self.node[idx], self.lo[idx], self.hi[idx], self.kind[idx], self.anchor[idx])

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            return None
        return _Cells(*(np.concatenate([getattr(p, a) for p in parts]) for a in _Cells.__slots__))


def _tensor_rules(n):
    """Tensor nodes (15**n, n) and weight vectors for the full and per-axis Gauss rules."""
    grid = np.array(list(itertools.product(range(15), repeat=n)), dtype=np.intp)
    nodes = KRONROD_X[grid]
    wk = np.prod(KRONROD_W[grid], axis=1)
    # axis-j error weights: Kronrod on all axes minus Gauss on axis j
    werr = []
    for j in range(n):
        w = np.prod(np.where(np.arange(n) == j, GAUSS_W[grid], KRONROD_W[grid]), axis=1)
        werr.append(wk - w)
    return nodes, wk, np.array(werr)


def _evaluate(cells: _Cells, func, n, chunk_points):
    nodes, wk, werr = _tensor_rules(n)
    q = nodes.shape[0]
    ncell = len(cells)
    val = np.empty(ncell, dtype=complex)
    axis_err = np.empty((ncell, n))
    step = max(1, chunk_points // q)
    for start in range(0, ncell, step):
        sl = slice(start, min(ncell, start + step))
        lo, hi = cells.lo[sl], cells.hi[sl]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        u = mid[:, None, :] + half[:, None, :] * nodes[None, :, :]
        kind = np.broadcast_to(cells.kind[sl][:, None, :], u.shape).ravel()
        anchor = np.broadcast_to(cells.anchor[sl][:, None, :], u.shape).ravel()
        s, jac = _map_axis(u.ravel(), kind, anchor)
        s = s.reshape(u.shape)
        jac = np.prod(jac.reshape(u.shape), axis=2)
        node = np.repeat(cells.node[sl], q)
        fv = np.asarray(func(s.reshape(-1, n), node), dtype=complex).reshape(-1, q)
        fv = fv * jac * np.prod(half, axis=1)[:, None]
        val[sl] = fv @ wk
        axis_err[sl] = np.abs(fv @ werr.T)
    return val, axis_err


def _unmap(s, kind, anchor):
    """Inverse of ``_map_axis`` (no clamping)."""
    r = np.where(kind == UPPER, s - anchor, anchor - s)
    return np.where(kind == FINITE, s, r / (1.0 + r))


def _split_at(cells: _Cells, axis: int, s_break):
    """Split every cell whose axis-``axis`` range strictly contains ``s_break`` (per cell)."""
    kind = cells.kind[:, axis]
    u = _unmap(s_break, kind, cells.anchor[:, axis])
    lo, hi = cells.lo[:, axis], cells.hi[:, axis]
    with np.errstate(invalid="ignore"):
        inside = np.isfinite(u) & (u > lo + 1e-14 * (hi - lo)) & (u < hi - 1e-14 * (hi - lo))
        if kind.size:
            inside &= ~((kind != FINITE) & ((u < 0) | (u >= 1)))
    if not inside.any():
        return cells
    sp = cells.take(inside)
    ub = u[inside]
    left_hi, right_lo = sp.hi.copy(), sp.lo.copy()
    left_hi[:, axis] = ub
    right_lo[:, axis] = ub
    rest = cells.take(~inside)
    return _Cells.concat([rest, _Cells(sp.node, sp.lo, left_hi, sp.kind, sp.anchor),
                          _Cells(sp.node, right_lo, sp.hi, sp.kind, sp.anchor)])


def _subdivide(cells: _Cells, parts: int):
    """Split every cell into ``parts`` equal pieces along each axis."""
    n = cells.lo.shape[1]
    for axis in range(n):
        chunks = []
        for k in range(parts):
            lo, hi = cells.lo.copy(), cells.hi.copy()
            a, b = cells.lo[:, axis], cells.hi[:, axis]
            lo[:, axis] = a + (b - a) * k / parts
            hi[:, axis] = a + (b - a) * (k + 1) / parts
            chunks.append(_Cells(cells.node, lo, hi, cells.kind, cells.anchor))
        cells = _Cells.concat(chunks)
    return cells


def integrate_nodes(func, pieces, n_nodes, tol, *, node_breaks=None, min_parts=2,
                    max_cells=2000, max_rounds=80, chunk_points=1 << 20,
                    raise_on_failure=True, node_offset=0):
    """Integrate ``n_nodes`` integrands over the tensor box described by ``pieces``.

    ``func(s, node)`` receives points ``s`` of shape (K, n) and the node index of
    each point, and returns K values.  ``pieces`` is a list (one entry per axis)
    of ``AxisPiece`` lists.  ``node_breaks`` optionally gives per-node
    discontinuity locations in s, shape (n_nodes, n, B) with NaN padding; cells
    are split there before refinement starts.  Returns ``(values, errors, converged)``.
    """
    n = len(pieces)
    boxes = list(itertools.product(*pieces))
    nb = len(boxes)
    lo0 = np.array([[p.lo for p in b] for b in boxes], dtype=float).reshape(nb, n)
    hi0 = np.array([[p.hi for p in b] for b in boxes], dtype=float).reshape(nb, n)
    kind0 = np.array([[p.kind for p in b] for b in boxes], dtype=np.int8).reshape(nb, n)
    anc0 = np.array([[p.anchor for p in b] for b in boxes], dtype=float).reshape(nb, n)

    node = np.repeat(np.arange(n_nodes), nb)
    pending = _Cells(node, np.tile(lo0, (n_nodes, 1)), np.tile(hi0, (n_nodes, 1)),
                     np.tile(kind0, (n_nodes, 1)), np.tile(anc0, (n_nodes, 1)))
    if min_parts > 1:
        pending = _subdivide(pending, min_parts)
    if node_breaks is not None:
        node_breaks = np.asarray(node_breaks, dtype=float).reshape(n_nodes, n, -1)
        for axis in range(n):
            for col in range(node_breaks.shape[2]):
                pending = _split_at(pending, axis, node_breaks[pending.node, axis, col])
    held, held_val, held_err = None, np.empty(0, complex), np.empty((0, n))

    values = np.zeros(n_nodes, dtype=complex)
    errors = np.full(n_nodes, np.inf)
    converged = np.zeros(n_nodes, dtype=bool)
    done = np.zeros(n_nodes, dtype=bool)

    for _ in range(max_rounds):
        pv, pe = _evaluate(pending, func, n, chunk_points)
        pool = _Cells.concat([held, pending]) if held is not None else pending
        pval = np.concatenate([held_val, pv])
        perr = np.concatenate([held_err, pe])
        cerr = perr.sum(axis=1)

        tot_val = np.bincount(pool.node, weights=pval.real, minlength=n_nodes) \
            + 1j * np.bincount(pool.node, weights=pval.imag, minlength=n_nodes)
        tot_err = np.bincount(pool.node, weights=cerr, minlength=n_nodes)
        tot_abs = np.bincount(pool.node, weights=np.abs(pval), minlength=n_nodes)
        ncell = np.bincount(pool.node, minlength=n_nodes)
        live = ~done & (ncell > 0)
        target = np.maximum(tol, 50 * np.finfo(float).eps * tot_abs)
        ok = live & (tot_err <= target)
        values[ok], errors[ok], converged[ok] = tot_val[ok], tot_err[ok], True
        over = live & ~ok & (ncell >= max_cells)
        values[over], errors[over] = tot_val[over], tot_err[over]
        done |= ok | over

        keep = ~done[pool.node]
        if not keep.any():
            break
        pool, pval, perr, cerr = pool.take(keep), pval[keep], perr[keep], cerr[keep]
        maxerr = np.zeros(n_nodes)
        np.maximum.at(maxerr, pool.node, cerr)
        width = pool.hi - pool.lo
        splittable = width.max(axis=1) > 1e-13 * np.maximum(1.0, np.abs(pool.lo).max(axis=1))
        split = (cerr >= 0.25 * maxerr[pool.node]) & splittable
        if not split.any():
            # nothing left to refine: accept what we have
            rest = np.unique(pool.node)
            values[rest] = tot_val[rest]
            errors[rest] = tot_err[rest]
            done[rest] = True
            break
        held = pool.take(~split)
        held_val, held_err = pval[~split], perr[~split]
        sp = pool.take(split)
        axis = np.argmax(perr[split], axis=1)
        rows = np.arange(len(sp))
        mid = 0.5 * (sp.lo[rows, axis] + sp.hi[rows, axis])
        left_hi = sp.hi.copy()
        left_hi[rows, axis] = mid
        right_lo = sp.lo.copy()
        right_lo[rows, axis] = mid
        pending = _Cells(np.concatenate([sp.node, sp.node]),
                         np.concatenate([sp.lo, right_lo]),
                         np.concatenate([left_hi, sp.hi]),
                         np.concatenate([sp.kind, sp.kind]),
                         np.concatenate([sp.anchor, sp.anchor]))
    else:
        rest = ~done
        values[rest] = np.nan
        errors[rest] = np.inf

    if raise_on_failure and not converged.all():
        bad = int(np.flatnonzero(~converged)[0])
        raise QuadratureError(
            f"quadrature did not converge at node {bad + node_offset} "
            f"(partial={values[bad]!r}, error={errors[bad]:.3g}, tol={tol:.3g})",
            node=bad + node_offset, partial=values[bad], error=errors[bad])
    return values, errors, converged


def integrate_1d(func, lo, hi, tol, breaks=(), **kw):
    """Scalar convenience wrapper: integrate a vectorized 1-D ``func`` over [lo, hi]."""
    vals, errs, conv = integrate_nodes(lambda s, node: func(s[:, 0]), [axis_pieces(lo, hi, breaks)],
                                       1, tol, **kw)
    return vals[0], errs[0], bool(conv[0])


def graded_rule(L: float, levels: int = 40, order: int = 20, ratio: float = 0.5,
                outer_panels: int = 64, max_width: float | None = None):
    """Composite Gauss-Legendre rule on [-L, L] graded geometrically toward 0.

    Panels ``[L r^{k+1}, L r^k]`` are used down to ``L r^levels`` and mirrored,
    which integrates functions with log or jump singularities at the origin to
    near machine precision.  Panels wider than ``max_width`` are split evenly
    (for oscillatory weights).  Returns (nodes, weights) sorted by node.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = [L * ratio ** k for k in range(levels + 1)]
    edges = sorted(set(edges) | set(np.linspace(L * ratio ** 3, L, outer_panels + 1)))
    edges = [0.0] + edges
    if max_width is not None:
        fine = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            parts = max(1, int(np.ceil((b - a) / max_width)))
            fine.extend(np.linspace(a, b, parts + 1)[1:])
        edges = fine
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        weights.append(0.5 * (b - a) * w)
    pos, wpos = np.concatenate(nodes), np.concatenate(weights)
    allx = np.concatenate([-pos[::-1], pos])
    allw = np.concatenate([wpos[::-1], wpos])
    return allx, allw
