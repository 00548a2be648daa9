"""A library of bounded-variation coefficients.

Each coefficient is a pointwise evaluator (a fixed Lebesgue representative,
valued at the average of one-sided limits on jump loci) together with a
generator of discrete approximations of its gradient total-variation
measure.  The resolution convention is uniform across the library: at
integer ``level`` the measure resolves spatial scale ``2**-level``, which is
also the cap radius the variability classifier uses at that level.

Included: the Cantor staircase coefficient, indicator coefficients
(interval, disk, half-plane, cone), Lipschitz wrappers, piecewise-constant
matrix coefficients with explicit inverses, mollification by a flat bump,
Cayley-Hamilton matrix inversion, and structural checks (curl residual of
the inverse field, distortion/angular constants).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .measures import DiscreteMeasure

LOG2_OVER_LOG3 = np.log(2.0) / np.log(3.0)  # Cantor measure dimension


def level_scale(level: int) -> float:
    """Spatial resolution (and classifier cap radius) at an integer level."""
    return 2.0 ** (-level)


# ---------------------------------------------------------------------------
# Cantor staircase machinery
# ---------------------------------------------------------------------------

def cantor_function(x):
    """The Cantor staircase on [0,1], clamped to 0 below and 1 above.

    Ternary-digit recursion, exact to double precision after 60 steps.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    z = np.clip(x, 0.0, 1.0).ravel().copy()
    out = np.zeros_like(z)
    factor = np.full_like(z, 0.5)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(60):
        if not active.any():
            break
        z3 = z * 3.0
        low = active & (z3 < 1.0)
        mid = active & (z3 >= 1.0) & (z3 <= 2.0)
        high = active & (z3 > 2.0)
        z[low] = z3[low]
        out[mid] += factor[mid]
        active = active & ~mid
        out[high] += factor[high]
        z[high] = z3[high] - 2.0
        factor[low | high] *= 0.5
    out[np.asarray(x).ravel() >= 1.0] = 1.0
    out[np.asarray(x).ravel() <= 0.0] = 0.0
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def cantor_integral(z):
    """I(z) = int_0^z cantor_function, for z in [0,1]; self-similar recursion
    (I(1) = 1/2), exact to double precision."""
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    w = np.clip(z, 0.0, 1.0).ravel().copy()
    acc = np.zeros_like(w)
    mul = np.ones_like(w)
    active = np.ones(w.shape, dtype=bool)
    for _ in range(60):
        if not active.any():
            break
        low = active & (w <= 1.0 / 3.0)
        mid = active & (w > 1.0 / 3.0) & (w < 2.0 / 3.0)
        high = active & (w >= 2.0 / 3.0)
        # I(w) = I(3w)/6 on the left third
        w[low] *= 3.0
        mul[low] /= 6.0
        # I(w) = 1/12 + (w - 1/3)/2 on the middle third: terminal
        acc[mid] += mul[mid] * (1.0 / 12.0 + (w[mid] - 1.0 / 3.0) / 2.0)
        active = active & ~mid
        # I(w) = 1/4 + (w - 2/3)/2 + I(3w - 2)/6 on the right third
        acc[high] += mul[high] * (0.25 + (w[high] - 2.0 / 3.0) / 2.0)
        w[high] = 3.0 * w[high] - 2.0
        mul[high] /= 6.0
    zr = np.asarray(z, dtype=float).ravel()
    acc[zr >= 1.0] = 0.5
    acc[zr <= 0.0] = 0.0
    return float(acc[0]) if scalar else acc.reshape(np.shape(z))


def cantor_cumulative(z):
    """Phi(z) = int_0^z (1 + cantor_function); Phi(z) = z for z <= 0 and
    Phi(z) = 2z - 1/2 for z >= 1; strictly increasing with slope in [1,2]."""
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    zr = z.ravel()
    out = np.empty_like(zr)
    lo = zr <= 0.0
    hi = zr >= 1.0
    mid = ~(lo | hi)
    out[lo] = zr[lo]
    out[hi] = 2.0 * zr[hi] - 0.5
    out[mid] = zr[mid] + cantor_integral(zr[mid])
    return float(out[0]) if scalar else out.reshape(np.shape(z))


def cantor_cumulative_inverse(x):
    """Monotone inverse of cantor_cumulative, by bisection on [0,1] where
    no closed form applies."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xr = x.ravel()
    out = np.empty_like(xr)
    lo_mask = xr <= 0.0
    hi_mask = xr >= 1.5
    out[lo_mask] = xr[lo_mask]
    out[hi_mask] = (xr[hi_mask] + 0.5) / 2.0
    mid = ~(lo_mask | hi_mask)
    if mid.any():
        target = xr[mid]
        a = np.zeros_like(target)
        b = np.ones_like(target)
        for _ in range(80):
            m = 0.5 * (a + b)
            too_big = cantor_cumulative(m) > target
            b = np.where(too_big, m, b)
            a = np.where(too_big, a, m)
        out[mid] = 0.5 * (a + b)
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def cantor_level_atoms(depth: int) -> np.ndarray:
    """Left endpoints of the 2**depth level-``depth`` construction intervals
    of the middle-thirds Cantor set."""
    pts = np.array([0.0])
    for _ in range(depth):
        pts = np.concatenate([pts / 3.0, pts / 3.0 + 2.0 / 3.0])
    return np.sort(pts)


# ---------------------------------------------------------------------------
# Coefficient containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarBV:
    """A scalar BV coefficient.

    evaluate: vectorized map taking points of shape (m, dim) to values (m,).
    gradient_measure: (box (dim,2), level) -> DiscreteMeasure approximating
    the gradient total-variation measure restricted to the box; None for
    diagnostic-only coefficients.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    gradient_measure: Optional[Callable[[np.ndarray, int], DiscreteMeasure]] = None
    sup_bound: Optional[float] = None
    jump_locus: Optional[str] = None
    name: str = ""

    def scale(self, level: int) -> float:
        return level_scale(level)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            return float(np.asarray(self.evaluate(pts[None, :])).ravel()[0])
        return np.asarray(self.evaluate(pts), dtype=float)


@dataclass(frozen=True)
class MatrixBV:
    """A square-matrix BV coefficient with entrywise ScalarBV structure."""

    dim: int
    entries: tuple  # tuple of tuples of ScalarBV, shape (dim, dim)
    det_lower_bound: Optional[float] = None
    name: str = ""

    def entry(self, j: int, k: int) -> ScalarBV:
        return self.entries[j][k]

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        """Matrix values at points (m, dim) -> (m, dim, dim)."""
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        m = len(pts)
        out = np.empty((m, self.dim, self.dim))
        for j in range(self.dim):
            for k in range(self.dim):
                out[:, j, k] = self.entries[j][k](pts)
        return out[0] if single else out


def constant_scalar(value: float, dim: int, name: str = "") -> ScalarBV:
    def ev(pts):
        return np.full(len(np.atleast_2d(pts)), float(value))

    def grad(box, level):
        return DiscreteMeasure(dim, np.zeros((0, dim)), np.zeros(0))

    return ScalarBV(dim, ev, grad, sup_bound=abs(value),
                    name=name or f"const({value})")


def _lateral_grid(lo: float, hi: float, spacing: float) -> tuple[np.ndarray, float]:
    """Midpoint grid on [lo, hi] with cells of width <= spacing; returns
    (centers, cell width)."""
    n = max(1, int(np.ceil((hi - lo) / spacing)))
    w = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * w, w


def cantor_coefficient(dim: int) -> ScalarBV:
    """The Cantor staircase in the first coordinate: 0 left of [0,1], 1 to
    the right; gradient measure = (discretized Cantor measure in x1) tensor
    (surface measure on the lateral box face)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")

    def ev(pts):
        pts = np.atleast_2d(pts)
        return cantor_function(pts[:, 0])

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(dim, 2)
        h = level_scale(level)
        depth = int(np.ceil(level * LOG2_OVER_LOG3)) + 1
        atoms = cantor_level_atoms(depth)
        weights = np.full(len(atoms), 2.0 ** (-depth))
        keep = (atoms >= box[0, 0] - 3.0 ** (-depth)) & (atoms <= box[0, 1])
        atoms, weights = atoms[keep], weights[keep]
        if dim == 1:
            return DiscreteMeasure(1, atoms[:, None], weights)
        lateral_axes, lateral_widths = [], []
        for d in range(1, dim):
            centers, cw = _lateral_grid(box[d, 0], box[d, 1], h)
            lateral_axes.append(centers)
            lateral_widths.append(cw)
        mesh = np.meshgrid(atoms, *lateral_axes, indexing="ij")
        loc = np.column_stack([m.ravel() for m in mesh])
        wmesh = np.meshgrid(weights, *lateral_axes, indexing="ij")[0]
        w = wmesh.ravel() * float(np.prod(lateral_widths))
        return DiscreteMeasure(dim, loc, w)

    return ScalarBV(dim, ev, grad, sup_bound=1.0,
                    jump_locus=None, name="cantor")


def indicator_interval(a: float, b: float) -> ScalarBV:
    """1D indicator of (a,b): gradient measure is a unit atom at each endpoint."""
    if not a < b:
        raise ValueError("need a < b")

    def ev(pts):
        x = np.atleast_2d(pts)[:, 0]
        out = np.where((x > a) & (x < b), 1.0, 0.0)
        out = np.where((x == a) | (x == b), 0.5, out)
        return out

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(1, 2)
        locs, ws = [], []
        for pt in (a, b):
            if box[0, 0] <= pt <= box[0, 1]:
                locs.append([pt])
                ws.append(1.0)
        return DiscreteMeasure(1, np.asarray(locs).reshape(-1, 1), np.asarray(ws))

    return ScalarBV(1, ev, grad, sup_bound=1.0,
                    jump_locus=f"points {{{a}, {b}}}", name="indicator_interval")


def indicator_disk(center, radius: float) -> ScalarBV:
    """Indicator of an open disk in the plane; boundary value 1/2; gradient
    measure = arclength on the circle, discretized by equally spaced atoms."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float).reshape(2)

    def ev(pts):
        pts = np.atleast_2d(pts)
        d = np.linalg.norm(pts - center, axis=1)
        out = np.where(d < radius, 1.0, 0.0)
        out = np.where(d == radius, 0.5, out)
        return out

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(2, 2)
        perimeter = 2.0 * np.pi * radius
        M = max(8, int(np.ceil(perimeter / level_scale(level))))
        ang = 2.0 * np.pi * (np.arange(M) + 0.5) / M
        loc = center[None, :] + radius * np.column_stack([np.cos(ang), np.sin(ang)])
        w = np.full(M, perimeter / M)
        keep = np.all((loc >= box[:, 0][None, :]) & (loc <= box[:, 1][None, :]), axis=1)
        return DiscreteMeasure(2, loc[keep], w[keep])

    return ScalarBV(2, ev, grad, sup_bound=1.0,
                    jump_locus=f"circle(center={tuple(center)}, r={radius})",
                    name="indicator_disk")


def indicator_domain(shape: str, **kwargs) -> ScalarBV:
    """Indicator coefficient of a simple domain: shape = 'disk' (center,
    radius) in the plane or 'interval' (a, b) on the line."""
    if shape == "disk":
        return indicator_disk(kwargs.get("center", (0.0, 0.0)), kwargs.get("radius", 1.0))
    if shape == "interval":
        return indicator_interval(kwargs["a"], kwargs["b"])
    raise ValueError(f"unknown shape {shape!r}")


def _segment_measure(p0: np.ndarray, p1: np.ndarray, box: np.ndarray, level: int,
                     density: float, dim: int) -> DiscreteMeasure:
    """Arclength measure with the given density on the segment [p0, p1]
    clipped to the box, discretized at arclength spacing 2**-level."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    box = np.asarray(box, dtype=float).reshape(dim, 2)
    # clip the parameter range to the box
    t_lo, t_hi = 0.0, 1.0
    d = p1 - p0
    for k in range(dim):
        if d[k] != 0:
            ta = (box[k, 0] - p0[k]) / d[k]
            tb = (box[k, 1] - p0[k]) / d[k]
            t_lo = max(t_lo, min(ta, tb))
            t_hi = min(t_hi, max(ta, tb))
        elif not (box[k, 0] <= p0[k] <= box[k, 1]):
            return DiscreteMeasure(dim, np.zeros((0, dim)), np.zeros(0))
    if t_hi <= t_lo:
        return DiscreteMeasure(dim, np.zeros((0, dim)), np.zeros(0))
    seg_len = np.linalg.norm(d) * (t_hi - t_lo)
    M = max(2, int(np.ceil(seg_len / level_scale(level))))
    ts = t_lo + (t_hi - t_lo) * (np.arange(M) + 0.5) / M
    loc = p0[None, :] + ts[:, None] * d[None, :]
    w = np.full(M, density * seg_len / M)
    return DiscreteMeasure(dim, loc, w)


def halfplane_below_line(c: float, box_hint: float = 16.0) -> ScalarBV:
    """Indicator of {c*x1 < x2} in the plane; gradient measure = arclength
    on the line x2 = c*x1 inside the requested box."""

    def ev(pts):
        pts = np.atleast_2d(pts)
        s = pts[:, 1] - c * pts[:, 0]
        out = np.where(s > 0, 1.0, 0.0)
        return np.where(s == 0, 0.5, out)

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(2, 2)
        span = max(abs(box).max(), 1.0) * 2.0
        p0 = np.array([-span, -c * span])
        p1 = np.array([span, c * span])
        return _segment_measure(p0, p1, box, level, density=1.0, dim=2)

    return ScalarBV(2, ev, grad, sup_bound=1.0,
                    jump_locus=f"line x2 = {c}*x1", name=f"halfplane(c={c})")


def jump_line_matrix(c: float) -> MatrixBV:
    """2x2 coefficient [[c, 1], [indicator(c*x1 < x2), c]]; determinant is
    c^2 above the jump line and c^2 - 1 at or below it."""
    if not c > 1:
        raise ValueError("need c > 1")
    e = (
        (constant_scalar(c, 2), constant_scalar(1.0, 2)),
        (halfplane_below_line(c), constant_scalar(c, 2)),
    )
    return MatrixBV(2, e, det_lower_bound=c * c - 1.0, name=f"jump_line(c={c})")


def cone_indicator(a: float, b: float) -> ScalarBV:
    """Indicator of the open cone {(a/b) x1 < x2 < (b/a) x1} (x1 > 0);
    gradient measure = arclength on the two boundary rays."""

    def ev(pts):
        pts = np.atleast_2d(pts)
        x1, x2 = pts[:, 0], pts[:, 1]
        s1 = x2 - (a / b) * x1
        s2 = (b / a) * x1 - x2
        inside = (s1 > 0) & (s2 > 0)
        on_edge = ((s1 == 0) & (s2 >= 0)) | ((s2 == 0) & (s1 >= 0))
        out = np.where(inside, 1.0, 0.0)
        return np.where(on_edge & ~inside, 0.5, out)

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(2, 2)
        span = max(abs(box).max(), 1.0) * 2.0
        parts = []
        for slope in (a / b, b / a):
            parts.append(_segment_measure(np.zeros(2), np.array([span, slope * span]),
                                          box, level, density=1.0, dim=2))
        loc = np.vstack([p.locations for p in parts])
        w = np.concatenate([p.weights for p in parts])
        return DiscreteMeasure(2, loc, w)

    return ScalarBV(2, ev, grad, sup_bound=1.0,
                    jump_locus=f"rays x2 = {a / b}*x1 and x2 = {b / a}*x1 (x1 > 0)",
                    name=f"cone({a},{b})")


def cone_matrix(a: float, b: float) -> MatrixBV:
    """[[b, a*1_C], [a*1_C, b]] with C the open cone between the rays of
    slopes a/b and b/a; determinant b^2 outside, b^2 - a^2 inside."""
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    ind = cone_indicator(a, b)

    def scaled_ev(pts):
        return a * ind.evaluate(pts)

    def scaled_grad(box, level):
        mu = ind.gradient_measure(box, level)
        return DiscreteMeasure(2, mu.locations, a * mu.weights)

    off = ScalarBV(2, scaled_ev, scaled_grad, sup_bound=a,
                   jump_locus=ind.jump_locus, name=f"a*cone({a},{b})")
    e = (
        (constant_scalar(b, 2), off),
        (off, constant_scalar(b, 2)),
    )
    return MatrixBV(2, e, det_lower_bound=b * b - a * a, name=f"cone({a},{b})")


def halfplane_x1_positive() -> ScalarBV:
    """Indicator of {x1 > 0} in the plane; gradient measure = arclength on
    the vertical axis."""

    def ev(pts):
        pts = np.atleast_2d(pts)
        out = np.where(pts[:, 0] > 0, 1.0, 0.0)
        return np.where(pts[:, 0] == 0, 0.5, out)

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(2, 2)
        span = max(abs(box).max(), 1.0) * 2.0
        return _segment_measure(np.array([0.0, -span]), np.array([0.0, span]),
                                box, level, density=1.0, dim=2)

    return ScalarBV(2, ev, grad, sup_bound=1.0, jump_locus="line x1 = 0",
                    name="halfplane_x1")


def cantor_shear_entry22() -> ScalarBV:
    """sigma_22 of the Cantor-shear coefficient:
    1 + C(Phi^{-1}(x2 - x1 * 1_{x1>0})), where C is the Cantor staircase and
    Phi its cumulative 1 + C integral.  Continuous, bounded in [1,2]."""

    def ev(pts):
        pts = np.atleast_2d(pts)
        # x1 * 1_{x1 > 0} = max(x1, 0)
        w = pts[:, 1] - np.maximum(pts[:, 0], 0.0)
        return 1.0 + cantor_function(cantor_cumulative_inverse(w))

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(2, 2)
        h = level_scale(level)
        depth = int(np.ceil(level * LOG2_OVER_LOG3)) + 1
        base = cantor_cumulative(cantor_level_atoms(depth))  # atoms in w
        mass = 2.0 ** (-depth)
        centers, cw = _lateral_grid(box[0, 0], box[0, 1], h)
        locs, ws = [], []
        for x1, _ in zip(centers, range(len(centers))):
            shift = max(x1, 0.0)
            x2 = base + shift
            keep = (x2 >= box[1, 0]) & (x2 <= box[1, 1])
            if not keep.any():
                continue
            dens = np.sqrt(2.0) if x1 > 0 else 1.0
            locs.append(np.column_stack([np.full(keep.sum(), x1), x2[keep]]))
            ws.append(np.full(keep.sum(), mass * cw * dens))
        if not locs:
            return DiscreteMeasure(2, np.zeros((0, 2)), np.zeros(0))
        return DiscreteMeasure(2, np.vstack(locs), np.concatenate(ws))

    return ScalarBV(2, ev, grad, sup_bound=2.0, name="cantor_shear_22")


def cantor_matrix() -> MatrixBV:
    """The Cantor-shear 2x2 coefficient:
    [[1, 0], [1_{x1>0}, 1 + C(Phi^{-1}(x2 - x1 * 1_{x1>0}))]]."""
    e = (
        (constant_scalar(1.0, 2), constant_scalar(0.0, 2)),
        (halfplane_x1_positive(), cantor_shear_entry22()),
    )
    return MatrixBV(2, e, det_lower_bound=1.0, name="cantor_shear")


def lipschitz_wrap(f: Callable, L: float, dim: int,
                   grad_norm: Optional[Callable] = None,
                   max_cells_per_axis: int = 256) -> ScalarBV:
    """Wrap a smooth scalar map with Lipschitz constant L; gradient measure
    = |grad f| times volume, discretized on a cell grid (cell volume times
    the gradient magnitude at the center)."""

    def ev(pts):
        pts = np.atleast_2d(pts)
        return np.asarray(f(pts), dtype=float)

    def gnorm(pts):
        if grad_norm is not None:
            return np.asarray(grad_norm(pts), dtype=float)
        # central differences
        pts = np.atleast_2d(pts)
        eps = 1e-6
        acc = np.zeros(len(pts))
        for k in range(dim):
            step = np.zeros(dim)
            step[k] = eps
            acc += ((ev(pts + step) - ev(pts - step)) / (2 * eps)) ** 2
        return np.sqrt(acc)

    def grad(box, level):
        box = np.asarray(box, dtype=float).reshape(dim, 2)
        axes, widths = [], []
        for k in range(dim):
            spacing = max(level_scale(level), (box[k, 1] - box[k, 0]) / max_cells_per_axis)
            cs, w = _lateral_grid(box[k, 0], box[k, 1], spacing)
            axes.append(cs)
            widths.append(w)
        mesh = np.meshgrid(*axes, indexing="ij")
        loc = np.column_stack([m.ravel() for m in mesh])
        vol = float(np.prod(widths))
        w = vol * gnorm(loc)
        keep = w > 0
        return DiscreteMeasure(dim, loc[keep], w[keep])

    return ScalarBV(dim, ev, grad, sup_bound=None, name="lipschitz")


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------

def _flat_profile(r: np.ndarray) -> np.ndarray:
    """Unnormalized flat bump profile of |x|: 1 on [0, 1/2], smooth cutoff
    to 0 at 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 0.5] = 1.0
    band = (r > 0.5) & (r < 1.0)
    u = 2.0 * r[band] - 1.0
    out[band] = np.exp(1.0 - 1.0 / (1.0 - u * u))
    return out


def _mollifier_nodes(dim: int, n_1d: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights for the unit-radius flat mollifier,
    normalized to unit mass; tensor midpoint rule on [-1,1]^dim."""
    centers, w = _lateral_grid(-1.0, 1.0, 2.0 / n_1d)
    mesh = np.meshgrid(*([centers] * dim), indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    r = np.linalg.norm(pts, axis=1)
    vals = _flat_profile(r) * w ** dim
    keep = vals > 0
    pts, vals = pts[keep], vals[keep]
    return pts, vals / vals.sum()


def mollify(phi: ScalarBV, eps: float, n_nodes_1d: int = 32) -> ScalarBV:
    """Convolve a coefficient with the flat mollifier at radius eps.

    Evaluation is quadrature of phi against the bump; the gradient measure
    spreads each atom of the base measure over the bump stencil.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    nodes, nw = _mollifier_nodes(phi.dim, n_nodes_1d)
    offsets = eps * nodes

    def ev(pts):
        pts = np.atleast_2d(pts)
        acc = np.zeros(len(pts))
        for z, w in zip(offsets, nw):
            acc += w * np.asarray(phi.evaluate(pts - z[None, :]), dtype=float)
        return acc

    def grad(box, level):
        if phi.gradient_measure is None:
            raise ValueError("base coefficient has no gradient measure")
        box = np.asarray(box, dtype=float).reshape(phi.dim, 2)
        inflated = np.column_stack([box[:, 0] - eps, box[:, 1] + eps])
        base = phi.gradient_measure(inflated, level)
        # coarse stencil keeps the atom count manageable
        snodes, sw = _mollifier_nodes(phi.dim, 5)
        locs = (base.locations[:, None, :] + eps * snodes[None, :, :]).reshape(-1, phi.dim)
        ws = (base.weights[:, None] * sw[None, :]).ravel()
        return DiscreteMeasure(phi.dim, locs, ws)

    return ScalarBV(phi.dim, ev, grad, sup_bound=phi.sup_bound,
                    jump_locus=None, name=f"mollified({phi.name}, {eps})")


# ---------------------------------------------------------------------------
# Matrix inversion and structural checks
# ---------------------------------------------------------------------------

class SingularMatrixError(ValueError):
    def __init__(self, det: float, floor: float):
        super().__init__(f"determinant {det:g} at or below floor {floor:g}")
        self.det = det
        self.floor = floor


def _leverrier_terms(A: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Faddeev-LeVerrier recursion: returns (M, c_n, det) where
    M = A^{n-1} + c_1 A^{n-2} + ... + c_{n-1} I is the matrix polynomial
    whose quotient by -c_n is the inverse, the c_k being the
    trace/Bell-polynomial coefficients of the characteristic polynomial,
    and det = (-1)^n c_n."""
    n = A.shape[0]
    M = np.eye(n)
    for k in range(1, n):
        AM = A @ M
        c = -np.trace(AM) / k
        M = AM + c * np.eye(n)
    c_n = -np.trace(A @ M) / n
    det = (-1.0) ** n * c_n
    return M, c_n, det


def matrix_det(A: np.ndarray) -> float:
    return _leverrier_terms(np.asarray(A, dtype=float))[2]


def cayley_inverse(sigma: MatrixBV | np.ndarray, x: Optional[np.ndarray] = None,
                   det_floor: float = 1e-12) -> np.ndarray:
    """Inverse of sigma(x) assembled as a matrix polynomial over the
    determinant (Cayley-Hamilton route): A^{-1} = -M / c_n with M and c_n
    from the Faddeev-LeVerrier recursion.

    Accepts either a MatrixBV plus a point, or a plain matrix.
    """
    if isinstance(sigma, MatrixBV):
        if x is None:
            raise ValueError("a point is required with a MatrixBV input")
        A = sigma.evaluate(np.asarray(x, dtype=float))
    else:
        A = np.asarray(sigma, dtype=float)
    M, c_n, det = _leverrier_terms(A)
    if abs(det) <= det_floor:
        raise SingularMatrixError(det, det_floor)
    return -M / c_n


def inverse_matrix_field(sigma: MatrixBV, det_floor: float = 1e-12) -> MatrixBV:
    """The pointwise inverse of sigma as a diagnostic MatrixBV (entries have
    no gradient-measure generator)."""
    def make_entry(j, k):
        def ev(pts):
            pts = np.atleast_2d(pts)
            mats = sigma.evaluate(pts)
            out = np.empty(len(pts))
            for i in range(len(pts)):
                out[i] = cayley_inverse(mats[i], det_floor=det_floor)[j, k]
            return out
        return ScalarBV(sigma.dim, ev, None, name=f"inv({sigma.name})[{j}{k}]")

    e = tuple(tuple(make_entry(j, k) for k in range(sigma.dim)) for j in range(sigma.dim))
    return MatrixBV(sigma.dim, e, name=f"inv({sigma.name})")


def curl_check(sigma_hat: MatrixBV, region: np.ndarray, eps: float,
               spacing: float) -> dict:
    """Max residual of the cross-derivative symmetry
    D_i sigma_hat[k][j] - D_j sigma_hat[k][i] on a grid over the region,
    after mollifying each entry at radius eps (entries may jump; raw
    differences of a jump are meaningless).  Requires eps >= 2*spacing."""
    region = np.asarray(region, dtype=float).reshape(sigma_hat.dim, 2)
    if eps < 2 * spacing:
        raise ValueError("eps must be at least twice the grid spacing")
    n = sigma_hat.dim
    pad = eps + 2 * spacing
    axes = [np.arange(region[k, 0] - pad, region[k, 1] + pad + spacing / 2, spacing)
            for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    shape = mesh[0].shape

    # discrete flat-bump kernel at radius eps (in cells)
    rad = int(np.ceil(eps / spacing))
    offs = np.arange(-rad, rad + 1) * spacing
    kmesh = np.meshgrid(*([offs] * n), indexing="ij")
    kr = np.sqrt(sum(km ** 2 for km in kmesh)) / eps
    kernel = _flat_profile(kr)
    kernel /= kernel.sum()

    fields = {}
    for k in range(n):
        for j in range(n):
            vals = np.asarray(sigma_hat.entries[k][j](pts), dtype=float).reshape(shape)
            fields[(k, j)] = ndimage.convolve(vals, kernel, mode="nearest")

    def central_diff(F, axis):
        return np.gradient(F, spacing, axis=axis)

    interior = tuple(slice(rad + 1, -(rad + 1)) for _ in range(n))
    residuals = {}
    worst = 0.0
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                r = central_diff(fields[(k, j)], i) - central_diff(fields[(k, i)], j)
                val = float(np.abs(r[interior]).max())
                residuals[(i, j, k)] = val
                worst = max(worst, val)
    return {"max_residual": worst, "per_component": residuals}


def distortion_check(sigma: MatrixBV, probes: np.ndarray,
                     n_directions: int = 720, det_floor: float = 1e-12) -> dict:
    """Distortion constant kappa = max |sigma^{-1}|_op^n / det(sigma^{-1})
    over the probes, and the angular constant
    delta = min <xi, sigma xi> / (|sigma xi| |xi|) over probes and a
    unit-sphere sample.  Flags delta <= -1."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    n = sigma.dim
    if n == 2:
        ang = np.linspace(0, 2 * np.pi, n_directions, endpoint=False)
        xis = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        rng = np.random.default_rng(0)
        xis = rng.standard_normal((n_directions, n))
        xis /= np.linalg.norm(xis, axis=1, keepdims=True)
    kappa = -np.inf
    delta = np.inf
    for x in probes:
        A = sigma.evaluate(x)
        Ainv = cayley_inverse(A, det_floor=det_floor)
        op = np.linalg.svd(Ainv, compute_uv=False)[0]
        kappa = max(kappa, op ** n / matrix_det(Ainv))
        Axi = xis @ A.T
        num = np.einsum("ij,ij->i", xis, Axi)
        den = np.linalg.norm(Axi, axis=1)
        ok = den > 0
        delta = min(delta, float((num[ok] / den[ok]).min()))
    return {"kappa": float(kappa), "delta": float(delta), "delta_admissible": delta > -1.0}
