"""Discrete measures, Riesz potentials, mutual energies, occupation measures.

All kernels use the convention k_gamma(x) = max(|x|, h)^(gamma - n) with the
normalizing constant fixed to 1; h >= 0 is a cap radius tied to the
discretization scale of the measure.  Growth of capped potentials as h -> 0
is the divergence signal used by the variability classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .grid_paths import SampledPath

#: sentinel for an exactly-singular uncapped kernel evaluation
INF_SENTINEL = np.inf


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms in R^n: locations (m, n), nonnegative weights (m,)."""

    dim: int
    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).reshape(-1, self.dim)
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(loc) != len(w):
            raise ValueError("locations and weights must have equal length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise ValueError("atoms must be finite")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def n_atoms(self) -> int:
        return len(self.weights)

    def ball_mass(self, x: np.ndarray, r: float) -> float:
        """Mass of the closed ball B(x, r)."""
        x = np.asarray(x, dtype=float).reshape(self.dim)
        d = np.linalg.norm(self.locations - x, axis=1)
        return float(self.weights[d <= r].sum())

    def to_csv(self, path: str) -> None:
        header = ",".join(f"x{k + 1}" for k in range(self.dim)) + ",weight"
        data = np.column_stack([self.locations, self.weights])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def measure_from_csv(filename: str) -> DiscreteMeasure:
    data = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
    return DiscreteMeasure(dim=data.shape[1] - 1, locations=data[:, :-1], weights=data[:, -1])


@dataclass(frozen=True)
class KernelPolicy:
    """Riesz order gamma in (0, n) and cap radius h >= 0."""

    gamma: float
    cap_radius: float = 0.0

    def validate(self, dim: int) -> None:
        if not (0.0 < self.gamma < dim):
            raise ValueError(f"gamma must lie in (0, n)=(0,{dim}), got {self.gamma}")
        if self.cap_radius < 0:
            raise ValueError("cap_radius must be nonnegative")


def occupation_measure(path: SampledPath) -> DiscreteMeasure:
    """Left-endpoint discretization of the occupation measure: an atom at
    X_{t_i} with weight dt for i = 0..N-1.  Total mass is the horizon T."""
    N = path.grid.N
    w = np.full(N, path.grid.dt)
    return DiscreteMeasure(path.dim, path.values[:N], w)


def _capped_kernel(dist: np.ndarray, gamma: float, n: int, h: float) -> np.ndarray:
    if h > 0:
        return np.maximum(dist, h) ** (gamma - n)
    out = np.empty_like(dist)
    zero = dist == 0.0
    out[~zero] = dist[~zero] ** (gamma - n)
    out[zero] = INF_SENTINEL
    return out


def riesz_potential(mu: DiscreteMeasure, policy: KernelPolicy, x: np.ndarray) -> float:
    """Capped Riesz potential sum_j w_j * max(|x - y_j|, h)^(gamma - n).

    With h = 0 and x on an atom the result is the +inf sentinel.
    """
    policy.validate(mu.dim)
    x = np.asarray(x, dtype=float).reshape(mu.dim)
    d = np.linalg.norm(mu.locations - x, axis=1)
    k = _capped_kernel(d, policy.gamma, mu.dim, policy.cap_radius)
    return float(np.dot(mu.weights, k))


def riesz_potential_many(mu: DiscreteMeasure, policy: KernelPolicy, xs: np.ndarray,
                         pair_budget: int = 8_000_000) -> np.ndarray:
    """Vectorized riesz_potential over rows of xs (m, n); the chunk size is
    chosen so that each pairwise-distance block stays within pair_budget
    entries."""
    policy.validate(mu.dim)
    xs = np.asarray(xs, dtype=float).reshape(-1, mu.dim)
    if mu.n_atoms == 0:
        return np.zeros(len(xs))
    chunk = max(1, pair_budget // mu.n_atoms)
    out = np.empty(len(xs))
    for lo in range(0, len(xs), chunk):
        d = cdist(xs[lo:lo + chunk], mu.locations)
        k = _capped_kernel(d, policy.gamma, mu.dim, policy.cap_radius)
        out[lo:lo + chunk] = k @ mu.weights
    return out


def mutual_energy(mu: DiscreteMeasure, nu: DiscreteMeasure, policy: KernelPolicy) -> float:
    """Mutual Riesz energy: double sum of the capped kernel against both
    atom sets.  Symmetric in (mu, nu); equals the nu-integral of the
    mu-potential."""
    if mu.dim != nu.dim:
        raise ValueError("measures must share a dimension")
    pots = riesz_potential_many(mu, policy, nu.locations)
    return float(np.dot(nu.weights, pots))


def fractional_maximal(mu: DiscreteMeasure, gamma: float, R: float, x: np.ndarray,
                       n_radii: int = 40) -> float:
    """Truncated fractional maximal function sup_{0<r<R} r^(gamma-n) mu(B(x,r)),
    the sup taken over a geometric radius grid ending at R."""
    if R <= 0:
        raise ValueError("truncation radius must be positive")
    x = np.asarray(x, dtype=float).reshape(mu.dim)
    if mu.n_atoms == 0:
        return 0.0
    d = np.sort(np.linalg.norm(mu.locations - x, axis=1))
    r_min = max(d[d > 0].min() if np.any(d > 0) else R / 2 ** n_radii, R / 2 ** n_radii)
    radii = np.geomspace(min(r_min, R), R, n_radii)
    best = 0.0
    dists = np.linalg.norm(mu.locations - x, axis=1)
    for r in radii:
        m = mu.weights[dists <= r].sum()
        best = max(best, r ** (gamma - mu.dim) * m)
    return float(best)


@dataclass(frozen=True)
class RegularityEstimate:
    exponent: float
    residual: float
    radii: np.ndarray
    sup_masses: np.ndarray


def upper_regularity_exponent(mu: DiscreteMeasure, radii: Sequence[float]) -> RegularityEstimate:
    """Fit d in sup_x mu(B(x, r)) ~ r^d over the given radius sweep, the sup
    over atom locations.  Returns the slope and the max log-residual."""
    radii = np.asarray(sorted(radii), dtype=float)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    if mu.n_atoms == 0:
        raise ValueError("empty measure")
    tree = cKDTree(mu.locations)
    sups = np.empty(len(radii))
    uniform = np.allclose(mu.weights, mu.weights[0])
    for j, r in enumerate(radii):
        # sup over atoms of ball mass; query in bulk
        if uniform:
            counts = tree.query_ball_point(mu.locations, r, return_length=True)
            sups[j] = counts.max() * mu.weights[0]
        else:
            neighbors = tree.query_ball_point(mu.locations, r)
            sups[j] = max(mu.weights[idx].sum() for idx in neighbors)
    usable = sups > 0
    if usable.sum() < 3:
        raise ValueError("fewer than 3 usable radii (zero masses)")
    lr, ls = np.log(radii[usable]), np.log(sups[usable])
    slope, intercept = np.polyfit(lr, ls, 1)
    resid = float(np.abs(ls - (slope * lr + intercept)).max())
    return RegularityEstimate(float(slope), resid, radii, sups)


@dataclass(frozen=True)
class HistogramDensity:
    edges: list
    density: np.ndarray
    cell: float

    @property
    def sup_density(self) -> float:
        return float(self.density.max())


def local_time_density(mu: DiscreteMeasure, cell: float) -> HistogramDensity:
    """Histogram estimate of the density of mu with respect to volume, on an
    axis-aligned grid of the given cell width."""
    if cell <= 0:
        raise ValueError("cell width must be positive")
    loc = mu.locations
    edges = []
    for k in range(mu.dim):
        lo, hi = loc[:, k].min(), loc[:, k].max()
        nbins = max(1, int(np.ceil((hi - lo) / cell)))
        edges.append(np.linspace(lo, lo + nbins * cell, nbins + 1))
    hist, edges = np.histogramdd(loc, bins=edges, weights=mu.weights)
    return HistogramDensity(edges=list(edges), density=hist / cell ** mu.dim, cell=cell)


def _riesz_convolution_raw(gamma1: float, gamma2: float, y: float, half_width: float,
                           pts: int) -> float:
    """1D quadrature of int |x|^(g1-1) |x-y|^(g2-1) dx over [-R, R+y],
    splitting at the two singular points."""
    def integrand(x):
        return np.abs(x) ** (gamma1 - 1.0) * np.abs(x - y) ** (gamma2 - 1.0)

    val, _ = integrate.quad(integrand, -half_width, half_width + y,
                            points=[0.0, y], limit=200)
    return val


def convolution_identity_check(gamma1: float, gamma2: float, y: float,
                               y_ref: float = 1.0, half_width: float = 200.0,
                               quad_points: int = 0) -> float:
    """Scaling check for the composition of two Riesz kernels in one
    dimension: the convolution evaluated at y and at a reference point must
    scale like |y|^(gamma1+gamma2-1).  The unknown constant ratio is
    calibrated at the reference point and divided out; the return value is
    the relative error of the scaling law."""
    n = 1
    if gamma1 + gamma2 >= n:
        raise ValueError("gamma1 + gamma2 must be < n for a convergent convolution")
    if y == 0:
        raise ValueError("y must be nonzero")
    ref = _riesz_convolution_raw(gamma1, gamma2, y_ref, half_width, quad_points)
    cal = ref / y_ref ** (gamma1 + gamma2 - n)  # calibrated constant ratio
    val = _riesz_convolution_raw(gamma1, gamma2, y, half_width, quad_points)
    predicted = cal * abs(y) ** (gamma1 + gamma2 - n)
    return abs(val - predicted) / abs(predicted)
