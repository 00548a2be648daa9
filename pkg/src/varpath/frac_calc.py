"""Fractional integrals and derivatives on uniform grids by product integration.

All operators integrate the singular kernel exactly against the
piecewise-linear interpolant of the data, which reduces to discrete
convolutions with closed-form kernel moments.  Everything is real-valued;
the overall sign of the adjusted right derivative is fixed so that the
fractional duality pairing reproduces the classical integral on smooth
pairs (see gls_integral).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as Gamma

import numpy as np
from scipy.signal import convolve

from .gridfun import GridFunction, gagliardo_pth_power


@dataclass(frozen=True)
class FracParams:
    """Numerical scheme parameters for the fractional operators."""

    theta: float = 0.5
    scheme: str = "product"
    diagonal_floor: int = 1

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie in (0,1)")
        if self.scheme not in ("product", "trapezoid"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.diagonal_floor < 1:
            raise ValueError("diagonal_floor must be >= 1")


def _conv(a: np.ndarray, kern: np.ndarray) -> np.ndarray:
    """Linear convolution truncated to len(a) leading entries."""
    return convolve(a, kern, method="auto")[: len(a)]


def rl_integral_left(f: GridFunction, theta: float) -> GridFunction:
    """Left fractional integral of order theta:
    (1/Gamma(theta)) * int_0^t f(s) (t-s)^(theta-1) ds,
    exact for the piecewise-linear interpolant of f.  Value 0 at t = 0."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    v = f.values
    N = f.grid.N
    dt = f.grid.dt
    k = np.arange(N, dtype=float)
    # cell moments of the kernel: P0 = int u^(th-1), P1 = int u^th over [k dt, (k+1) dt]
    P0 = dt ** theta * ((k + 1) ** theta - k ** theta) / theta
    P1 = dt ** (theta + 1) * ((k + 1) ** (theta + 1) - k ** (theta + 1)) / (theta + 1)
    A = (k + 1) * P0 - P1 / dt
    a = v[:-1]
    b = np.diff(v)
    out = np.zeros(N + 1)
    out[1:] = (_conv(a, P0) + _conv(b, A)) / Gamma(theta)
    return GridFunction(f.grid, out)


def rl_integral_right(f: GridFunction, theta: float) -> GridFunction:
    """Right fractional integral of order theta (magnitude convention):
    (1/Gamma(theta)) * int_t^T f(s) (s-t)^(theta-1) ds."""
    rev = GridFunction(f.grid, f.values[::-1])
    return GridFunction(f.grid, rl_integral_left(rev, theta).values[::-1])


def marchaud_difference_integral(values: np.ndarray, dt: float, theta: float) -> np.ndarray:
    """M(t_i) = int_0^{t_i} (f(t_i) - f(s)) (t_i - s)^(-theta-1) ds for the
    piecewise-linear interpolant.  The integrand's singular cell at s = t_i
    is finite because the local linear model cancels the singularity."""
    v = np.asarray(values, dtype=float)
    N = len(v) - 1
    k = np.arange(N, dtype=float)
    with np.errstate(divide="ignore"):
        Q0 = dt ** (-theta) * (k ** (-theta) - (k + 1) ** (-theta)) / theta
    Q0[0] = 0.0  # k = 0 cell handled separately (exact cancellation)
    Q1 = dt ** (1 - theta) * ((k + 1) ** (1 - theta) - k ** (1 - theta)) / (1 - theta)
    Q1c = Q1.copy()
    Q1c[0] = 0.0
    R = (k + 1) * Q0

    a = v[:-1]
    b = np.diff(v)
    cum_q0 = np.cumsum(Q0)
    out = np.zeros(N + 1)
    conv_part = -_conv(a, Q0) - _conv(b, R) + _conv(b, Q1c) / dt
    out[1:] = v[1:] * cum_q0 + conv_part
    # nearest cell [t_{i-1}, t_i]: linear model gives slope * dt^(1-theta)/(1-theta)
    out[1:] += b / dt * dt ** (1 - theta) / (1 - theta)
    return out


def wm_derivative_left(f: GridFunction, theta: float, params: FracParams | None = None) -> GridFunction:
    """Left Weyl-Marchaud derivative of order theta:
    (1/Gamma(1-theta)) * ( f(t)/t^theta + theta * int_0^t (f(t)-f(s)) (t-s)^(-theta-1) ds ).

    The value at t = 0 is 0 when f(0) = 0; otherwise it is left at 0 and
    meta['boundary_singular'] is set."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    v = f.values
    t = f.grid.times
    M = marchaud_difference_integral(v, f.grid.dt, theta)
    out = np.zeros(f.grid.N + 1)
    out[1:] = (v[1:] / t[1:] ** theta + theta * M[1:]) / Gamma(1 - theta)
    meta = {}
    if v[0] != 0.0:
        meta["boundary_singular"] = True
    return GridFunction(f.grid, out, meta=meta)


def wm_derivative_right_adjusted(g: GridFunction, theta: float,
                                 params: FracParams | None = None) -> GridFunction:
    """Right Weyl-Marchaud derivative of order 1-theta applied to
    g - g(T), with the overall real sign chosen so that

        integral f dg  =  int_0^T  D_left^theta f (t) * W(t) dt

    reproduces int f g' dt on smooth pairs.  Concretely

        W(t) = -(1/Gamma(theta)) [ (g(t)-g(T)) (T-t)^(theta-1)
                                   + (1-theta) * int_t^T (g(t)-g(s)) (s-t)^(theta-2) ds ].

    W(T) = 0 (the boundary term vanishes for continuous g)."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    v = g.values
    N = g.grid.N
    T = g.grid.T
    t = g.grid.times
    Mrev = marchaud_difference_integral(v[::-1], g.grid.dt, 1.0 - theta)
    M_right = Mrev[::-1]  # M_right[i] = int_{t_i}^T (g(t_i)-g(s)) (s-t_i)^(theta-2) ds
    out = np.zeros(N + 1)
    out[:N] = -((v[:N] - v[N]) * (T - t[:N]) ** (theta - 1.0)
                + (1.0 - theta) * M_right[:N]) / Gamma(theta)
    return GridFunction(g.grid, out)


def _weighted_power_integral(values: np.ndarray, times: np.ndarray, q: float, p: float) -> float:
    """int |f(t)|^p t^(-q) dt with the kernel integrated exactly per cell and
    |f|^p taken as the endpoint average on each cell; q < 1 required."""
    vp = np.abs(values) ** p
    cell = (times[1:] ** (1 - q) - times[:-1] ** (1 - q)) / (1 - q)
    avg = 0.5 * (vp[1:] + vp[:-1])
    # the first cell touches the t=0 singularity; use the right endpoint value
    avg[0] = vp[1]
    return float(np.dot(avg, cell))


def w0_parts(f: GridFunction, theta: float, p: float,
             params: FracParams | None = None) -> tuple[float, float, float]:
    """(weighted term, Gagliardo p-th power, L^p p-th power) of the
    left-anchored fractional Sobolev norm."""
    if not (0.0 < theta < 1.0) or p < 1:
        raise ValueError("need theta in (0,1) and p >= 1")
    if theta * p >= 1:
        raise ValueError(f"theta*p must be < 1 for the weighted term, got {theta * p}")
    floor = params.diagonal_floor if params is not None else 1
    weighted = _weighted_power_integral(f.values, f.grid.times, theta * p, p)
    semi = gagliardo_pth_power(f.values, f.grid.dt, theta, p, diagonal_floor=floor)
    lp = float(np.sum(np.abs(f.values[:-1]) ** p) * f.grid.dt)
    return weighted, semi, lp


def norm_W0(f: GridFunction, theta: float, p: float,
            params: FracParams | None = None) -> float:
    """Left-anchored fractional Sobolev norm:
    int |f|^p t^(-theta p) dt + (Gagliardo seminorm)^p."""
    weighted, semi, _ = w0_parts(f, theta, p, params)
    return weighted + semi


def norm_WT(g: GridFunction, theta: float, params: FracParams | None = None) -> float:
    """Right-anchored Holder-type norm:
    sup_t |g(T)-g(t)| / (T-t)^theta  +  sup_t int_t^T |g(t)-g(u)| |t-u|^(-1-theta) du,
    with the diagonal excluded at |t-u| >= dt."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    v = g.values
    N = g.grid.N
    dt = g.grid.dt
    T = g.grid.T
    t = g.grid.times
    term1 = float(np.max(np.abs(v[N] - v[:N]) / (T - t[:N]) ** theta))
    floor = params.diagonal_floor if params is not None else 1
    acc = np.zeros(N + 1)
    for k in range(max(1, floor), N + 1):
        lag = k * dt
        acc[: N + 1 - k] += np.abs(v[:-k] - v[k:]) * lag ** (-1.0 - theta) * dt
    term2 = float(acc.max())
    return term1 + term2


def dyda_ratio(f: GridFunction, theta: float, p: float,
               params: FracParams | None = None) -> float:
    """Ratio (weighted term) / (seminorm^p + L^p^p): the fractional Hardy
    inequality asserts this is bounded by a constant depending only on
    (theta, p) for continuous data."""
    weighted, semi, lp = w0_parts(f, theta, p, params)
    return weighted / (semi + lp)
