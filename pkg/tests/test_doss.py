import numpy as np
import pytest

from varpath.bv_library import (ScalarBV, cantor_matrix, cone_matrix,
                                jump_line_matrix)
from varpath.doss import (BVGradientMap, DossMaps, SolveConfig, SolveRefusal,
                          build_solution, change_of_variable_check,
                          closed_form_maps, residual, solve_nd, solve_scalar,
                          uniqueness_check)
from varpath.grid_paths import SampledPath, TimeGrid, make_fbm
from varpath.measures import DiscreteMeasure


def scalar_coeff(fn, dim=1):
    def grad(box, level):
        return DiscreteMeasure(dim, np.zeros((0, dim)), np.zeros(0))
    return ScalarBV(dim, lambda p: fn(np.atleast_2d(p)), grad)


def smooth_driver(grid, dim=2):
    t = grid.times
    cols = [0.5 * np.sin(2 * np.pi * t), t - t ** 2][:dim]
    return SampledPath(grid, dim, np.column_stack(cols))


# ---------------------------------------------------------------------------
# scalar construction
# ---------------------------------------------------------------------------

def test_solve_scalar_constant_coefficient():
    sigma = scalar_coeff(lambda p: np.full(len(p), 2.0))
    maps = solve_scalar(sigma, (-1.0, 1.0))
    # g(x) = x/2, f(y) = 2y
    xs = np.linspace(-1, 1, 11)[:, None]
    assert np.allclose(maps.g(xs)[:, 0], xs[:, 0] / 2, atol=1e-10)
    assert np.allclose(maps.f(maps.g(xs))[:, 0], xs[:, 0], atol=1e-10)


def test_solve_scalar_sqrt_coefficient_monotone():
    # sigma(x) = sqrt(x) on (0, 4): g(x) = 2 sqrt(x) - 2 sqrt(lo), strictly
    # increasing; frozen oracle: max error vs closed form 0.009 on [0.01, 4]
    sigma = scalar_coeff(lambda p: np.sqrt(np.maximum(p[:, 0], 0.0)))
    maps = solve_scalar(sigma, (0.01, 4.0))
    xs = np.linspace(0.02, 4.0, 200)
    g = maps.g(xs[:, None])[:, 0]
    assert np.all(np.diff(g) > 0)
    expect = 2 * np.sqrt(xs) - 2 * np.sqrt(0.01)
    assert np.max(np.abs(g - (expect + g[0] - expect[0]))) < 0.02


def test_solve_scalar_refuses_vanishing_coefficient():
    sigma = scalar_coeff(lambda p: p[:, 0])  # vanishes at 0
    with pytest.raises(SolveRefusal):
        solve_scalar(sigma, (-1.0, 1.0))


# ---------------------------------------------------------------------------
# closed forms and nD construction
# ---------------------------------------------------------------------------

def test_closed_form_jump_line_inverse_pair():
    maps = closed_form_maps("jump_line", c=2.0)
    rng = np.random.default_rng(0)
    ys = rng.uniform(-2, 2, (500, 2))
    ys = ys[np.abs(ys[:, 0]) > 0.05]  # stay off the jump locus of f
    back = maps.g(maps.f(ys))
    assert np.max(np.abs(back - ys)) < 1e-10


def test_closed_form_cantor_shear_inverse_pair():
    maps = closed_form_maps("cantor_shear")
    rng = np.random.default_rng(1)
    ys = rng.uniform(-1.5, 1.5, (300, 2))
    back = maps.g(maps.f(ys))
    assert np.max(np.abs(back - ys)) < 1e-6


def test_closed_form_cone_right_inverse_on_range():
    maps = closed_form_maps("cone", a=1.0, b=3.0)
    rng = np.random.default_rng(2)
    ys = rng.uniform(-2, 2, (400, 2))
    ys = ys[(np.abs(ys[:, 0]) > 0.05) & (np.abs(ys[:, 1]) > 0.05)]
    back = maps.g(maps.f(ys))
    assert np.max(np.abs(back - ys)) < 1e-10


def test_solve_nd_matches_closed_form_jump_line():
    # frozen oracle: g error 4.1e-5 and f error 7.4e-5 at probes off the
    # loci, after removing the anchoring offset g(base)
    sigma = jump_line_matrix(2.0)
    base = np.array([-3.0, -3.0])
    region = np.array([[-4.0, 4.0], [-4.0, 4.0]])
    sol = solve_nd(sigma, base, region)
    maps = closed_form_maps("jump_line", c=2.0)
    off = maps.g(base)
    rng = np.random.default_rng(7)
    xs = rng.uniform(-3.5, 3.5, (300, 2))
    xs = xs[np.abs(xs[:, 1] - 2 * xs[:, 0]) > 0.05]
    g_err = np.max(np.abs(sol.g(xs) - (maps.g(xs) - off)))
    assert g_err < 1e-3
    ys = maps.g(xs) - off
    ys = ys[np.abs(ys[:, 0] + off[0]) > 0.05]
    f_err = np.max(np.abs(sol.f(ys) - maps.f(ys + off)))
    assert f_err < 1e-3


def test_solve_nd_refuses_cone():
    # the inverse field of the cone coefficient carries circulation across
    # its jump rays: no single-valued potential exists
    sigma = cone_matrix(1.0, 3.0)
    with pytest.raises(SolveRefusal) as exc:
        solve_nd(sigma, np.array([-2.0, -2.0]), np.array([[-3.0, 3.0], [-3.0, 3.0]]))
    assert "cross-derivative symmetry" in str(exc.value)
    assert exc.value.report["max_residual"] > 0.5


def test_solve_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(table_points=2)
    with pytest.raises(ValueError):
        SolveConfig(det_floor=0.0)


# ---------------------------------------------------------------------------
# solution construction and verification
# ---------------------------------------------------------------------------

def test_build_solution_constant_sigma_exact():
    # constant diagonal sigma = 1.7 I: X = x0 + 1.7 Y exactly
    grid = TimeGrid(1.0, 1024)
    Y = smooth_driver(grid)
    c = 1.7

    maps = DossMaps(
        2,
        g=lambda x: np.asarray(x, dtype=float) / c,
        f=lambda y: np.asarray(y, dtype=float) * c,
        lip_f=c, lip_g=1 / c, source="constant")
    x0 = np.array([0.3, -0.2])
    X = build_solution(maps, Y, x0)
    assert np.max(np.abs(X.values - (x0 + c * Y.values))) < 1e-12
    assert uniqueness_check(X, maps, Y, x0) < 1e-12


def test_build_solution_requires_zero_start():
    grid = TimeGrid(1.0, 64)
    Y = SampledPath(grid, 2, np.ones((65, 2)))
    maps = closed_form_maps("jump_line", c=2.0)
    with pytest.raises(ValueError):
        build_solution(maps, Y, np.zeros(2))


def test_uniqueness_check_flags_impostors():
    # frozen oracles: shifted impostor deviation 0.0500 (the shift size times
    # 1/lip bound scale); constant impostor deviation sup|Y - Y_0|
    grid = TimeGrid(1.0, 1024)
    Y = make_fbm(0.8, 2, grid, seed=0)
    maps = closed_form_maps("jump_line", c=2.0)
    x0 = np.array([1.0, 1.0])
    X = build_solution(maps, Y, x0)
    assert uniqueness_check(X, maps, Y, x0) < 1e-10
    shifted = SampledPath(grid, 2, X.values + 0.05)
    assert uniqueness_check(shifted, maps, Y, x0) > 1e-2
    frozen = SampledPath(grid, 2, np.tile(X.values[0], (grid.N + 1, 1)))
    dev = uniqueness_check(frozen, maps, Y, x0)
    assert dev == pytest.approx(np.abs(Y.values - Y.values[0]).max(), abs=1e-10)


def test_residual_constant_sigma_small():
    # frozen oracle: residual 1.7e-4 for constant sigma on a smooth driver
    grid = TimeGrid(1.0, 1024)
    Y = smooth_driver(grid)
    c = 1.7
    maps = DossMaps(
        2,
        g=lambda x: np.asarray(x, dtype=float) / c,
        f=lambda y: np.asarray(y, dtype=float) * c,
        lip_f=c, lip_g=1 / c, source="constant")
    x0 = np.array([0.3, -0.2])
    X = build_solution(maps, Y, x0)

    def entry(val):
        return scalar_coeff(lambda p: np.full(len(p), val), dim=2)

    from varpath.bv_library import MatrixBV
    sigma = MatrixBV(2, ((entry(c), entry(0.0)), (entry(0.0), entry(c))))
    rep = residual(X, sigma, Y, x0, theta=0.35, s=0.45, n_checkpoints=32)
    assert rep.sup < 1e-3


def test_change_of_variable_constant_offset_invariance():
    grid = TimeGrid(1.0, 1024)
    X = make_fbm(0.8, 2, grid, seed=3)

    def make_F(c):
        return BVGradientMap(
            2,
            evaluate=lambda p: p[:, 0] + p[:, 1] + c,
            partials=(scalar_coeff(lambda q: np.ones(len(q)), dim=2),
                      scalar_coeff(lambda q: np.ones(len(q)), dim=2)))

    r0 = change_of_variable_check(make_F(0.0), X, theta=0.35, s=0.45,
                                  n_checkpoints=16)
    r7 = change_of_variable_check(make_F(7.0), X, theta=0.35, s=0.45,
                                  n_checkpoints=16)
    assert r0.sup == pytest.approx(r7.sup, abs=1e-12)
    assert r0.sup < 1e-2


def test_change_of_variable_refuses_rough_path():
    grid = TimeGrid(1.0, 1024)
    X = make_fbm(0.3, 2, grid, seed=0)
    F = BVGradientMap(
        2,
        evaluate=lambda p: p[:, 0],
        partials=(scalar_coeff(lambda q: np.ones(len(q)), dim=2),
                  scalar_coeff(lambda q: np.zeros(len(q)), dim=2)))
    with pytest.raises(SolveRefusal):
        change_of_variable_check(F, X, theta=0.35)
