import numpy as np
import pytest

from varpath.bv_library import (cantor_coefficient, constant_scalar,
                                halfplane_x1_positive, indicator_disk,
                                lipschitz_wrap)
from varpath.grid_paths import TimeGrid, make_constant_path, make_fbm, make_linear_path
from varpath.variability import (VariabilityParams, VariabilityRefusal,
                                 classify, classify_crosscheck_energy,
                                 classify_sweep, compose,
                                 composition_bound_check, fbm_energy_bound,
                                 inflated_box, meanvalue_check,
                                 moment_condition_check, require_finite,
                                 variability_statistic)


GRID = TimeGrid(1.0, 512)
PARAMS_LO = VariabilityParams(s=0.3, p=np.inf, levels=(6, 8, 10))
PARAMS_HI = VariabilityParams(s=0.8, p=np.inf, levels=(6, 8, 10))


def test_constant_coefficient_always_finite():
    path = make_fbm(0.7, 2, GRID, seed=0)
    rep = classify(path, constant_scalar(2.0, 2), PARAMS_HI)
    assert rep.verdict == "finite"
    assert rep.growth_exponent == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        VariabilityParams(s=1.5)
    with pytest.raises(ValueError):
        VariabilityParams(s=0.5, p=0.5)
    with pytest.raises(ValueError):
        VariabilityParams(s=0.5, levels=(8,))


def test_frozen_verdict_triple():
    # frozen verdicts at N = 512, levels (6,8,10), s = 0.8: a constant path
    # in the flat part of the Cantor coefficient is finite; a path crossing
    # a jump locus or the Cantor set diverges
    cantor = cantor_coefficient(2)
    flat = make_constant_path(np.array([0.5, 0.0]), GRID)
    assert classify(flat, cantor, PARAMS_HI).verdict == "finite"
    path = make_fbm(0.7, 2, GRID, seed=1)
    assert classify(path, halfplane_x1_positive(), PARAMS_HI).verdict == "diverging"
    assert classify(path, cantor, PARAMS_HI).verdict == "diverging"


def test_path_missing_jump_locus_is_finite():
    # a path that stays away from the discontinuity circle sees no mass
    path = make_constant_path(np.array([5.0, 5.0]), GRID)
    disk = indicator_disk((0.0, 0.0), 1.0)
    rep = classify(path, disk, VariabilityParams(s=0.8, margin=0.25))
    assert rep.verdict == "finite"


def test_classify_sweep_matches_classify():
    path = make_fbm(0.7, 2, GRID, seed=2)
    phi = halfplane_x1_positive()
    s_values = (0.3, 0.5, 0.8)
    reports = classify_sweep(path, phi, s_values, PARAMS_LO)
    for s, rep in zip(s_values, reports):
        exact = classify(path, phi, VariabilityParams(s=s, p=PARAMS_LO.p,
                                                      levels=PARAMS_LO.levels))
        assert rep.verdict == exact.verdict
        assert rep.s == s


def test_require_finite_raises_with_report():
    path = make_fbm(0.7, 2, GRID, seed=1)
    with pytest.raises(VariabilityRefusal) as exc:
        require_finite(path, halfplane_x1_positive(), PARAMS_HI)
    assert exc.value.report.verdict == "diverging"


def test_inflated_box_contains_range():
    path = make_fbm(0.6, 2, GRID, seed=3)
    box = inflated_box(path, 0.5)
    assert np.all(path.values >= box[:, 0] + 0.49)
    assert np.all(path.values <= box[:, 1] - 0.49)


def test_statistic_nonnegative_and_monotone_in_level():
    path = make_fbm(0.7, 2, GRID, seed=4)
    phi = halfplane_x1_positive()
    lo = variability_statistic(path, phi, PARAMS_HI, level=6)
    hi = variability_statistic(path, phi, PARAMS_HI, level=10)
    assert np.all(lo.values >= 0)
    # finer level means smaller cap, hence larger capped potential on average
    assert hi.values.mean() >= lo.values.mean() - 1e-12


def test_compose_respects_sup_bound():
    path = make_linear_path(np.array([1.0, 0.0]), np.array([-0.5, 0.3]), GRID)
    comp = compose(halfplane_x1_positive(), path)
    assert set(np.round(np.unique(comp.values), 6)) <= {0.0, 0.5, 1.0}


def test_crosscheck_energy_identity():
    path = make_fbm(0.7, 2, TimeGrid(1.0, 256), seed=5)
    phi = halfplane_x1_positive()
    norm_l1, energy = classify_crosscheck_energy(path, phi, VariabilityParams(s=0.5, p=1), 8)
    assert norm_l1 == pytest.approx(energy, rel=1e-10)


def test_composition_bound_holds():
    path = make_fbm(0.8, 2, TimeGrid(1.0, 512), seed=6)
    phi = lipschitz_wrap(lambda p: np.sin(p[:, 0]) * np.cos(p[:, 1]), L=1.5, dim=2)
    chk = composition_bound_check(phi, path, s=0.5, p=2.0, beta=0.2)
    assert chk.lhs >= 0 and chk.rhs > 0


def test_meanvalue_check_jump_coefficient():
    phi = halfplane_x1_positive()
    chk = meanvalue_check(phi, np.array([-0.3, 0.0]), np.array([0.3, 0.0]),
                          s=0.5, level=10)
    assert chk.lhs == pytest.approx(1.0)
    assert chk.rhs >= chk.lhs  # maximal function controls the oscillation


def test_fbm_energy_bound_subcritical_vs_supercritical():
    grid = TimeGrid(1.0, 512)
    seeds = range(8)
    # n = 2, H = 0.75: the time integral converges for s < 1/H - 1 = 1/3
    sub = fbm_energy_bound(0.75, 2, 0.1, np.zeros(2), seeds, grid)
    sup = fbm_energy_bound(0.75, 2, 0.9, np.zeros(2), seeds, grid)
    assert sub.growth_exponent < sup.growth_exponent
    assert sub.mean < sup.mean


def test_moment_condition_check_cantor():
    phi = cantor_coefficient(2)
    # exponent just inside (-n, 0): finite for the Cantor-tensor-surface
    # gradient measure at a point off the support
    chk = moment_condition_check(phi, np.array([2.0, 0.0]), -0.5)
    assert not chk.diverging
    with pytest.raises(ValueError):
        moment_condition_check(phi, np.zeros(2), -3.0)
