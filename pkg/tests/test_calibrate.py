import math

import numpy as np
import pytest

from ppmonitor.bivariate import ScenarioTruth
from ppmonitor.calibrate import CalibrationGrid, calibrate, cell_seed, select_cell
from ppmonitor.errors import DomainError
from ppmonitor.trialsim import Policy, TrialDesign, operating_characteristics

NULL = ScenarioTruth(0.2, 0.2, 0.5)
ALT = ScenarioTruth(0.7, 0.5, 0.5)
D = TrialDesign()


@pytest.fixture(scope="module")
def small_run():
    g = CalibrationGrid(lambdas=(0.8, 0.9, 0.95), theta_us=(0.8, 0.95), n_sims=1500, seed=5)
    return g, calibrate(D, NULL, ALT, g)


def test_matrix_shapes_and_mask(small_run):
    g, res = small_run
    assert res.type1.shape == res.power.shape == res.admissible.shape == (2, 3)
    np.testing.assert_array_equal(res.admissible, res.type1 <= g.alpha_max)


def test_selected_is_admissible_and_power_maximal(small_run):
    _, res = small_run
    assert res.selected is not None
    lam, tu = res.selected
    i, j = res.theta_us.index(tu), res.lambdas.index(lam)
    assert res.admissible[i, j]
    assert res.power[i, j] == res.power[res.admissible].max()
    assert res.selected_power == res.power[i, j]


def test_type1_tends_to_fall_with_lambda(small_run):
    g, res = small_run
    for row in res.type1:
        for a, b in zip(row, row[1:]):
            se = math.sqrt(max(a * (1 - a), 1e-12) / g.n_sims)
            assert b <= a + 3 * se


def test_cells_reproduce_direct_simulation(small_run):
    g, res = small_run
    k = 1 * len(g.lambdas) + 2  # theta_u=0.95, lambda=0.95
    oc = operating_characteristics(D.with_thresholds(0.95, 0.95), NULL, Policy.PROPOSED, g.n_sims, cell_seed(g.seed, k))
    assert res.type1[1, 2] == oc.prn


def test_rerun_is_bit_identical(small_run):
    g, res = small_run
    again = calibrate(D, NULL, ALT, g, threads=3)
    np.testing.assert_array_equal(res.type1, again.type1)
    np.testing.assert_array_equal(res.power, again.power)
    assert res.selected == again.selected


def test_strict_lambda_cell_is_admissible():
    g = CalibrationGrid(lambdas=(0.99,), theta_us=(0.99,), n_sims=1000, seed=2)
    res = calibrate(D, NULL, ALT, g)
    assert res.type1[0, 0] < 0.01
    assert res.selected == (0.99, 0.99)


def test_empty_admissible_set_reports_diagnostic():
    g = CalibrationGrid(lambdas=(0.65,), theta_us=(0.65,), alpha_max=1e-4, n_sims=300, seed=2)
    res = calibrate(D, NULL, ALT, g)
    assert res.selected is None and not res.meets_power
    assert "no grid cell" in res.diagnostic


def test_tie_break_prefers_larger_lambda_then_theta():
    power = np.array([[0.9, 0.9], [0.9, 0.85]])
    adm = np.ones((2, 2), dtype=bool)
    assert select_cell((0.7, 0.8), (0.6, 0.9), power, adm) == (0.8, 0.6)
    power = np.array([[0.9, 0.8], [0.9, 0.8]])
    assert select_cell((0.7, 0.8), (0.6, 0.9), power, adm) == (0.7, 0.9)
    assert select_cell((0.7,), (0.6,), np.array([[0.9]]), np.array([[False]])) is None


def test_cell_seeds_are_distinct_and_stable():
    seeds = [cell_seed(11, k) for k in range(36)]
    assert len(set(seeds)) == 36
    assert seeds == [cell_seed(11, k) for k in range(36)]


@pytest.mark.parametrize("kw", [
    dict(lambdas=()),
    dict(lambdas=(0.8, 0.7)),
    dict(theta_us=(0.5, 1.0)),
    dict(alpha_max=0.0),
    dict(n_sims=0),
])
def test_grid_validation(kw):
    with pytest.raises(DomainError):
        CalibrationGrid(**kw)
