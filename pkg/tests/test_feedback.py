import math

import numpy as np
import pytest
from hypothesis import given, settings
from numpy.testing import assert_allclose

from qthermo.correlations import SearchSettings, basis_measurement, brute_force_J, maximize_classical_correlations
from qthermo.feedback import (
    FeedbackScenario,
    WorkLedger,
    decorrelation_target,
    discord_stroke_work,
    discord_work_deficit,
    feedback_extractable_work,
    joint_extractable_work,
    measurement_cost,
    net_measurement_gain,
    optimal_feedback_gain,
    total_feedback_budget,
    tradeoff_witness,
)
from qthermo.lab.presets import bell, classical_mixture, werner
from qthermo.operators import bipartite, random_density, random_hermitian, random_unitary
from qthermo.thermo import ThermalContext

from strategies import betas, seeds

LN2 = math.log(2)
LADDER = np.diag([0.0, 1.0])
ZERO = np.zeros((2, 2))
T1 = ThermalContext(1.0)


def scenario_from_seed(seed, beta=1.0):
    rng = np.random.default_rng(seed)
    rho = bipartite(random_density(4, rng), 2, 2)
    m = basis_measurement(random_unitary(2, rng))
    return FeedbackScenario(rho, random_hermitian(2, rng), random_hermitian(2, rng), ThermalContext(beta), m)


@settings(max_examples=25)
@given(seeds, betas)
def test_gain_equals_information_for_any_measurement(seed, beta):
    led = feedback_extractable_work(scenario_from_seed(seed, beta))
    assert led.residual("gain = kT*J_pi").value == pytest.approx(0, abs=1e-9)
    assert led["gain"] >= -1e-9


@settings(max_examples=25)
@given(seeds, betas)
def test_joint_work_splits_into_local_and_mutual(seed, beta):
    s = scenario_from_seed(seed, beta)
    led = joint_extractable_work(s.rho, s.h_s, s.h_a, s.ctx)
    assert led.passed, led.residuals


@settings(max_examples=25)
@given(seeds)
def test_net_gain_never_negative(seed):
    # sum_k p_k S(rho_S|k) <= S(rho_SA) for rank-1 projective measurements
    led = net_measurement_gain(scenario_from_seed(seed))
    assert led["net gain"] >= -1e-9
    assert led.residual("net gain = kT*[S(rho_SA) - <S(rho_S|k)>]").passed


@settings(max_examples=25)
@given(seeds)
def test_stroke_balance_is_exact(seed):
    s = scenario_from_seed(seed)
    led = discord_stroke_work(s.rho, s.h_s, s.h_a, s.ctx, s.measurement)
    assert led.residual("stroke work = kT*D + kT*[H(p) - S(rho_A)] - C").passed
    assert led.residual("W_in = W_S + W_A(rho'_A) + kT*J").passed


def test_bell_optimal_gain_against_grid():
    led, _ = optimal_feedback_gain(bell(), LADDER, LADDER, T1)
    assert led["gain"] == pytest.approx(brute_force_J(bell(), 180), abs=1e-4)
    assert led["gain"] == pytest.approx(LN2, abs=1e-6)


def test_bell_budget_is_three_ln2():
    led = total_feedback_budget(bell(), ZERO, ZERO, T1)
    assert led["budget"] == pytest.approx(3 * LN2, abs=1e-6)
    assert led.passed


def test_bell_stroke_extracts_discord():
    r = maximize_classical_correlations(bell())
    led = discord_stroke_work(bell(), ZERO, ZERO, T1, r.optimal_measurement, r.discord)
    assert led["stroke work"] == pytest.approx(LN2, abs=1e-6)
    assert led.passed


def test_bell_net_gain_vanishes():
    r = maximize_classical_correlations(bell())
    led = net_measurement_gain(FeedbackScenario(bell(), LADDER, LADDER, T1, r.optimal_measurement), r.discord)
    assert led["net gain"] == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("rho", [bell(), classical_mixture(), werner(0.25), werner(0.5), werner(0.75)],
                         ids=["bell", "mixture", "w25", "w50", "w75"])
def test_preset_ledgers_close(rho):
    r = maximize_classical_correlations(rho, SearchSettings(restarts=8))
    s = FeedbackScenario(rho, LADDER, LADDER, T1, r.optimal_measurement)
    for led in (
        discord_work_deficit(s, r.discord),
        net_measurement_gain(s, r.discord),
        discord_stroke_work(rho, LADDER, LADDER, T1, r.optimal_measurement, r.discord),
        total_feedback_budget(rho, LADDER, LADDER, T1, report=r),
    ):
        assert led.passed, [x for x in led.residuals if not x.passed]


def test_literal_stroke_identity_breaks_off_diagonal():
    # the optimal basis of a generic state does not diagonalize rho_A, so the
    # stroke work differs from kT*D by the basis mismatch term
    rng = np.random.default_rng(7)
    rho = bipartite(random_density(4, rng), 2, 2)
    r = maximize_classical_correlations(rho, SearchSettings(restarts=8))
    led = discord_stroke_work(rho, LADDER, LADDER, T1, r.optimal_measurement, r.discord)
    assert led.residual("stroke work = kT*D + kT*[H(p) - S(rho_A)] - C").passed
    assert led["stroke work"] - led["kT*D"] == pytest.approx(led["kT*[H(p) - S(rho_A)] - C"], abs=1e-9)
    assert abs(led["kT*[H(p) - S(rho_A)] - C"]) > 1e-3


def test_witness_net_gain_is_zero():
    led = net_measurement_gain(tradeoff_witness())
    assert led["net gain"] == pytest.approx(0.0, abs=1e-12)


def test_decorrelated_target_keeps_classical_part():
    r = maximize_classical_correlations(werner(0.5), SearchSettings(restarts=8))
    t = decorrelation_target(werner(0.5), r.optimal_measurement)
    assert_allclose(t.rho_s, werner(0.5).rho_s, atol=1e-12)
    r2 = maximize_classical_correlations(t, SearchSettings(restarts=8))
    assert r2.discord <= 1e-8


def test_cost_vanishes_for_diagonal_measurement():
    m = basis_measurement(np.eye(2))
    assert measurement_cost(classical_mixture(), LADDER, m) == pytest.approx(0.0, abs=1e-15)


def test_ledger_lookup():
    led = WorkLedger()
    led.add("x", 1.0)
    led.add("x", 2.0)
    assert led["x"] == 2.0
    with pytest.raises(KeyError):
        led["y"]
    led.check("x = 2", led["x"], 2.0, 1e-9)
    assert led.passed


def test_scenario_checks_dimensions():
    with pytest.raises(ValueError):
        FeedbackScenario(bell(), np.eye(3), LADDER, T1)
