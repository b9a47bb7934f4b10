import math

import numpy as np
import pytest

from momflow import (
    IntegratorConfig,
    MomentumField,
    classify_fixed_points,
    energy_at,
    evolve,
    field_from_wavefunction,
    force_at,
    harmonic_potential,
    polynomial_potential,
    qho_analytic_position,
    qho_field,
    stationarity_residual,
    zero_potential,
)
from momflow.errors import (
    BranchAmbiguity,
    StepUnderflow,
    TrajectoryNearSingularity,
)

RNG = np.random.default_rng(7321)

FIELD = qho_field(1)
POT = harmonic_potential()


# -- force and consistency -------------------------------------------------------


def test_force_vanishes_at_rest_point():
    assert abs(force_at(FIELD, POT, 1.0)) < 1e-14


def test_force_at_reference_point():
    # -x + 1/x^3 at x = 2
    assert force_at(FIELD, POT, 2.0) == pytest.approx(-1.875)


def test_free_particle_feels_no_force():
    field = MomentumField(1, lambda pts: np.full(pts.shape, 1.3, complex), holomorphic=True)
    assert force_at(field, zero_potential(), 0.7) == pytest.approx(0.0)


def test_flow_satisfies_force_law_at_reference_point():
    # (p/m) dp/dx = (1.5i)(1.25i) = -1.875 = F at x = 2
    p = FIELD.value(2.0)
    dp = FIELD.jacobian(2.0)
    assert p * dp == pytest.approx(-1.875)
    assert abs(stationarity_residual(FIELD, POT, 2.0)) < 1e-12


def test_stationarity_residual_vanishes_at_random_points():
    xs = RNG.uniform(0.2, 3.0, size=100)
    res = stationarity_residual(FIELD, POT, xs.astype(complex))
    assert np.max(np.abs(res)) < 1e-9


def test_constant_field_residual_is_exactly_zero():
    field = MomentumField(1, lambda pts: np.full(pts.shape, 2.0, complex), holomorphic=True)
    assert stationarity_residual(field, zero_potential(), 0.3) == 0.0


def test_mismatched_potential_has_order_one_residual():
    quartic = polynomial_potential([0, 0, 0, 0, 0.25])
    assert abs(stationarity_residual(FIELD, quartic, 2.0)) > 0.1


# -- analytic solution -------------------------------------------------------------


def test_analytic_rest_point():
    for t in (0.0, 1.0, 7.7):
        assert qho_analytic_position(1.0, t) == pytest.approx(1.0)


def test_analytic_reference_value():
    x = qho_analytic_position(math.sqrt(2.0), math.pi / 4.0)
    assert x == pytest.approx(1.09868411346781 + 0.45508986056222733j, abs=1e-12)


def test_analytic_classical_limit():
    ts = np.linspace(0.0, 2.0 * np.pi, 2001)
    xs = qho_analytic_position(100.0, ts)
    # exact amplitude bound: 1 - sqrt(1 - 2/x0^2) = 1.0000500e-4 relative
    rel = np.abs(xs - 100.0 * np.exp(1j * ts)) / 100.0
    assert rel.max() <= 1.00006e-4
    assert rel.max() > 0.9e-4  # the wobble is really there


def test_analytic_branch_ambiguity_at_origin_crossing():
    # from sqrt(2) the squared position reaches 0 at t = pi/2
    with pytest.raises(BranchAmbiguity):
        qho_analytic_position(math.sqrt(2.0), math.pi / 2.0)


def test_analytic_branch_continues_past_principal_cut():
    # x0 = 2: u circles the origin, so naive principal sqrt would jump
    ts = np.linspace(0.0, np.pi, 4001)
    xs = qho_analytic_position(2.0, ts)
    assert np.max(np.abs(np.diff(xs))) < 0.02  # continuous track
    assert xs[-1] == pytest.approx(-2.0)  # one winding of u flips the sign of x


# -- evolve -------------------------------------------------------------------------


def test_rest_point_stays_exactly_still():
    config = IntegratorConfig(t_end=10.0, dt=1e-3)
    traj = evolve(FIELD, POT, 1.0, config)
    assert np.max(np.abs(traj.x - 1.0)) < 1e-12


def test_rk4_matches_analytic_solution():
    config = IntegratorConfig(t_end=0.7853, dt=1e-4)
    traj = evolve(FIELD, POT, math.sqrt(2.0), config)
    reference = qho_analytic_position(math.sqrt(2.0), traj.times)
    assert np.max(np.abs(traj.x - reference)) < 1e-6


def test_rk4_convergence_is_fourth_order():
    errors = {}
    for dt in (8e-3, 4e-3, 2e-3, 1e-3):
        config = IntegratorConfig(t_end=0.78, dt=dt)
        traj = evolve(FIELD, POT, math.sqrt(2.0), config)
        reference = qho_analytic_position(math.sqrt(2.0), traj.times)
        errors[dt] = np.max(np.abs(traj.x - reference))
    dts = sorted(errors, reverse=True)
    exponents = [math.log(errors[a] / errors[b]) / math.log(a / b)
                 for a, b in zip(dts, dts[1:])]
    for exponent in exponents:
        assert 3.7 <= exponent <= 4.3


def test_rkf45_matches_analytic_solution():
    config = IntegratorConfig(t_end=0.7853, scheme="rkf45", dt=1e-3)
    traj = evolve(FIELD, POT, math.sqrt(2.0), config)
    reference = qho_analytic_position(math.sqrt(2.0), traj.times)
    assert np.max(np.abs(traj.x - reference)) < 1e-6
    assert traj.step_sizes is not None and len(traj.step_sizes) == len(traj) - 1


def test_momentum_is_slaved_to_field():
    config = IntegratorConfig(t_end=0.5, dt=1e-3)
    traj = evolve(FIELD, POT, math.sqrt(2.0), config)
    expected = FIELD.value(traj.positions[:, 0])
    assert np.max(np.abs(traj.momenta[:, 0] - expected)) == 0.0


def test_energy_constant_along_trajectory():
    config = IntegratorConfig(t_end=1.2, dt=1e-3)
    traj = evolve(FIELD, POT, math.sqrt(2.0), config)
    energies = energy_at(FIELD, POT, traj.positions)
    assert np.max(np.abs(energies - 1.5)) < 1e-8


def test_forced_mode_agrees_with_field_mode_on_stationary_field():
    config = IntegratorConfig(t_end=0.5, dt=1e-4)
    a = evolve(FIELD, POT, math.sqrt(2.0), config, mode="field")
    b = evolve(FIELD, POT, math.sqrt(2.0), config, mode="forced")
    assert np.max(np.abs(a.x - b.x)) < 1e-6


def test_trajectory_into_node_halts_with_partial_result():
    # from sqrt(2) the track reaches the pole at x = 0 at t = pi/2
    config = IntegratorConfig(t_end=2.0, dt=1e-3)
    with pytest.raises(TrajectoryNearSingularity) as info:
        evolve(FIELD, POT, math.sqrt(2.0), config)
    partial = info.value.trajectory
    assert partial is not None
    assert 1.4 < partial.times[-1] <= math.pi / 2.0
    assert info.value.last_point.t == partial.times[-1]


def test_adaptive_step_underflow_is_reported():
    config = IntegratorConfig(t_end=1.0, scheme="rkf45", dt=0.5,
                              abs_tol=1e-13, rel_tol=1e-13, dt_min=0.2, dt_max=0.5)
    with pytest.raises(StepUnderflow):
        evolve(FIELD, POT, math.sqrt(2.0), config)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=1.0, dt=-0.1)
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=1.0, scheme="euler")


# -- fixed points --------------------------------------------------------------------


def test_level1_has_single_rest_point_at_unit_length():
    roots = classify_fixed_points(FIELD, POT, (0.2, 3.0))
    assert len(roots) == 1
    x, residual = roots[0]
    assert x == pytest.approx(1.0, abs=1e-10)
    assert residual < 1e-9


def test_plane_wave_has_no_fixed_points():
    field = field_from_wavefunction(lambda x: np.exp(1j * 2.0 * x))
    assert classify_fixed_points(field, zero_potential(), (0.0, 3.0)) == []


def test_level2_fixed_points_match_log_derivative_roots():
    # p_2(x) = -i*(8x/(4x^2 - 2) - x): roots in (0.05, 4] at sqrt(5/2) only
    roots = classify_fixed_points(qho_field(2), POT, (0.05, 4.0))
    assert len(roots) == 1
    assert roots[0][0] == pytest.approx(math.sqrt(2.5), abs=1e-9)
    assert roots[0][1] < 1e-9
