"""Acceptance suite: one test per shipped guarantee, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one PASS/FAIL
line per criterion.
"""

import math
import time

import numpy as np
import pytest

import momflow as mf

RNG = np.random.default_rng(0xACCE97)

FIELD = mf.qho_field(1)
POT = mf.harmonic_potential()


def _criterion(number, description, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {description} ({detail})")
    assert ok, f"criterion {number}: {description}: {detail}"


def test_criterion_01_energy_relation_constant():
    report = mf.energy_constancy_scan(FIELD, POT, (0.1, 5.0), samples=1000, tol=1e-9)
    deviation = max(report.max_deviation, abs(report.mean_energy - 1.5))
    _criterion(1, "level-1 oscillator energy constant at 1.5", deviation < 1e-9,
               f"max deviation {deviation:.3e} < 1e-9")


def test_criterion_02_trajectory_matches_analytic_solution():
    config = mf.IntegratorConfig(t_end=0.78, dt=1e-4)
    traj = mf.evolve(FIELD, POT, math.sqrt(2.0), config)
    reference = mf.qho_analytic_position(math.sqrt(2.0), traj.times)
    error = float(np.max(np.abs(traj.x - reference)))

    # convergence exponent measured where truncation still dominates
    errors = {}
    for dt in (8e-3, 4e-3, 2e-3, 1e-3):
        t = mf.evolve(FIELD, POT, math.sqrt(2.0), mf.IntegratorConfig(t_end=0.78, dt=dt))
        errors[dt] = np.max(np.abs(t.x - mf.qho_analytic_position(math.sqrt(2.0), t.times)))
    dts = sorted(errors, reverse=True)
    exponents = [math.log(errors[a] / errors[b]) / math.log(a / b)
                 for a, b in zip(dts, dts[1:])]
    ok = error < 1e-6 and all(3.7 <= e <= 4.3 for e in exponents)
    _criterion(2, "rk4 tracks the closed-form complex trajectory", ok,
               f"max error {error:.3e} < 1e-6, exponents "
               + ", ".join(f"{e:.2f}" for e in exponents))


def test_criterion_03_rest_point_remains_still():
    traj = mf.evolve(FIELD, POT, 1.0, mf.IntegratorConfig(t_end=10.0, dt=1e-3))
    deviation = float(np.max(np.abs(traj.x - 1.0)))
    _criterion(3, "trajectory from the rest point stays put", deviation < 1e-12,
               f"max |x - 1| = {deviation:.3e} < 1e-12")


@pytest.mark.xfail(
    strict=True,
    reason="stated bound is unattainable: the closed-form solution gives "
           "sup ||x(t)|-100|/100 = 1 - sqrt(1 - 2/100**2) = 1.0000500e-4, "
           "strictly above the 1e-4 threshold (which is that bound rounded "
           "to leading order); measured value sits on the analytic supremum")
def test_criterion_04a_classical_limit_magnitude():
    traj = mf.evolve(FIELD, POT, 100.0, mf.IntegratorConfig(t_end=2.0 * math.pi, dt=1e-3))
    deviation = float(np.max(np.abs(np.abs(traj.x) - 100.0)) / 100.0)
    _criterion("4a", "classical-limit magnitude stays within 1e-4", deviation < 1e-4,
               f"max ||x|-100|/100 = {deviation:.7e}")


def test_criterion_04b_classical_limit_phase_rate():
    traj = mf.evolve(FIELD, POT, 100.0, mf.IntegratorConfig(t_end=2.0 * math.pi, dt=1e-3))
    phase = np.unwrap(np.angle(traj.x))
    slope = float(np.polyfit(traj.times, phase, 1)[0])
    rel = abs(slope - 1.0)
    _criterion("4b", "classical-limit phase advances at the oscillator rate",
               rel < 1e-3, f"slope {slope:.6f}, |slope - omega|/omega = {rel:.2e} < 1e-3")


def test_criterion_05_wavefunction_reconstruction():
    path = np.linspace(0.5, 4.0, 36)
    samples = mf.reconstruct_wavefunction(FIELD, path)
    target = path * np.exp(-path * path / 2.0)
    anchored = samples.values * (target[0] / samples.values[0])
    rel = float(np.max(np.abs(anchored - target) / np.abs(target)))
    _criterion(5, "line-integral reconstruction matches the eigenstate", rel < 1e-8,
               f"max pointwise relative error {rel:.3e} < 1e-8")


def test_criterion_06_separable_field_is_curl_free():
    field = mf.product_field([mf.qho_field(1), mf.qho_field(0), mf.qho_field(2)])
    pts = np.stack([RNG.uniform(0.3, 2.5, 100),
                    RNG.uniform(-2.0, 2.0, 100),
                    RNG.uniform(0.9, 2.2, 100)], axis=1)
    worst = max(mf.curl_residual(field, r) for r in pts)
    _criterion(6, "separable 3-D field has vanishing curl", worst < 1e-10,
               f"worst residual {worst:.3e} < 1e-10 at 100 random points")


def test_criterion_07_flow_and_force_laws_agree():
    xs = RNG.uniform(0.2, 3.0, 100).astype(complex)
    residual = float(np.max(np.abs(mf.stationarity_residual(FIELD, POT, xs))))
    _criterion(7, "convective momentum rate equals the force law", residual < 1e-9,
               f"max residual {residual:.3e} < 1e-9 at 100 random points")


def test_criterion_08_pair_momentum_is_conserved():
    params = mf.SpinningPairParams(radius=1.0, gamma=2.0)
    history = mf.spinning_pair_history(params, dt=1e-3, samples=1000)
    drift = mf.total_momentum_drift(history).max_abs
    _criterion(8, "spinning-pair total momentum is conserved", drift < 1e-12,
               f"max drift {drift:.3e} < 1e-12 over 1000 samples")


def test_criterion_09_force_norm_invariant():
    params = mf.SpinningPairParams(radius=1.0, gamma=2.0, mass=1.0)
    closed = mf.force_norm_invariant(
        mf.spinning_pair_history(params, dt=1e-3, samples=1000))
    stencil = mf.force_norm_invariant(
        mf.spinning_pair_history(params, dt=1e-3, samples=1000,
                                 closed_form_derivatives=False))
    ok = (abs(closed.mean - 32.0) < 1e-6 and closed.drift < 1e-6
          and stencil.drift < 1e-4)
    _criterion(9, "squared force norms sum to the constant 32", ok,
               f"mean {closed.mean.real:.12g}, drift closed {closed.drift:.3e} < 1e-6, "
               f"stencil {stencil.drift:.3e} < 1e-4")


def test_criterion_10_energy_splitting_cancellations():
    # constant momenta: the splitting term vanishes identically
    ts = 1e-3 * np.arange(200)
    const = mf.MomentumHistory(ts, np.tile([1.0 + 2j, 0.5j], (200, 1)),
                               np.tile([2.0, 1.0 - 1j], (200, 1)))
    exact_zero = mf.delta_e(const).max_abs == 0.0

    # constant component product: the splitting term cancels
    p1 = np.stack([1.5 * np.exp(2j * ts), 0.8 * np.exp(1j * ts)], axis=1)
    p2 = np.stack([0.9 * np.exp(-2j * ts), 1.1 * np.exp(-1j * ts)], axis=1)
    product_zero = mf.delta_e(mf.MomentumHistory(ts, p1, p2)).max_abs

    # opposite-orientation rotation momenta cancel in matrix form
    times = np.linspace(0.0, 2.0, 50)
    matrix = mf.matrix_delta_e(
        mf.RotationMomentum((1.0, 2.0, 0.5), rate=1.3, orientation=+1),
        mf.RotationMomentum((0.7, 1.1, 2.2), rate=1.3, orientation=-1), times)
    identity_worst = max(
        float(np.max(np.abs(mf.rotation_matrix(1.3 * t) @ mf.rotation_matrix(-1.3 * t)
                            - np.eye(2)))) for t in times)

    ok = (exact_zero and product_zero < 1e-10 and matrix.max_abs < 1e-12
          and identity_worst < 1e-12)
    _criterion(10, "energy-splitting term cancels in all three regimes", ok,
               f"constant: exact 0 = {exact_zero}, product-bound {product_zero:.3e} "
               f"< 1e-10, matrix norm {matrix.max_abs:.3e} < 1e-12, "
               f"paired-rotation identity {identity_worst:.3e} < 1e-12")


def test_criterion_11_grid_oracle_cross_validation():
    grid = mf.Grid1D(-8.0, 8.0, 2000)
    pairs = mf.solve_schrodinger_1d(POT, grid, 2)
    e1_err = abs(pairs[1].energy - 1.5)

    grid_field = mf.field_from_grid(pairs[1], grid)
    xs = np.array([-3.0, -2.0, -0.6, 0.6, 2.0, 3.0])  # all >= 5 spacings off nodes
    closed = FIELD.value(xs.astype(complex))
    field_err = float(np.max(np.abs(grid_field.value(xs) - closed)
                             / (1.0 + np.abs(closed))))

    anharmonic = mf.polynomial_potential([0.0, 0.0, 0.5, 0.0, 0.1])
    ground = mf.solve_schrodinger_1d(anharmonic, grid, 1)[0]
    report = mf.energy_constancy_scan(mf.field_from_grid(ground, grid), anharmonic,
                                      (-2.0, 2.0), samples=400, tol=1e-4)

    ok = e1_err < 1e-4 and field_err < 1e-3 and report.passed
    _criterion(11, "finite-difference oracle confirms closed forms", ok,
               f"E1 error {e1_err:.3e} < 1e-4, field mismatch {field_err:.3e} < 1e-3, "
               f"anharmonic scan deviation {report.max_deviation:.3e} < 1e-4")


def test_criterion_12_ensemble_determinism_and_budget():
    spec = mf.EnsembleSpec(
        count=10_000, region=(0.8, 1.2), distribution=mf.uniform_distribution(),
        seed=mf.SeedSpec(20260809),
        integrator=mf.IntegratorConfig(t_end=5.0, dt=1e-3))
    start = time.perf_counter()
    first = mf.evolve_ensemble(FIELD, POT, spec)
    wall = time.perf_counter() - start
    second = mf.evolve_ensemble(FIELD, POT, spec)

    edges = np.linspace(0.75, 1.25, 41)
    h1 = mf.density_histogram(first, 5.0, edges)
    h2 = mf.density_histogram(second, 5.0, edges)
    identical = bool(np.array_equal(h1.counts, h2.counts))

    comparison = mf.compare_density_to_born(h1, lambda x: x * np.exp(-x * x / 2.0))
    metrics_ok = (0.0 <= comparison.l1_distance <= 2.0
                  and 0.0 <= comparison.js_divergence <= math.log(2.0))

    ok = identical and wall < 10.0 and metrics_ok
    _criterion(12, "seeded ensembles are reproducible and fast", ok,
               f"identical histograms = {identical}, wall {wall:.2f} s < 10 s, "
               f"Born metrics reported: L1 {comparison.l1_distance:.4f}, "
               f"JS {comparison.js_divergence:.5f} (no threshold)")
