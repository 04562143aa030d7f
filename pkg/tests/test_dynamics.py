import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from evomomentum import (
    BetaSingularity,
    DynamicsConfig,
    MomentumState,
    NearZeroMeanFitness,
    SimplexPoint,
    StateLeftSimplex,
    Status,
    continuous_integrate,
    euclidean_gd_step,
    iterate,
    kl_divergence,
    make_cyclic_matrix,
    make_field,
    nesterov_step,
    polyak_step,
    projection_field,
    replicator_field,
)
from evomomentum.dynamics import rk4_step, momentum_replicator_rhs

X = (0.6, 0.2, 0.2)
X0 = (0.8, 0.15, 0.05)


class TestReplicatorField:
    def test_rps_example_matches_oracle(self, rps):
        expected = oracles.to_float(oracles.replicator(rps.matrix, X))
        np.testing.assert_allclose(expected, [0.0, -0.08, 0.08], atol=1e-15)
        np.testing.assert_allclose(replicator_field(rps, X), expected, atol=1e-15)

    @pytest.mark.parametrize("a", [-2.0, 0.5, 1.0, 3.0])
    def test_barycenter_is_stationary(self, a, center):
        np.testing.assert_allclose(replicator_field(make_cyclic_matrix(a, a), center), 0.0, atol=1e-15)

    def test_normalize_on_zero_sum_raises(self, rps):
        with pytest.raises(NearZeroMeanFitness):
            replicator_field(rps, X, normalize=True)

    def test_normalized_divides_by_mean(self, cyc21):
        raw = replicator_field(cyc21, X)
        mean = np.asarray(X) @ cyc21.matrix @ np.asarray(X)
        np.testing.assert_allclose(replicator_field(cyc21, X, normalize=True), raw / mean, rtol=1e-15)

    def test_tangent(self, cyc21):
        rng = np.random.default_rng(3)
        for p in rng.dirichlet(np.ones(3), 200):
            assert abs(replicator_field(cyc21, p).sum()) <= 1e-12
            assert abs(replicator_field(cyc21, p, normalize=True).sum()) <= 1e-12


class TestProjectionField:
    def test_hawk_dove_example(self, hawk_dove):
        expected = oracles.to_float(oracles.projection(hawk_dove.matrix, X))
        np.testing.assert_allclose(expected, [1 / 3 - 0.6, 1 / 3 - 0.2, 1 / 3 - 0.2], atol=1e-15)
        np.testing.assert_allclose(projection_field(hawk_dove, X), [-0.266667, 0.133333, 0.133333], atol=1e-6)
        np.testing.assert_allclose(projection_field(hawk_dove, X), expected, atol=1e-15)

    def test_constant_fitness_gives_zero(self):
        L = make_cyclic_matrix(0.7, 0.7)
        np.testing.assert_allclose(projection_field(L, SimplexPoint.barycenter(3)), 0.0, atol=1e-15)
        np.testing.assert_allclose(projection_field(make_cyclic_matrix(0, 0), X), 0.0)

    def test_rps_example(self, rps):
        np.testing.assert_allclose(projection_field(rps, X), [0.0, -0.4, 0.4], atol=1e-15)

    def test_normalize_on_zero_average_raises(self, rps):
        with pytest.raises(NearZeroMeanFitness):
            projection_field(rps, X, normalize=True)


class TestEuclideanStep:
    def test_zero_field(self):
        x = np.array(X)
        np.testing.assert_array_equal(euclidean_gd_step(lambda v: np.zeros(3), x, 0.3), x)

    def test_constant_field(self):
        out = euclidean_gd_step(lambda v: np.array([1.0, -1.0, 0.0]), (0.5, 0.3, 0.2), 0.1)
        np.testing.assert_allclose(out, [0.6, 0.2, 0.2], atol=1e-15)

    def test_composed_with_projection(self, hawk_dove):
        out = euclidean_gd_step(make_field("projection", hawk_dove), np.array(X), 0.01)
        np.testing.assert_allclose(out, [0.597333, 0.201333, 0.201333], atol=1e-6)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            euclidean_gd_step(lambda v: v, X, 0.0)


class TestPolyakStep:
    def test_beta_zero_matches_gradient_step(self, cyc21):
        field = make_field("replicator", cyc21)
        x = np.array(X0)
        x1, z1 = polyak_step(field, x, MomentumState.zeros(3), 0.01, 0.0)
        np.testing.assert_array_equal(x1.coords, euclidean_gd_step(field, x, 0.01))
        np.testing.assert_array_equal(z1.z, field(x))

    def test_rps_first_and_second_step(self, rps):
        field = make_field("replicator", rps)
        x1, z1 = polyak_step(field, X, MomentumState.zeros(3), 1 / 200, 0.65)
        np.testing.assert_allclose(x1.coords, [0.6, 0.1996, 0.2004], atol=1e-15)
        np.testing.assert_allclose(z1.z, [0.0, -0.08, 0.08], atol=1e-15)

        x2, z2 = polyak_step(field, x1, z1, 1 / 200, 0.65)
        oracle_z = [0.65 * a + float(b) for a, b in zip(z1.z, oracles.replicator(rps.matrix, x1.coords))]
        np.testing.assert_allclose(z2.z, oracle_z, atol=1e-15)
        assert abs(z2.z.sum()) <= 1e-15

    def test_negative_coordinate_is_reported(self):
        field = lambda v: np.array([-1.0, 0.5, 0.5])  # noqa: E731
        with pytest.raises(StateLeftSimplex) as info:
            polyak_step(field, (0.1, 0.45, 0.45), np.zeros(3), 0.5, 0.0)
        assert info.value.state[0] < 0


class TestNesterovStep:
    def test_beta_zero_matches_polyak(self, cyc21):
        field = make_field("replicator", cyc21)
        z = MomentumState([0.01, -0.02, 0.01])
        a = nesterov_step(field, X0, z, 0.01, 0.0)
        b = polyak_step(field, X0, z, 0.01, 0.0)
        np.testing.assert_array_equal(a[0].coords, b[0].coords)
        np.testing.assert_array_equal(a[1].z, b[1].z)

    @pytest.mark.parametrize("beta", [0.2, 0.65, 0.99])
    def test_zero_velocity_matches_polyak(self, cyc21, beta):
        field = make_field("replicator", cyc21)
        a = nesterov_step(field, X0, MomentumState.zeros(3), 0.01, beta)
        b = polyak_step(field, X0, MomentumState.zeros(3), 0.01, beta)
        np.testing.assert_array_equal(a[0].coords, b[0].coords)

    def test_look_ahead_example(self, rps):
        z = np.array([0.0, -0.08, 0.08])
        look = np.array(X) + 0.65 * z
        np.testing.assert_allclose(look, [0.6, 0.148, 0.252], atol=1e-15)
        F = oracles.to_float(oracles.replicator(rps.matrix, [0.6, 0.148, 0.252]))
        expected_z = 0.65 * z + np.array(F)
        x1, z1 = nesterov_step(make_field("replicator", rps), X, z, 1 / 200, 0.65)
        np.testing.assert_allclose(z1.z, expected_z, atol=1e-15)
        np.testing.assert_allclose(x1.coords, np.array(X) + expected_z / 200, atol=1e-15)


def manual_run(step, field, x0, alpha, beta, n):
    x, z = SimplexPoint(x0), MomentumState.zeros(3)
    states, zs = [x.coords], [z.z]
    for _ in range(n):
        x, z = step(field, x, z, alpha, beta)
        states.append(x.coords)
        zs.append(z.z)
    return np.array(states), np.array(zs)


class TestIterate:
    def test_polyak_converges_monotonically(self, cyc21, center):
        cfg = DynamicsConfig(momentum="polyak", learning_rate=1 / 200, beta=0.3)
        traj = iterate(cfg, cyc21, X0, center)
        assert traj.status is Status.CONVERGED
        assert np.all(np.diff(traj.kl) <= 0.0)
        assert traj.kl[-1] < cfg.convergence_epsilon

    def test_divergence_and_recovery(self, cyc2m1, center):
        cfg = DynamicsConfig(momentum="polyak", learning_rate=0.01, beta=0.9)
        bad = iterate(cfg, cyc2m1, X0, center)
        assert bad.status is Status.DIVERGED
        assert np.any(bad.final_state <= cfg.boundary_delta)
        good = iterate(dataclasses.replace(cfg, learning_rate=0.001), cyc2m1, X0, center)
        assert good.status is Status.CONVERGED

    def test_start_at_ess(self, hawk_dove, center):
        for m in ("none", "polyak", "nesterov"):
            traj = iterate(DynamicsConfig(momentum=m, beta=0.5), hawk_dove, center, center)
            assert traj.status is Status.CONVERGED
            assert traj.final_step == 0 and len(traj) == 1

    def test_time_is_step_times_alpha(self, cyc21, center):
        traj = iterate(DynamicsConfig(learning_rate=0.02, beta=0.4), cyc21, X0, center)
        assert np.all(np.diff(traj.steps) > 0) and traj.steps[0] == 0
        np.testing.assert_array_equal(traj.times, traj.steps * 0.02)

    def test_without_reference_runs_to_cap(self, cyc21):
        traj = iterate(DynamicsConfig(max_steps=50), cyc21, X0)
        assert traj.status is Status.MAX_STEPS_REACHED
        assert len(traj) == 51
        assert np.all(np.isnan(traj.kl))

    def test_record_every_keeps_endpoints(self, cyc21, center):
        full = iterate(DynamicsConfig(learning_rate=0.01, beta=0.3), cyc21, X0, center)
        thin = iterate(DynamicsConfig(learning_rate=0.01, beta=0.3), cyc21, X0, center, record_every=100)
        assert thin.steps[0] == 0 and thin.final_step == full.final_step
        np.testing.assert_array_equal(thin.final_state, full.final_state)
        assert set(thin.steps[1:-1] % 100) == {0}

    def test_rejects_boundary_start(self, cyc21):
        with pytest.raises(ValueError):
            iterate(DynamicsConfig(), cyc21, (1.0, 0.0, 0.0))

    def test_zero_sum_normalized_propagates(self, rps):
        with pytest.raises(NearZeroMeanFitness):
            iterate(DynamicsConfig(normalize_by_mean=True, max_steps=10), rps, X0)

    def test_matches_public_steppers_bitwise(self, cyc21):
        field = make_field("replicator", cyc21)
        for kind, step in (("polyak", polyak_step), ("nesterov", nesterov_step)):
            states, _ = manual_run(step, field, X0, 0.01, 0.6, 300)
            traj = iterate(DynamicsConfig(momentum=kind, learning_rate=0.01, beta=0.6, max_steps=300), cyc21, X0)
            np.testing.assert_array_equal(traj.states, states)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DynamicsConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            DynamicsConfig(max_steps=0)
        with pytest.raises(ValueError):
            DynamicsConfig(convergence_epsilon=0.0)
        with pytest.raises(ValueError):
            DynamicsConfig(momentum="adam")


class TestInvariants:
    @pytest.mark.parametrize("dynamic", ["replicator", "projection"])
    @pytest.mark.parametrize("momentum", ["none", "polyak", "nesterov"])
    def test_simplex_sum_preserved(self, cyc21, center, dynamic, momentum):
        cfg = DynamicsConfig(dynamic=dynamic, momentum=momentum, learning_rate=0.005, beta=0.7)
        traj = iterate(cfg, cyc21, X0, center)
        assert np.all(np.abs(traj.states.sum(axis=1) - 1.0) <= 1e-9)

    @pytest.mark.parametrize("step", [polyak_step, nesterov_step])
    @pytest.mark.parametrize("dynamic", ["replicator", "projection"])
    def test_momentum_stays_tangent(self, cyc21, step, dynamic):
        _, zs = manual_run(step, make_field(dynamic, cyc21), X0, 0.005, 0.8, 2000)
        assert np.all(np.abs(zs.sum(axis=1)) <= 1e-9)

    @pytest.mark.parametrize("dynamic", ["replicator", "projection"])
    def test_beta_zero_steppers_bit_identical(self, cyc21, dynamic):
        runs = [
            iterate(DynamicsConfig(dynamic=dynamic, momentum=m, learning_rate=0.01, beta=0.0, max_steps=3000), cyc21, X0)
            for m in ("none", "polyak", "nesterov")
        ]
        for other in runs[1:]:
            np.testing.assert_array_equal(runs[0].states, other.states)
        # and the raw gradient step, iterated by hand
        field = make_field(dynamic, cyc21)
        x = np.array(X0)
        for k in range(1, 3001):
            x = euclidean_gd_step(field, x, 0.01)
            assert np.array_equal(x, runs[0].states[k])

    @pytest.mark.parametrize("a,b", [(1, -1), (2, 1), (2, -1), (1, 1)])
    @pytest.mark.parametrize("momentum", ["none", "polyak", "nesterov"])
    def test_barycenter_fixed_point(self, a, b, momentum, center):
        L = make_cyclic_matrix(a, b)
        for dynamic in ("replicator", "projection"):
            cfg = DynamicsConfig(dynamic=dynamic, momentum=momentum, beta=0.9, max_steps=200)
            traj = iterate(cfg, L, center)
            np.testing.assert_allclose(traj.states, np.tile(center.coords, (201, 1)), atol=1e-15)
            np.testing.assert_allclose(traj.meta["final_momentum"], 0.0, atol=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.5, 3.0), st.floats(-1.0, 3.0), st.floats(0.0, 0.9),
           st.sampled_from(["polyak", "nesterov"]))
    def test_trajectory_status_invariants(self, a, b, beta, momentum):
        L = make_cyclic_matrix(a, b)
        center = SimplexPoint.barycenter(3)
        cfg = DynamicsConfig(momentum=momentum, learning_rate=0.01, beta=beta, max_steps=3000)
        traj = iterate(cfg, L, X0, center)
        if traj.status is Status.CONVERGED:
            assert traj.kl[-1] < cfg.convergence_epsilon
        elif traj.status is Status.DIVERGED:
            assert np.any(traj.final_state <= cfg.boundary_delta)
        else:
            assert traj.final_step == cfg.max_steps


class TestContinuous:
    def test_rps_orbit_is_closed_in_kl(self, rps, center):
        traj = continuous_integrate(rps, X, 0.0, 50.0, 0.01, reference=center)
        assert traj.status is Status.MAX_STEPS_REACHED
        assert traj.times[-1] == pytest.approx(50.0)
        assert abs(traj.kl[-1] - traj.kl[0]) <= 1e-6

    def test_time_reparameterization(self, cyc21):
        T = 10.0
        fast = continuous_integrate(cyc21, X0, 0.5, T, 0.01)
        slow = continuous_integrate(cyc21, X0, 0.0, 2 * T, 0.01)
        np.testing.assert_allclose(fast.final_state, slow.final_state, atol=1e-6)

    def test_reversed_direction_above_one(self, cyc21, center):
        x_start = (0.4, 0.35, 0.25)
        traj = continuous_integrate(cyc21, x_start, 1.5, 2.0, 0.01, reference=center)
        assert np.all(np.diff(traj.kl) > 0)

    def test_singular_beta(self, cyc21):
        with pytest.raises(BetaSingularity):
            continuous_integrate(cyc21, X0, 1.0, 1.0, 0.01)

    def test_step_larger_than_horizon(self, cyc21):
        with pytest.raises(ValueError):
            continuous_integrate(cyc21, X0, 0.0, 0.01, 0.1)

    def test_sum_correction_is_tiny(self, cyc21):
        rhs = momentum_replicator_rhs(cyc21, 0.3)
        x = np.array(X0)
        for _ in range(500):
            x = rk4_step(rhs, x, 0.01)
            assert abs(x.sum() - 1.0) < 1e-9
            x = x / x.sum()

    def test_rk4_fourth_order(self, cyc21):
        T, h = 4.0, 0.2
        ref = continuous_integrate(cyc21, X0, 0.0, T, h / 4).final_state
        err_h = np.max(np.abs(continuous_integrate(cyc21, X0, 0.0, T, h).final_state - ref))
        err_h2 = np.max(np.abs(continuous_integrate(cyc21, X0, 0.0, T, h / 2).final_state - ref))
        assert err_h / err_h2 >= 8.0

    def test_kl_barycenter_orbit_start(self, rps, center):
        traj = continuous_integrate(rps, X, 0.0, 1.0, 0.01, reference=center)
        assert traj.kl[0] == pytest.approx(kl_divergence(center, X))
