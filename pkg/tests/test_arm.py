import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import smooth_rest_trajectory
from synergies.arm import (
    ActuationSignal,
    ArmModel,
    JointState,
    Trajectory,
    _rnea,
    central_acceleration,
    central_velocity,
    forward_dynamics,
    forward_kinematics,
    integrate,
    inverse_dynamics,
    inverse_kinematics,
    jacobian,
    wrap_angle,
    workspace_boundary,
)
from synergies.errors import DimensionError, DivergenceError, ReachabilityError
from synergies.exploration import min_jerk_profile

angles = st.floats(-np.pi, np.pi, allow_nan=False)


# -- model ------------------------------------------------------------------------

def test_invalid_lengths_rejected():
    with pytest.raises(ValueError):
        ArmModel(link_lengths=(1.0, 0.0))


def test_fingerprint_tracks_parameters():
    a, b = ArmModel(), ArmModel(joint_damping=(0.2, 0.1))
    assert a.fingerprint() == ArmModel().fingerprint()
    assert a.fingerprint() != b.fingerprint()
    assert ArmModel.from_dict(b.to_dict()) == b


def test_mass_matrix_spd_at_random_postures(model):
    q = np.random.default_rng(0).uniform(-np.pi, np.pi, (1000, 2))
    M = model.mass_matrix(q)
    np.testing.assert_array_equal(M, np.swapaxes(M, -1, -2))
    assert np.linalg.eigvalsh(M).min() > 0


def test_stretched_posture_mass_matrix_oracle(model):
    m1, m2 = model.link_masses
    l1, _ = model.link_lengths
    c1, c2 = model.link_com_offsets
    i1, i2 = model.link_inertias
    u = model.torque(np.zeros(2), np.zeros(2), np.array([1.0, 0.0]))
    expected = [
        i1 + i2 + m1 * c1**2 + m2 * (l1**2 + c2**2 + 2 * l1 * c2),
        i2 + m2 * (c2**2 + l1 * c2),
    ]
    np.testing.assert_allclose(u, expected, rtol=1e-14)


@given(st.lists(angles, min_size=6, max_size=6), st.floats(0, 9.81))
def test_closed_form_matches_recursive(values, g):
    model = ArmModel(gravity=g)
    q, qd, qdd = np.reshape(values, (3, 2))
    closed = model.torque(q, qd, qdd)
    recursive = _rnea(model, q[None], qd[None], qdd[None], g)[0] + np.asarray(model.joint_damping) * qd
    np.testing.assert_allclose(closed, recursive, atol=1e-12)


def test_three_link_model_dynamics_are_consistent():
    model = ArmModel(link_lengths=(0.3, 0.3, 0.2), link_masses=(2, 1.5, 1), link_com_offsets=(0.15, 0.15, 0.1),
                     link_inertias=(0.02, 0.02, 0.01), joint_damping=(0.1, 0.1, 0.1))
    rng = np.random.default_rng(1)
    q, qd, qdd = rng.normal(size=(3, 3))
    u = model.torque(q, qd, qdd)
    np.testing.assert_allclose(model.acceleration(q, qd, u), qdd, atol=1e-10)


def test_acceleration_inverts_torque(model):
    rng = np.random.default_rng(2)
    q, qd, qdd = rng.normal(size=(3, 50, 2))
    np.testing.assert_allclose(model.acceleration(q, qd, model.torque(q, qd, qdd)), qdd, atol=1e-10)


# -- kinematics -------------------------------------------------------------------

def test_forward_kinematics_examples(model):
    l1, l2 = model.link_lengths
    np.testing.assert_allclose(forward_kinematics(model, [0, 0]), [l1 + l2, 0])
    np.testing.assert_allclose(forward_kinematics(model, [np.pi / 2, 0]), [0, l1 + l2], atol=1e-15)
    np.testing.assert_allclose(forward_kinematics(model, [np.pi / 2, -np.pi / 2]), [0.33, 0.30], atol=1e-15)


def test_inverse_kinematics_examples(model):
    for branch in ("elbow_down", "elbow_up"):
        np.testing.assert_allclose(inverse_kinematics(model, [0.63, 0.0], branch), [0, 0], atol=1e-7)
    np.testing.assert_allclose(inverse_kinematics(model, [0.33, 0.30], "elbow_down"),
                               [np.pi / 2, -np.pi / 2], atol=1e-12)


def test_inverse_kinematics_roundtrip_100_points(model):
    r_min, r_max = workspace_boundary(model)
    rng = np.random.default_rng(3)
    r = np.sqrt(rng.uniform(r_min**2, r_max**2, 100)) * (1 - 1e-9)
    a = rng.uniform(0, 2 * np.pi, 100)
    p = np.stack([r * np.cos(a), r * np.sin(a)], -1)
    for branch in ("elbow_down", "elbow_up"):
        q = inverse_kinematics(model, p, branch)
        assert np.abs(forward_kinematics(model, q) - p).max() <= 1e-12
        assert np.all(q[:, 1] <= 0) if branch == "elbow_down" else np.all(q[:, 1] >= 0)


def test_unreachable_point_reports_deficit(model):
    with pytest.raises(ReachabilityError) as exc:
        inverse_kinematics(model, [0.7, 0.0])
    assert exc.value.deficit == pytest.approx(0.07)
    with pytest.raises(ReachabilityError):
        inverse_kinematics(model, [0.01, 0.0])


def test_workspace_boundary_examples(model):
    assert workspace_boundary(model) == pytest.approx((0.03, 0.63))
    half = ArmModel(link_lengths=(0.5, 0.5), link_com_offsets=(0.25, 0.25))
    assert workspace_boundary(half) == pytest.approx((0.0, 1.0))


@given(st.lists(angles, min_size=2, max_size=2))
def test_jacobian_matches_finite_difference(q):
    model = ArmModel()
    q = np.array(q)
    h = 1e-6
    fd = np.stack([(forward_kinematics(model, q + h * e) - forward_kinematics(model, q - h * e)) / (2 * h)
                   for e in np.eye(2)], -1)
    np.testing.assert_allclose(jacobian(model, q), fd, atol=1e-8)


def test_wrap_angle_range():
    x = np.array([np.pi, -np.pi, 3 * np.pi, 2 * np.pi, 0.1 - 4 * np.pi])
    w = wrap_angle(x)
    assert np.all((w > -np.pi) & (w <= np.pi))
    np.testing.assert_allclose(w, [np.pi, np.pi, np.pi, 0, 0.1], atol=1e-12)


# -- sampled derivatives -----------------------------------------------------------

def test_central_differences_exact_on_quadratics():
    t = np.linspace(0, 1, 11)[:, None]
    x = 3 * t**2 - t + 2
    np.testing.assert_allclose(central_velocity(x, 0.1), 6 * t - 1, atol=1e-12)
    np.testing.assert_allclose(central_acceleration(x, 0.1), np.full_like(t, 6.0), atol=1e-9)


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory(0.1, np.zeros((1, 2)))
    with pytest.raises(ValueError):
        Trajectory(-0.1, np.zeros((5, 2)))
    tr = Trajectory(0.1, np.zeros((11, 2)))
    assert tr.duration == pytest.approx(1.0)


def test_stored_derivatives_agree_with_recomputation(random_archive):
    """Integrator derivatives and finite differences of the samples agree to O(dt^2)."""
    tr = random_archive.response(0)
    fd = Trajectory(tr.dt, tr.q).with_derivatives()
    scale = np.abs(tr.qdot).max()
    assert np.abs(fd.qdot - tr.qdot).max() <= 1e-2 * scale


# -- inverse / forward dynamics ---------------------------------------------------

def test_constant_trajectory_needs_no_torque(model):
    u = inverse_dynamics(model, Trajectory(5e-3, np.tile([0.4, -1.2], (201, 1))))
    np.testing.assert_array_equal(u.u, 0.0)


def test_inverse_dynamics_dimension_mismatch(model):
    with pytest.raises(DimensionError):
        inverse_dynamics(model, Trajectory(5e-3, np.zeros((10, 3))))


def test_zero_torque_is_equilibrium(model):
    tr = forward_dynamics(model, ActuationSignal(5e-3, np.zeros((201, 2))), JointState([1.0, -2.0]))
    np.testing.assert_array_equal(tr.q, np.tile([1.0, -2.0], (201, 1)))


def test_inverse_dynamics_recovers_exploration_signals(model, random_archive):
    """Torques rebuilt from finite differences of sampled responses stay near the originals."""
    for i in range(0, len(random_archive), 10):
        u = inverse_dynamics(model, Trajectory(random_archive.dt, random_archive.q[i]))
        assert np.abs(u.u - random_archive.signals[i]).max() <= 1e-1
        exact = inverse_dynamics(model, random_archive.response(i))
        assert np.abs(exact.u - random_archive.signals[i]).max() <= 1e-3


def _reach(q0, delta, amp, freq, t):
    """Rest-to-rest joint move: minimum-jerk displacement plus raised-cosine excursions."""
    s, ds, dds = min_jerk_profile(t / t[-1])
    q, qd, qdd = smooth_rest_trajectory(q0, amp, freq, t)
    return (q + np.outer(s, delta), qd + np.outer(ds / t[-1], delta), qdd + np.outer(dds / t[-1] ** 2, delta))


def _roundtrip_error(model, args, dt, T=1.0):
    t = np.arange(int(round(T / dt)) + 1) * dt
    q, qd, qdd = _reach(*args, t)
    u = inverse_dynamics(model, Trajectory(dt, q, qd, qdd))
    out = forward_dynamics(model, u, JointState(q[0]))
    return np.abs(out.q[-1] - q[-1]).max()


def _random_smooth(rng, max_freq=1):
    q0 = rng.uniform(-np.pi, np.pi, 2)
    return q0, rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), rng.integers(1, max_freq + 1, 2) / 1.0


def test_roundtrip_20_random_trajectories(model):
    rng = np.random.default_rng(4)
    errs = [_roundtrip_error(model, _random_smooth(rng), 5e-3) for _ in range(20)]
    assert max(errs) <= 1e-6


def test_roundtrip_convergence_order(model):
    rng = np.random.default_rng(5)
    for _ in range(5):
        args = _random_smooth(rng, max_freq=2)
        e1 = _roundtrip_error(model, args, 1e-2)
        e2 = _roundtrip_error(model, args, 5e-3)
        assert np.log2(e1 / e2) >= 2


def test_energy_conserved_without_damping():
    model = ArmModel(joint_damping=(0.0, 0.0))
    init = JointState([0.3, -1.0], [2.0, -3.0])
    tr = forward_dynamics(model, ActuationSignal(5e-3, np.zeros((201, 2))), init)
    ke = model.kinetic_energy(tr.q, tr.qdot)
    assert np.abs(ke / ke[0] - 1).max() <= 1e-6


def test_passivity_with_damping(model):
    init = JointState([0.3, -1.0], [2.0, -3.0])
    tr = forward_dynamics(model, ActuationSignal(5e-3, np.zeros((201, 2))), init)
    ke = model.kinetic_energy(tr.q, tr.qdot)
    assert np.all(np.diff(ke) <= 0)


def test_forward_dynamics_is_deterministic(model, random_archive):
    u = random_archive.signal(3)
    a = forward_dynamics(model, u, JointState([1.0, -2.0]))
    b = forward_dynamics(model, u, JointState([1.0, -2.0]))
    assert np.array_equal(a.q, b.q) and np.array_equal(a.qdot, b.qdot)


def test_batched_integration_matches_single(model, random_archive):
    q, *_ = integrate(model, random_archive.signals[:7], 5e-3, [1.0, -2.0], [0.0, 0.0])
    single, *_ = integrate(model, random_archive.signals[4:5], 5e-3, [1.0, -2.0], [0.0, 0.0])
    assert np.array_equal(q[4], single[0])


def test_divergence_names_the_failing_step():
    model = ArmModel(joint_damping=(0.0, 0.0))
    u = np.zeros((201, 2))
    u[50:] = 1e200
    with pytest.raises(DivergenceError) as exc:
        forward_dynamics(model, ActuationSignal(5e-3, u), JointState([1.0, -2.0]))
    assert 45 <= exc.value.step <= 60


def test_non_finite_actuation_rejected(model):
    u = np.zeros((11, 2))
    u[3, 0] = np.nan
    with pytest.raises(ValueError):
        forward_dynamics(model, ActuationSignal(0.1, u), JointState([0.0, 0.0]))
