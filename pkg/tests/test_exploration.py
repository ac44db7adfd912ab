import logging

import numpy as np
import pytest

from synergies import exploration as ex
from synergies.arm import end_effector_velocity, forward_kinematics, workspace_boundary
from synergies.exploration import (
    ExplorationConfig,
    endpoint_window,
    generate_lowpass_random_actuations,
    generate_min_jerk_actuations,
    min_jerk_profile,
    run_exploration,
    stroke_is_admissible,
    verify_archive,
)


def test_min_jerk_profile_boundary_conditions():
    s, ds, dds = min_jerk_profile(np.array([0.0, 0.5, 1.0]))
    np.testing.assert_allclose(s, [0, 0.5, 1])
    np.testing.assert_allclose(ds[[0, 2]], 0)
    np.testing.assert_allclose(dds[[0, 2]], 0)


def test_min_jerk_profile_derivatives_match_differences():
    tau = np.linspace(0, 1, 2001)
    s, ds, dds = min_jerk_profile(tau)
    np.testing.assert_allclose(np.gradient(s, tau, edge_order=2), ds, atol=1e-5)
    np.testing.assert_allclose(np.gradient(ds, tau, edge_order=2), dds, atol=1e-4)


def test_endpoint_windows():
    w = endpoint_window(201, "both")
    assert w[0] == w[-1] == 0 and w[100] == pytest.approx(1)
    assert endpoint_window(201, "start")[0] == 0
    np.testing.assert_array_equal(endpoint_window(5, "none"), 1)
    with pytest.raises(ValueError):
        endpoint_window(5, "hann")


def test_config_guards():
    with pytest.raises(ValueError):
        ExplorationConfig(count=0)
    with pytest.raises(ValueError):
        ExplorationConfig(cutoff=100.0)  # Nyquist is 100 Hz at dt = 5 ms
    with pytest.raises(ValueError):
        ExplorationConfig(signal_class="sine")
    cfg = ExplorationConfig(signal_class="min_jerk", count=3, rng_seed=7)
    assert ExplorationConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.n_samples == 201


def test_stay_put_target_needs_no_torque(model):
    cfg = ExplorationConfig(signal_class="min_jerk", count=1)
    p0 = forward_kinematics(model, cfg.initial_q)
    (u,) = generate_min_jerk_actuations(model, cfg, targets=[p0])
    np.testing.assert_array_equal(u.u, 0.0)


def test_min_jerk_signals_land_on_their_targets(model, min_jerk_archive):
    assert len(min_jerk_archive) == 100
    final = forward_kinematics(model, min_jerk_archive.q[:, -1])
    miss = np.hypot(*(final - min_jerk_archive.targets).T)
    assert miss.max() <= 1e-4


def test_min_jerk_strokes_stay_inside_workspace(model, min_jerk_archive):
    p0 = forward_kinematics(model, min_jerk_archive.config.initial_q)
    assert all(stroke_is_admissible(model, p0, p, min_jerk_archive.config.path_margin)
               for p in min_jerk_archive.targets)
    r_min, r_max = workspace_boundary(model)
    r = np.hypot(*forward_kinematics(model, min_jerk_archive.q).reshape(-1, 2).T)
    assert r.min() > r_min and r.max() < r_max


def test_min_jerk_traces_are_straight(model, min_jerk_archive):
    p = forward_kinematics(model, min_jerk_archive.q)
    start, end = p[:, :1], p[:, -1:]
    d = (end - start) / np.linalg.norm(end - start, axis=-1, keepdims=True)
    rel = p - start
    off_line = np.abs(rel[..., 0] * d[..., 1] - rel[..., 1] * d[..., 0])
    assert off_line.max() <= 1e-4


def test_min_jerk_speed_is_bell_shaped(model, min_jerk_archive):
    for i in range(len(min_jerk_archive)):
        v = end_effector_velocity(model, min_jerk_archive.q[i], min_jerk_archive.qdot[i])
        speed = np.hypot(v[:, 0], v[:, 1])
        k = int(np.argmax(speed))
        assert 0 < k < len(speed) - 1
        assert speed[0] <= 1e-12 and speed[-1] <= 1e-4 * speed[k]
        assert np.all(np.diff(speed[: k + 1]) >= -1e-9) and np.all(np.diff(speed[k:]) <= 1e-9)


def test_zero_amplitude_gives_zero_signals():
    sig = generate_lowpass_random_actuations(ExplorationConfig(amplitude=0.0, count=3))
    assert all(np.all(s.u == 0) for s in sig)


def test_single_zero_signal_archive(model):
    ar = run_exploration(model, ExplorationConfig(amplitude=0.0, count=1))
    assert len(ar) == 1
    np.testing.assert_array_equal(ar.signals, 0)
    np.testing.assert_array_equal(ar.q[0], np.tile(ar.config.initial_q, (ar.q.shape[1], 1)))


def _power_above(u, dt, f, taper=None):
    x = u
    if taper is not None:
        x = x * taper[:, None]
    p = np.abs(np.fft.rfft(x, axis=0)) ** 2
    freqs = np.fft.rfftfreq(len(u), dt)
    return p[freqs > f].sum() / p.sum()


def test_spectrum_of_windowed_random_signals():
    cfg = ExplorationConfig(window="both", count=90)
    frac = [_power_above(s.u, cfg.dt, 2 * cfg.cutoff) for s in generate_lowpass_random_actuations(cfg)]
    assert np.mean(frac) <= 0.05


def test_spectrum_of_default_random_signals():
    # unwindowed signals end abruptly; a Hann analysis taper removes that leakage from the estimate
    cfg = ExplorationConfig(count=90)
    taper = np.hanning(cfg.n_samples)
    frac = [_power_above(s.u, cfg.dt, 2 * cfg.cutoff, taper) for s in generate_lowpass_random_actuations(cfg)]
    assert np.mean(frac) <= 0.05


@pytest.mark.parametrize("window", ["both", "start"])
def test_windows_zero_the_endpoints(window):
    sig = generate_lowpass_random_actuations(ExplorationConfig(window=window, count=4))
    for s in sig:
        np.testing.assert_array_equal(s.u[0], 0)
        if window == "both":
            np.testing.assert_array_equal(s.u[-1], 0)


@pytest.mark.parametrize("cls", ["min_jerk", "lowpass_random"])
def test_seed_determinism(model, cls):
    a = run_exploration(model, ExplorationConfig(signal_class=cls, count=5, rng_seed=3))
    b = run_exploration(model, ExplorationConfig(signal_class=cls, count=5, rng_seed=3))
    c = run_exploration(model, ExplorationConfig(signal_class=cls, count=5, rng_seed=4))
    assert np.array_equal(a.signals, b.signals) and np.array_equal(a.q, b.q)
    assert not np.array_equal(a.signals, c.signals)


def test_responses_start_at_rest(random_archive, min_jerk_archive):
    for ar in (random_archive, min_jerk_archive):
        np.testing.assert_array_equal(ar.q[:, 0], np.broadcast_to(ar.config.initial_q, ar.q[:, 0].shape))
        np.testing.assert_array_equal(ar.qdot[:, 0], 0)


def test_archive_reintegration_is_bit_identical(model, random_archive, min_jerk_archive):
    assert verify_archive(model, random_archive, n_check=5, seed=1)
    assert verify_archive(model, min_jerk_archive, n_check=5, seed=1)


def test_tampered_archive_fails_verification(model, random_archive):
    bad = ex.ExplorationArchive(random_archive.config, random_archive.model_fingerprint,
                                random_archive.signals, random_archive.q + 1e-15,
                                random_archive.qdot, random_archive.qddot)
    assert not verify_archive(model, bad)


def test_diverged_signals_are_regenerated(model, monkeypatch, caplog):
    real = ex.integrate
    calls = []

    def flaky(model, torques, dt, q0, qdot0):
        q, qd, qdd, ok, bad = real(model, torques, dt, q0, qdot0)
        if not calls:
            ok = ok.copy()
            bad = bad.copy()
            ok[1], bad[1] = False, 17
        calls.append(len(torques))
        return q, qd, qdd, ok, bad

    monkeypatch.setattr(ex, "integrate", flaky)
    with caplog.at_level(logging.WARNING):
        ar = run_exploration(model, ExplorationConfig(count=3, rng_seed=2))
    monkeypatch.undo()
    assert calls == [3, 1]
    assert "regenerating" in caplog.text
    assert verify_archive(model, ar)
    fresh = run_exploration(model, ExplorationConfig(count=3, rng_seed=2))
    assert np.array_equal(ar.signals[0], fresh.signals[0])
    assert not np.array_equal(ar.signals[1], fresh.signals[1])
