import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinbus import pulse


def test_envelope_endpoints_and_top():
    Tg, t_r = 20.0, 1.0
    assert pulse.envelope(0.0, Tg, t_r) == pytest.approx(0.0, abs=1e-15)
    assert pulse.envelope(Tg, Tg, t_r) == pytest.approx(0.0, abs=1e-15)
    t_flat = np.linspace(t_r, Tg - t_r, 50)
    assert np.all(pulse.envelope(t_flat, Tg, t_r) == 1.0)


def test_envelope_symmetry():
    Tg = 13.0
    t = np.linspace(0.0, Tg, 301)
    g = pulse.envelope(t, Tg)
    assert np.allclose(g, g[::-1], atol=1e-12)


def test_envelope_ramp_profile():
    # ramp is a floored Gaussian with sigma = t_r/4, normalized to reach 1
    t_r = 1.0
    sigma = t_r / 4.0
    floor = math.exp(-t_r ** 2 / (2 * sigma ** 2))
    u = 0.3
    expected = (math.exp(-(u - t_r) ** 2 / (2 * sigma ** 2)) - floor) / (1 - floor)
    assert pulse.envelope(u, 20.0, t_r) == pytest.approx(expected, rel=1e-12)


def test_envelope_ramp_area_deficit():
    # each ramp loses a fixed area relative to a flat top; this deficit is
    # what makes the closed-form pi-pulse amplitude slightly too small
    t_r = 1.0
    t = np.linspace(0.0, t_r, 20001)
    deficit = t_r - np.trapezoid(pulse.envelope(t, 20.0, t_r), t)
    assert deficit == pytest.approx(0.687, abs=0.001)


def test_envelope_rejects_out_of_range():
    with pytest.raises(ValueError):
        pulse.envelope(-0.5, 10.0)
    with pytest.raises(ValueError):
        pulse.envelope(10.5, 10.0)


def test_trajectory_spec_validation():
    with pytest.raises(ValueError):
        pulse.TrajectorySpec(x0=-1.0, omega=0.56, Tg=10.0)
    with pytest.raises(ValueError):
        pulse.TrajectorySpec(x0=1.0, omega=0.0, Tg=10.0)
    with pytest.raises(ValueError):
        pulse.TrajectorySpec(x0=1.0, omega=0.56, Tg=1.5, t_r=1.0)


def test_knot_count_and_times():
    assert pulse.knot_count(10.0) == 100
    assert pulse.knot_count(17.86, 10.0) == 179
    cv = pulse.ControlVector(knots=np.zeros(100), Tg=10.0)
    assert cv.times[0] == 0.0
    assert cv.times[-1] == 10.0
    assert np.allclose(np.diff(cv.times), cv.times[1] - cv.times[0])


def test_control_vector_validation():
    with pytest.raises(ValueError):
        pulse.ControlVector(knots=np.zeros(99), Tg=10.0)
    with pytest.raises(ValueError):
        pulse.ControlVector(knots=np.full(100, 40.0), Tg=10.0)
    with pytest.raises(ValueError):
        pulse.ControlVector(knots=np.full(100, np.nan), Tg=10.0)


def test_sinusoid_controls_values():
    spec = pulse.TrajectorySpec(x0=10.0, omega=0.56, Tg=10.0)
    cv = pulse.sinusoid_controls(spec)
    t = cv.times
    g = pulse.envelope(t, spec.Tg, spec.t_r)
    expected = g * spec.x0 * np.sin(2 * math.pi * spec.omega * t)
    assert np.allclose(cv.knots, expected, atol=1e-14)
    assert cv.knots[0] == 0.0 and cv.knots[-1] == pytest.approx(0.0, abs=1e-14)


def test_upsample_midpoint_sampling():
    cv = pulse.ControlVector(knots=np.linspace(0.0, 5.0, 100), Tg=10.0)
    traj = pulse.upsample(cv, dt=2e-3)
    assert traj.n_steps == 5000
    t_mid = pulse.step_midpoints(10.0, 2e-3)
    # linear knots -> linear interpolant equals the analytic line
    assert np.allclose(traj.positions, 0.5 * t_mid, atol=1e-12)


def test_upsample_rejects_coarse_dt():
    cv = pulse.ControlVector(knots=np.zeros(100), Tg=10.0)
    with pytest.raises(ValueError):
        pulse.upsample(cv, dt=0.2)


def test_step_midpoints_cover_gate():
    t = pulse.step_midpoints(17.86, 8e-4)
    assert t.size == math.ceil(17.86 / 8e-4 - 1e-9)
    assert t[0] == pytest.approx(4e-4)
    assert t[-1] < 17.86


@given(Tg=st.floats(3.0, 60.0), dt=st.sampled_from([8e-4, 1e-3, 2e-3]))
@settings(max_examples=30, deadline=None)
def test_step_count_matches_gate_time(Tg, dt):
    n = pulse.step_midpoints(Tg, dt).size
    assert n * dt >= Tg - 1e-9
    assert (n - 1) * dt < Tg


def test_save_load_roundtrip(tmp_path):
    spec = pulse.TrajectorySpec(x0=7.5, omega=0.56, Tg=12.0)
    cv = pulse.sinusoid_controls(spec)
    path = tmp_path / "pulse.json"
    pulse.save_pulse(cv, path)
    back = pulse.load_pulse(path)
    assert np.array_equal(back.knots, cv.knots)
    assert back.Tg == cv.Tg
    assert back.knot_rate == cv.knot_rate
