import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import spinbus as sb
from spinbus import model
from spinbus.errors import DegenerateValleyError
from spinbus.landscape import LandscapeProfile


def test_hamiltonian_zeeman_block(flat_zero, p_unitary):
    H = model.hamiltonian_at(0.0, flat_zero, p_unitary)
    c = p_unitary.constants
    ez = 0.5 * c.g * c.mu_B * p_unitary.B_z
    assert np.allclose(np.diag(H), [ez, -ez, ez, -ez])


def test_hamiltonian_drive_term(flat_zero, p_unitary):
    # full gradient coupling: off-diagonal g*mu_B*db_perp*x
    H = model.hamiltonian_at(10.0, flat_zero, p_unitary)
    c = p_unitary.constants
    expected = c.g * c.mu_B * 0.1 * 10.0
    assert H[0, 1] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(1.1576763612e-4, rel=1e-9)


def test_hamiltonian_valley_block(flat100, p_unitary):
    H = model.hamiltonian_at(0.0, flat100, p_unitary)
    # flat 100 ueV landscape with zero phase: Delta_real = 0.05
    assert H[0, 2] == pytest.approx(0.05, rel=1e-12)
    assert H[2, 0] == pytest.approx(0.05, rel=1e-12)


@given(x=st.floats(-40, 40), phase=st.floats(-3.1, 3.1),
       kz=st.floats(0, 1e-5))
@settings(max_examples=50, deadline=None)
def test_hamiltonian_hermitian(x, phase, kz):
    land = sb.flat_landscape(splitting=0.08, phase=phase)
    p = sb.SimParams(kappa_z=kz)
    H = model.hamiltonian_at(x, land, p)
    assert np.max(np.abs(H - H.conj().T)) < 1e-15


def test_spin_valley_term_shifts_levels(flat100, p_default):
    p = sb.SimParams(kappa_z=5e-6)
    H = model.hamiltonian_at(0.0, flat100, p)
    vals = np.sort(np.linalg.eigvalsh(H))
    c = p.constants
    ez = 0.5 * c.g * c.mu_B * p.B_z
    ev = 0.05
    # spin splitting is ez + kappa_z in the valley ground state and
    # ez - kappa_z in the excited state
    expected = np.sort([
        -ev - ez - p.kappa_z, -ev + ez + p.kappa_z,
        ev - ez + p.kappa_z, ev + ez - p.kappa_z,
    ])
    assert np.allclose(vals, expected, atol=1e-12)


def test_valley_frame_eigenvectors(flat100):
    ground, excited = model.local_valley_frame(flat100, 0.0)
    Hv = np.array([[0.0, 0.05], [0.05, 0.0]])
    assert np.allclose(Hv @ ground, -0.05 * ground)
    assert np.allclose(Hv @ excited, 0.05 * excited)
    assert abs(np.vdot(ground, excited)) < 1e-14


def test_degenerate_valley_raises(flat_zero):
    with pytest.raises(DegenerateValleyError):
        model.local_valley_frame(flat_zero, 0.0)


def test_jump_operator_true_lowering(flat100):
    L = model.jump_operator_valley(flat100, 0.0)
    ground, excited = model.local_valley_frame(flat100, 0.0)
    assert np.allclose(L @ excited, ground, atol=1e-14)
    assert np.linalg.norm(L @ ground) < 1e-14
    assert np.allclose(L, 0.5 * np.array([[1, 1], [-1, -1]]))


def test_jump_operator_paper_literal():
    phi = 0.7
    L = model.jump_operator_from_phase(phi, mode="paper-literal")
    assert np.max(np.abs(L - L.conj().T)) < 1e-15
    assert np.allclose(sorted(np.linalg.eigvalsh(L)),
                       [-math.sqrt(2), math.sqrt(2)])


def test_jump_operator_unknown_mode():
    with pytest.raises(ValueError):
        model.jump_operator_from_phase(0.0, mode="bogus")


def test_larmor_frequency(p_default):
    assert model.larmor_frequency(p_default) == pytest.approx(0.55985, abs=1e-5)


def test_rabi_frequency(p_default):
    assert model.rabi_frequency(p_default, 10.0) == pytest.approx(0.027994, abs=1e-5)


def test_generalized_rabi(p_default):
    fr = model.rabi_frequency(p_default, 10.0)
    assert model.generalized_rabi(p_default, 10.0, 0.0) == fr
    assert model.generalized_rabi(p_default, 10.0, fr) == pytest.approx(
        math.sqrt(2.0) * fr, rel=1e-12)


def test_gate_time_value(p_default):
    assert model.analytical_gate_time(p_default, 10.0) == pytest.approx(
        17.86193376323733, rel=1e-12)


@given(x0=st.floats(0.5, 35.0))
@settings(max_examples=50, deadline=None)
def test_gate_time_amplitude_roundtrip(x0):
    p = sb.SimParams()
    Tg = model.analytical_gate_time(p, x0)
    assert model.analytical_amplitude(p, Tg) == pytest.approx(x0, rel=1e-12)


def test_t2_star_reference(p_default):
    p = p_default.with_q_link(0.2)
    assert model.t2_star(p) == pytest.approx(23.7e3, rel=5e-3)


def test_t2_star_scaling(p_default):
    # inversely proportional to gradient and displacement noise
    t_ref = model.t2_star(p_default)
    p2 = sb.SimParams(db_par=2 * p_default.db_par)
    assert model.t2_star(p2) == pytest.approx(t_ref / 2.0, rel=1e-12)


def test_valley_splitting_and_phase(flat100):
    assert float(model.valley_splitting(flat100, 5.0)) == pytest.approx(0.1, rel=1e-12)
    assert float(model.valley_phase(flat100, 5.0)) == 0.0
    tilted = sb.flat_landscape(splitting=0.1, phase=1.2)
    assert float(model.valley_phase(tilted, 0.0)) == pytest.approx(1.2, rel=1e-12)
