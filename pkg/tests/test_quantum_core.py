from __future__ import annotations

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from rydnoise import (
    AtomRegister,
    ConstantWaveform,
    GaussianWaveform,
    InterpolatedWaveform,
    PulseSegment,
    PulseSequence,
    RampWaveform,
    build_hamiltonian,
    evolve,
    interaction_strength,
)
from rydnoise.errors import ConfigurationError, IntegrationError, PulseError, RegisterError
from rydnoise.evolution import evolve_batch, time_grid
from rydnoise.hamiltonian import C6_DEFAULT
from rydnoise.noise import NoiseRealization
from rydnoise.register import require_simulable
from rydnoise.waveforms import constant_pulse, gaussian_ramp_pulse, rabi_calibration_pulse, waveform_from_dict

TWO_PI = 2 * math.pi
ONE = AtomRegister(((0.0, 0.0),))


# registers


def test_register_rejects_close_atoms():
    with pytest.raises(RegisterError):
        AtomRegister(((0.0, 0.0), (3.9, 0.0)))
    AtomRegister(((0.0, 0.0), (4.0, 0.0)))


def test_register_rejects_far_atoms():
    with pytest.raises(RegisterError):
        AtomRegister(((50.1, 0.0),))
    AtomRegister(((30.0, 40.0),))


def test_register_atom_count_limits():
    with pytest.raises(RegisterError):
        AtomRegister(())
    grid = tuple((x * 4.5, y * 4.5) for x in range(-5, 5) for y in range(-5, 5))
    assert AtomRegister(grid).n_atoms == 100
    with pytest.raises(RegisterError):
        AtomRegister(grid + ((47.0, 0.0),))


def test_simulator_limit_is_eight_atoms():
    reg = AtomRegister(tuple((5.0 * i - 20, 0.0) for i in range(9)))
    with pytest.raises(RegisterError):
        require_simulable(reg)
    with pytest.raises(RegisterError):
        evolve(reg, rabi_calibration_pulse())


def test_register_names_and_round_trip():
    reg = AtomRegister(((0.0, 0.0), (10.0, 0.0)), names=("a", "b"))
    assert AtomRegister.from_dict(reg.to_dict()) == reg
    with pytest.raises(RegisterError):
        AtomRegister(((0.0, 0.0),), names=("a", "b"))


def test_register_containment():
    big = AtomRegister(((0.0, 0.0), (10.0, 0.0), (0.0, 10.0)))
    assert big.contains(AtomRegister(((10.0, 0.0),)))
    assert not big.contains(AtomRegister(((5.0, 0.0),)))


# interaction and Hamiltonian


def test_interaction_at_8um():
    assert interaction_strength(8.0) == pytest.approx(5_420_158.53 / 8**6, rel=1e-15)
    assert interaction_strength(8.0) == pytest.approx(20.68, abs=5e-3)


@given(st.floats(4.0, 50.0))
def test_interaction_power_law(r):
    assert interaction_strength(2 * r) == pytest.approx(interaction_strength(r) / 64, rel=1e-12)


def test_interaction_at_40um_is_negligible():
    assert interaction_strength(40.0) == pytest.approx(1.32e-3, abs=5e-6)


def test_interaction_below_minimum_distance():
    with pytest.raises(RegisterError):
        interaction_strength(3.0)


def test_hamiltonian_examples():
    assert np.array_equal(build_hamiltonian(ONE, [0.0], [0.0]), np.zeros((2, 2)))
    h = build_hamiltonian(ONE, [TWO_PI], [0.0])
    assert np.allclose(h, [[0, math.pi], [math.pi, 0]], atol=1e-15)
    two = AtomRegister(((0.0, 0.0), (8.0, 0.0)))
    h = build_hamiltonian(two, [0.0, 0.0], [0.0, 0.0])
    expected = np.zeros((4, 4))
    expected[3, 3] = C6_DEFAULT / 8**6
    assert np.allclose(h, expected, atol=1e-12)


def test_hamiltonian_detuning_sign():
    # bit 1 is the Rydberg state: δ > 0 lowers its energy by δ/2
    h = build_hamiltonian(ONE, [0.0], [2.0])
    assert np.allclose(np.diag(h).real, [1.0, -1.0])


def test_hamiltonian_length_mismatch():
    with pytest.raises(ConfigurationError):
        build_hamiltonian(ONE, [1.0, 2.0], [0.0])


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 4),
    st.lists(st.floats(0, 20), min_size=4, max_size=4),
    st.lists(st.floats(-30, 30), min_size=4, max_size=4),
)
def test_hamiltonian_hermitian(n, omegas, deltas):
    reg = AtomRegister(tuple((6.0 * i - 9.0, 0.5 * i) for i in range(n)))
    h = build_hamiltonian(reg, omegas[:n], deltas[:n])
    assert np.array_equal(h, h.conj().T)
    # off-diagonal couplings connect single bit flips only
    for a in range(2**n):
        for b in range(2**n):
            if a != b and bin(a ^ b).count("1") != 1:
                assert h[a, b] == 0


# waveforms and pulses


@pytest.mark.parametrize("area", [math.pi / 2, math.pi, 3.7])
@pytest.mark.parametrize("duration", [100.0, 500.0, 660.0])
def test_gaussian_area(area, duration):
    w = GaussianWaveform(duration, area)
    integral, _ = quad(lambda t: float(w.sample(t)), 0.0, duration, epsabs=0, epsrel=1e-13, limit=200)
    assert integral / 1000.0 == pytest.approx(area, rel=1e-9)


def test_gaussian_shape():
    w = GaussianWaveform(600.0, math.pi)
    peak = float(w.sample(300.0))
    assert float(w.sample(0.0)) / peak == pytest.approx(math.exp(-4.5), rel=1e-12)
    assert float(w.sample(0.0)) / peak < 0.012


def test_ramp_and_constant_samples():
    r = RampWaveform(100.0, -20.0, 20.0)
    assert r.sample(np.array([0.0, 50.0, 100.0])).tolist() == pytest.approx([-20.0, 0.0, 20.0])
    assert ConstantWaveform(10.0, 3.0).sample(7.0) == 3.0


def test_waveform_durations_must_be_positive():
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(PulseError):
            ConstantWaveform(bad, 1.0)


def test_segment_duration_mismatch():
    with pytest.raises(PulseError):
        PulseSegment(ConstantWaveform(100.0, 1.0), ConstantWaveform(101.0, 0.0))


def test_negative_rabi_rejected():
    with pytest.raises(PulseError):
        PulseSegment(RampWaveform(100.0, 1.0, -1.0), ConstantWaveform(100.0, 0.0))
    with pytest.raises(PulseError):
        PulseSegment(InterpolatedWaveform(100.0, (0.0, -0.1, 1.0)), ConstantWaveform(100.0, 0.0))


def test_pulse_concatenation_and_sampling():
    p = constant_pulse(100.0, 1.0, 2.0) + gaussian_ramp_pulse(500.0, math.pi / 2, -20, 20)
    assert p.total_duration == 600.0
    assert p.rabi(50.0) == 1.0
    assert p.detuning(np.array([100.0, 600.0])).tolist() == pytest.approx([-20.0, 20.0])


def test_pulse_round_trip():
    p = (
        constant_pulse(100.0, 1.0, 2.0)
        + gaussian_ramp_pulse(500.0, math.pi / 2, -20, 20)
        + PulseSequence.single(InterpolatedWaveform(50.0, (0.0, 1.0, 0.5)), RampWaveform(50.0, 1.0, 2.0))
    )
    assert PulseSequence.from_dict(p.to_dict()) == p
    for seg in p.segments:
        assert waveform_from_dict(seg.rabi.to_dict()) == seg.rabi


# evolution


def test_rabi_oscillation():
    t0 = time.perf_counter()
    state, _ = evolve(ONE, rabi_calibration_pulse())
    elapsed = time.perf_counter() - t0
    p = state.probabilities()
    assert p[1] == pytest.approx(math.sin(0.66 * math.pi) ** 2, abs=1e-6)
    assert p[1] == pytest.approx(0.76791, abs=1e-5)
    assert elapsed < 1.0


def test_zero_duration_pulse():
    reg = AtomRegister(((0.0, 0.0), (10.0, 0.0)))
    state, _ = evolve(reg, PulseSequence(()))
    assert np.array_equal(state.probabilities(), [1.0, 0.0, 0.0, 0.0])


def test_distant_atoms_are_independent():
    reg = AtomRegister(((-20.0, 0.0), (20.0, 0.0)))
    joint = evolve(reg, rabi_calibration_pulse())[0].probabilities()
    single = evolve(ONE, rabi_calibration_pulse())[0].probabilities()
    tv = 0.5 * np.abs(joint - np.kron(single, single)).sum()
    assert tv < 1e-3


def test_blockade():
    reg = AtomRegister(((0.0, 0.0), (4.0, 0.0)))
    # resonant pulse of area π: 2π rad/μs for 500 ns
    p = evolve(reg, constant_pulse(500.0, TWO_PI))[0].probabilities()
    assert p[3] < 0.01


def test_dt_above_limit_rejected():
    with pytest.raises(ConfigurationError):
        evolve(ONE, rabi_calibration_pulse(), dt=1.5)
    with pytest.raises(ConfigurationError):
        evolve(ONE, rabi_calibration_pulse(), dt=0.0)


def test_dt_halving_converges():
    reg = AtomRegister(((-10.0, 0.0), (0.0, 0.0), (10.0, 0.0)))
    for pulse in (rabi_calibration_pulse(), gaussian_ramp_pulse(660.0, 2 * math.pi, -10.0, 10.0)):
        a = evolve(reg, pulse, dt=0.5)[0].probabilities()
        b = evolve(reg, pulse, dt=0.25)[0].probabilities()
        assert np.max(np.abs(a - b)) < 1e-6


def test_matches_matrix_exponential():
    reg = AtomRegister(((0.0, 0.0), (7.0, 0.0), (0.0, 9.0)))
    real = NoiseRealization(np.array([1.02, 0.9, 1.1]), np.array([0.3, -0.5, 0.1]))
    om, de = 5.0, 2.0
    state, _ = evolve(reg, constant_pulse(300.0, om, de), real)
    h = build_hamiltonian(reg, om * real.omega_multiplier, de + real.doppler_shift)
    psi0 = np.zeros(8, complex)
    psi0[0] = 1
    exact = expm(-1j * h * 0.3) @ psi0
    assert np.max(np.abs(state.amplitudes - exact)) < 1e-7


def test_closed_form_matches_explicit_stepping():
    reg = AtomRegister(((0.0, 0.0), (6.0, 0.0)))
    pulse = constant_pulse(200.0, TWO_PI, 3.0)
    mult, shift = np.array([[1.0, 0.95]]), np.array([[0.2, -0.1]])
    fast, _ = evolve_batch(reg, pulse, mult, shift)
    slow, _ = evolve_batch(reg, pulse, mult, shift, method="step")
    assert np.max(np.abs(fast - slow)) < 1e-9


def test_sample_times_nearest_grid_point():
    pulse = rabi_calibration_pulse()
    times = [0.0, 100.2, 330.0, 660.0]
    final, states = evolve(ONE, pulse, sample_times=times)
    for t, s in zip(times, states):
        t_grid = time_grid(pulse)[np.abs(time_grid(pulse) - t).argmin()]
        assert s.probabilities()[1] == pytest.approx(math.sin(math.pi * t_grid / 1000) ** 2, abs=1e-9)
    assert np.allclose(states[-1].amplitudes, final.amplitudes)


def test_sample_times_out_of_range():
    with pytest.raises(ConfigurationError):
        evolve(ONE, rabi_calibration_pulse(), sample_times=[700.0])


def test_non_finite_noise_rejected():
    with pytest.raises(ConfigurationError):
        evolve_batch(ONE, rabi_calibration_pulse(), [[math.nan]], [[0.0]])


def test_runaway_integration_raises():
    pulse = gaussian_ramp_pulse(10.0, 1.0, 0.0, 1.0)
    with pytest.raises(IntegrationError):
        evolve_batch(ONE, pulse, [[1e300]], [[0.0]])


def test_basis_permutation():
    reg = AtomRegister(((0.0, 0.0), (6.0, 0.0), (3.0, 7.0)))
    pulse = gaussian_ramp_pulse(400.0, 3 * math.pi, -5.0, 5.0)
    p = evolve(reg, pulse)[0].probabilities()
    order = (2, 0, 1)
    q = evolve(reg.permuted(order), pulse)[0].probabilities()
    n = 3
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - i)) & 1 for i in range(n)]
        new_bits = [bits[order[j]] for j in range(n)]
        new_idx = sum(b << (n - 1 - j) for j, b in enumerate(new_bits))
        assert q[new_idx] == pytest.approx(p[idx], abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(
    st.floats(0.0, 4 * math.pi),
    st.floats(-20.0, 20.0),
    st.floats(-20.0, 20.0),
    st.floats(0.8, 1.2),
    st.floats(-1.0, 1.0),
)
def test_norm_preserved_random_pulses(area, d0, d1, m, s):
    reg = AtomRegister(((0.0, 0.0), (5.0, 0.0)))
    pulse = gaussian_ramp_pulse(300.0, area, d0, d1) + constant_pulse(50.0, 3.0, d1)
    final, _ = evolve_batch(reg, pulse, [[m, m]], [[s, -s]])
    assert abs(np.linalg.norm(final) - 1) < 1e-9
