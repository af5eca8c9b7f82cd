import math

import numpy as np
import pytest
from scipy import integrate, stats

from mtjstdp import constants as C
from mtjstdp.errors import ConfigurationError
from mtjstdp.magnetodynamics import (
    ALPHA,
    MaterialParams,
    SpinCurrent,
    effective_field,
    heun_step,
    llgs_step,
    sample_initial_angle,
    spin_current,
    thermal_field,
)
from mtjstdp.rng import RngStream

THIN_FILM = MaterialParams(demag_tensor=(0.0, 0.0, 4 * math.pi))
RNG = RngStream(2024)


def test_interface_field_from_table_values():
    assert THIN_FILM.interface_field == pytest.approx(2 * 1.3 / (1257.3 * 1.42e-7), rel=1e-12)
    assert THIN_FILM.interface_field == pytest.approx(14562.8, abs=0.1)


def test_thin_film_field_along_z():
    h = effective_field([0, 0, 1], THIN_FILM, 0.0, 1e-12, RNG)
    expected = 2 * 1.3 / (1257.3 * 1.42e-7) - 4 * math.pi * 1257.3
    assert h == pytest.approx([0.0, 0.0, expected], abs=1e-9)


def test_in_plane_m_has_no_interface_term():
    h = effective_field([1, 0, 0], THIN_FILM, 0.0, 1e-12, RNG)
    assert h[2] == 0.0 and h[1] == 0.0
    assert h[0] == pytest.approx(-THIN_FILM.demag[0] * THIN_FILM.saturation_magnetization)


def test_calibrated_demag_reproduces_barrier():
    p = MaterialParams()
    assert sum(p.demag) == pytest.approx(4 * math.pi, abs=1e-9)
    barrier = p.saturation_magnetization * p.volume * p.effective_anisotropy_field / (2 * C.BOLTZMANN * 300.0)
    assert barrier == pytest.approx(73.0, rel=1e-9)


def test_demag_must_sum_to_four_pi():
    with pytest.raises(ConfigurationError):
        MaterialParams(demag_tensor=(1.0, 1.0, 1.0))


@pytest.mark.parametrize("kwargs", [{"damping": 0.0}, {"saturation_magnetization": -1.0},
                                    {"spin_polarization": 1.5}, {"noise_convention": "bogus"}])
def test_invalid_material(kwargs):
    with pytest.raises(ConfigurationError):
        MaterialParams(**kwargs)


def test_zero_temperature_has_no_noise():
    assert np.array_equal(thermal_field(0.0, MaterialParams(), 1e-12, RNG), np.zeros(3))


def test_thermal_field_deterministic_per_counter():
    a = thermal_field(300.0, MaterialParams(), 1e-12, RngStream(7, 1, 5))
    b = thermal_field(300.0, MaterialParams(), 1e-12, RngStream(7, 1, 5))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("convention", ["brown", "paper-literal"])
def test_thermal_field_variance(convention):
    p = MaterialParams(noise_convention=convention)
    dt, T = 1e-12, 300.0
    base = p.damping * C.BOLTZMANN * T / (p.gyromagnetic_ratio * p.saturation_magnetization * p.volume)
    sigma2 = 2 * base / dt if convention == "brown" else base * dt
    x = np.array([thermal_field(T, p, dt, RngStream(11, 0, k))[0] for k in range(100_000)])
    assert x.var() == pytest.approx(sigma2, rel=0.03)


def test_bloch_law_raises_noise():
    hot = MaterialParams(curie_temperature=1000.0)
    a = thermal_field(600.0, hot, 1e-12, RNG)
    b = thermal_field(600.0, MaterialParams(), 1e-12, RNG)
    assert np.linalg.norm(a) > np.linalg.norm(b)


def test_spin_current_examples():
    s = spin_current(1.0, 2000.0, 0.6)
    assert s.magnitude == pytest.approx(0.3e-3)
    assert spin_current(0.0, 2000.0, 0.6).magnitude == 0.0
    flipped = spin_current(-1.0, 2000.0, 0.6)
    assert flipped.magnitude == s.magnitude and flipped.sign == -s.sign
    # positive pinned-minus-free voltage favors AP
    assert s.sign == -1


def test_spin_current_rejects_bad_resistance():
    with pytest.raises(ConfigurationError):
        spin_current(1.0, 0.0, 0.6)


def _zero_damping_pack(p):
    mat = p.pack()
    mat[ALPHA] = 0.0
    return mat


def test_aligned_state_is_fixed_point():
    mat = _zero_damping_pack(MaterialParams())
    m = (0.0, 0.0, 1.0)
    for _ in range(100):
        m = heun_step(*m, 0.0, 0.0, 0.0, 0.0, 1e-12, mat)
    assert m == (0.0, 0.0, 1.0)


def test_precession_conserves_mz():
    # Heun + renormalization shrinks m_z by ~(omega dt)^4 / 8 per step, so the
    # 1e-6 budget over 1e4 steps needs omega dt ~ 4e-3 (dt = 0.1 ps here)
    mat = _zero_damping_pack(MaterialParams())
    th = 0.4
    m = (math.sin(th), 0.0, math.cos(th))
    mz0 = m[2]
    drift = 0.0
    for _ in range(10_000):
        m = heun_step(*m, 0.0, 0.0, 0.0, 0.0, 1e-13, mat)
        drift = max(drift, abs(m[2] - mz0))
        assert abs(math.sqrt(m[0] ** 2 + m[1] ** 2 + m[2] ** 2) - 1) <= 1e-9
    assert drift <= 1e-6


def test_damped_relaxation_matches_analytic_solution():
    # For uniaxial anisotropy the LL equation gives
    # tan(theta(t)) = tan(theta0) * exp(-alpha gamma Hk t / (1 + alpha^2)).
    p = MaterialParams()
    rate = p.damping * p.gyromagnetic_ratio * p.effective_anisotropy_field / (1 + p.damping ** 2)
    th0, t_end = math.radians(30), 3e-9
    errors = []
    for dt in (1e-12, 0.5e-12, 0.125e-12):
        m = np.array([math.sin(th0), 0.0, math.cos(th0)])
        mz_prev = m[2]
        n = int(round(t_end / dt))
        for _ in range(n):
            m = llgs_step(m, SpinCurrent(0.0), p, 0.0, dt, RNG)
            assert m[2] >= mz_prev
            mz_prev = m[2]
        exact = math.tan(th0) * math.exp(-rate * t_end)
        errors.append(abs(math.hypot(m[0], m[1]) / m[2] / exact - 1))
    assert errors[0] < 1e-3
    # second-order convergence: quartering dt cuts the error ~16x
    assert errors[2] < errors[1] / 8


def test_step_rejects_large_dt_and_non_unit_m():
    with pytest.raises(ConfigurationError):
        llgs_step([0, 0, 1], SpinCurrent(0.0), MaterialParams(), 300.0, 6e-12, RNG)
    with pytest.raises(ValueError):
        llgs_step([0, 0, 1.1], SpinCurrent(0.0), MaterialParams(), 300.0, 1e-12, RNG)
    with pytest.raises(ValueError):
        effective_field([0, 0, 1], MaterialParams(), -1.0, 1e-12, RNG)


def test_spin_torque_drives_toward_favored_state():
    p = MaterialParams()
    current = 3 * p.critical_current
    m = np.array([math.sin(0.1), 0.0, -math.cos(0.1)])  # AP
    for k in range(20000):
        m = llgs_step(m, SpinCurrent(current / p.spin_polarization * p.spin_polarization, sign=1), p, 0.0, 1e-12,
                      RngStream(0, 0, k))
    assert m[2] > 0.9


def test_noisy_steps_keep_unit_norm():
    p = MaterialParams()
    m = np.array([0.0, 0.0, 1.0])
    for k in range(2000):
        m = llgs_step(m, SpinCurrent(1e-3), p, 900.0, 1e-12, RngStream(3, 0, k))
        assert abs(np.linalg.norm(m) - 1) <= 1e-9


def _theta2_quadrature(delta):
    w = lambda t: math.sin(t) * math.exp(-delta * math.sin(t) ** 2)
    num = integrate.quad(lambda t: t * t * w(t), 0, math.pi / 2, points=[0.05, 0.2])[0]
    den = integrate.quad(w, 0, math.pi / 2, points=[0.05, 0.2])[0]
    return num / den


def _draws(n, state=1, T=300.0, params=MaterialParams()):
    return np.array([sample_initial_angle(params, T, RngStream(99, i), state) for i in range(n)])


def test_initial_angle_second_moment():
    m = _draws(20_000)
    theta = np.arccos(np.clip(m[:, 2], -1, 1))
    assert np.mean(theta ** 2) == pytest.approx(_theta2_quadrature(73.0), rel=0.05)
    assert _theta2_quadrature(73.0) == pytest.approx(1 / 73, rel=0.03)


def test_initial_angle_azimuth_uniform():
    m = _draws(20_000)
    phi = np.arctan2(m[:, 1], m[:, 0])
    counts, _ = np.histogram(phi, bins=36, range=(-math.pi, math.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_initial_angle_about_ap_axis_and_unit_norm():
    m = _draws(200, state=-1)
    assert np.all(m[:, 2] < 0)
    assert np.allclose(np.linalg.norm(m, axis=1), 1.0, atol=1e-12)


def test_infinite_barrier_returns_axis():
    m = sample_initial_angle(MaterialParams(), 1e-12, RNG)  # delta ~ 2e16
    assert np.allclose(m, [0, 0, 1])


def test_hotter_sample_is_wider():
    cold = _draws(4000, T=300.0)
    hot = _draws(4000, T=600.0)
    assert np.mean(1 - hot[:, 2] ** 2) > 1.5 * np.mean(1 - cold[:, 2] ** 2)
