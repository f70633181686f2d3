import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridid.measurement import (
    NoiseSpec,
    apply_noise,
    center,
    derive_currents,
    generate_load_profiles,
    measurements_from_readings,
    polar_covariance_to_cartesian,
    synthesize_dataset,
)
from gridid.network import build_admittance

ZERO = NoiseSpec(0.0, 0.0, 0.0, 0.0)


def test_noise_level_convention():
    spec = NoiseSpec.from_level(0.01)
    assert (spec.sigma_p_rel, spec.sigma_q_rel) == (0.01, 0.01)
    assert spec.sigma_v_rel == pytest.approx(1e-4)
    assert spec.sigma_theta == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        NoiseSpec(-1.0, 0.0, 0.0, 0.0)


def test_profiles_nominal_without_variation(net6):
    p0, q0 = net6.nominal_injections()
    for inj in generate_load_profiles(net6, 5, 0.0, seed=1):
        np.testing.assert_array_equal(inj.p, p0)
        np.testing.assert_array_equal(inj.q, q0)


def test_profiles_deterministic(net6):
    a = generate_load_profiles(net6, 20, 0.2, seed=9)
    b = generate_load_profiles(net6, 20, 0.2, seed=9)
    c = generate_load_profiles(net6, 20, 0.2, seed=10)
    assert all(np.array_equal(x.p, y.p) and np.array_equal(x.q, y.q) for x, y in zip(a, b))
    assert not np.array_equal(a[0].p, c[0].p)


def test_profile_spread(net33):
    profiles = generate_load_profiles(net33, 1440, 0.2, seed=4)
    p = np.array([x.p for x in profiles])
    q = np.array([x.q for x in profiles])
    p0, q0 = net33.nominal_injections()
    loaded = p0 != 0
    # std of a sample std at N=1440 is about 1.9%; 10% is over five of those
    np.testing.assert_allclose(p.std(axis=0, ddof=1)[loaded], 0.2 * np.abs(p0[loaded]), rtol=0.1)
    np.testing.assert_allclose(q.std(axis=0, ddof=1)[loaded], 0.2 * np.abs(q0[loaded]), rtol=0.1)


def test_profiles_validate_arguments(net6):
    with pytest.raises(ValueError):
        generate_load_profiles(net6, 0)
    with pytest.raises(ValueError):
        generate_load_profiles(net6, 3, -0.1)


def test_dataset_satisfies_power_balance(net6, truth6):
    y = build_admittance(net6).y
    s = truth6.v * np.exp(1j * truth6.theta)
    np.testing.assert_allclose(s * np.conj(s @ y.T), truth6.p + 1j * truth6.q, atol=1e-10)
    assert np.all(truth6.theta[:, net6.slack] == 0)


def test_polar_covariance_special_angles():
    v, ve, vd = 1.05, 2e-6, 3e-6
    c0 = polar_covariance_to_cartesian(v, 0.0, ve, vd)
    np.testing.assert_allclose(c0, [[ve, 0], [0, vd * v**2]], atol=1e-22)
    c90 = polar_covariance_to_cartesian(v, np.pi / 2, ve, vd)
    np.testing.assert_allclose(c90, [[vd * v**2, 0], [0, ve]], atol=1e-20)
    balanced = polar_covariance_to_cartesian(v, 0.7, vd * v**2, vd)
    assert abs(balanced[0, 1]) < 1e-22


def test_diagonal_form_is_zero_angle_case():
    rng = np.random.default_rng(0)
    v = rng.uniform(0.9, 1.1, 50)
    ve, vd = rng.uniform(0, 1e-4, 50), rng.uniform(0, 1e-4, 50)
    c = polar_covariance_to_cartesian(v, 0.0, ve, vd)
    diag = np.zeros((50, 2, 2))
    diag[:, 0, 0], diag[:, 1, 1] = ve, vd * v**2
    np.testing.assert_allclose(c, diag, rtol=1e-15, atol=0)


@pytest.mark.parametrize("v, theta, s_eps, s_delta", [(1.0, 0.3, 1e-2, 1e-2), (0.95, -1.1, 5e-3, 1e-2), (1.02, 2.0, 1e-2, 2e-3)])
def test_polar_covariance_monte_carlo(v, theta, s_eps, s_delta):
    rng = np.random.default_rng(42)
    m = 100_000
    eps = s_eps * rng.standard_normal(m)
    delta = s_delta * rng.standard_normal(m)
    z = (v + eps) * np.exp(1j * (theta + delta)) - v * np.exp(1j * theta)
    emp = np.cov(np.stack([z.real, z.imag]))
    model = polar_covariance_to_cartesian(v, theta, s_eps**2, s_delta**2)
    # off-diagonal entries can be near zero; compare relative to the entry scale of the matrix
    scale = np.sqrt(np.outer(np.diag(model), np.diag(model)))
    assert np.all(np.abs(emp - model) <= 0.05 * scale)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 1.5), st.floats(-np.pi, np.pi), st.floats(0, 1e-3), st.floats(0, 1e-3))
def test_polar_covariance_is_psd(v, theta, ve, vd):
    c = polar_covariance_to_cartesian(v, theta, ve, vd)
    assert c[0, 1] == c[1, 0]
    assert np.linalg.eigvalsh(c).min() >= -1e-18
    assert np.trace(c) == pytest.approx(ve + vd * v**2, rel=1e-9, abs=1e-300)


def test_zero_noise_equals_truth(truth6):
    ms = apply_noise(truth6, ZERO, True, seed=3)
    np.testing.assert_array_equal(ms.v_mag, truth6.v)
    np.testing.assert_array_equal(ms.theta, truth6.theta)
    np.testing.assert_array_equal(ms.p, truth6.p)
    np.testing.assert_array_equal(ms.q, truth6.q)


def test_noise_is_deterministic(truth6):
    spec = NoiseSpec.from_level(1e-2)
    a, b = apply_noise(truth6, spec, True, seed=8), apply_noise(truth6, spec, True, seed=8)
    np.testing.assert_array_equal(a.v_mag, b.v_mag)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.cov_v, b.cov_v)


def test_voltage_noise_level(truth33):
    ms = apply_noise(truth33, NoiseSpec(1e-3, 0.0, 0.0, 0.0), True, seed=5)
    rel = (ms.v_mag - truth33.v) / truth33.v
    np.testing.assert_allclose(rel.std(axis=0, ddof=1), 1e-3, rtol=0.1)


def test_noise_independent_across_nodes(truth33):
    ms = apply_noise(truth33, NoiseSpec.from_level(1e-2), True, seed=6)
    err = ms.p / truth33.p - 1
    loaded = np.isfinite(err).all(axis=0) & (np.abs(truth33.p) > 0).all(axis=0)
    rho = np.corrcoef(err[:, loaded].T)
    off = ~np.eye(rho.shape[0], dtype=bool)
    assert np.abs(rho[off]).max() < 0.1


def test_phaseless_measurements(truth6):
    spec = NoiseSpec.from_level(1e-2)
    ms = apply_noise(truth6, spec, False, seed=1)
    assert ms.theta is None and not ms.with_phase
    np.testing.assert_array_equal(ms.v_re, ms.v_mag)
    assert not ms.v_im.any()
    # zero-angle covariance with the inflated angle variance
    np.testing.assert_allclose(ms.cov_v[..., 1, 1], (100 * spec.sigma_theta * ms.v_mag) ** 2)
    assert not ms.cov_v[..., 0, 1].any()


def test_measurement_covariances_psd(truth6):
    ms = derive_currents(apply_noise(truth6, NoiseSpec.from_level(1e-2), True, seed=2))
    for cov in (ms.cov_v, ms.cov_i):
        assert np.array_equal(cov, np.swapaxes(cov, -1, -2))
        assert np.linalg.eigvalsh(cov).min() >= -1e-20


def test_currents_trivial():
    spec = NoiseSpec.from_level(0.0)
    one = np.ones((1, 1))
    ms = derive_currents(measurements_from_readings(one, 0 * one, one, 0 * one, spec))
    assert ms.current[0, 0] == 1 + 0j
    ms = derive_currents(measurements_from_readings(one, 0 * one, 0 * one, one, spec))
    assert ms.current[0, 0] == 0 - 1j


def test_currents_reproduce_y_v(net33, y33, truth33):
    ms = derive_currents(apply_noise(truth33, ZERO, True, seed=0))
    v = truth33.voltage
    np.testing.assert_allclose(ms.current, v @ y33.T, atol=1e-12, rtol=0)


def test_current_covariance_monte_carlo():
    v, th, p, q = 0.97, -0.02, -0.03, -0.012
    spec = NoiseSpec(2e-3, 1e-3, 1e-2, 2e-2)
    one = np.ones((1, 1))
    ms = derive_currents(measurements_from_readings(v * one, th * one, p * one, q * one, spec))
    rng = np.random.default_rng(11)
    m = 200_000
    vv = v * (1 + spec.sigma_v_rel * rng.standard_normal(m))
    tt = th + spec.sigma_theta * rng.standard_normal(m)
    pp = p * (1 + spec.sigma_p_rel * rng.standard_normal(m))
    qq = q * (1 + spec.sigma_q_rel * rng.standard_normal(m))
    cur = np.conj((pp + 1j * qq) / (vv * np.exp(1j * tt)))
    emp = np.cov(np.stack([cur.real, cur.imag]))
    model = ms.cov_i[0, 0]
    scale = np.sqrt(np.outer(np.diag(model), np.diag(model)))
    assert np.all(np.abs(emp - model) <= 0.05 * scale)


def test_phaseless_current_covariance_sign():
    # shared magnitude noise: I_re = p / v and I_im = -q / v move together when p q < 0
    v, p, q = 1.0, 0.5, -0.3
    spec = NoiseSpec(1e-2, 0.0, 0.0, 0.0)
    one = np.ones((1, 1))
    ms = derive_currents(measurements_from_readings(v * one, None, p * one, q * one, spec))
    cov = ms.cov_i[0, 0]
    assert cov[0, 1] == pytest.approx(-p * q * (spec.sigma_v_rel * v) ** 2 / v**4)
    assert cov[0, 0] == pytest.approx((p * spec.sigma_v_rel) ** 2)


def test_zero_voltage_is_reported():
    one = np.ones((2, 3))
    v = one.copy()
    v[1, 2] = 0.0
    ms = measurements_from_readings(v, None, one, one, NoiseSpec.from_level(0.0))
    with pytest.raises(ZeroDivisionError, match="sample 1, bus 3"):
        derive_currents(ms)


def test_center_examples(truth6):
    ms = derive_currents(apply_noise(truth6, ZERO, True, seed=0))
    c = center(ms)
    assert c.centered
    assert np.abs(c.v_mag.mean(axis=0)).max() <= 1e-12 * np.abs(ms.v_mag.mean(axis=0)).max()
    # the slack magnitude is constant, so its centered column vanishes
    assert not c.v_mag[:, 0].any()
    np.testing.assert_array_equal(c.cov_v, ms.cov_v)
    again = center(c)
    np.testing.assert_allclose(again.v_mag, c.v_mag, atol=1e-15)
    np.testing.assert_allclose(again.offsets["v_mag"], ms.v_mag.mean(axis=0), rtol=1e-14)


def test_center_small_column():
    spec = NoiseSpec.from_level(0.0)
    ms = measurements_from_readings(np.array([[1.0], [3.0]]), None, np.zeros((2, 1)), np.zeros((2, 1)), spec)
    np.testing.assert_array_equal(center(ms).v_mag[:, 0], [-1.0, 1.0])


def test_centering_before_currents_is_rejected(truth6):
    with pytest.raises(ValueError):
        derive_currents(center(apply_noise(truth6, ZERO, True)))


def test_dataset_requires_profiles(net6):
    with pytest.raises(ValueError):
        synthesize_dataset(net6, [])
