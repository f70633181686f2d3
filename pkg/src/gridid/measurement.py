"""Synthetic Smart Meter / micro-PMU data.

Load profiles are drawn around the nominal loads, solved with the exact power
flow, and then perturbed with polar Gaussian noise. Currents are derived from
the measured powers and voltages; their covariance follows from first-order
propagation of the measurement noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .network import NetworkModel, build_admittance
from .powerflow import Injections, PowerFlowDivergence, VoltageState, exact_powers, solve_powerflow

__all__ = [
    "NoiseSpec",
    "TrueStates",
    "MeasurementSet",
    "generate_load_profiles",
    "synthesize_dataset",
    "polar_covariance_to_cartesian",
    "apply_noise",
    "measurements_from_readings",
    "derive_currents",
    "center",
    "stream_rng",
]

# stream tags keep the generators for different purposes disjoint
_LOAD_P, _LOAD_Q, _NOISE_V, _NOISE_TH, _NOISE_P, _NOISE_Q = range(6)


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one (seed, purpose, node, ...) stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


@dataclass(frozen=True)
class NoiseSpec:
    """Relative measurement noise standard deviations.

    ``sigma_theta`` is absolute (radians) and only applied when the phase is
    measured; in phase-less mode it still sets the nominal angle scale used
    to inflate the voltage covariance.
    """

    sigma_v_rel: float = 0.0
    sigma_theta: float = 0.0
    sigma_p_rel: float = 0.0
    sigma_q_rel: float = 0.0

    def __post_init__(self):
        for name in ("sigma_v_rel", "sigma_theta", "sigma_p_rel", "sigma_q_rel"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def from_level(cls, level: float) -> "NoiseSpec":
        """Scalar noise level: ``level`` on P and Q, ``level / 100`` on |V| and angle."""
        return cls(sigma_v_rel=level / 100, sigma_theta=level / 100, sigma_p_rel=level, sigma_q_rel=level)


@dataclass(frozen=True)
class TrueStates:
    """Exact steady states, one row per time sample (N x n arrays)."""

    v: np.ndarray
    theta: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.v.shape[0]

    @property
    def states(self) -> list[VoltageState]:
        return [VoltageState(v, th) for v, th in zip(self.v, self.theta)]

    @property
    def injections(self) -> list[Injections]:
        return [Injections(p, q) for p, q in zip(self.p, self.q)]

    @property
    def voltage(self) -> np.ndarray:
        return self.v * np.exp(1j * self.theta)


@dataclass(frozen=True)
class MeasurementSet:
    """Measured quantities as N x n arrays plus per-entry 2x2 covariances.

    ``v_re``/``v_im`` hold the cartesian voltage the estimator regresses on:
    ``v_mag * exp(j theta)`` with the phase, ``v_mag`` alone without it.
    ``offsets`` keeps the time means removed by :func:`center`.
    """

    v_mag: np.ndarray
    theta: np.ndarray | None
    p: np.ndarray
    q: np.ndarray
    v_re: np.ndarray
    v_im: np.ndarray
    cov_v: np.ndarray
    noise: NoiseSpec
    i_re: np.ndarray | None = None
    i_im: np.ndarray | None = None
    cov_i: np.ndarray | None = None
    centered: bool = False
    offsets: dict = field(default_factory=dict, repr=False)

    @property
    def with_phase(self) -> bool:
        return self.theta is not None

    @property
    def shape(self) -> tuple[int, int]:
        return self.v_mag.shape

    @property
    def voltage(self) -> np.ndarray:
        return self.v_re + 1j * self.v_im

    @property
    def current(self) -> np.ndarray:
        if self.i_re is None:
            raise ValueError("currents not derived yet; call derive_currents first")
        return self.i_re + 1j * self.i_im


def generate_load_profiles(
    network: NetworkModel, n_samples: int, sigma_load_rel: float = 0.2, seed: int = 0
) -> list[Injections]:
    """Gaussian load profiles around the nominal injections.

    Each node draws from its own counter-based stream, so a node's profile does
    not depend on how many other nodes exist or in which order they are drawn.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if sigma_load_rel < 0:
        raise ValueError("sigma_load_rel must be >= 0")
    p0, q0 = network.nominal_injections()
    p = np.empty((n_samples, network.n))
    q = np.empty((n_samples, network.n))
    for h in range(network.n):
        p[:, h] = p0[h] * (1 + sigma_load_rel * stream_rng(seed, _LOAD_P, h).standard_normal(n_samples))
        q[:, h] = q0[h] * (1 + sigma_load_rel * stream_rng(seed, _LOAD_Q, h).standard_normal(n_samples))
    return [Injections(p[t], q[t]) for t in range(n_samples)]


def synthesize_dataset(network: NetworkModel, profiles, slack_v: float = 1.0) -> TrueStates:
    """Solve every profile and record the exact states and injections.

    Slack injections are filled in from the solved state.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("profiles must be non-empty")
    y = build_admittance(network)
    n, big_n = network.n, len(profiles)
    out = {k: np.empty((big_n, n)) for k in ("v", "theta", "p", "q")}
    for t, inj in enumerate(profiles):
        try:
            st = solve_powerflow(y, inj, slack_v=slack_v, slack=network.slack)
        except PowerFlowDivergence as exc:
            raise PowerFlowDivergence(f"sample {t}: {exc}", exc.residual) from exc
        s = exact_powers(y, st)
        out["v"][t], out["theta"][t] = st.v, st.theta
        out["p"][t], out["q"][t] = s.p, s.q
    return TrueStates(**out)


def polar_covariance_to_cartesian(v_meas, theta_meas, var_eps, var_delta) -> np.ndarray:
    """Cartesian covariance of a phasor with independent magnitude/angle noise.

    Linearising ``(v + eps) exp(j (theta + delta))`` gives

    * ``Var[dc] = var_eps cos^2 + var_delta v^2 sin^2``
    * ``Var[dd] = var_eps sin^2 + var_delta v^2 cos^2``
    * ``Cov[dc, dd] = sin cos (var_eps - var_delta v^2)``

    All arguments broadcast; the result has shape ``broadcast + (2, 2)``.
    """
    v, th, ve, vd = np.broadcast_arrays(*(np.asarray(a, float) for a in (v_meas, theta_meas, var_eps, var_delta)))
    c, s = np.cos(th), np.sin(th)
    ang = vd * v**2
    out = np.empty(v.shape + (2, 2))
    out[..., 0, 0] = ve * c**2 + ang * s**2
    out[..., 1, 1] = ve * s**2 + ang * c**2
    out[..., 0, 1] = out[..., 1, 0] = s * c * (ve - ang)
    return out


def apply_noise(
    truth: TrueStates,
    spec: NoiseSpec,
    with_phase: bool = True,
    seed: int = 0,
    sigma_delta_inflation: float = 100.0,
) -> MeasurementSet:
    """Perturb the exact states with independent Gaussian measurement noise.

    Magnitudes and powers get multiplicative noise, the angle additive noise.
    Without the phase the voltage is taken as its magnitude and the cartesian
    covariance uses ``theta = 0`` with an angle variance of
    ``(sigma_delta_inflation * spec.sigma_theta)**2``.
    """
    big_n, n = truth.v.shape

    def draws(tag):
        out = np.empty((big_n, n))
        for h in range(n):
            out[:, h] = stream_rng(seed, tag, h).standard_normal(big_n)
        return out

    v_mag = truth.v * (1 + spec.sigma_v_rel * draws(_NOISE_V))
    p = truth.p * (1 + spec.sigma_p_rel * draws(_NOISE_P))
    q = truth.q * (1 + spec.sigma_q_rel * draws(_NOISE_Q))
    theta = truth.theta + spec.sigma_theta * draws(_NOISE_TH) if with_phase else None
    return measurements_from_readings(v_mag, theta, p, q, spec, sigma_delta_inflation)


def measurements_from_readings(
    v_mag, theta, p, q, spec: NoiseSpec, sigma_delta_inflation: float = 100.0
) -> MeasurementSet:
    """Wrap raw readings (``theta=None`` without phase) with their voltage covariances."""
    v_mag, p, q = (np.asarray(a, dtype=float) for a in (v_mag, p, q))
    var_eps = (spec.sigma_v_rel * v_mag) ** 2
    if theta is not None:
        theta = np.asarray(theta, dtype=float)
        cov_v = polar_covariance_to_cartesian(v_mag, theta, var_eps, spec.sigma_theta**2)
        v_re, v_im = v_mag * np.cos(theta), v_mag * np.sin(theta)
    else:
        var_delta = (sigma_delta_inflation * spec.sigma_theta) ** 2
        cov_v = polar_covariance_to_cartesian(v_mag, 0.0, var_eps, var_delta)
        v_re, v_im = v_mag.copy(), np.zeros_like(v_mag)
    return MeasurementSet(v_mag=v_mag, theta=theta, p=p, q=q, v_re=v_re, v_im=v_im, cov_v=cov_v, noise=spec)


def derive_currents(ms: MeasurementSet) -> MeasurementSet:
    """Currents ``conj((p + j q) / V)`` and their first-order covariance.

    With ``I = (p - j q) exp(j theta) / v`` the Jacobian with respect to
    ``(p, q, v, theta)`` is propagated through the relative noise levels of
    ``ms.noise``. Without the phase ``theta`` is zero and carries no noise.
    """
    if ms.centered:
        raise ValueError("derive currents before centering")
    v = ms.v_mag
    bad = np.argwhere(v == 0)
    if bad.size:
        t, h = bad[0]
        raise ZeroDivisionError(f"zero voltage magnitude at sample {t}, bus {h + 1}")
    th = ms.theta if ms.with_phase else np.zeros_like(v)
    rot = np.exp(1j * th)
    cur = (ms.p - 1j * ms.q) * rot / v

    nz = ms.noise
    sig_p = nz.sigma_p_rel * np.abs(ms.p)
    sig_q = nz.sigma_q_rel * np.abs(ms.q)
    sig_v = nz.sigma_v_rel * v
    # dI = (dp - j dq) e^{j th} / v - I dv / v + j I dth
    cols = [rot / v * sig_p, -1j * rot / v * sig_q, -cur / v * sig_v]
    if ms.with_phase:
        cols.append(1j * cur * nz.sigma_theta)
    jac = np.stack([np.stack([c.real, c.imag], axis=-1) for c in cols], axis=-1)  # (N, n, 2, m)
    cov_i = jac @ np.swapaxes(jac, -1, -2)
    return replace(ms, i_re=cur.real.copy(), i_im=cur.imag.copy(), cov_i=cov_i)


_CENTERED_FIELDS = ("v_mag", "theta", "p", "q", "v_re", "v_im", "i_re", "i_im")


def center(ms: MeasurementSet) -> MeasurementSet:
    """Subtract the time mean of every measured column; covariances are kept.

    Idempotent: centering centered data changes nothing beyond rounding.
    The removed means accumulate in ``offsets``.
    """
    changes = {}
    offsets = dict(ms.offsets)
    for name in _CENTERED_FIELDS:
        arr = getattr(ms, name)
        if arr is None:
            continue
        mean = arr.mean(axis=0)
        changes[name] = arr - mean
        offsets[name] = offsets.get(name, 0.0) + mean
    return replace(ms, centered=True, offsets=offsets, **changes)
