"""AC power flow and the linearised power models.

Three power models are provided for a single time sample:

* :func:`exact_powers` -- the nonlinear relation ``s = v * conj(Y v)``;
* :func:`linearized_powers` -- the small-angle Taylor expansion around equal
  angles;
* :func:`adapted_constraint_powers` -- the power relation implied by the
  phase-less estimator constraint, where the voltage phasor is replaced by
  ``v + j v theta``.

:func:`constraint_difference` evaluates the closed form of the gap between the
last two.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import AdmittanceMatrix

__all__ = [
    "VoltageState",
    "Injections",
    "PowerFlowDivergence",
    "solve_powerflow",
    "exact_powers",
    "linearized_powers",
    "adapted_constraint_powers",
    "constraint_difference",
]


class PowerFlowDivergence(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class VoltageState:
    v: np.ndarray
    theta: np.ndarray

    @property
    def phasor(self) -> np.ndarray:
        return self.v * np.exp(1j * self.theta)


@dataclass(frozen=True)
class Injections:
    p: np.ndarray
    q: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return self.p + 1j * self.q


def _as_complex(y) -> np.ndarray:
    return y.y if isinstance(y, AdmittanceMatrix) else np.asarray(y, dtype=complex)


def exact_powers(y, state: VoltageState) -> Injections:
    """Complex power injections ``diag(V) conj(Y V)``."""
    ybus = _as_complex(y)
    vc = state.phasor
    if ybus.shape != (vc.size, vc.size):
        raise ValueError(f"dimension mismatch: Y is {ybus.shape}, state has {vc.size} nodes")
    s = vc * np.conj(ybus @ vc)
    return Injections(s.real, s.imag)


def solve_powerflow(
    y,
    inj: Injections,
    slack_v: float = 1.0,
    slack: int = 0,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> VoltageState:
    """Newton-Raphson power flow in polar coordinates from a flat start.

    ``inj`` holds per-unit injections; the slack entries are ignored. The
    returned state reproduces the injections at every PQ bus to within ``tol``
    (infinity norm of the mismatch).

    Raises
    ------
    PowerFlowDivergence
        If the mismatch is not below ``tol`` after ``max_iter`` iterations.
    """
    ybus = _as_complex(y)
    n = ybus.shape[0]
    pq = np.array([h for h in range(n) if h != slack])
    target = np.asarray(inj.p, float)[pq] + 1j * np.asarray(inj.q, float)[pq]
    vm = np.ones(n)
    va = np.zeros(n)
    vm[slack] = slack_v

    residual = np.inf
    for _ in range(max_iter + 1):
        vc = vm * np.exp(1j * va)
        ibus = ybus @ vc
        mis = (vc * np.conj(ibus))[pq] - target
        f = np.concatenate([mis.real, mis.imag])
        residual = np.abs(f).max()
        if residual < tol:
            return VoltageState(vm.copy(), va.copy())
        # standard complex derivative forms of s = diag(V) conj(Y V)
        diag_v = np.diag(vc)
        diag_i = np.diag(ibus)
        diag_vnorm = np.diag(vc / vm)
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        ds_dvm = diag_v @ np.conj(ybus @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
        sub_a = ds_dva[np.ix_(pq, pq)]
        sub_m = ds_dvm[np.ix_(pq, pq)]
        jac = np.block([[sub_a.real, sub_m.real], [sub_a.imag, sub_m.imag]])
        dx = np.linalg.solve(jac, -f)
        m = pq.size
        va[pq] += dx[:m]
        vm[pq] += dx[m:]
        if not np.all(np.isfinite(vm)) or np.any(vm <= 0):
            break
    raise PowerFlowDivergence(
        f"Newton-Raphson did not converge in {max_iter} iterations (mismatch {residual:.3e})",
        float(residual),
    )


def linearized_powers(y, state: VoltageState) -> Injections:
    """Small-angle linearisation of the power flow equations.

    ``p_h = v_h sum_k v_k G_hk + v_h sum_{k!=h} v_k B_hk (theta_h - theta_k)``
    ``q_h = -v_h sum_k v_k B_hk + v_h sum_{k!=h} v_k G_hk (theta_h - theta_k)``

    Intended for angle differences below roughly 0.1 rad; this is not checked.
    """
    ybus = _as_complex(y)
    g, b = ybus.real, ybus.imag
    v, th = state.v, state.theta
    dth = th[:, None] - th[None, :]  # diagonal is zero, so k == h drops out
    p = v * (g @ v) + v * ((b * dth) @ v)
    q = -v * (b @ v) + v * ((g * dth) @ v)
    return Injections(p, q)


def adapted_constraint_powers(y, state: VoltageState) -> Injections:
    """Powers implied by the phase-less estimator constraint.

    ``p_h = v_h sum_k v_k G_hk + v_h sum_{k!=h} B_hk (v_h theta_h - v_k theta_k)``
    and the analogous reactive expression with ``G`` in the angle term.
    """
    ybus = _as_complex(y)
    g, b = ybus.real, ybus.imag
    v, th = state.v, state.theta
    w = v * th
    dw = w[:, None] - w[None, :]
    p = v * (g @ v) + v * (b * dw).sum(axis=1)
    q = -v * (b @ v) + v * (g * dw).sum(axis=1)
    return Injections(p, q)


def constraint_difference(y, state: VoltageState) -> tuple[np.ndarray, np.ndarray]:
    """Absolute gap between :func:`linearized_powers` and :func:`adapted_constraint_powers`.

    ``|dp_h| = |v_h theta_h sum_{k!=h} B_hk (v_h - v_k)|`` and likewise with ``G``.
    """
    ybus = _as_complex(y)
    g, b = ybus.real, ybus.imag
    v, th = state.v, state.theta
    dv = v[:, None] - v[None, :]
    dp = np.abs(v * th * (b * dv).sum(axis=1))
    dq = np.abs(v * th * (g * dv).sum(axis=1))
    return dp, dq
