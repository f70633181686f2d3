"""Error metrics and diagnostics for estimated admittance matrices and power models."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .measurement import TrueStates
from .powerflow import adapted_constraint_powers, exact_powers, linearized_powers

__all__ = [
    "UndefinedMetricError",
    "MetricReport",
    "METRIC_COLUMNS",
    "rrmse",
    "mad",
    "rotated_admittance",
    "sparsity_report",
    "power_model_errors",
    "phaseless_current_errors",
]

DEFAULT_SPARSITY_THRESHOLD = 1e-3


class UndefinedMetricError(ValueError):
    """The reference has zero norm, so a relative error is undefined."""


@dataclass
class MetricReport:
    """One experiment's metrics; serialized as one CSV row in field order.

    Fields left as NaN (or -1 for the count) were not computed for the run.
    """

    rrmse_y: float = np.nan
    rrmse_p_lin: float = np.nan
    rrmse_q_lin: float = np.nan
    rrmse_p_adapted: float = np.nan
    rrmse_q_adapted: float = np.nan
    mad_p: float = np.nan
    mad_q: float = np.nan
    rrmse_i_re: float = np.nan
    rrmse_i_im: float = np.nan
    sparsity_false_positives: int = -1

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "sparsity_false_positives":
                if val < -1:
                    raise ValueError("sparsity_false_positives must be >= 0 (or -1 for missing)")
            elif val < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def as_row(self) -> list:
        return [getattr(self, c) for c in METRIC_COLUMNS]

    def as_dict(self) -> dict:
        return asdict(self)


METRIC_COLUMNS = tuple(f.name for f in fields(MetricReport))


def _pair(x, x_exact):
    x = np.asarray(x)
    x_exact = np.asarray(x_exact)
    if x.shape != x_exact.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_exact.shape}")
    return x, x_exact


def rrmse(x, x_exact) -> float:
    """Relative error ``||x_exact - x||_F / ||x_exact||_F`` (all entries flattened)."""
    x, x_exact = _pair(x, x_exact)
    ref = np.linalg.norm(x_exact.ravel())
    if ref == 0:
        raise UndefinedMetricError("reference has zero norm")
    return float(np.linalg.norm((x_exact - x).ravel()) / ref)


def mad(x, x_exact) -> float:
    """Mean absolute deviation over all entries."""
    x, x_exact = _pair(x, x_exact)
    return float(np.mean(np.abs(x - x_exact)))


def rotated_admittance(y, alpha) -> np.ndarray:
    """``D Y D^*`` with ``D = diag(exp(j alpha))``.

    This is the matrix a phase-blind regression actually sees when every node
    voltage is rotated by its own angle. Magnitudes are unchanged.
    """
    y = np.asarray(y, dtype=complex)
    alpha = np.asarray(alpha, dtype=float)
    if y.shape != (alpha.size, alpha.size):
        raise ValueError(f"alpha has {alpha.size} entries for a {y.shape} matrix")
    d = np.exp(1j * alpha)
    return d[:, None] * y * d.conj()[None, :]


def sparsity_report(y_hat, y_true, threshold: float = DEFAULT_SPARSITY_THRESHOLD) -> tuple[int, int]:
    """Off-diagonal (false_positives, false_negatives) of the support of ``y_hat``.

    A false positive is ``|y_hat| > threshold`` where ``y_true == 0``; a false
    negative is ``|y_hat| <= threshold`` where ``y_true != 0``.
    """
    y_hat, y_true = _pair(y_hat, y_true)
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    off = ~np.eye(y_true.shape[0], dtype=bool)
    found = np.abs(y_hat) > threshold
    present = y_true != 0
    fp = int(np.count_nonzero(found & ~present & off))
    fn = int(np.count_nonzero(~found & present & off))
    return fp, fn


def power_model_errors(y, states: TrueStates, base_power: float = 1.0, reference: TrueStates | None = None) -> dict:
    """Errors of the linearized and adapted power models against the exact powers.

    The models are evaluated on ``states``; the exact powers come from
    ``reference`` (default: ``states`` itself), so measured states can be
    scored against the true ones. Powers for all samples are stacked before
    taking the relative error. MAD values are multiplied by ``base_power``
    (pass MVA to get MW / MVAr).
    """
    y = np.asarray(y)
    reference = states if reference is None else reference
    ex_p, ex_q, li_p, li_q, ad_p, ad_q = ([] for _ in range(6))
    for state, ref in zip(states.states, reference.states):
        ex = exact_powers(y, ref)
        li = linearized_powers(y, state)
        ad = adapted_constraint_powers(y, state)
        ex_p.append(ex.p), ex_q.append(ex.q)
        li_p.append(li.p), li_q.append(li.q)
        ad_p.append(ad.p), ad_q.append(ad.q)
    ex_p, ex_q, li_p, li_q, ad_p, ad_q = map(np.array, (ex_p, ex_q, li_p, li_q, ad_p, ad_q))
    return {
        "rrmse_p_lin": rrmse(li_p, ex_p),
        "rrmse_q_lin": rrmse(li_q, ex_q),
        "rrmse_p_adapted": rrmse(ad_p, ex_p),
        "rrmse_q_adapted": rrmse(ad_q, ex_q),
        "mad_p_lin": base_power * mad(li_p, ex_p),
        "mad_q_lin": base_power * mad(li_q, ex_q),
        "mad_p": base_power * mad(ad_p, ex_p),
        "mad_q": base_power * mad(ad_q, ex_q),
    }


def phaseless_current_errors(truth: TrueStates, v_mag=None, p=None, q=None) -> tuple[float, float]:
    """Relative errors of the real and imaginary current parts when the phase is dropped.

    Compares ``conj(s / |v|)`` with the exact ``conj(s / v)``. Optional
    ``v_mag``, ``p``, ``q`` replace the true readings (e.g. noisy ones) in the
    approximation.
    """
    v = truth.voltage
    s = truth.p + 1j * truth.q
    exact = np.conj(s / v)
    vm = truth.v if v_mag is None else np.asarray(v_mag)
    sa = (truth.p if p is None else np.asarray(p)) + 1j * (truth.q if q is None else np.asarray(q))
    approx = np.conj(sa / vm)
    return rrmse(approx.real, exact.real), rrmse(approx.imag, exact.imag)
