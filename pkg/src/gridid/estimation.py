"""Admittance matrix estimators.

The maximum likelihood estimator treats both the voltages and the currents as
noisy (errors-in-variables). With per-entry 2x2 noise covariances it solves

    min_{Y, dV, dI}  sum_{t,h} |dV_th|^2_{Sv^-1} + |dI_th|^2_{Si^-1}
    s.t.             I~ - dI = (V~ - dV) Y

For fixed ``Y`` the minimum-norm corrections have a closed form per time
sample, so the estimator works on the profile objective in ``Y`` alone and
takes damped Gauss-Newton steps on it (variable projection). Steps are only
accepted when the objective decreases.

Centered measurement sets are regressed on their variations plus one extra
row holding the removed time means, which keeps the problem well conditioned
while leaving entries tied to constant voltages identifiable.

Complex quantities are handled in an interleaved real layout: a complex
n-vector ``u`` maps to ``[Re u_1, Im u_1, Re u_2, ...]``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels
from .measurement import MeasurementSet, polar_covariance_to_cartesian

__all__ = [
    "ObservabilityError",
    "EstimatorConfig",
    "EstimationResult",
    "ParameterLayout",
    "neg_log_likelihood",
    "ols_estimate",
    "mle_estimate",
    "lasso_estimate",
    "profile_objective",
    "objective",
    "objective_gradient",
]

log = logging.getLogger(__name__)

COV_REGULARIZATION = 1e-12
# relative objective decrease below which an iteration counts as stalled; the objective is a
# chi-square sum of about 2 N n terms, so this is roughly one unit at N = 1440, n = 33
STALL_TOL = 1e-5
STALL_STEPS = 3
ADAPTIVE_TAU = 1e-6


class ObservabilityError(np.linalg.LinAlgError):
    """The measurements do not determine the admittance matrix (rank deficiency)."""


@dataclass(frozen=True)
class EstimatorConfig:
    max_iters: int = 100
    rel_tol: float = 1e-8
    enforce_symmetry: bool = True
    phase_mode: str = "with_phase"
    sigma_delta_inflation: float = 100.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.sigma_delta_inflation < 1:
            raise ValueError("sigma_delta_inflation must be >= 1")
        if self.phase_mode not in ("with_phase", "phaseless"):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")


@dataclass
class EstimationResult:
    y_hat: np.ndarray
    delta_v_hat: np.ndarray
    delta_i_hat: np.ndarray
    neg_log_likelihood_trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    gradient_norm: float = np.nan


# ---------------------------------------------------------------------------
# parameterisation


class ParameterLayout:
    """Maps a real parameter vector onto the complex n-by-n matrix.

    Symmetric layouts keep one complex parameter per unordered pair ``h <= k``
    (a duplication mapping); general layouts one per entry. ``index[k]`` lists,
    for column ``k`` in interleaved real form, the parameter index of every row
    entry.
    """

    def __init__(self, n: int, symmetric: bool = True):
        self.n = n
        self.symmetric = symmetric
        pair = np.empty((n, n), dtype=np.intp)
        if symmetric:
            iu, ju = np.triu_indices(n)
            pair[iu, ju] = np.arange(iu.size)
            pair[ju, iu] = pair[iu, ju]
            self.n_complex = iu.size
        else:
            pair[:] = np.arange(n * n).reshape(n, n)
            self.n_complex = n * n
        self.pair = pair
        # column k, row h, part a -> 2 * pair[h, k] + a
        self.index = np.ascontiguousarray((2 * pair.T[:, :, None] + np.arange(2)).reshape(n, 2 * n))

    @property
    def size(self) -> int:
        return 2 * self.n_complex

    def to_matrix(self, theta: np.ndarray) -> np.ndarray:
        z = theta[0::2] + 1j * theta[1::2]
        return z[self.pair]

    def from_matrix(self, y: np.ndarray) -> np.ndarray:
        theta = np.empty(self.size)
        src = np.zeros(self.n_complex, dtype=complex)
        src[self.pair.ravel()] = np.asarray(y).ravel()  # symmetric: later duplicates win
        theta[0::2], theta[1::2] = src.real, src.imag
        return theta

    def off_diagonal_mask(self) -> np.ndarray:
        """Boolean mask over real parameters that belong to off-diagonal entries."""
        off = np.ones(self.n_complex, dtype=bool)
        off[self.pair[np.arange(self.n), np.arange(self.n)]] = False
        return np.repeat(off, 2)


# ---------------------------------------------------------------------------
# real-layout helpers


def _row_operator(v: np.ndarray) -> np.ndarray:
    """(N, 2, 2n) real matrices A_t with ``A_t y_k = real(v_t @ y[:, k])``."""
    big_n, n = v.shape
    a = np.empty((big_n, 2, n, 2))
    a[:, 0, :, 0] = v.real
    a[:, 0, :, 1] = -v.imag
    a[:, 1, :, 0] = v.imag
    a[:, 1, :, 1] = v.real
    return a.reshape(big_n, 2, 2 * n)


def _right_multiplier(y: np.ndarray) -> np.ndarray:
    """Real 2n x 2n matrix M with ``real(u @ y) = M.T @ real(u)``."""
    n = y.shape[0]
    m = np.empty((n, 2, n, 2))
    m[:, 0, :, 0] = y.real
    m[:, 0, :, 1] = y.imag
    m[:, 1, :, 0] = -y.imag
    m[:, 1, :, 1] = y.real
    return m.reshape(2 * n, 2 * n)


def _interleave(z: np.ndarray) -> np.ndarray:
    return np.stack([z.real, z.imag], axis=-1).reshape(*z.shape[:-1], 2 * z.shape[-1])


def _deinterleave(x: np.ndarray) -> np.ndarray:
    x = x.reshape(*x.shape[:-1], -1, 2)
    return x[..., 0] + 1j * x[..., 1]


def _regularized(cov: np.ndarray) -> np.ndarray:
    return cov + COV_REGULARIZATION * np.eye(2)


def _inv2(cov: np.ndarray) -> np.ndarray:
    a, b, c, d = cov[..., 0, 0], cov[..., 0, 1], cov[..., 1, 0], cov[..., 1, 1]
    det = a * d - b * c
    if np.any(det <= 0):
        raise np.linalg.LinAlgError("singular noise covariance after regularisation")
    out = np.empty_like(cov)
    out[..., 0, 0] = d / det
    out[..., 1, 1] = a / det
    out[..., 0, 1] = -b / det
    out[..., 1, 0] = -c / det
    return out


def _block_apply(blocks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply per-node 2x2 blocks (N, n, 2, 2) to interleaved vectors (N, 2n)."""
    big_n, n = blocks.shape[:2]
    return np.einsum("thab,thb->tha", blocks, x.reshape(big_n, n, 2)).reshape(big_n, 2 * n)


# ---------------------------------------------------------------------------
# objective pieces


def neg_log_likelihood(delta_v, delta_i, cov_v, cov_i) -> float:
    """Sum of squared Mahalanobis norms of the voltage and current corrections.

    Covariances are regularised by adding ``1e-12`` to their diagonals.
    """
    total = 0.0
    for d, cov in ((delta_v, cov_v), (delta_i, cov_i)):
        d = np.asarray(d, dtype=complex)
        cov = np.broadcast_to(np.asarray(cov, float), d.shape + (2, 2))
        x = np.stack([d.real, d.imag], axis=-1).reshape(-1, 2)
        w = _inv2(_regularized(cov)).reshape(-1, 2, 2)
        total += float(np.einsum("ka,kab,kb->", x, w, x))
    return total


def _normal_equations(v, i, w_i, layout: ParameterLayout):
    """Normal matrix and right-hand side of the weighted regression ``i ~ v Y``."""
    big_n, n = v.shape
    a = _row_operator(v)
    a_flat = a.reshape(2 * big_n, 2 * n)
    blocks = np.empty((n, 2 * n, 2 * n))
    rhs = np.zeros(layout.size)
    for k in range(n):
        wa = np.matmul(w_i[:, k], a)  # (N, 2, 2n)
        blocks[k] = a_flat.T @ wa.reshape(2 * big_n, 2 * n)
        wi = np.einsum("tab,tb->ta", w_i[:, k], np.stack([i[:, k].real, i[:, k].imag], axis=-1))
        np.add.at(rhs, layout.index[k], a_flat.T @ wi.reshape(2 * big_n))
    h = np.zeros((layout.size, layout.size))
    kernels.scatter_add_blocks(h, blocks, layout.index)
    return h, rhs


def _solve_normal(h, rhs) -> np.ndarray:
    d = np.sqrt(np.diagonal(h).copy())
    if np.any(d <= 0):
        raise ObservabilityError("a parameter does not enter any equation (zero column)")
    hs = h / d[:, None] / d[None, :]
    evals = np.linalg.eigvalsh(hs)
    if evals[0] <= 1e-13 * evals[-1]:
        deficiency = int(np.sum(evals <= 1e-13 * evals[-1]))
        raise ObservabilityError(
            f"normal matrix is rank deficient by {deficiency} (condition {evals[-1] / max(evals[0], 1e-300):.2e}); "
            "the measurements do not determine the admittance matrix"
        )
    c = sla.cho_factor(hs)
    return sla.cho_solve(c, rhs / d) / d


def _project(y, v, i, cov_v, cov_i, full=False):
    """Minimum-norm corrections for fixed Y.

    For every sample the residual ``r = i - v Y`` must be explained by
    ``dI - dV Y = r``; the weighted minimum-norm solution is
    ``dI = Si K^-1 r`` and ``dV = -Sv M K^-1 r`` with ``K = M' Sv M + Si``.
    Returns ``(dV, dI, value)`` where ``value`` is the attained objective;
    with ``full`` also the multipliers ``K^-1 r`` and ``K^-1`` itself.
    """
    big_n, n = v.shape
    m = _right_multiplier(y)
    r = _interleave(i - v @ y)
    mr = m.reshape(n, 2, 2 * n)
    sv_m = np.einsum("thab,hbj->thaj", cov_v, mr).reshape(big_n, 2 * n, 2 * n)
    k = np.matmul(m.T, sv_m)
    for h in range(n):
        k[:, 2 * h:2 * h + 2, 2 * h:2 * h + 2] += cov_i[:, h]
    # K is symmetric positive definite; symmetrise away round-off first
    k = 0.5 * (k + np.swapaxes(k, 1, 2))
    try:
        chol = np.linalg.cholesky(k)
        linv = np.linalg.inv(chol)
        white = np.matmul(linv, r[..., None])[..., 0]
        lam = np.matmul(np.swapaxes(linv, 1, 2), white[..., None])[..., 0]
        value = float(np.einsum("ta,ta->", white, white))
        kinv = np.matmul(np.swapaxes(linv, 1, 2), linv) if full else None
    except np.linalg.LinAlgError:
        kinv = np.linalg.inv(k)
        lam = np.matmul(kinv, r[..., None])[..., 0]
        value = float(np.einsum("ta,ta->", r, lam))
    dv = -_block_apply(cov_v, lam @ m.T)
    di = _block_apply(cov_i, lam)
    if full:
        return _deinterleave(dv), _deinterleave(di), value, lam, kinv
    return _deinterleave(dv), _deinterleave(di), value


def _fold_matrix(layout: ParameterLayout) -> sp.csr_matrix:
    """0/1 matrix mapping parameters to the full (column k, entry j) layout."""
    rows = layout.index.size
    return sp.csr_matrix(
        (np.ones(rows), (np.arange(rows), layout.index.ravel())), shape=(rows, layout.size)
    )


def _gauss_newton_system(u, lam, kinv, layout: ParameterLayout, chunk: int = 256):
    """Reduced Gauss-Newton system for the admittance parameters.

    With the corrections eliminated, the curvature is
    ``S = sum_t B_t' K_t^-1 B_t`` where ``B_t`` maps the parameters to the
    current residual through the corrected voltages ``u_t``; the right-hand
    side is ``sum_t B_t' K_t^-1 r_t`` (the negative half gradient).

    ``B_t`` acts column by column with the same 2 x 2n row operator ``A_t``,
    so in the full layout ``S[(k, j), (l, j')] = sum_t sum_ab
    Kinv_t[k a, l b] A_t[a, j] A_t[b, j']``: one matrix product over the
    stacked (t, a, b) index.
    """
    big_n, n = u.shape
    a = _row_operator(u)  # (N, 2, 2n)
    rhs_full = np.einsum("taj,tka->kj", a, lam.reshape(big_n, n, 2))
    rhs = np.zeros(layout.size)
    np.add.at(rhs, layout.index, rhs_full)

    kinv = kinv.reshape(big_n, n, 2, n, 2)
    full = np.zeros((n * n, 4 * n * n))
    for lo in range(0, big_n, chunk):
        hi = min(big_n, lo + chunk)
        x = kinv[lo:hi].transpose(0, 2, 4, 1, 3).reshape(-1, n * n)
        p = np.einsum("taj,tbk->tabjk", a[lo:hi], a[lo:hi]).reshape(-1, 4 * n * n)
        full += x.T @ p
    full = full.reshape(n, n, 2 * n, 2 * n).transpose(0, 2, 1, 3).reshape(2 * n * n, 2 * n * n)
    fold = _fold_matrix(layout)
    s = np.asarray(fold.T @ (fold.T @ full).T)
    return 0.5 * (s + s.T), rhs


def profile_objective(y, v, i, cov_v, cov_i) -> float:
    """Negative log-likelihood minimised over the corrections for fixed Y."""
    return _project(np.asarray(y, complex), v, i, _regularized(cov_v), _regularized(cov_i))[2]


def objective(theta, delta_v, v, i, cov_v, cov_i, layout: ParameterLayout) -> float:
    """Objective with the current correction eliminated through the constraint."""
    y = layout.to_matrix(theta)
    di = i - (v - delta_v) @ y
    return neg_log_likelihood(delta_v, di, cov_v, cov_i)


def objective_gradient(theta, delta_v, v, i, cov_v, cov_i, layout: ParameterLayout):
    """Gradient of :func:`objective` with respect to ``theta`` and ``delta_v``.

    Returns ``(grad_theta, grad_dv)``; ``grad_dv`` is complex with real and
    imaginary parts holding the derivatives for the two components.
    """
    big_n, n = v.shape
    y = layout.to_matrix(theta)
    w_v = _inv2(_regularized(np.broadcast_to(cov_v, v.shape + (2, 2))))
    w_i = _inv2(_regularized(np.broadcast_to(cov_i, v.shape + (2, 2))))
    vp = v - delta_v
    r = _interleave(i - vp @ y)
    wr = _block_apply(w_i, r)  # (N, 2n)
    a = _row_operator(vp)
    grad = np.zeros(layout.size)
    wr_cols = wr.reshape(big_n, n, 2)
    for k in range(n):
        g_k = -2.0 * np.einsum("taj,ta->j", a, wr_cols[:, k])
        np.add.at(grad, layout.index[k], g_k)
    m = _right_multiplier(y)
    g_dv = 2.0 * _block_apply(w_v, _interleave(delta_v)) + 2.0 * wr @ m.T
    return grad, _deinterleave(g_dv)


# ---------------------------------------------------------------------------
# estimators


def _regression_data(ms: MeasurementSet, cov_v=None):
    """Regressor and response matrices plus covariances used by the estimators.

    For centered sets the removed time means are appended as one extra
    sample: the centered rows carry the variations, the mean row keeps the
    entries multiplying constant voltages (the substation) identifiable.
    """
    if ms.i_re is None:
        raise ValueError("measurement set has no currents; call derive_currents first")
    v, i = ms.voltage, ms.current
    cov_v = ms.cov_v if cov_v is None else cov_v
    cov_i = ms.cov_i
    if ms.centered:
        off = ms.offsets
        v_mean = off["v_re"] + 1j * off["v_im"]
        i_mean = off["i_re"] + 1j * off["i_im"]
        v = np.vstack([v, v_mean])
        i = np.vstack([i, i_mean])
        cov_v = np.concatenate([cov_v, cov_v.mean(axis=0, keepdims=True)])
        cov_i = np.concatenate([cov_i, cov_i.mean(axis=0, keepdims=True)])
    return v, i, cov_v, cov_i


def ols_estimate(ms: MeasurementSet, enforce_symmetry: bool = True) -> np.ndarray:
    """Ordinary least squares ``min ||I~ - V~ Y||_F`` treating V~ as exact."""
    v, i, _, _ = _regression_data(ms)
    big_n, n = v.shape
    y, _, rank, _ = np.linalg.lstsq(v, i, rcond=None)
    if rank < n:
        raise ObservabilityError(f"voltage matrix has rank {rank} < {n}: grid not observable")
    if enforce_symmetry:
        y = (y + y.T) / 2
    return y


def _phaseless_cov_v(ms: MeasurementSet, inflation: float) -> np.ndarray:
    v_mag = ms.v_mag + ms.offsets.get("v_mag", 0.0)
    var_eps = (ms.noise.sigma_v_rel * v_mag) ** 2
    var_delta = (inflation * ms.noise.sigma_theta) ** 2
    return polar_covariance_to_cartesian(v_mag, 0.0, var_eps, var_delta)


def mle_estimate(ms: MeasurementSet, cfg: EstimatorConfig | None = None) -> EstimationResult:
    """Maximum likelihood (weighted total least squares) admittance estimate.

    Starts from the weighted least-squares solution (no voltage correction).
    Each iteration takes a damped Gauss-Newton step on the admittance
    parameters with the corrections eliminated, then recomputes the exact
    minimum-norm corrections for the new matrix. Steps that do not lower the
    objective are rejected and the damping raised, so the recorded objective
    is non-increasing.

    ``converged`` is set when the relative change of the matrix drops below
    ``cfg.rel_tol`` (or no further descent is possible). At high noise the
    likelihood can be nearly flat along a direction in which the matrix keeps
    drifting; after ``STALL_STEPS`` consecutive steps that lower the objective
    by less than ``STALL_TOL`` relative, the loop stops with
    ``converged=False``.
    """
    cfg = cfg or EstimatorConfig()
    want_phase = cfg.phase_mode == "with_phase"
    if want_phase != ms.with_phase:
        raise ValueError(f"phase_mode {cfg.phase_mode!r} does not match the measurement set")
    v, i, cov_v, cov_i = _regression_data(
        ms, None if want_phase else _phaseless_cov_v(ms, cfg.sigma_delta_inflation))
    big_n, n = v.shape
    if big_n < n:
        raise ObservabilityError(f"{big_n} samples cannot determine a {n}-bus matrix")
    cov_v = _regularized(cov_v)
    cov_i = _regularized(cov_i)
    layout = ParameterLayout(n, cfg.enforce_symmetry)

    theta = _solve_normal(*_normal_equations(v, i, _inv2(cov_i), layout))
    y = layout.to_matrix(theta)
    dv, di, value, lam, kinv = _project(y, v, i, cov_v, cov_i, full=True)
    trace = [value]
    converged = False
    damping = 1e-9
    stalled = 0
    it = 1
    while it < cfg.max_iters and not converged:
        s, rhs = _gauss_newton_system(v - dv, lam, kinv, layout)
        d = np.sqrt(np.diagonal(s).copy())
        d[d == 0] = 1.0
        ss = s / d[:, None] / d[None, :]
        accepted = False
        for _ in range(12):
            try:
                step = sla.solve(ss + damping * np.eye(layout.size), rhs / d, assume_a="pos") / d
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            y_new = layout.to_matrix(theta + step)
            out = _project(y_new, v, i, cov_v, cov_i, full=True)
            if out[2] <= value:
                accepted = True
                break
            damping *= 10
        it += 1
        if not accepted:
            # no descent left at working precision
            converged = True
            break
        rel_step = np.linalg.norm(y_new - y) / max(np.linalg.norm(y_new), 1e-300)
        theta = theta + step
        y = y_new
        dv, di, value, lam, kinv = out
        trace.append(value)
        log.debug("iteration %d: objective %.12g (decrease %.3g), relative step %.3g, damping %.1e",
                  it, value, trace[-2] - value, rel_step, damping)
        damping = max(damping / 10, 1e-12)
        if rel_step < cfg.rel_tol:
            converged = True
            break
        # a flat valley: the matrix keeps moving but the likelihood no longer changes
        stalled = stalled + 1 if trace[-2] - value <= STALL_TOL * abs(value) else 0
        if stalled >= STALL_STEPS:
            log.debug("objective stalled after %d iterations; stopping unconverged", it)
            break
    g_theta, _ = objective_gradient(theta, dv, v, i, cov_v - COV_REGULARIZATION * np.eye(2),
                                    cov_i - COV_REGULARIZATION * np.eye(2), layout)
    n_rows = ms.shape[0]  # drop the appended mean row, if any
    return EstimationResult(
        y_hat=y,
        delta_v_hat=dv[:n_rows],
        delta_i_hat=di[:n_rows],
        neg_log_likelihood_trace=trace,
        converged=converged,
        iterations=it,
        gradient_norm=float(np.linalg.norm(g_theta)),
    )


def _lasso_path_fit(h, g, penalty_base, lambdas, x0, tol, max_sweeps):
    """Warm-started coordinate-descent fits for each lambda; returns the list of solutions."""
    x = x0.copy()
    hx = h @ x
    out = []
    for lam in lambdas:
        kernels.cd_weighted_l1(h, g, lam * penalty_base, x, hx, tol, max_sweeps)
        out.append(x.copy())
    return out


def lasso_estimate(
    ms: MeasurementSet,
    lambda_grid=None,
    holdout: float = 0.2,
    seed: int = 0,
    tol: float = 1e-6,
    max_sweeps: int = 1000,
    return_lambda: bool = False,
):
    """Adaptive Lasso baseline on the equation-error model ``I~ = V~ Y``.

    Minimises ``||I~ - V~ Y||_F^2 + lam * sum_{h != k} w_hk (|Re Y_hk| + |Im Y_hk|)``
    over the upper triangle, with ``w_hk = 1 / (|Y_ols_hk| + 1e-6)``. ``lam``
    is chosen on a random held-out fraction of the samples (smallest ``lam``
    whose validation error is within 1% of the best) and the model is refit
    on all samples. ``lambda_grid`` values are relative to the data scale
    ``lam_max``; ``0`` reproduces the symmetric least-squares fit.

    Centered voltages make the normal matrix badly conditioned, so coordinate
    descent converges slowly; ``tol`` and ``max_sweeps`` bound the work per
    ``lam`` and the fits are warm-started from the least-squares solution.
    """
    v, i, _, _ = _regression_data(ms)
    big_n, n = v.shape
    layout = ParameterLayout(n, True)
    y_ols = ols_estimate(ms, enforce_symmetry=True)
    weights = np.repeat(1.0 / (np.abs(_upper(y_ols, layout)) + ADAPTIVE_TAU), 2)
    off = layout.off_diagonal_mask()
    # each off-diagonal parameter stands for the two entries (h, k) and (k, h)
    penalty_base = np.where(off, 2.0 * weights, 0.0)

    eye = np.broadcast_to(np.eye(2), (big_n, n, 2, 2))

    def system(rows):
        return _normal_equations(v[rows], i[rows], eye[rows], layout)

    h_all, g_all = system(slice(None))
    scale = np.abs(np.diagonal(h_all)).max()
    lam_max = float(np.max(2.0 * np.abs(g_all[off]) / penalty_base[off]))
    if lambda_grid is None:
        lambda_grid = np.concatenate([[0.0], np.logspace(-10, 0, 21)])
    rel_grid = np.sort(np.asarray(lambda_grid, float))
    lambdas = rel_grid * lam_max

    if len(lambdas) > 1:
        perm = np.random.default_rng(seed).permutation(big_n)
        n_val = max(1, int(round(holdout * big_n)))
        val, fit = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        h_fit, g_fit = system(fit)
        x0 = _solve_normal(h_fit, g_fit)
        sols = _lasso_path_fit(h_fit, g_fit, penalty_base, lambdas, x0, tol, max_sweeps)
        errs = np.array([np.linalg.norm(i[val] - v[val] @ layout.to_matrix(x)) ** 2 for x in sols])
        best = errs.min()
        chosen = int(np.flatnonzero(errs <= best * 1.01 + 1e-300)[0])
    else:
        chosen = 0
    lam = lambdas[chosen]
    x0 = _solve_normal(h_all, g_all)
    if lam > 0:
        kernels.cd_weighted_l1(h_all / scale, g_all / scale, lam * penalty_base / scale, x0, (h_all @ x0) / scale,
                               tol, max_sweeps)
    y = layout.to_matrix(x0)
    return (y, float(rel_grid[chosen])) if return_lambda else y


def _upper(y, layout: ParameterLayout) -> np.ndarray:
    iu, ju = np.triu_indices(layout.n)
    return y[iu, ju]
