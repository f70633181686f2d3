"""Pure-Python reference versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the compiled module; only speed differs.
"""
import numpy as np


def scatter_add_blocks(H, blocks, index):
    """``H[index[k][:, None], index[k][None, :]] += blocks[k]`` for every k.

    ``index[k]`` must not repeat an entry within one row.
    """
    for k in range(blocks.shape[0]):
        ix = index[k]
        H[np.ix_(ix, ix)] += blocks[k]
    return H


def cd_weighted_l1(H, g, penalty, x, Hx, tol, max_sweeps):
    """Cyclic coordinate descent for ``x'Hx - 2 g'x + sum(penalty * |x|)``.

    ``x`` and ``Hx`` (= H @ x) are updated in place. Returns the number of
    sweeps run; the loop stops once the largest coordinate change of a sweep
    falls below ``tol`` times the largest coordinate magnitude.
    """
    p = x.shape[0]
    diag = np.diagonal(H)
    for sweep in range(1, max_sweeps + 1):
        max_step = 0.0
        max_x = 0.0
        for j in range(p):
            hjj = diag[j]
            if hjj <= 0.0:
                continue
            old = x[j]
            z = g[j] - Hx[j] + hjj * old
            thr = 0.5 * penalty[j]
            if z > thr:
                new = (z - thr) / hjj
            elif z < -thr:
                new = (z + thr) / hjj
            else:
                new = 0.0
            if new != old:
                delta = new - old
                x[j] = new
                Hx += delta * H[:, j]
                if abs(delta) > max_step:
                    max_step = abs(delta)
            if abs(new) > max_x:
                max_x = abs(new)
        if max_step <= tol * max(max_x, 1e-300):
            return sweep
    return max_sweeps
