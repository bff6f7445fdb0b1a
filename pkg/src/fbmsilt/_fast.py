"""Compiled inner loops for the representation check.

The integrand of the martingale representation couples every Riemann cell
(s, t) of the local-time triangle with every Ito time r, an O(N^3) triple
loop per path. The loop below makes it affordable by updating each cell's
conditional mean A and conditional variance sigma^2 incrementally in the
r index: A gains one term per step and sigma^2 loses one, so the cost per
(cell, r) pair is constant. Cells are sorted by their t index, which makes
the active set at every r a contiguous tail of the cell arrays.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_VARIANCE_GUARD = 1


def make_cells(m_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell index pairs (p, q), p < q, sorted by q then p.

    With this ordering the cells still active at fine step l (those with
    q * stride > l) form the tail starting at qmin * (qmin - 1) / 2.
    """
    p = []
    q = []
    for j in range(1, m_nodes):
        for i in range(j):
            p.append(i)
            q.append(j)
    return np.asarray(p, dtype=np.int64), np.asarray(q, dtype=np.int64)


@njit(cache=True)
def inner_series(kap, cells_p, cells_q, s2_init, dw, delta, stride, eps,
                 k2_guard, h2):
    """Per-step inner integrals of the representation integrand.

    kap:      (M, N) kernel matrix, row q = K(t_{q*stride}, .) at the N
              fine-cell midpoints (zero beyond the diagonal).
    s2_init:  per-cell initial conditional variance (full increment
              variance under the discrete model).
    dw:       (N, d) driving increments on the fine grid.
    stride:   coarse cell stride c; cell (p, q) covers the square of side
              c * delta at fine nodes (p*c, q*c).
    eps:      mollifier bandwidth; 0 runs the diagnostic mode guarded by
              k2_guard: sigma^2 must stay above
              0.9 * k2_guard * (t - r)^h2 on every active cell.

    Returns (inner, status): inner[l, i] is the (s, t) sum of the
    integrand for r in cell l and coordinate i, already carrying the cell
    area; status flags a variance-guard violation.
    """
    n_steps, d = dw.shape
    ncells = cells_p.shape[0]
    cellw = (stride * delta) * (stride * delta)
    half_d = 0.5 * d
    pref = (2.0 * math.pi) ** (-half_d)

    a = np.zeros((ncells, d))
    s2 = s2_init.copy()
    inner = np.zeros((n_steps, d))
    status = STATUS_OK

    for l in range(n_steps):
        qmin = l // stride + 1
        istart = qmin * (qmin - 1) // 2
        for idx in range(istart, ncells):
            p = cells_p[idx]
            q = cells_q[idx]
            dk = kap[q, l] - kap[p, l]
            v = eps + s2[idx]
            if eps == 0.0:
                gap = (q * stride - l) * delta
                if v < 0.9 * k2_guard * gap ** h2:
                    status = STATUS_VARIANCE_GUARD
                    return inner, status
            a2 = 0.0
            for i in range(d):
                a2 += a[idx, i] * a[idx, i]
            w = dk * cellw * pref * v ** (-half_d - 1.0) \
                * math.exp(-0.5 * a2 / v)
            for i in range(d):
                inner[l, i] += w * a[idx, i]
            for i in range(d):
                a[idx, i] += dk * dw[l, i]
            s2[idx] -= dk * dk * delta
            if s2[idx] < 0.0:
                s2[idx] = 0.0
    return inner, status


@njit(cache=True)
def l_eps_cells(b, cells_p, cells_q, eps, cell_area):
    """Mollified local time on the coarse cell set from node values b (M, d)."""
    d = b.shape[1]
    pref = (2.0 * math.pi * eps) ** (-0.5 * d)
    total = 0.0
    for idx in range(cells_p.shape[0]):
        p = cells_p[idx]
        q = cells_q[idx]
        a2 = 0.0
        for i in range(d):
            diff = b[q, i] - b[p, i]
            a2 += diff * diff
        total += pref * math.exp(-0.5 * a2 / eps)
    return total * cell_area
