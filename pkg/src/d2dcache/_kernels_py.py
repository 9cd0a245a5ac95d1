"""Vectorized numpy move scans for the local search.

Same call signatures and scan order as the compiled ``_kernels`` module.

Shared arguments
----------------
p, lam, E : (U, F), (U, U), (U, F) float64
    Demand, T^d-scaled contact intensities (zero diagonal), exposure sums.
x, ground : (U, F) uint8
    Current placement and the element pool V the procedure may draw from.
counts, quotas : (U,) int64
pay : (U, F + 2) float64
    Extended payment table, ``pay[i, k]`` = C^A_i(k).
col : (F,) float64
    Column sums of cellular terms for the current placement.
qx, qy : float64
    Breakpoints of the piecewise-linear service cost Q.
thresh : float
    Minimum accepted gain in g.
best : bool
    Return the maximum-gain move instead of the first in lexicographic order.
"""
import numpy as np


def _pick(gain, mask, thresh, best):
    """Index of the accepted move in flattened scan order, or -1."""
    mask = mask.ravel()
    gain = np.where(mask, gain.ravel(), -np.inf)
    if best:
        k = int(np.argmax(gain))
        return k if mask[k] and gain[k] >= thresh else -1
    hits = np.flatnonzero(mask & (gain >= thresh))
    return int(hits[0]) if hits.size else -1


def _add_columns(p, lam, E, x):
    # new_col[j, f]: column-f cellular mass after user j starts caching f.
    t = np.where(x, 0.0, p * np.exp(-E))
    return np.exp(-lam).T @ t - t


def find_add(p, lam, E, x, ground, counts, quotas, pay, col, qx, qy, thresh, best):
    n_users = p.shape[0]
    total = col.sum()
    q_old = np.interp(total / n_users, qx, qy)
    new_col = _add_columns(p, lam, E, x)
    pc_new = (total + new_col - col[None, :]) / n_users
    rows = np.arange(n_users)
    dpay = pay[rows, counts + 1] - pay[rows, counts]
    gain = q_old - np.interp(pc_new, qx, qy) - dpay[:, None]
    mask = (ground != 0) & (x == 0) & (counts < quotas)[:, None]
    k = _pick(gain, mask, thresh, best)
    if k < 0:
        return -1, -1, 0.0
    j, f = divmod(k, p.shape[1])
    return j, f, float(gain[j, f])


def _delete_columns(p, lam, E, x, jy, fy):
    shifted = p[:, fy] * np.exp(-(E[:, fy] - lam[:, jy]))
    shifted[x[:, fy] != 0] = 0.0
    return shifted.sum(axis=0) + p[jy, fy] * np.exp(-E[jy, fy])


def find_delete(p, lam, E, x, counts, pay, col, qx, qy, thresh, best):
    n_users = p.shape[0]
    jy, fy = np.nonzero(x)
    if jy.size == 0:
        return -1, -1, 0.0
    total = col.sum()
    q_old = np.interp(total / n_users, qx, qy)
    new_col = _delete_columns(p, lam, E, x, jy, fy)
    pc_new = (total + new_col - col[fy]) / n_users
    dpay = pay[jy, counts[jy] - 1] - pay[jy, counts[jy]]
    gain = q_old - np.interp(pc_new, qx, qy) - dpay
    k = _pick(gain, np.ones_like(gain, dtype=bool), thresh, best)
    if k < 0:
        return -1, -1, 0.0
    return int(jy[k]), int(fy[k]), float(gain[k])


def find_swap(p, lam, E, x, ground, counts, quotas, pay, col, qx, qy, thresh, best):
    """Outer loop over removed elements, inner over added ones, both lexicographic."""
    n_users, n_files = p.shape
    jy, fy = np.nonzero(x)
    none = (-1, -1, -1, -1, 0.0)
    if jy.size == 0:
        return none
    total = col.sum()
    q_old = np.interp(total / n_users, qx, qy)
    rows = np.arange(n_users)
    d_add = _add_columns(p, lam, E, x) - col[None, :]
    d_del = _delete_columns(p, lam, E, x, jy, fy) - col[fy]
    pay_up = pay[rows, counts + 1] - pay[rows, counts]
    pay_down = pay[rows, counts - 1] - pay[rows, counts]
    pool = (ground != 0) & (x == 0)
    has_room = counts < quotas
    xo = x != 0
    best_move, best_gain = none, -np.inf
    for k in range(jy.size):
        jo, fo = int(jy[k]), int(fy[k])
        dcol = d_add + d_del[k]
        # Same-file swap: combine both changes in column fo.
        e = E[:, fo][:, None] - lam[:, jo][:, None] + lam  # (i, j)
        terms = p[:, fo][:, None] * np.exp(-e)
        keep = ~xo[:, fo]
        keep[jo] = True
        terms[~keep, :] = 0.0
        terms[rows, rows] = 0.0
        dcol[:, fo] = terms.sum(axis=0) - col[fo]
        dpay = np.where(rows == jo, 0.0, pay_up + pay_down[jo])
        gain = q_old - np.interp((total + dcol) / n_users, qx, qy) - dpay[:, None]
        mask = pool & ((rows == jo) | has_room)[:, None]
        hit = _pick(gain, mask, thresh, best)
        if hit < 0:
            continue
        j, f = divmod(hit, n_files)
        if not best:
            return jo, fo, j, f, float(gain[j, f])
        if gain[j, f] > best_gain:
            best_move, best_gain = (jo, fo, j, f, float(gain[j, f])), gain[j, f]
    return best_move
