# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled move scans for the local search.

Mirrors ``_kernels_py``; see that module for the argument conventions.
"""
import numpy as np
from libc.math cimport exp, INFINITY


cdef inline double q_eval(const double[::1] qx, const double[::1] qy, double pc) nogil:
    cdef Py_ssize_t n = qx.shape[0], k
    if pc <= qx[0]:
        return qy[0]
    if pc >= qx[n - 1]:
        return qy[n - 1]
    for k in range(1, n):
        if pc <= qx[k]:
            return qy[k - 1] + (qy[k] - qy[k - 1]) * (pc - qx[k - 1]) / (qx[k] - qx[k - 1])
    return qy[n - 1]


cdef inline double add_column(const double[:, ::1] p, const double[:, ::1] lam,
                              const double[:, ::1] E, const unsigned char[:, ::1] x,
                              Py_ssize_t j, Py_ssize_t f) nogil:
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double s = 0.0
    for i in range(n):
        if i != j and not x[i, f]:
            s += p[i, f] * exp(-(E[i, f] + lam[i, j]))
    return s


cdef inline double delete_column(const double[:, ::1] p, const double[:, ::1] lam,
                                 const double[:, ::1] E, const unsigned char[:, ::1] x,
                                 Py_ssize_t j, Py_ssize_t f) nogil:
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double s = 0.0
    for i in range(n):
        if i == j:
            s += p[i, f] * exp(-E[i, f])
        elif not x[i, f]:
            s += p[i, f] * exp(-(E[i, f] - lam[i, j]))
    return s


cdef inline double swap_column(const double[:, ::1] p, const double[:, ::1] lam,
                               const double[:, ::1] E, const unsigned char[:, ::1] x,
                               Py_ssize_t jo, Py_ssize_t j, Py_ssize_t f) nogil:
    # Column f after jo stops and j starts caching f.
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double s = 0.0
    for i in range(n):
        if i == j:
            continue
        if i == jo or not x[i, f]:
            s += p[i, f] * exp(-(E[i, f] - lam[i, jo] + lam[i, j]))
    return s


def find_add(const double[:, ::1] p, const double[:, ::1] lam, const double[:, ::1] E,
             const unsigned char[:, ::1] x, const unsigned char[:, ::1] ground,
             const long long[::1] counts, const long long[::1] quotas,
             const double[:, ::1] pay, const double[::1] col,
             const double[::1] qx, const double[::1] qy, double thresh, bint best):
    cdef Py_ssize_t n_users = p.shape[0], n_files = p.shape[1], j, f
    cdef Py_ssize_t bj = -1, bf = -1
    cdef double total = 0.0, q_old, gain, dpay, bgain = -INFINITY
    with nogil:
        for f in range(n_files):
            total += col[f]
        q_old = q_eval(qx, qy, total / n_users)
        for j in range(n_users):
            if counts[j] >= quotas[j]:
                continue
            dpay = pay[j, counts[j] + 1] - pay[j, counts[j]]
            for f in range(n_files):
                if not ground[j, f] or x[j, f]:
                    continue
                gain = q_old - q_eval(qx, qy, (total + add_column(p, lam, E, x, j, f) - col[f]) / n_users) - dpay
                if best:
                    if gain > bgain:
                        bj, bf, bgain = j, f, gain
                elif gain >= thresh:
                    bj, bf, bgain = j, f, gain
                    break
            if bj >= 0 and not best:
                break
    if bj < 0 or bgain < thresh:
        return -1, -1, 0.0
    return int(bj), int(bf), bgain


def find_delete(const double[:, ::1] p, const double[:, ::1] lam, const double[:, ::1] E,
                const unsigned char[:, ::1] x, const long long[::1] counts,
                const double[:, ::1] pay, const double[::1] col,
                const double[::1] qx, const double[::1] qy, double thresh, bint best):
    cdef Py_ssize_t n_users = p.shape[0], n_files = p.shape[1], j, f
    cdef Py_ssize_t bj = -1, bf = -1
    cdef double total = 0.0, q_old, gain, dpay, bgain = -INFINITY
    with nogil:
        for f in range(n_files):
            total += col[f]
        q_old = q_eval(qx, qy, total / n_users)
        for j in range(n_users):
            if counts[j] == 0:
                continue
            dpay = pay[j, counts[j] - 1] - pay[j, counts[j]]
            for f in range(n_files):
                if not x[j, f]:
                    continue
                gain = q_old - q_eval(qx, qy, (total + delete_column(p, lam, E, x, j, f) - col[f]) / n_users) - dpay
                if best:
                    if gain > bgain:
                        bj, bf, bgain = j, f, gain
                elif gain >= thresh:
                    bj, bf, bgain = j, f, gain
                    break
            if bj >= 0 and not best:
                break
    if bj < 0 or bgain < thresh:
        return -1, -1, 0.0
    return int(bj), int(bf), bgain


def find_swap(const double[:, ::1] p, const double[:, ::1] lam, const double[:, ::1] E,
              const unsigned char[:, ::1] x, const unsigned char[:, ::1] ground,
              const long long[::1] counts, const long long[::1] quotas,
              const double[:, ::1] pay, const double[::1] col,
              const double[::1] qx, const double[::1] qy, double thresh, bint best):
    cdef Py_ssize_t n_users = p.shape[0], n_files = p.shape[1], j, f, jo, fo
    cdef Py_ssize_t bjo = -1, bfo = -1, bj = -1, bf = -1
    cdef double total = 0.0, q_old, gain, dpay, dcol, d_del, bgain = -INFINITY
    cdef bint found = False
    d_add_arr = np.zeros((n_users, n_files))
    cdef double[:, ::1] d_add = d_add_arr
    with nogil:
        for f in range(n_files):
            total += col[f]
        q_old = q_eval(qx, qy, total / n_users)
        for j in range(n_users):
            for f in range(n_files):
                if ground[j, f] and not x[j, f]:
                    d_add[j, f] = add_column(p, lam, E, x, j, f) - col[f]
        for jo in range(n_users):
            if found:
                break
            if counts[jo] == 0:
                continue
            for fo in range(n_files):
                if found:
                    break
                if not x[jo, fo]:
                    continue
                d_del = delete_column(p, lam, E, x, jo, fo) - col[fo]
                for j in range(n_users):
                    if found:
                        break
                    if j == jo:
                        dpay = 0.0
                    elif counts[j] >= quotas[j]:
                        continue
                    else:
                        dpay = (pay[j, counts[j] + 1] - pay[j, counts[j]]
                                + pay[jo, counts[jo] - 1] - pay[jo, counts[jo]])
                    for f in range(n_files):
                        if not ground[j, f] or x[j, f]:
                            continue
                        if f == fo:
                            dcol = swap_column(p, lam, E, x, jo, j, f) - col[f]
                        else:
                            dcol = d_add[j, f] + d_del
                        gain = q_old - q_eval(qx, qy, (total + dcol) / n_users) - dpay
                        if best:
                            if gain > bgain:
                                bjo, bfo, bj, bf, bgain = jo, fo, j, f, gain
                        elif gain >= thresh:
                            bjo, bfo, bj, bf, bgain = jo, fo, j, f, gain
                            found = True
                            break
    if bj < 0 or bgain < thresh:
        return -1, -1, -1, -1, 0.0
    return int(bjo), int(bfo), int(bj), int(bf), bgain

