# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels. Mirrors kernels_py exactly; see that module
for the contract."""

from libc.math cimport sqrt, pow, INFINITY


cdef inline double _mindist2(double px, double py, const double[:, ::1] mbr, Py_ssize_t g) nogil:
    cdef double dx = mbr[g, 0] - px
    if dx < 0.0:
        dx = px - mbr[g, 2]
        if dx < 0.0:
            dx = 0.0
    cdef double dy = mbr[g, 1] - py
    if dy < 0.0:
        dy = py - mbr[g, 3]
        if dy < 0.0:
            dy = 0.0
    return dx * dx + dy * dy


def min_dist_scan(double px, double py,
                  const double[:] view_x, const double[:] view_y,
                  const long long[:] seg_ptr, const double[:, ::1] seg_mbr,
                  double init_best, bint use_s1):
    cdef double best2 = init_best * init_best if init_best != INFINITY else INFINITY
    cdef long long skips = 0
    cdef Py_ssize_t g, i, lo, hi
    cdef double dx, dy, d2
    with nogil:
        for g in range(seg_ptr.shape[0] - 1):
            if use_s1 and _mindist2(px, py, seg_mbr, g) >= best2:
                skips += 1
                continue
            lo = <Py_ssize_t> seg_ptr[g]
            hi = <Py_ssize_t> seg_ptr[g + 1]
            for i in range(lo, hi):
                dx = view_x[i] - px
                dy = view_y[i] - py
                d2 = dx * dx + dy * dy
                if d2 < best2:
                    best2 = d2
    return (sqrt(best2) if best2 != INFINITY else INFINITY), skips


def nearest_point_scan(double px, double py,
                       const double[:] xs, const double[:] ys,
                       const long long[:] seg_ptr, const double[:, ::1] seg_mbr):
    cdef double best2 = INFINITY
    cdef Py_ssize_t best_i = -1, best_g = -1
    cdef long long skips = 0
    cdef Py_ssize_t g, i, lo, hi
    cdef double dx, dy, d2
    with nogil:
        for g in range(seg_ptr.shape[0] - 1):
            if _mindist2(px, py, seg_mbr, g) >= best2:
                skips += 1
                continue
            lo = <Py_ssize_t> seg_ptr[g]
            hi = <Py_ssize_t> seg_ptr[g + 1]
            for i in range(lo, hi):
                dx = xs[i] - px
                dy = ys[i] - py
                d2 = dx * dx + dy * dy
                if d2 < best2:
                    best2 = d2
                    best_i = i
                    best_g = g
    return best_i, best_g, (sqrt(best2) if best2 != INFINITY else INFINITY), skips


def history_scan(const double[:] hist_x, const double[:] hist_y,
                 Py_ssize_t j_lo, double theta,
                 const double[:] view_x, const double[:] view_y,
                 const long long[:] seg_ptr, const double[:, ::1] seg_mbr,
                 double alpha, double ttd, double dist_k,
                 double init_max, long long init_witness, double init_wmin,
                 bint use_s1, bint use_s2):
    cdef Py_ssize_t c = hist_x.shape[0]
    cdef double run_max = init_max
    cdef long long witness = init_witness
    cdef double wmin = init_wmin
    cdef long long s1_skips = 0
    cdef bint pruned = False, s2_hit = False
    cdef Py_ssize_t j, g, i, lo, hi
    cdef double px, py, best2, dx, dy, d2, dist, term

    if use_s2 and alpha * run_max + (1.0 - alpha) * ttd >= dist_k:
        return run_max, witness, wmin, True, 0, True

    with nogil:
        for j in range(c - 1, j_lo - 1, -1):
            px = hist_x[j]
            py = hist_y[j]
            best2 = INFINITY
            for g in range(seg_ptr.shape[0] - 1):
                if use_s1 and _mindist2(px, py, seg_mbr, g) >= best2:
                    s1_skips += 1
                    continue
                lo = <Py_ssize_t> seg_ptr[g]
                hi = <Py_ssize_t> seg_ptr[g + 1]
                for i in range(lo, hi):
                    dx = view_x[i] - px
                    dy = view_y[i] - py
                    d2 = dx * dx + dy * dy
                    if d2 < best2:
                        best2 = d2
            dist = sqrt(best2)
            term = pow(theta, <double> (c - 1 - j)) * dist
            if term > run_max:
                run_max = term
                witness = j
                wmin = dist
                if use_s2 and alpha * run_max + (1.0 - alpha) * ttd >= dist_k:
                    pruned = True
                    s2_hit = True
                    break
    return run_max, witness, wmin, pruned, s1_skips, s2_hit
