# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel.

Mirrors :mod:`zhangpile._pykernel` operation for operation (same floating
point arithmetic in the same order), so results are bit-identical across the
two backends. See the Python module for the contract.
"""

__all__ = ["add_stabilize", "run_chain"]

BACKEND = "cython"


cdef double _stabilize(double[::1] e, Py_ssize_t n, Py_ssize_t x) noexcept:
    cdef double lost = 0.0
    cdef double half
    cdef Py_ssize_t d, s
    cdef bint left_on, right_on
    while e[x] >= 1.0:
        half = 0.5 * e[x]
        e[x] = 0.0
        if x > 0:
            e[x - 1] += half
        else:
            lost += half
        if x < n - 1:
            e[x + 1] += half
        else:
            lost += half
        left_on = True
        right_on = True
        d = 1
        while left_on or right_on:
            if left_on:
                s = x - d
                if s >= 0 and e[s] >= 1.0:
                    half = 0.5 * e[s]
                    e[s] = 0.0
                    if s > 0:
                        e[s - 1] += half
                    else:
                        lost += half
                    e[s + 1] += half
                else:
                    left_on = False
            if right_on:
                s = x + d
                if s < n and e[s] >= 1.0:
                    half = 0.5 * e[s]
                    e[s] = 0.0
                    e[s - 1] += half
                    if s < n - 1:
                        e[s + 1] += half
                    else:
                        lost += half
                else:
                    right_on = False
            d += 1
    return lost


def add_stabilize(double[::1] e, Py_ssize_t site, double amount):
    """Add ``amount`` at ``site`` (in place) and relax in wave order.

    Returns the energy lost over the boundary.
    """
    cdef Py_ssize_t n = e.shape[0]
    e[site] += amount
    if e[site] < 1.0:
        return 0.0
    return _stabilize(e, n, site)


def run_chain(
    double[::1] e,
    long long[::1] sites,
    double[::1] amounts,
    Py_ssize_t burn_in,
    Py_ssize_t bins,
    long long[:, ::1] hist,
    long long[::1] zero_counts,
    double[::1] site_sum,
    double[::1] site_sumsq,
    double[:, ::1] batch_site_sum,
    long long[:, ::1] batch_zero,
    double[::1] batch_diss,
    long long[::1] one_empty_pos,
    long long[:, ::1] probe_xy,
    double[:, ::1] probe_bounds,
    long long[:, ::1] probe_counts,
    long long[:, :, ::1] batch_probe,
    Py_ssize_t reg_threshold,
    Py_ssize_t trace_site,
    double[::1] trace_out,
):
    cdef Py_ssize_t n = e.shape[0]
    cdef Py_ssize_t steps = sites.shape[0]
    cdef Py_ssize_t n_post = steps - burn_in
    cdef Py_ssize_t n_batches = batch_diss.shape[0]
    cdef Py_ssize_t n_probes = probe_xy.shape[0]

    cdef double diss_sum = 0.0
    cdef double diss_sumsq = 0.0
    cdef long long n_no_empty = 0
    cdef long long n_one_empty = 0
    cdef long long n_multi_empty = 0
    cdef long long reg_violations = 0
    cdef long long fsc_creations = 0
    cdef long long n_multi_deficient = 0

    cdef Py_ssize_t t, x, j, p, tp, bi, empty_pos
    cdef Py_ssize_t empty_cnt, anom_cnt, nonfull, prev_nonfull
    cdef double v, diss
    cdef bint in_a, in_b

    prev_nonfull = 0
    for j in range(n):
        if e[j] < 0.5:
            prev_nonfull += 1

    for t in range(steps):
        x = <Py_ssize_t> sites[t]
        e[x] += amounts[t]
        if e[x] >= 1.0:
            diss = _stabilize(e, n, x)
        else:
            diss = 0.0

        empty_cnt = 0
        anom_cnt = 0
        empty_pos = -1
        for j in range(n):
            v = e[j]
            if v == 0.0:
                empty_cnt += 1
                empty_pos = j
            elif v < 0.5:
                anom_cnt += 1
        nonfull = empty_cnt + anom_cnt
        if prev_nonfull <= 1 and nonfull >= 2:
            fsc_creations += 1
        prev_nonfull = nonfull
        if t >= reg_threshold and (anom_cnt > 0 or empty_cnt > 1):
            reg_violations += 1

        if t < burn_in:
            continue
        if nonfull >= 2:
            n_multi_deficient += 1
        tp = t - burn_in
        bi = tp * n_batches // n_post
        diss_sum += diss
        diss_sumsq += diss * diss
        batch_diss[bi] += diss
        for j in range(n):
            v = e[j]
            site_sum[j] += v
            site_sumsq[j] += v * v
            batch_site_sum[bi, j] += v
            if v == 0.0:
                zero_counts[j] += 1
                batch_zero[bi, j] += 1
            else:
                hist[j, <Py_ssize_t> (v * bins)] += 1
        if empty_cnt == 0:
            n_no_empty += 1
        elif empty_cnt == 1:
            n_one_empty += 1
            one_empty_pos[empty_pos] += 1
        else:
            n_multi_empty += 1
        for p in range(n_probes):
            v = e[probe_xy[p, 1]]
            in_a = probe_bounds[p, 0] <= v and v < probe_bounds[p, 1]
            v = e[probe_xy[p, 0]]
            in_b = probe_bounds[p, 2] <= v and v < probe_bounds[p, 3]
            if in_a:
                probe_counts[p, 0] += 1
                batch_probe[bi, p, 0] += 1
            if in_b:
                probe_counts[p, 1] += 1
                batch_probe[bi, p, 1] += 1
            if in_a and in_b:
                probe_counts[p, 2] += 1
                batch_probe[bi, p, 2] += 1
        if trace_site >= 0:
            trace_out[tp] = e[trace_site]

    return (
        diss_sum,
        diss_sumsq,
        n_no_empty,
        n_one_empty,
        n_multi_empty,
        reg_violations,
        fsc_creations,
        n_multi_deficient,
    )
