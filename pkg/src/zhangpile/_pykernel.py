"""Pure-Python simulation kernel.

Fallback for :mod:`zhangpile._kernel`; both implement the same contract with
the same floating-point operations in the same order, so a run is
bit-identical regardless of which kernel is active.

``run_chain`` advances the Markov chain over pregenerated addition sites and
amounts, accumulating post-burn-in statistics in caller-allocated arrays:

* per-site histograms over (0, 1) plus an exact zero-atom counter,
* per-site energy sums and squared sums, with per-batch splits,
* boundary-loss (dissipated energy) sums, with per-batch splits,
* the position of the empty site whenever exactly one site is empty,
* joint indicator counts for requested (x, y, A, B) dependence probes,
* a regularity-violation count from ``reg_threshold`` on, a count of steps
  whose stable state re-created a second empty-or-anomalous site, and a
  count of post-burn-in samples holding two or more such sites.

It returns ``(diss_sum, diss_sumsq, n_no_empty, n_one_empty, n_multi_empty,
reg_violations, fsc_creations, n_multi_deficient)``.
"""

from __future__ import annotations

__all__ = ["add_stabilize", "run_chain"]

BACKEND = "python"


def _stabilize(e, n, x):
    lost = 0.0
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


def add_stabilize(e, site, amount):
    """Add ``amount`` at ``site`` (in place) and relax in wave order.

    Returns the energy lost over the boundary.
    """
    n = len(e)
    e[site] += amount
    if e[site] < 1.0:
        return 0.0
    return _stabilize(e, n, site)


def run_chain(
    e,
    sites,
    amounts,
    burn_in,
    bins,
    hist,
    zero_counts,
    site_sum,
    site_sumsq,
    batch_site_sum,
    batch_zero,
    batch_diss,
    one_empty_pos,
    probe_xy,
    probe_bounds,
    probe_counts,
    batch_probe,
    reg_threshold,
    trace_site,
    trace_out,
):
    n = len(e)
    steps = len(sites)
    n_post = steps - burn_in
    n_batches = batch_diss.shape[0]
    n_probes = probe_xy.shape[0]

    ev = [float(v) for v in e]
    diss_sum = 0.0
    diss_sumsq = 0.0
    n_no_empty = 0
    n_one_empty = 0
    n_multi_empty = 0
    reg_violations = 0
    fsc_creations = 0
    n_multi_deficient = 0
    prev_nonfull = sum(1 for v in ev if v < 0.5)

    for t in range(steps):
        x = int(sites[t])
        ev[x] += float(amounts[t])
        diss = _stabilize(ev, n, x) if ev[x] >= 1.0 else 0.0

        empty_cnt = 0
        anom_cnt = 0
        empty_pos = -1
        for j in range(n):
            v = ev[j]
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
            v = ev[j]
            site_sum[j] += v
            site_sumsq[j] += v * v
            batch_site_sum[bi, j] += v
            if v == 0.0:
                zero_counts[j] += 1
                batch_zero[bi, j] += 1
            else:
                hist[j, int(v * bins)] += 1
        if empty_cnt == 0:
            n_no_empty += 1
        elif empty_cnt == 1:
            n_one_empty += 1
            one_empty_pos[empty_pos] += 1
        else:
            n_multi_empty += 1
        for p in range(n_probes):
            in_a = probe_bounds[p, 0] <= ev[probe_xy[p, 1]] < probe_bounds[p, 1]
            in_b = probe_bounds[p, 2] <= ev[probe_xy[p, 0]] < probe_bounds[p, 3]
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
            trace_out[tp] = ev[trace_site]

    for j in range(n):
        e[j] = ev[j]
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
