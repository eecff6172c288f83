"""Discrete (abelian) sandpile on a line of N sites.

A site holding at least two grains topples, giving one grain to each
neighbor; boundary grains fall off. Stable sites hold 0 or 1 grains, and the
recurrent states are those with at most one empty site. This model is the
reference that the energy chain reduces to when all additions are at least
1/2, so it doubles as the oracle for the correspondence tests.

One addition relaxes in closed form: with i the distance from the addition
site to the first empty site on its left (one more than the distance to the
boundary when there is none) and j likewise on the right, the window from
x-i to x+j ends up full except for a new empty site at x-i+j, and a site
topples min(K, d_left, d_right) times, where d_* are its distances to the
window ends and K = min(i, j) is the number of waves.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_grains",
    "is_recurrent",
    "asm_add",
    "asm_relax_bruteforce",
    "asm_relax_waves",
]


def as_grains(values) -> np.ndarray:
    g = np.array(values, dtype=np.int64)
    if g.ndim != 1 or g.size < 1:
        raise ValueError("a grain configuration is a nonempty 1-d integer vector")
    if np.any(g < 0):
        raise ValueError("grain counts must be nonnegative")
    return g


def is_recurrent(grains) -> bool:
    """Stable with at most one empty site."""
    g = as_grains(grains)
    return bool(np.all(g <= 1) and np.count_nonzero(g == 0) <= 1)


def asm_add(grains, site: int):
    """Add one grain at ``site`` of a stable configuration and relax.

    Returns the new configuration and the per-site toppling counts, both
    computed in closed form (no grain-by-grain simulation).
    """
    g = as_grains(grains)
    n = g.size
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} sites")
    if np.any(g > 1):
        raise ValueError("additions are only defined on stable configurations")
    counts = np.zeros(n, dtype=np.int64)
    if g[site] == 0:
        g[site] = 1
        return g, counts

    # Distance to the first empty site, or one past the boundary.
    left_empty = np.flatnonzero(g[:site] == 0)
    i = site - int(left_empty[-1]) if left_empty.size else site + 1
    right_empty = np.flatnonzero(g[site + 1 :] == 0)
    j = int(right_empty[0]) + 1 if right_empty.size else n - site

    lo = site - i  # may be -1 (virtual site beyond the left boundary)
    hi = site + j  # may be n
    waves = min(i, j)
    g[max(lo, 0) : min(hi, n - 1) + 1] = 1
    g[site - i + j] = 0
    for s in range(max(lo + 1, 0), min(hi - 1, n - 1) + 1):
        counts[s] = min(waves, s - lo, hi - s)
    return g, counts


def asm_relax_bruteforce(grains):
    """Relax by repeatedly toppling any unstable site; oracle for
    :func:`asm_add`. Accepts any configuration with at most one site above 1."""
    g = as_grains(grains)
    n = g.size
    counts = np.zeros(n, dtype=np.int64)
    while True:
        unstable = np.flatnonzero(g >= 2)
        if unstable.size == 0:
            return g, counts
        s = int(unstable[0])
        g[s] -= 2
        if s > 0:
            g[s - 1] += 1
        if s < n - 1:
            g[s + 1] += 1
        counts[s] += 1


def asm_relax_waves(grains, origin: int):
    """Relax in wave order, toppling all unstable non-origin sites in
    parallel, and return (configuration, counts, snapshots).

    Snapshots record the state after every parallel toppling group, starting
    with the input, which is how relaxation sequences are usually displayed.
    """
    g = as_grains(grains)
    n = g.size
    counts = np.zeros(n, dtype=np.int64)
    snapshots = [g.copy()]
    while True:
        unstable = [s for s in range(n) if g[s] >= 2 and s != origin]
        if not unstable:
            if g[origin] >= 2:
                unstable = [origin]  # a new wave starts
            else:
                return g, counts, snapshots
        for s in unstable:
            g[s] -= 2
            counts[s] += 1
        for s in unstable:
            if s > 0:
                g[s - 1] += 1
            if s < n - 1:
                g[s + 1] += 1
        snapshots.append(g.copy())
