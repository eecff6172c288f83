"""Avalanche dynamics on the energy chain.

An unstable site (energy >= 1) topples by sending half its energy to each
neighbor; halves that fall off the boundary are lost. One addition to a
stable configuration is relaxed in *waves*: the addition site topples first,
topplings then propagate outward without re-toppling the origin, and a new
wave starts whenever the origin is unstable again. The final state does not
depend on the toppling order for states reachable this way, so the wave
order is just a convenient canonical schedule; :func:`stabilize_any_order`
exists to check exactly that.

:func:`add_and_stabilize` additionally records, for every site, the final
energy as an exact linear combination of the pre-avalanche energies and the
added amount (the report's ``f_matrix``), which feeds the long-run
coefficient bookkeeping in :mod:`zhangpile.tracking`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ModelParams, as_energies, is_stable

__all__ = [
    "AdditionEvent",
    "Wave",
    "AvalancheReport",
    "topple",
    "add_and_stabilize",
    "stabilize_any_order",
    "step",
]


@dataclass(frozen=True)
class AdditionEvent:
    """One addition: amount ``amount`` dropped on ``site`` at step ``time``."""

    time: Optional[int]
    site: int
    amount: float


@dataclass(frozen=True)
class Wave:
    """One wave of an avalanche; ``toppled`` is in execution order and
    contains each site at most once. ``left_end``/``right_end`` are the
    outermost toppled sites; after the first wave both ends shrink inward by
    one site per wave."""

    index: int
    toppled: tuple
    left_end: int
    right_end: int


@dataclass(frozen=True)
class AvalancheReport:
    """Complete record of one addition event.

    ``range_sites`` holds every site whose energy changed (toppled sites and
    their neighbors), ``anomalous_changed`` the sites that gained energy
    without toppling while already holding some. ``f_matrix`` has one row per
    site plus a final row for the added amount; column j gives the exact
    linear decomposition of the final energy at j. ``dissipated`` is the
    total energy lost over the boundary, at most 2 per avalanche.
    """

    event: AdditionEvent
    waves: tuple
    toppled_set: frozenset
    range_sites: tuple
    anomalous_changed: tuple
    topple_counts: np.ndarray
    f_matrix: Optional[np.ndarray]
    dissipated: float

    @property
    def no_topple(self) -> bool:
        return not self.waves


def topple(energies, site: int) -> np.ndarray:
    """Topple one unstable site, returning the new configuration."""
    e = as_energies(energies)
    n = e.size
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} sites")
    if e[site] < 1.0:
        raise ValueError(f"site {site} is stable (energy {e[site]}), cannot topple")
    half = 0.5 * e[site]
    e[site] = 0.0
    if site > 0:
        e[site - 1] += half
    if site < n - 1:
        e[site + 1] += half
    return e


def _topple_tracked(e, coef, site, n) -> float:
    # In-place topple; mirrors the kernel arithmetic exactly. Returns the
    # boundary loss.
    half = 0.5 * e[site]
    lost = 0.0
    e[site] = 0.0
    if coef is not None:
        col = coef[:, site].copy()
        coef[:, site] = 0.0
    if site > 0:
        e[site - 1] += half
        if coef is not None:
            coef[:, site - 1] += 0.5 * col
    else:
        lost += half
    if site < n - 1:
        e[site + 1] += half
        if coef is not None:
            coef[:, site + 1] += 0.5 * col
    else:
        lost += half
    return lost


def add_and_stabilize(
    params: ModelParams,
    energies,
    site: int,
    amount: float,
    *,
    time: Optional[int] = None,
    track_coefficients: bool = True,
):
    """Add ``amount`` at ``site`` and relax in wave order.

    Returns the stable result together with an :class:`AvalancheReport`.
    Within a wave the origin topples first, then unstable sites outward by
    distance, left before right at equal distance.
    """
    e = as_energies(energies)
    n = e.size
    if n != params.n_sites:
        raise ValueError(f"configuration has {n} sites, params expect {params.n_sites}")
    if not is_stable(e):
        raise ValueError("additions are only defined on stable configurations")
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} sites")
    if not params.a <= amount <= params.b:
        raise ValueError(f"amount {amount} outside [{params.a}, {params.b}]")

    pre = e.copy()
    coef = None
    if track_coefficients:
        coef = np.zeros((n + 1, n))
        np.fill_diagonal(coef[:n], 1.0)
        coef[n, site] = 1.0

    event = AdditionEvent(time=time, site=site, amount=amount)
    counts = np.zeros(n, dtype=np.int64)
    e[site] += amount
    if e[site] < 1.0:
        return e, AvalancheReport(
            event=event,
            waves=(),
            toppled_set=frozenset(),
            range_sites=(),
            anomalous_changed=(),
            topple_counts=counts,
            f_matrix=coef,
            dissipated=0.0,
        )

    waves = []
    dissipated = 0.0
    k = 0
    while e[site] >= 1.0:
        k += 1
        toppled = [site]
        dissipated += _topple_tracked(e, coef, site, n)
        left_on = True
        right_on = True
        d = 1
        while left_on or right_on:
            if left_on:
                s = site - d
                if s >= 0 and e[s] >= 1.0:
                    dissipated += _topple_tracked(e, coef, s, n)
                    toppled.append(s)
                else:
                    left_on = False
            if right_on:
                s = site + d
                if s < n and e[s] >= 1.0:
                    dissipated += _topple_tracked(e, coef, s, n)
                    toppled.append(s)
                else:
                    right_on = False
            d += 1
        waves.append(
            Wave(index=k, toppled=tuple(toppled), left_end=min(toppled), right_end=max(toppled))
        )
        for s in toppled:
            counts[s] += 1
        if k > n + 2:
            raise AssertionError("wave count exceeded the theoretical bound")

    toppled_set = frozenset(s for w in waves for s in w.toppled)
    rng_set = set(toppled_set)
    for s in toppled_set:
        if s > 0:
            rng_set.add(s - 1)
        if s < n - 1:
            rng_set.add(s + 1)
    range_sites = tuple(sorted(rng_set))
    cprime = tuple(s for s in range_sites if s not in toppled_set and pre[s] > 0.0)

    return e, AvalancheReport(
        event=event,
        waves=tuple(waves),
        toppled_set=toppled_set,
        range_sites=range_sites,
        anomalous_changed=cprime,
        topple_counts=counts,
        f_matrix=coef,
        dissipated=dissipated,
    )


def _check_reachable(e) -> None:
    # States reachable from stable + one addition keep an empty site between
    # any two unstable sites. Reject anything else, e.g. two adjacent
    # unstable sites, whose relaxation would be order-dependent.
    unstable = np.flatnonzero(e >= 1.0)
    for i, j in zip(unstable[:-1], unstable[1:]):
        if not np.any(e[i + 1 : j] == 0.0):
            raise ValueError(
                "configuration is not reachable from a stable state plus one "
                f"addition: unstable sites {i} and {j} have no empty site between them"
            )


def stabilize_any_order(
    energies,
    rng: Optional[np.random.Generator] = None,
    policy: Optional[Callable] = None,
):
    """Relax a stable-plus-one-addition state by toppling unstable sites in
    an arbitrary order, default uniformly at random.

    ``policy(unstable_sites, rng)`` picks the next site to topple. Returns
    the stable configuration and the per-site toppling counts; both agree
    with the wave schedule for every admissible order.
    """
    e = as_energies(energies)
    n = e.size
    _check_reachable(e)
    if rng is None:
        rng = np.random.default_rng()
    counts = np.zeros(n, dtype=np.int64)
    limit = 10 * n * (n + 2) + 100
    for _ in range(limit):
        unstable = np.flatnonzero(e >= 1.0)
        if unstable.size == 0:
            return e, counts
        if policy is not None:
            s = int(policy(list(unstable), rng))
            if e[s] < 1.0:
                raise ValueError(f"policy chose stable site {s}")
        else:
            s = int(unstable[rng.integers(unstable.size)])
        half = 0.5 * e[s]
        e[s] = 0.0
        if s > 0:
            e[s - 1] += half
        if s < n - 1:
            e[s + 1] += half
        counts[s] += 1
    raise AssertionError("stabilization did not terminate")


def step(
    params: ModelParams,
    energies,
    rng: np.random.Generator,
    *,
    time: Optional[int] = None,
    track_coefficients: bool = True,
):
    """One Markov step: a uniform site receives a uniform amount from [a, b].

    The amount is realized as ``a + (b - a) * rng.random()`` after the site
    draw, so a run is fully reproducible from the generator state.
    """
    site = int(rng.integers(params.n_sites))
    amount = params.a + (params.b - params.a) * rng.random()
    return add_and_stabilize(
        params, energies, site, amount, time=time, track_coefficients=track_coefficients
    )
