"""Coupling experiments on pairs of chains.

Three constructions, each a measurable experiment:

* single site: shift coupling through the zero-hitting times (always
  succeeds), and exact coupling at a simultaneous zero, which exists only
  when the zero-hitting renewal process is aperiodic;
* additions at least 1/2: run two chains independently until both are
  regular with matching reduced configurations, then share additions, after
  which the sup difference contracts to zero — the time to match reductions
  from distinct regular states is geometric with success rate
  (N - 1) / N^2 per step;
* additions uniform on [0, 1]: wait for a trigger state (site 0 empty in
  both chains, all other sites full, with headroom 2^-(N+1) below 1 for
  N > 2), then cancel the per-site differences with N - 1 consecutive
  additions of (U + difference) mod 1, which stays uniform.

All experiments are seeded and own their random stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._speed import add_stabilize
from .core import ModelParams

__all__ = [
    "PeriodicityInfo",
    "periodicity_info",
    "CouplingResult",
    "couple_one_site",
    "couple_reduction_match",
    "couple_equalize_zero_one",
]


@dataclass(frozen=True)
class PeriodicityInfo:
    """Possible numbers of steps between visits of the one-site chain to
    zero. The set is {n : (n-1) a < 1 and n b > 1}; the zero-hitting renewal
    process is periodic exactly when its gcd exceeds 1, which happens iff
    [a, b] fits inside [1/m, 1/(m-1)] for some integer m > 1."""

    n_set: tuple
    gcd: int
    periodic: bool
    unbounded: bool


def periodicity_info(a: float, b: float) -> PeriodicityInfo:
    if not 0.0 <= a < b <= 1.0:
        raise ValueError(f"need 0 <= a < b <= 1, got [{a}, {b}]")
    if a == 0.0:
        # Every n with n b > 1 qualifies: consecutive integers, gcd 1.
        n0 = int(math.floor(1.0 / b)) + 1
        while n0 * b <= 1.0:
            n0 += 1
        return PeriodicityInfo(n_set=(n0, n0 + 1, n0 + 2), gcd=1, periodic=False, unbounded=True)
    ns = [n for n in range(1, int(math.ceil(1.0 / a)) + 2) if (n - 1) * a < 1.0 and n * b > 1.0]
    g = math.gcd(*ns) if ns else 0
    return PeriodicityInfo(n_set=tuple(ns), gcd=g, periodic=g > 1, unbounded=False)


@dataclass
class CouplingResult:
    met: bool
    meeting_time: Optional[int]
    mode: str
    diagnostics: dict = field(default_factory=dict)


def _one_site_step(e: float, u: float) -> float:
    v = e + u
    return v if v < 1.0 else 0.0


def couple_one_site(
    a: float,
    b: float,
    seed: int,
    max_steps: int = 100_000,
    mode: str = "exact",
    eta1: Optional[float] = None,
    eta2: Optional[float] = None,
) -> CouplingResult:
    """Run two independent single-site chains from ``eta1``/``eta2`` (random
    stable states by default).

    Mode ``shift`` succeeds as soon as each chain has hit zero once (the
    chains agree from then on up to a time shift); mode ``exact`` waits for
    a simultaneous zero, which for a periodic addition interval may never
    come — the result then reports failure together with the periodicity.
    """
    if mode not in ("shift", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    info = periodicity_info(a, b)
    rng = np.random.default_rng(seed)
    e1 = float(rng.random()) if eta1 is None else float(eta1)
    e2 = float(rng.random()) if eta2 is None else float(eta2)
    if not (0.0 <= e1 < 1.0 and 0.0 <= e2 < 1.0):
        raise ValueError("starting energies must be stable")

    t1 = t2 = t_joint = None
    zeros1, zeros2 = [], []
    for t in range(1, max_steps + 1):
        u1 = a + (b - a) * rng.random()
        u2 = a + (b - a) * rng.random()
        e1 = _one_site_step(e1, u1)
        e2 = _one_site_step(e2, u2)
        if e1 == 0.0:
            if t1 is None:
                t1 = t
            if len(zeros1) < 1000:
                zeros1.append(t)
        if e2 == 0.0:
            if t2 is None:
                t2 = t
            if len(zeros2) < 1000:
                zeros2.append(t)
        if e1 == 0.0 and e2 == 0.0 and t_joint is None:
            t_joint = t
        if mode == "shift" and t1 is not None and t2 is not None:
            break
        if mode == "exact" and t_joint is not None:
            break

    diagnostics = {
        "t1": t1,
        "t2": t2,
        "shift": None if t1 is None or t2 is None else t2 - t1,
        "t_joint": t_joint,
        "periodicity": info,
        "zero_times_1": zeros1,
        "zero_times_2": zeros2,
    }
    if mode == "shift":
        met = t1 is not None and t2 is not None
        return CouplingResult(met, max(t1, t2) if met else None, "shift", diagnostics)
    return CouplingResult(t_joint is not None, t_joint, "exact", diagnostics)


def _regular_empty_site(e: np.ndarray):
    """(regular?, empty site index; -1 when all sites are full)."""
    empty = -1
    for j in range(e.shape[0]):
        v = e[j]
        if v == 0.0:
            if empty >= 0:
                return False, -2
            empty = j
        elif v < 0.5:
            return False, -2
    return True, empty


class _BufferedDraws:
    """Blockwise (site, amount) draws; same stream as drawing one by one."""

    def __init__(self, rng, n, a, b, block=4096):
        self._rng = rng
        self._n = n
        self._a = a
        self._span = b - a
        self._block = block
        self._i = block
        self._sites = None
        self._amounts = None

    def __call__(self):
        if self._i >= self._block:
            self._sites = self._rng.integers(0, self._n, size=self._block)
            self._amounts = self._a + self._span * self._rng.random(self._block)
            self._i = 0
        i = self._i
        self._i = i + 1
        return int(self._sites[i]), float(self._amounts[i])


def couple_reduction_match(
    params: ModelParams,
    seed: int,
    max_steps: int = 1_000_000,
    tol: float = 1e-12,
    eta1=None,
    eta2=None,
    trace_cap: int = 100_000,
) -> CouplingResult:
    """Coupling for additions of at least 1/2.

    Evolves two independent chains until both are regular and their reduced
    configurations coincide (``meeting_time``); from then on both receive
    identical additions and the diagnostics record the contraction of the
    sup difference down to ``tol``. ``delay_from_distinct`` is the extra
    steps the reduction match took, counted only when the reductions
    differed at regularization time (the geometrically distributed case).
    """
    if params.a < 0.5:
        raise ValueError("reduction matching requires additions of at least 1/2")
    n = params.n_sites
    rng = np.random.default_rng(seed)
    e1 = rng.random(n) if eta1 is None else np.array(eta1, dtype=float)
    e2 = rng.random(n) if eta2 is None else np.array(eta2, dtype=float)
    draw = _BufferedDraws(rng, n, params.a, params.b)

    t = 0
    t_regular = None
    distinct_at_regular = None
    t_meet = None
    while t < max_steps:
        r1, p1 = _regular_empty_site(e1)
        r2, p2 = _regular_empty_site(e2)
        if r1 and r2:
            if t_regular is None:
                t_regular = t
                distinct_at_regular = p1 != p2
            if p1 == p2:
                t_meet = t
                break
        x, u = draw()
        add_stabilize(e1, x, u)
        x, u = draw()
        add_stabilize(e2, x, u)
        t += 1
    if t_meet is None:
        return CouplingResult(False, None, "reduction-match",
                              {"t_regular": t_regular, "steps": t})

    trace = []
    sup = float(np.abs(e1 - e2).max())
    while sup > tol and t < max_steps:
        x, u = draw()
        add_stabilize(e1, x, u)
        add_stabilize(e2, x, u)
        t += 1
        r1, p1 = _regular_empty_site(e1)
        r2, p2 = _regular_empty_site(e2)
        if not (r1 and r2 and p1 == p2):
            raise AssertionError("reductions diverged after meeting under shared additions")
        sup = float(np.abs(e1 - e2).max())
        if len(trace) < trace_cap:
            trace.append(sup)

    return CouplingResult(
        met=sup <= tol,
        meeting_time=t_meet,
        mode="reduction-match",
        diagnostics={
            "t_regular": t_regular,
            "t_meet": t_meet,
            "distinct_at_regular": distinct_at_regular,
            "delay_from_distinct": (t_meet - t_regular) if distinct_at_regular else None,
            "decay_trace": trace,
            "final_sup_difference": sup,
            "steps": t,
        },
    )


def couple_equalize_zero_one(
    params: ModelParams,
    seed: int,
    max_attempts: int = 10_000,
    max_steps: int = 2_000_000,
    eta1=None,
    eta2=None,
) -> CouplingResult:
    """Equalization coupling for additions uniform on [0, 1].

    Waits for the trigger state, then tries to cancel the differences on
    sites 1..N-1 one site per step, feeding the second chain
    (U + difference) mod 1 wherever the first chain adds U. An attempt needs
    the right addition sites in order, no wraparound and (for N > 2) no
    avalanche; on success the difference is cancelled exactly and both
    chains evolve together from an identical state.
    """
    if params.a != 0.0 or params.b != 1.0:
        raise ValueError("the equalization construction is for additions uniform on [0, 1]")
    n = params.n_sites
    if n < 2:
        raise ValueError("need at least two sites")
    eps = 2.0 ** (-(n + 1))
    rng = np.random.default_rng(seed)
    e1 = rng.random(n) if eta1 is None else np.array(eta1, dtype=float)
    e2 = rng.random(n) if eta2 is None else np.array(eta2, dtype=float)

    def trigger() -> bool:
        if e1[0] != 0.0 or e2[0] != 0.0:
            return False
        if np.any(e1[1:] < 0.5) or np.any(e2[1:] < 0.5):
            return False
        if n > 2 and (np.any(e1[1:] >= 1.0 - eps) or np.any(e2[1:] >= 1.0 - eps)):
            return False
        return True

    attempts = 0
    successes_at = None
    uhat_samples = []
    trigger_times = []
    fail_reasons = {"site": 0, "wrap": 0, "avalanche": 0}
    t = 0
    met = False
    while t < max_steps and attempts < max_attempts and not met:
        if np.array_equal(e1, e2):
            met = True
            successes_at = attempts
            break
        if trigger():
            attempts += 1
            if len(trigger_times) < 10_000:
                trigger_times.append(t)
            ok = True
            for target in range(1, n):
                x = int(rng.integers(n))
                u = rng.random()
                delta = e1[x] - e2[x]
                uhat = (u + delta) % 1.0
                if len(uhat_samples) < 200_000:
                    uhat_samples.append(uhat)
                good_site = x == target
                no_wrap = 0.0 <= u + delta < 1.0
                no_avalanche = (n == 2) or (e1[x] + u < 1.0)
                if good_site and no_wrap and no_avalanche:
                    v = e1[x] + u  # shared post-addition value; cancels exactly
                    add_stabilize(e1, x, u)
                    e2[x] = v
                    add_stabilize(e2, x, 0.0)
                    t += 1
                else:
                    add_stabilize(e1, x, u)
                    add_stabilize(e2, x, uhat)
                    t += 1
                    if not good_site:
                        fail_reasons["site"] += 1
                    elif not no_wrap:
                        fail_reasons["wrap"] += 1
                    else:
                        fail_reasons["avalanche"] += 1
                    ok = False
                    break
            if ok:
                if not np.array_equal(e1, e2):
                    raise AssertionError("equalization finished but the chains differ")
                met = True
                successes_at = attempts
                break
        else:
            x = int(rng.integers(n))
            add_stabilize(e1, x, rng.random())
            x = int(rng.integers(n))
            add_stabilize(e2, x, rng.random())
            t += 1

    return CouplingResult(
        met=met,
        meeting_time=t if met else None,
        mode="equalize",
        diagnostics={
            "attempts": attempts,
            "success_attempt": successes_at,
            "uhat_samples": np.array(uhat_samples),
            "trigger_times": trigger_times,
            "fail_reasons": fail_reasons,
            "steps": t,
        },
    )
