"""Redistribution-coefficient bookkeeping.

Each avalanche rewrites the energies in its range as a fixed linear
combination of the pre-avalanche energies and the added amount. Composed
over a run, every site's energy becomes a sum of fractions of past
additions (the A matrix, one row per addition) plus fractions of the
starting energies (the B matrix, one row per site). When every addition is
at least 1/2 these fractions depend on the reduced configurations only, the
per-site fraction totals equal the nonempty indicator, and the largest
fraction of any fixed addition decays geometrically; the checks here verify
all of that on live runs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .core import ModelParams, as_energies
from .engine import AvalancheReport, step

__all__ = [
    "FMatrix",
    "wave_f_coefficients",
    "check_f_invariants",
    "CoefficientState",
    "update_fractions",
    "decay_diagnostics",
    "DecayDiagnostics",
    "tracked_run",
    "TrackedRun",
    "dump_csv",
]


@dataclass(frozen=True)
class FMatrix:
    """Linear decomposition of one avalanche.

    ``matrix`` has one row per site plus a final row for the added amount;
    column j holds the coefficients of the final energy at site j. Because
    the amount enters the origin together with the origin's own energy, the
    addition row always equals the origin row.
    """

    matrix: np.ndarray
    site: int
    toppled: tuple
    range_sites: tuple
    cprime: tuple

    @classmethod
    def from_report(cls, report: AvalancheReport) -> "FMatrix":
        """Wrap the coefficients the engine carried through an avalanche."""
        if report.f_matrix is None or not report.waves:
            raise ValueError("report must describe a tracked avalanche")
        return cls(
            matrix=report.f_matrix,
            site=report.event.site,
            toppled=tuple(sorted(report.toppled_set)),
            range_sites=report.range_sites,
            cprime=report.anomalous_changed,
        )

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[1]

    @property
    def addition_row(self) -> np.ndarray:
        return self.matrix[-1]

    def reconstruct(self, pre_energies, amount: float) -> np.ndarray:
        """Final configuration predicted from the pre-avalanche state."""
        src = np.append(np.asarray(pre_energies, dtype=float), amount)
        return src @ self.matrix

    def column_sums(self) -> np.ndarray:
        """Addition coefficient plus toppled-site coefficients, per range
        column; equals 1 on nonempty and 0 on empty columns."""
        idx = list(self.toppled)
        cols = list(self.range_sites)
        return self.matrix[-1, cols] + self.matrix[np.ix_(idx, cols)].sum(axis=0)


def wave_f_coefficients(report: AvalancheReport) -> FMatrix:
    """Rebuild the avalanche's linear map by composing one matrix per wave.

    Independent of the coefficient vectors carried live by the engine; used
    to cross-check them.
    """
    if not isinstance(report, AvalancheReport) or not report.waves:
        raise ValueError("report must describe an avalanche with at least one wave")
    n = report.topple_counts.shape[0]
    composed = None
    for wave in report.waves:
        lk = np.eye(n)
        for s in wave.toppled:
            col = lk[:, s].copy()
            lk[:, s] = 0.0
            if s > 0:
                lk[:, s - 1] += 0.5 * col
            if s < n - 1:
                lk[:, s + 1] += 0.5 * col
        composed = lk if composed is None else composed @ lk
    matrix = np.vstack([composed, composed[report.event.site]])
    return FMatrix(
        matrix=matrix,
        site=report.event.site,
        toppled=tuple(sorted(report.toppled_set)),
        range_sites=report.range_sites,
        cprime=report.anomalous_changed,
    )


def fraction_floor(n_sites: int) -> float:
    """Guaranteed minimum fraction of the addition at every nonzero site of
    the range: 2 to the power -ceil(3 N / 2)."""
    return 2.0 ** (-math.ceil(1.5 * n_sites))


def check_f_invariants(
    fm: FMatrix,
    final_energies,
    *,
    lower_bound: bool = True,
    monotone: bool = True,
    tol: float = 1e-9,
) -> list:
    """Return human-readable violations of the avalanche-matrix invariants.

    Checked: nonnegative entries; column sums equal to the final nonempty
    indicator on the range; the addition-fraction floor and its monotone
    decay away from the addition site (the latter two only meaningful when
    no additions below 1/2 occur, so callers can switch them off).
    """
    final = as_energies(final_energies)
    n = fm.n_sites
    bad = []
    if fm.matrix.min() < -tol:
        bad.append(f"negative coefficient {fm.matrix.min()}")
    sums = fm.column_sums()
    for j, s in zip(fm.range_sites, sums):
        expect = 1.0 if final[j] != 0.0 else 0.0
        if abs(s - expect) > tol:
            bad.append(f"column {j} sums to {s}, expected {expect}")
    if lower_bound:
        floor = fraction_floor(n)
        for j in fm.range_sites:
            if final[j] != 0.0 and fm.addition_row[j] < floor - 1e-15:
                bad.append(f"addition fraction {fm.addition_row[j]} at {j} below {floor}")
    if monotone:
        # Fractions decay moving away from the addition site along each side.
        # The two pairs touching the site itself are excluded: when the final
        # wave ran one-sided, the untoppled neighbor keeps half of the
        # origin's previous fraction and legitimately exceeds the origin's.
        x = fm.site
        in_range = set(fm.range_sites)
        for j in fm.range_sites:
            if final[j] == 0.0:
                continue
            if j > x and j + 1 in in_range:
                if fm.addition_row[j + 1] > fm.addition_row[j] + 1e-12:
                    bad.append(f"addition fraction rises {j} -> {j + 1}")
            if j < x and j - 1 in in_range:
                if fm.addition_row[j - 1] > fm.addition_row[j] + 1e-12:
                    bad.append(f"addition fraction rises {j} -> {j - 1}")
    return bad


class CoefficientState:
    """Running decomposition of the current energies into fractions of past
    additions (rows of ``a_matrix``, stamped by ``theta``) and of the
    reference-time energies (rows of ``b_matrix``).

    Rows older than ``window`` additions are dropped once their largest
    fraction falls below ``prune_tol``; ``pruned_bound`` accumulates an upper
    bound on the reconstruction error so introduced. ``prune_tol=0`` keeps
    everything (full-tracking verification mode).
    """

    def __init__(self, energies, *, time: int = 0, window: Optional[int] = None,
                 prune_tol: float = 1e-12):
        e = as_energies(energies)
        n = e.size
        self.n_sites = n
        self.origin_time = time
        self.t = time
        self.window = 10 * n * (n + 1) if window is None else int(window)
        self.prune_tol = float(prune_tol)
        self.b_matrix = np.diag((e > 0.0).astype(float))
        self.a_matrix = np.zeros((0, n))
        self.theta = np.zeros(0, dtype=np.int64)
        self.pruned_bound = 0.0
        self.pruned_rows = 0
        self.monotonicity_violations = 0
        self.envelope_violations = 0
        self._prev_max = np.zeros(0)  # aligned with a_matrix rows
        self._decay_base = 1.0 - fraction_floor(n)

    def update(self, report: AvalancheReport, f: Optional[FMatrix] = None) -> "CoefficientState":
        if isinstance(f, FMatrix):
            m = f.matrix
        elif f is not None:
            m = np.asarray(f, dtype=float)
        else:
            m = report.f_matrix
        if m is None:
            raise ValueError("report carries no coefficient matrix")
        n = self.n_sites
        if m.shape != (n + 1, n):
            raise ValueError(f"coefficient matrix shape {m.shape} does not match {n} sites")
        self.t += 1
        if report.waves:
            energy_map = m[:n]
            if self.a_matrix.shape[0]:
                self.a_matrix = self.a_matrix @ energy_map
            self.b_matrix = self.b_matrix @ energy_map
        self.a_matrix = np.vstack([self.a_matrix, m[n][None, :]])
        self.theta = np.append(self.theta, self.t)
        self._diagnose()
        self._prune()
        return self

    def _diagnose(self):
        if not self.a_matrix.shape[0]:
            return
        maxes = self.a_matrix.max(axis=1)
        old = maxes[:-1]  # the fresh row has no predecessor
        self.monotonicity_violations += int(np.count_nonzero(old > self._prev_max + 1e-12))
        ages = self.t - self.theta
        bound = self._decay_base ** (ages // (self.n_sites + 1))
        self.envelope_violations += int(np.count_nonzero(maxes > bound + 1e-12))
        self._prev_max = maxes

    def _prune(self):
        rows = self.a_matrix.shape[0]
        if not rows or self.prune_tol <= 0.0:
            return
        maxes = self.a_matrix.max(axis=1)
        old = self.theta <= self.t - self.window
        dropped = old & (maxes < self.prune_tol)
        if dropped.any():
            keep = ~dropped
            self.pruned_bound += float(maxes[dropped].sum())
            self.pruned_rows += int(dropped.sum())
            self.a_matrix = self.a_matrix[keep]
            self.theta = self.theta[keep]
            self._prev_max = self._prev_max[keep]

    def per_theta_max(self) -> np.ndarray:
        return self.a_matrix.max(axis=1) if self.a_matrix.shape[0] else np.zeros(0)

    def column_totals(self) -> np.ndarray:
        """Per-site sum of all tracked fractions; equals the nonempty
        indicator when additions never fall below 1/2 and nothing was pruned."""
        return self.a_matrix.sum(axis=0) + self.b_matrix.sum(axis=0)

    def reconstruct(self, amounts: Mapping[int, float], initial_energies) -> np.ndarray:
        """Recombine tracked fractions with the recorded amounts; matches the
        live configuration up to float error plus ``pruned_bound``."""
        init = as_energies(initial_energies)
        if init.size != self.n_sites:
            raise ValueError("initial configuration has the wrong number of sites")
        u = np.array([amounts[int(th)] for th in self.theta])
        out = init @ self.b_matrix
        if u.size:
            out = out + u @ self.a_matrix
        return out


def update_fractions(
    state: CoefficientState, report: AvalancheReport, f: Optional[FMatrix] = None
) -> CoefficientState:
    """Advance the decomposition by one recorded step (in place)."""
    return state.update(report, f=f)


@dataclass(frozen=True)
class DecayDiagnostics:
    theta: np.ndarray
    max_fraction: np.ndarray
    envelope: np.ndarray
    monotonicity_violations: int
    envelope_violations: int

    @property
    def ok(self) -> bool:
        return self.monotonicity_violations == 0 and self.envelope_violations == 0


def decay_diagnostics(state: CoefficientState, t: Optional[int] = None) -> DecayDiagnostics:
    """Largest tracked fraction per addition, with the geometric envelope
    each one must respect and the running violation counts."""
    now = state.t if t is None else t
    ages = now - state.theta
    envelope = state._decay_base ** (ages // (state.n_sites + 1))
    return DecayDiagnostics(
        theta=state.theta.copy(),
        max_fraction=state.per_theta_max(),
        envelope=envelope,
        monotonicity_violations=state.monotonicity_violations,
        envelope_violations=state.envelope_violations,
    )


@dataclass(frozen=True)
class TrackedRun:
    state: CoefficientState
    energies: np.ndarray
    initial: np.ndarray
    amounts: dict
    reports_checked: int


def tracked_run(
    params: ModelParams,
    steps: int,
    seed: int,
    *,
    start=None,
    window: Optional[int] = None,
    prune_tol: float = 1e-12,
    on_report=None,
) -> TrackedRun:
    """Drive a seeded chain for ``steps`` additions with full coefficient
    tracking; ``on_report(report, final_energies)`` sees every step."""
    rng = np.random.default_rng(seed)
    e = np.zeros(params.n_sites) if start is None else as_energies(start)
    initial = e.copy()
    state = CoefficientState(e, window=window, prune_tol=prune_tol)
    amounts = {}
    checked = 0
    for _ in range(steps):
        e, report = step(params, e, rng)
        state.update(report)
        amounts[state.t] = report.event.amount
        if on_report is not None:
            on_report(report, e)
            checked += 1
    return TrackedRun(state=state, energies=e, initial=initial, amounts=amounts,
                      reports_checked=checked)


def dump_csv(state: CoefficientState, path) -> None:
    """Write the tracked addition fractions as (t, theta, site, fraction) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "theta", "site", "fraction"])
        for th, row in zip(state.theta, state.a_matrix):
            for j, val in enumerate(row):
                w.writerow([state.t, int(th), j, repr(float(val))])
