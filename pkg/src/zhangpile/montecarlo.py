"""Long-run simulation and stationary statistics.

Chains start from the all-zero configuration, discard a burn-in fraction
(10% by default) and then accumulate per-site histograms with the zero atom
counted separately, moments, empty-site statistics, boundary-loss averages,
and optional pairwise dependence probes. Error bars come from batch means
over 50 batches; the chain mixes fast enough for that to be honest at desk
scale.

Runs are reproducible: all randomness is pregenerated from the seed (sites
first, then amounts) and consumed by whichever kernel is active, so the
results do not depend on the backend.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _speed
from .core import ModelParams

__all__ = [
    "RunConfig",
    "StationaryStats",
    "simulate_stationary",
    "simulate_replicas",
    "merge_stats",
    "ConservationReport",
    "conservation_probe",
    "QuasiUnitReport",
    "quasi_unit_report",
    "ProbeEstimate",
    "independence_probe",
    "export_stats",
    "run_slug",
]

DEFAULT_BINS = 200
DEFAULT_BATCHES = 50


def _validate_event(ev, name):
    lo, hi = float(ev[0]), float(ev[1])
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError(f"{name} must be a positive-length subinterval of [0, 1), got {ev}")
    return (lo, hi)


@dataclass(frozen=True)
class RunConfig:
    """One simulation run: model, length, burn-in fraction, seed, binning."""

    params: ModelParams
    steps: int
    seed: int
    burn_in_fraction: float = 0.10
    bins: int = DEFAULT_BINS
    tracked_sites: object = "all"
    probe_pairs: tuple = ()
    probe_event_a: Optional[tuple] = None
    probe_event_b: Optional[tuple] = None
    trace_site: Optional[int] = None
    n_batches: int = DEFAULT_BATCHES

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        n = self.params.n_sites
        for x, y in self.probe_pairs:
            if not (0 <= x < n and 0 <= y < n):
                raise ValueError(f"probe pair ({x}, {y}) out of range")
        if self.probe_pairs:
            if self.probe_event_a is None or self.probe_event_b is None:
                raise ValueError("probe pairs need both conditioning events")
            _validate_event(self.probe_event_a, "probe_event_a")
            _validate_event(self.probe_event_b, "probe_event_b")
        if self.trace_site is not None and not 0 <= self.trace_site < n:
            raise ValueError(f"trace_site {self.trace_site} out of range")

    @property
    def burn_in_steps(self) -> int:
        return int(self.steps * self.burn_in_fraction)


@dataclass
class StationaryStats:
    """Accumulated post-burn-in statistics of one or more merged runs."""

    params: ModelParams
    steps: int
    burn_in_steps: int
    seed: Optional[int]
    bins: int
    sample_count: int
    histograms: np.ndarray  # (n_sites, bins) masses on (0, 1)
    zero_atom: np.ndarray  # exact zero counts per site
    site_mean: np.ndarray
    site_var: np.ndarray
    per_site_zero_freq: np.ndarray
    empty_site_frequency: float
    one_empty_positions: np.ndarray
    n_no_empty: int
    n_one_empty: int
    n_multi_empty: int
    mean_dissipated: float
    regularity_violations: int
    fsc_creations: int
    multi_deficient_samples: int
    batch_site_sum: np.ndarray
    batch_zero: np.ndarray
    batch_diss: np.ndarray
    batch_sizes: np.ndarray
    probe_pairs: tuple
    probe_event_a: Optional[tuple]
    probe_event_b: Optional[tuple]
    probe_counts: Optional[np.ndarray]
    batch_probe: Optional[np.ndarray]
    final_energies: Optional[np.ndarray]
    trace: Optional[np.ndarray]
    backend: str

    def site_mean_stderr(self, site: int) -> float:
        """Batch-means standard error of one site's mean energy."""
        means = self.batch_site_sum[:, site] / self.batch_sizes
        return float(means.std(ddof=1) / math.sqrt(means.size))

    def zero_freq_stderr(self, site: Optional[int] = None) -> float:
        """Batch-means standard error of the empty frequency (one site, or
        the across-site aggregate)."""
        if site is None:
            counts = self.batch_zero.sum(axis=1) / self.params.n_sites
        else:
            counts = self.batch_zero[:, site]
        freqs = counts / self.batch_sizes
        return float(freqs.std(ddof=1) / math.sqrt(freqs.size))

    def dissipated_stderr(self) -> float:
        means = self.batch_diss / self.batch_sizes
        return float(means.std(ddof=1) / math.sqrt(means.size))


def _batch_sizes(n_post: int, n_batches: int) -> np.ndarray:
    edges = np.arange(n_batches + 1) * n_post // n_batches
    return np.diff(edges)


def simulate_stationary(cfg: RunConfig) -> StationaryStats:
    """Run the chain from the all-zero configuration and accumulate
    stationary statistics; deterministic given the seed."""
    params = cfg.params
    n = params.n_sites
    burn = cfg.burn_in_steps
    n_post = cfg.steps - burn
    if n_post < 1:
        raise ValueError("insufficient samples: burn-in leaves no steps")
    n_batches = min(cfg.n_batches, n_post)

    rng = np.random.default_rng(cfg.seed)
    sites = rng.integers(0, n, size=cfg.steps, dtype=np.int64)
    amounts = params.a + (params.b - params.a) * rng.random(cfg.steps)

    e = np.zeros(n)
    hist = np.zeros((n, cfg.bins), dtype=np.int64)
    zero_counts = np.zeros(n, dtype=np.int64)
    site_sum = np.zeros(n)
    site_sumsq = np.zeros(n)
    batch_site_sum = np.zeros((n_batches, n))
    batch_zero = np.zeros((n_batches, n), dtype=np.int64)
    batch_diss = np.zeros(n_batches)
    one_empty_pos = np.zeros(n, dtype=np.int64)
    n_probes = len(cfg.probe_pairs)
    probe_xy = np.zeros((n_probes, 2), dtype=np.int64)
    probe_bounds = np.zeros((n_probes, 4))
    for i, (x, y) in enumerate(cfg.probe_pairs):
        probe_xy[i] = (x, y)
        probe_bounds[i] = (*cfg.probe_event_a, *cfg.probe_event_b)
    probe_counts = np.zeros((n_probes, 3), dtype=np.int64)
    batch_probe = np.zeros((n_batches, n_probes, 3), dtype=np.int64)
    trace_site = -1 if cfg.trace_site is None else cfg.trace_site
    trace_out = np.zeros(n_post if trace_site >= 0 else 0)

    (
        diss_sum,
        diss_sumsq,
        n_no_empty,
        n_one_empty,
        n_multi_empty,
        reg_violations,
        fsc_creations,
        n_multi_deficient,
    ) = _speed.run_chain(
        e,
        sites,
        amounts,
        burn,
        cfg.bins,
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
        n * (n - 1),
        trace_site,
        trace_out,
    )

    mean = site_sum / n_post
    var = np.maximum(site_sumsq / n_post - mean**2, 0.0)
    return StationaryStats(
        params=params,
        steps=cfg.steps,
        burn_in_steps=burn,
        seed=cfg.seed,
        bins=cfg.bins,
        sample_count=n_post,
        histograms=hist,
        zero_atom=zero_counts,
        site_mean=mean,
        site_var=var,
        per_site_zero_freq=zero_counts / n_post,
        empty_site_frequency=float(zero_counts.sum() / (n_post * n)),
        one_empty_positions=one_empty_pos,
        n_no_empty=int(n_no_empty),
        n_one_empty=int(n_one_empty),
        n_multi_empty=int(n_multi_empty),
        mean_dissipated=diss_sum / n_post,
        regularity_violations=int(reg_violations),
        fsc_creations=int(fsc_creations),
        multi_deficient_samples=int(n_multi_deficient),
        batch_site_sum=batch_site_sum,
        batch_zero=batch_zero,
        batch_diss=batch_diss,
        batch_sizes=_batch_sizes(n_post, n_batches),
        probe_pairs=cfg.probe_pairs,
        probe_event_a=cfg.probe_event_a,
        probe_event_b=cfg.probe_event_b,
        probe_counts=probe_counts if n_probes else None,
        batch_probe=batch_probe if n_probes else None,
        final_energies=e,
        trace=trace_out if trace_site >= 0 else None,
        backend=_speed.BACKEND,
    )


def _run_one(cfg: RunConfig) -> StationaryStats:
    return simulate_stationary(cfg)


def simulate_replicas(cfg: RunConfig, replicas: int, max_workers: Optional[int] = None):
    """Independent replicas with seeds derived from ``cfg.seed``, merged by
    summation. ``max_workers`` > 1 fans the chains out to processes."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    child_seeds = np.random.SeedSequence(cfg.seed).generate_state(replicas, dtype=np.uint64)
    cfgs = [replace(cfg, seed=int(s)) for s in child_seeds]
    if max_workers is None or max_workers <= 1:
        runs = [simulate_stationary(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            runs = list(pool.map(_run_one, cfgs))
    return merge_stats(runs)


def merge_stats(runs) -> StationaryStats:
    """Sum independent runs of identical shape into one statistics object."""
    runs = list(runs)
    if not runs:
        raise ValueError("nothing to merge")
    first = runs[0]
    for r in runs[1:]:
        if r.params != first.params or r.bins != first.bins:
            raise ValueError("runs must share model parameters and binning")
    total = sum(r.sample_count for r in runs)
    site_sum = sum(r.site_mean * r.sample_count for r in runs)
    site_sumsq = sum((r.site_var + r.site_mean**2) * r.sample_count for r in runs)
    mean = site_sum / total
    zero = sum(r.zero_atom for r in runs)
    n_probes = len(first.probe_pairs)
    return StationaryStats(
        params=first.params,
        steps=sum(r.steps for r in runs),
        burn_in_steps=sum(r.burn_in_steps for r in runs),
        seed=None,
        bins=first.bins,
        sample_count=total,
        histograms=sum(r.histograms for r in runs),
        zero_atom=zero,
        site_mean=mean,
        site_var=np.maximum(site_sumsq / total - mean**2, 0.0),
        per_site_zero_freq=zero / total,
        empty_site_frequency=float(zero.sum() / (total * first.params.n_sites)),
        one_empty_positions=sum(r.one_empty_positions for r in runs),
        n_no_empty=sum(r.n_no_empty for r in runs),
        n_one_empty=sum(r.n_one_empty for r in runs),
        n_multi_empty=sum(r.n_multi_empty for r in runs),
        mean_dissipated=sum(r.mean_dissipated * r.sample_count for r in runs) / total,
        regularity_violations=sum(r.regularity_violations for r in runs),
        fsc_creations=sum(r.fsc_creations for r in runs),
        multi_deficient_samples=sum(r.multi_deficient_samples for r in runs),
        batch_site_sum=np.concatenate([r.batch_site_sum for r in runs]),
        batch_zero=np.concatenate([r.batch_zero for r in runs]),
        batch_diss=np.concatenate([r.batch_diss for r in runs]),
        batch_sizes=np.concatenate([r.batch_sizes for r in runs]),
        probe_pairs=first.probe_pairs,
        probe_event_a=first.probe_event_a,
        probe_event_b=first.probe_event_b,
        probe_counts=sum(r.probe_counts for r in runs) if n_probes else None,
        batch_probe=np.concatenate([r.batch_probe for r in runs]) if n_probes else None,
        final_energies=None,
        trace=None,
        backend=first.backend,
    )


@dataclass(frozen=True)
class ConservationReport:
    """Mean boundary loss per step against the mean addition."""

    expected: float
    observed: float
    stderr: float
    discrepancy: float
    sample_count: int


def conservation_probe(stats: StationaryStats, params: Optional[ModelParams] = None) -> ConservationReport:
    """At stationarity the mean energy added per step equals the mean energy
    lost per step; report the measured gap with its Monte Carlo error."""
    if stats.sample_count < 1:
        raise ValueError("insufficient samples")
    p = stats.params if params is None else params
    expected = p.mean_addition
    observed = stats.mean_dissipated
    return ConservationReport(
        expected=expected,
        observed=observed,
        stderr=stats.dissipated_stderr(),
        discrepancy=observed - expected,
        sample_count=stats.sample_count,
    )


@dataclass(frozen=True)
class QuasiUnitReport:
    """Concentration of site energies on the mean addition as the lattice
    grows: per-size worst deviation of site means and worst site variance."""

    sizes: np.ndarray
    max_mean_deviation: np.ndarray
    max_site_variance: np.ndarray
    mean_deviation_decreasing: bool
    variance_decreasing: bool


def quasi_unit_report(stats_list) -> QuasiUnitReport:
    runs = sorted(stats_list, key=lambda s: s.params.n_sites)
    if len(runs) < 3:
        raise ValueError("need >= 3 sizes")
    sizes = np.array([r.params.n_sites for r in runs])
    if len(set(sizes.tolist())) < 3:
        raise ValueError("need >= 3 distinct sizes")
    ab = {(r.params.a, r.params.b) for r in runs}
    if len(ab) != 1:
        raise ValueError("runs must share the addition interval")
    a, _ = next(iter(ab))
    if a < 0.5:
        raise ValueError("concentration on the mean addition requires a >= 1/2")
    target = runs[0].params.mean_addition
    dev = np.array([np.abs(r.site_mean - target).max() for r in runs])
    var = np.array([r.site_var.max() for r in runs])
    return QuasiUnitReport(
        sizes=sizes,
        max_mean_deviation=dev,
        max_site_variance=var,
        mean_deviation_decreasing=bool(np.all(np.diff(dev) < 0)),
        variance_decreasing=bool(np.all(np.diff(var) < 0)),
    )


@dataclass(frozen=True)
class ProbeEstimate:
    """Estimated dependence of site x on site y:
    P(energy at x in B | energy at y in A) - P(energy at x in B)."""

    x: int
    y: int
    event_a: tuple
    event_b: tuple
    estimate: Optional[float]
    stderr: Optional[float]
    flagged: bool


def independence_probe(stats: StationaryStats, pairs=None) -> list:
    """Dependence estimates for the probes accumulated during the run.

    Diagnostic only; a pair whose conditioning event has no empirical mass
    is flagged instead of estimated.
    """
    if stats.probe_counts is None:
        raise ValueError("the run was configured without dependence probes")
    wanted = list(stats.probe_pairs) if pairs is None else [tuple(p) for p in pairs]
    out = []
    for pair in wanted:
        try:
            i = list(stats.probe_pairs).index(pair)
        except ValueError:
            raise KeyError(f"pair {pair} was not accumulated during the run")
        c_a, c_b, c_ab = stats.probe_counts[i]
        if c_a == 0:
            out.append(ProbeEstimate(pair[0], pair[1], stats.probe_event_a,
                                     stats.probe_event_b, None, None, True))
            continue
        est = c_ab / c_a - c_b / stats.sample_count
        bp = stats.batch_probe[:, i, :]
        ok = bp[:, 0] > 0
        if ok.sum() >= 2:
            per_batch = bp[ok, 2] / bp[ok, 0] - bp[ok, 1] / stats.batch_sizes[ok]
            se = float(per_batch.std(ddof=1) / math.sqrt(ok.sum()))
        else:
            se = float("nan")
        out.append(ProbeEstimate(pair[0], pair[1], stats.probe_event_a,
                                 stats.probe_event_b, float(est), se, False))
    return out


# -- file export -----------------------------------------------------------


def _num(x) -> str:
    return repr(float(x))


def run_slug(params: ModelParams, steps: int, seed) -> str:
    return f"N{params.n_sites}_a{params.a}_b{params.b}_steps{steps}_seed{seed}"


def _tracked(stats: StationaryStats, tracked_sites) -> list:
    if tracked_sites in (None, "all"):
        return list(range(stats.params.n_sites))
    return [int(s) for s in tracked_sites]


def export_stats(stats: StationaryStats, out_dir, fmt: str = "csv", tracked_sites="all") -> list:
    """Write per-site histogram files plus one summary table.

    Histogram rows are (bin_left, mass) with a trailing ZERO_ATOM row; the
    JSON format mirrors the same fields. Returns the paths written. Output
    is byte-deterministic for a given run.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    slug = run_slug(stats.params, stats.steps, stats.seed)
    width = 1.0 / stats.bins
    paths = []
    for j in _tracked(stats, tracked_sites):
        path = os.path.join(out_dir, f"hist_{slug}_site{j}.{fmt}")
        lefts = [i * width for i in range(stats.bins)]
        masses = [int(m) for m in stats.histograms[j]]
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["bin_left", "mass"])
                for left, m in zip(lefts, masses):
                    w.writerow([_num(left), m])
                w.writerow(["ZERO_ATOM", int(stats.zero_atom[j])])
        else:
            with open(path, "w") as fh:
                json.dump(
                    {"bin_left": lefts, "mass": masses, "zero_atom": int(stats.zero_atom[j])},
                    fh,
                    indent=None,
                    separators=(",", ":"),
                )
        paths.append(path)

    path = os.path.join(out_dir, f"summary_{slug}.{fmt}")
    rows = [
        (j, stats.site_mean[j], stats.site_var[j], stats.per_site_zero_freq[j])
        for j in _tracked(stats, tracked_sites)
    ]
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["site", "mean", "variance", "zero_freq"])
            for j, m, v, z in rows:
                w.writerow([j, _num(m), _num(v), _num(z)])
            w.writerow(["MEAN_DISSIPATED", _num(stats.mean_dissipated), "", ""])
            w.writerow(["EMPTY_SITE_FREQUENCY", _num(stats.empty_site_frequency), "", ""])
    else:
        with open(path, "w") as fh:
            json.dump(
                {
                    "sites": [
                        {"site": j, "mean": m, "variance": v, "zero_freq": z}
                        for j, m, v, z in rows
                    ],
                    "mean_dissipated": stats.mean_dissipated,
                    "empty_site_frequency": stats.empty_site_frequency,
                },
                fh,
                indent=None,
                separators=(",", ":"),
            )
    paths.append(path)
    return paths
