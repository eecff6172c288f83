"""Randomized verification suites behind ``zhangpile verify``.

Each suite exercises one module's invariants on freshly sampled data and
returns a report; the CLI turns a failed report into exit status 2.

  abelian       any-order stabilization agrees with the wave schedule
  fsc           no forbidden subconfiguration is ever created; the interval
                scan agrees with the nonfull-site count on stable states
  coefficients  avalanche-matrix invariants, wave composition, running
                fraction bookkeeping and reconstruction
  asm-match     reduction and toppling counts agree with the discrete model
  onesite       averaging-identity residuals and the renewal oracle
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import asm, engine, tracking
from .core import ModelParams, count_nonfull, has_zhang_fsc, reduce
from .onesite import OneSiteDistribution, renewal_oracle

__all__ = ["VerifyReport", "SUITES", "run_suite"]


@dataclass
class VerifyReport:
    suite: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, msg: str):
        if len(self.failures) < 50:
            self.failures.append(msg)

    def summary(self) -> str:
        status = "ok" if self.ok else f"FAILED ({len(self.failures)} failures)"
        return f"verify {self.suite}: {self.checked} checks, {status}"


def _random_stable(rng, n):
    return rng.random(n)


def verify_abelian(n_sites: int, seed: int, trials: int = 10_000) -> VerifyReport:
    rep = VerifyReport("abelian")
    rng = np.random.default_rng(seed)
    params = ModelParams(n_sites=n_sites, a=0.0, b=1.0)
    for _ in range(trials):
        c = _random_stable(rng, n_sites)
        x = int(rng.integers(n_sites))
        u = float(rng.random())
        final, _ = engine.add_and_stabilize(params, c, x, u, track_coefficients=False)
        seeded = c.copy()
        seeded[x] += u
        for _ in range(5):
            other, _ = engine.stabilize_any_order(seeded.copy(), rng)
            if np.abs(other - final).max() > 1e-12:
                rep.fail(f"order-dependent result for config {c} + {u} at {x}")
                break
        rep.checked += 1
    try:
        engine.stabilize_any_order(np.array([1.2, 1.6]))
        rep.fail("adjacent unstable sites were accepted")
    except ValueError:
        rep.checked += 1
    return rep


def verify_fsc(n_sites: int, seed: int, trials: int = 5_000) -> VerifyReport:
    rep = VerifyReport("fsc")
    rng = np.random.default_rng(seed)
    params = ModelParams(n_sites=n_sites, a=0.0, b=1.0)
    for _ in range(trials):
        c = _random_stable(rng, n_sites)
        if has_zhang_fsc(c) != (count_nonfull(c) >= 2):
            rep.fail(f"interval scan disagrees with nonfull count on {c}")
        rep.checked += 1
    # No-creation: start without one, add anything.
    for _ in range(trials):
        c = 0.5 + 0.5 * rng.random(n_sites)
        if rng.random() < 0.5:
            c[int(rng.integers(n_sites))] = float(0.5 * rng.random())
        if has_zhang_fsc(c):
            continue
        x = int(rng.integers(n_sites))
        u = float(rng.random())
        final, _ = engine.add_and_stabilize(params, c, x, u, track_coefficients=False)
        if has_zhang_fsc(final):
            rep.fail(f"forbidden subconfiguration created from {c} + {u} at {x}")
        rep.checked += 1
    return rep


def verify_coefficients(n_sites: int, seed: int, trials: int = 2_000) -> VerifyReport:
    rep = VerifyReport("coefficients")
    params = ModelParams(n_sites=n_sites, a=0.5, b=1.0)

    def on_report(report, final):
        if report.no_topple:
            return
        fm = tracking.wave_f_coefficients(report)
        if np.abs(fm.matrix - report.f_matrix).max() > 1e-12:
            rep.fail(f"wave composition differs from live coefficients at t={report.event.time}")
        for msg in tracking.check_f_invariants(fm, final):
            rep.fail(msg)
        rep.checked += 1

    run = tracking.tracked_run(params, trials, seed, prune_tol=1e-14, on_report=on_report)
    recon = run.state.reconstruct(run.amounts, run.initial)
    if np.abs(recon - run.energies).max() > max(1e-9, 10 * run.state.pruned_bound):
        rep.fail("reconstruction from tracked fractions drifted")
    if run.state.monotonicity_violations:
        rep.fail(f"{run.state.monotonicity_violations} fraction-maximum increases")
    if run.state.envelope_violations:
        rep.fail(f"{run.state.envelope_violations} geometric-envelope violations")
    rep.checked += 2
    return rep


def verify_asm_match(n_sites: int, seed: int, trials: int = 5_000) -> VerifyReport:
    rep = VerifyReport("asm-match")
    rng = np.random.default_rng(seed)
    params = ModelParams(n_sites=n_sites, a=0.5, b=1.0)
    e = np.zeros(n_sites)
    for _ in range(n_sites * n_sites + 10):  # regularize first
        e, _ = engine.step(params, e, rng, track_coefficients=False)
    for _ in range(trials):
        grains = reduce(e).astype(np.int64)
        x = int(rng.integers(n_sites))
        u = params.a + (params.b - params.a) * rng.random()
        e, report = engine.add_and_stabilize(params, e, x, u, track_coefficients=False)
        expect, counts = asm.asm_add(grains, x)
        if not np.array_equal(reduce(e).astype(np.int64), expect):
            rep.fail(f"reduction mismatch after adding at {x}")
        if not np.array_equal(report.topple_counts, counts):
            rep.fail(f"toppling counts mismatch after adding at {x}")
        rep.checked += 1
    return rep


def verify_onesite(seed: int, trials: int = 200_000) -> VerifyReport:
    rep = VerifyReport("onesite")
    rng = np.random.default_rng(seed)
    for b in (1.0, 0.5, 0.1):
        dist = OneSiteDistribution(b)
        grid = np.linspace(0.0, 1.0, 100)
        worst = max(abs(dist.delay_residual(h)) for h in grid)
        if worst > 1e-6:
            rep.fail(f"averaging-identity residual {worst} at b={b}")
        rep.checked += grid.size
        hs = np.linspace(0.0, 1.0, 11)
        est = renewal_oracle(b, hs, trials, rng)
        gap = np.abs(est.estimate - dist.cdf(hs))
        tol = 3.0 * est.stderr + 1e-12
        if np.any(gap > tol):
            rep.fail(f"renewal oracle disagrees with the closed form at b={b}")
        rep.checked += hs.size
    return rep


SUITES = {
    "abelian": verify_abelian,
    "fsc": verify_fsc,
    "coefficients": verify_coefficients,
    "asm-match": verify_asm_match,
    "onesite": verify_onesite,
}


def run_suite(name: str, n_sites: int, seed: int, trials=None) -> VerifyReport:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    fn = SUITES[name]
    kwargs = {} if trials is None else {"trials": trials}
    if name == "onesite":
        return fn(seed, **kwargs)
    return fn(n_sites, seed, **kwargs)
