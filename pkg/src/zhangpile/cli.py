"""Command-line front end.

Subcommands: ``simulate`` (stationary run with histogram export),
``exact-onesite`` (closed-form CDF/density table), ``couple`` (coupling
experiments), ``verify`` (randomized invariant suites) and ``sweep``
(simulate over several lattice sizes and summarize concentration).

Every run is reproducible: a missing ``--seed`` draws a fresh one and prints
it. Identical command lines produce byte-identical output files.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import secrets
import sys

import numpy as np

from . import coupling, montecarlo
from ._speed import BACKEND
from ._verify import SUITES, run_suite
from .core import ModelParams
from .onesite import OneSiteDistribution

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zhangpile", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add_model_flags(sp, sites_default=None):
        sp.add_argument("--sites", type=int, default=sites_default, required=sites_default is None)
        sp.add_argument("--a", type=float, default=0.0)
        sp.add_argument("--b", type=float, default=1.0)
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("simulate", help="stationary run with histogram export")
    add_model_flags(sp)
    sp.add_argument("--steps", type=int, default=100_000)
    sp.add_argument("--burn-in", type=float, default=0.10, help="burn-in fraction")
    sp.add_argument("--bins", type=int, default=montecarlo.DEFAULT_BINS)
    sp.add_argument("--tracked-sites", type=str, default="all",
                    help="'all' or comma-separated site indices")
    sp.add_argument("--out", type=str, default=".", help="output directory")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("exact-onesite", help="closed-form one-site CDF/density table")
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--grid", type=int, default=201)
    sp.add_argument("--out", type=str, required=True)

    sp = sub.add_parser("couple", help="coupling experiments")
    add_model_flags(sp, sites_default=1)
    sp.add_argument("--mode", choices=("shift", "exact", "reduction-match", "equalize"),
                    required=True)
    sp.add_argument("--attempts", type=int, default=10, help="independent experiments")
    sp.add_argument("--max-steps", type=int, default=1_000_000)
    sp.add_argument("--out", type=str, default=None)

    sp = sub.add_parser("verify", help="randomized invariant suites")
    sp.add_argument("--suite", choices=sorted(SUITES), required=True)
    sp.add_argument("--sites", type=int, default=6)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)

    sp = sub.add_parser("sweep", help="simulate over several sizes, summarize concentration")
    sp.add_argument("--sizes", type=str, required=True, help="comma-separated lattice sizes")
    sp.add_argument("--a", type=float, default=0.5)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=100_000)
    sp.add_argument("--burn-in", type=float, default=0.10)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", type=str, default=None)
    return p


def _seed_of(args) -> int:
    if args.seed is None:
        seed = secrets.randbelow(2**63)
        print(f"seed: {seed}")
        return seed
    return args.seed


def _num(x) -> str:
    return repr(float(x))


def _cmd_simulate(args) -> int:
    params = ModelParams(n_sites=args.sites, a=args.a, b=args.b)
    tracked = "all" if args.tracked_sites == "all" else tuple(
        int(s) for s in args.tracked_sites.split(",") if s
    )
    cfg = montecarlo.RunConfig(
        params=params,
        steps=args.steps,
        seed=_seed_of(args),
        burn_in_fraction=args.burn_in,
        bins=args.bins,
        tracked_sites=tracked,
    )
    stats = montecarlo.simulate_stationary(cfg)
    paths = montecarlo.export_stats(stats, args.out, fmt=args.format, tracked_sites=tracked)
    mid = params.n_sites // 2
    print(
        f"simulate N={params.n_sites} [{params.a},{params.b}] steps={args.steps}: "
        f"central-site mean {stats.site_mean[mid]:.5f} ± {stats.site_mean_stderr(mid):.5f}, "
        f"dissipated {stats.mean_dissipated:.5f} ± {stats.dissipated_stderr():.5f} "
        f"({len(paths)} files, kernel {BACKEND})"
    )
    return EXIT_OK


def _cmd_exact_onesite(args) -> int:
    dist = OneSiteDistribution(args.b)
    hs = np.linspace(0.0, 1.0, args.grid)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "F", "f"])
        for h in hs:
            w.writerow([_num(h), _num(dist.cdf(float(h))), _num(dist.pdf(float(h)))])
    print(f"exact-onesite b={args.b}: wrote {args.grid} rows to {args.out}, "
          f"zero atom {dist.f0:.6f}")
    return EXIT_OK


def _cmd_couple(args) -> int:
    seed = _seed_of(args)
    rows = []
    if args.mode in ("shift", "exact"):
        mode = args.mode
        info = coupling.periodicity_info(args.a, args.b)
        if mode == "exact" and info.periodic:
            print(f"[{args.a},{args.b}] is periodic (gcd {info.gcd}); no exact coupling "
                  "exists, running shift mode instead")
            mode = "shift"
        for k in range(args.attempts):
            res = coupling.couple_one_site(args.a, args.b, seed + k, args.max_steps, mode=mode)
            rows.append((k, res.met, res.meeting_time))
        met = sum(1 for _, m, _ in rows if m)
        print(f"couple {mode} N=1 [{args.a},{args.b}]: {met}/{args.attempts} met")
    elif args.mode == "reduction-match":
        params = ModelParams(n_sites=args.sites, a=args.a, b=args.b)
        trace = None
        for k in range(args.attempts):
            res = coupling.couple_reduction_match(params, seed + k, args.max_steps)
            rows.append((k, res.met, res.meeting_time))
            if trace is None and res.met:
                trace = res.diagnostics["decay_trace"]
        met = sum(1 for _, m, _ in rows if m)
        times = [t for _, m, t in rows if m]
        mean_t = sum(times) / len(times) if times else float("nan")
        print(f"couple reduction-match N={args.sites}: {met}/{args.attempts} met, "
              f"mean meeting time {mean_t:.2f}")
        if args.out and trace is not None:
            with open(_suffixed(args.out, "_decay"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["post_step", "sup_difference"])
                for i, v in enumerate(trace):
                    w.writerow([i + 1, _num(v)])
    else:
        params = ModelParams(n_sites=args.sites, a=args.a, b=args.b)
        for k in range(args.attempts):
            res = coupling.couple_equalize_zero_one(params, seed + k, max_steps=args.max_steps)
            rows.append((k, res.met, res.meeting_time))
        met = sum(1 for _, m, _ in rows if m)
        print(f"couple equalize N={args.sites}: {met}/{args.attempts} met")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["attempt", "met", "meeting_time"])
            for k, m, t in rows:
                w.writerow([k, int(m), "" if t is None else t])
    return EXIT_OK


def _suffixed(path: str, suffix: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}{suffix}{ext or '.csv'}"


def _cmd_verify(args) -> int:
    seed = _seed_of(args)
    report = run_suite(args.suite, args.sites, seed, trials=args.trials)
    print(report.summary())
    for msg in report.failures[:10]:
        print(f"  {msg}")
    return EXIT_OK if report.ok else EXIT_VERIFY


def _cmd_sweep(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise ValueError("--sizes must name at least one lattice size")
    seed = _seed_of(args)
    runs = []
    for n in sizes:
        params = ModelParams(n_sites=n, a=args.a, b=args.b)
        cfg = montecarlo.RunConfig(params=params, steps=args.steps, seed=seed,
                                   burn_in_fraction=args.burn_in)
        runs.append(montecarlo.simulate_stationary(cfg))
    target = runs[0].params.mean_addition
    rows = []
    for r in runs:
        dev = float(np.abs(r.site_mean - target).max())
        rows.append((r.params.n_sites, dev, float(r.site_var.max()),
                     r.empty_site_frequency, r.mean_dissipated))
        print(f"sweep N={r.params.n_sites}: max |mean - {target}| = {dev:.5f}, "
              f"max variance {r.site_var.max():.5f}")
    if len(sizes) >= 3 and args.a >= 0.5:
        qr = montecarlo.quasi_unit_report(runs)
        print(f"concentration: mean deviation decreasing={qr.mean_deviation_decreasing}, "
              f"variance decreasing={qr.variance_decreasing}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_sites", "max_mean_deviation", "max_site_variance",
                        "empty_site_frequency", "mean_dissipated"])
            for row in rows:
                w.writerow([row[0]] + [_num(v) for v in row[1:]])
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "exact-onesite": _cmd_exact_onesite,
    "couple": _cmd_couple,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError) as exc:
        print(f"zhangpile: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"zhangpile: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
