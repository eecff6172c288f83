"""Configurations and site classification for the continuous sandpile chain.

A configuration assigns a nonnegative energy to each of N sites on a line.
A site is stable below the critical energy 1. Stable sites split further:
empty at exactly 0, anomalous in (0, 1/2), full in [1/2, 1).

Classification uses exact comparisons on 64-bit floats, no epsilons:
toppling zeroes a site exactly, so empty detection is exact, and the 1/2
and 1 boundaries are hit with probability zero under continuous additions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "CRITICAL_ENERGY",
    "SiteLabel",
    "ModelParams",
    "as_energies",
    "is_stable",
    "classify",
    "reduce",
    "count_nonfull",
    "is_regular",
    "has_zhang_fsc",
]

CRITICAL_ENERGY = 1.0


class SiteLabel(IntEnum):
    """Site labels. EMPTY/FULL/UNSTABLE double as the grain numbers of the
    discrete abelian sandpile under :func:`reduce`; ANOMALOUS has no discrete
    counterpart and only occurs when additions smaller than 1/2 are allowed.
    """

    EMPTY = 0
    FULL = 1
    UNSTABLE = 2
    ANOMALOUS = 3


@dataclass(frozen=True)
class ModelParams:
    """Lattice size and the interval [a, b] the addition amounts are drawn from."""

    n_sites: int
    a: float
    b: float
    critical_energy: float = CRITICAL_ENERGY

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"need 0 <= a < b <= 1, got [{self.a}, {self.b}]")
        if self.critical_energy != CRITICAL_ENERGY:
            raise ValueError("the critical energy is fixed to 1")

    @property
    def mean_addition(self) -> float:
        return 0.5 * (self.a + self.b)


def as_energies(values) -> np.ndarray:
    """Validate and copy an energy vector into a float64 array."""
    e = np.array(values, dtype=np.float64)
    if e.ndim != 1 or e.size < 1:
        raise ValueError("a configuration is a nonempty 1-d energy vector")
    if not np.all(np.isfinite(e)):
        raise ValueError("energies must be finite")
    if np.any(e < 0.0):
        raise ValueError("energies must be nonnegative")
    return e


def is_stable(energies) -> bool:
    """True when every site is below the critical energy."""
    return bool(np.all(np.asarray(energies) < CRITICAL_ENERGY))


def classify(energy: float) -> SiteLabel:
    """Label a single energy value.

    Boundaries are sharp: exactly 0 is EMPTY, exactly 1/2 is FULL, exactly 1
    is UNSTABLE.
    """
    if energy < 0.0 or not np.isfinite(energy):
        raise ValueError(f"energy must be finite and nonnegative, got {energy}")
    if energy == 0.0:
        return SiteLabel.EMPTY
    if energy < 0.5:
        return SiteLabel.ANOMALOUS
    if energy < 1.0:
        return SiteLabel.FULL
    return SiteLabel.UNSTABLE


def reduce(configuration) -> np.ndarray:
    """Elementwise classification, returned as an int8 array of label codes.

    For configurations without anomalous sites the result read as grain
    counts is exactly the corresponding discrete-sandpile configuration.
    """
    e = as_energies(configuration)
    out = np.empty(e.shape, dtype=np.int8)
    out[e == 0.0] = SiteLabel.EMPTY
    out[(e > 0.0) & (e < 0.5)] = SiteLabel.ANOMALOUS
    out[(e >= 0.5) & (e < 1.0)] = SiteLabel.FULL
    out[e >= 1.0] = SiteLabel.UNSTABLE
    return out


def count_nonfull(energies) -> int:
    """Number of empty-or-anomalous sites (energy below 1/2)."""
    return int(np.count_nonzero(np.asarray(energies) < 0.5))


def is_regular(configuration) -> bool:
    """True when a stable configuration has no anomalous site and at most one
    empty site."""
    e = as_energies(configuration)
    if not is_stable(e):
        raise ValueError("regularity is defined for stable configurations only")
    n_empty = int(np.count_nonzero(e == 0.0))
    n_anomalous = int(np.count_nonzero((e > 0.0) & (e < 0.5)))
    return n_anomalous == 0 and n_empty <= 1


def has_zhang_fsc(configuration) -> bool:
    """Detect a forbidden subconfiguration: an interval W of at least two
    sites on which twice the energy of every site is below its number of
    neighbors inside W.

    Interior sites of an interval have two neighbors, end sites one, so for
    a stable configuration this amounts to two sites below 1/2 with no
    unstable site between them. Any forbidden subset contains a forbidden
    interval, so scanning intervals is complete. Intended for tests and
    verification at desk scale (quadratic worst case).
    """
    e = as_energies(configuration)
    n = e.size
    for left in range(n - 1):
        if 2.0 * e[left] >= 1.0:
            continue
        for right in range(left + 1, n):
            if 2.0 * e[right] < 1.0:
                return True
            if 2.0 * e[right] >= 2.0:
                break
    return False
