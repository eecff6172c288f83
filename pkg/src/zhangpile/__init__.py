"""Continuous-energy sandpile on a line of N sites.

Uniform amounts from [a, b] land on uniform sites; a site at or above the
critical energy 1 topples, halving itself onto its neighbors, with boundary
halves lost. The package provides the exact wave-ordered avalanche dynamics
with full redistribution bookkeeping, the discrete-sandpile reduction, a
closed-form stationary law for the single-site chain with an independent
renewal oracle, seeded long-run Monte Carlo statistics, and the coupling
experiments that make the model's convergence statements measurable.

The long-run simulation loop runs on a compiled kernel when available (see
``zhangpile.kernel_backend``); a pure-Python fallback with bit-identical
results is selected otherwise.
"""

from ._speed import BACKEND as kernel_backend
from .core import (
    CRITICAL_ENERGY,
    ModelParams,
    SiteLabel,
    as_energies,
    classify,
    count_nonfull,
    has_zhang_fsc,
    is_regular,
    is_stable,
    reduce,
)
from .engine import (
    AdditionEvent,
    AvalancheReport,
    Wave,
    add_and_stabilize,
    stabilize_any_order,
    step,
    topple,
)
from .asm import asm_add, asm_relax_bruteforce, asm_relax_waves, is_recurrent
from .tracking import (
    CoefficientState,
    DecayDiagnostics,
    FMatrix,
    check_f_invariants,
    decay_diagnostics,
    tracked_run,
    update_fractions,
    wave_f_coefficients,
)
from .onesite import OneSiteDistribution, RenewalEstimate, renewal_oracle
from .montecarlo import (
    ConservationReport,
    ProbeEstimate,
    QuasiUnitReport,
    RunConfig,
    StationaryStats,
    conservation_probe,
    export_stats,
    independence_probe,
    merge_stats,
    quasi_unit_report,
    simulate_replicas,
    simulate_stationary,
)
from .coupling import (
    CouplingResult,
    PeriodicityInfo,
    couple_equalize_zero_one,
    couple_one_site,
    couple_reduction_match,
    periodicity_info,
)

__version__ = "0.1.0"
