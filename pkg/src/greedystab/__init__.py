"""Weak greedy approximation over finite dictionaries, with noise-stability bounds."""
from .algorithms import (
    ConfigError,
    GreedyConfig,
    InvariantViolation,
    IterationRecord,
    PairedTrace,
    Trace,
    WeakSchedule,
    project_residual,
    run_oga,
    run_paired,
    run_wga,
    wga_step,
)
from .bounds import (
    BoundOutOfRegime,
    NoisyBoundParams,
    beta_k,
    e_m_clean,
    hl1_bound,
    hl1_bounds,
    hl1_worst_sequence,
    noisy_bound,
    noisy_bound_const,
    noisy_bound_derived,
    oga_clean_bound,
    oga_noisy_bound,
)
from .core import (
    AtomSelection,
    Dictionary,
    DictionaryError,
    DictionaryParseError,
    InconsistentRowsError,
    ZeroAtomError,
    best_atom,
    inner,
    load_dictionary,
    load_signal,
    weak_atom,
)
from .experiments import (
    A1Certificate,
    StabilityReport,
    add_noise,
    gen_a1_signal,
    instability_demo,
    linear_baseline_demo,
    make_dictionary,
    stability_experiment,
)

__all__ = [
    "ConfigError",
    "GreedyConfig",
    "InvariantViolation",
    "IterationRecord",
    "PairedTrace",
    "Trace",
    "WeakSchedule",
    "project_residual",
    "run_oga",
    "run_paired",
    "run_wga",
    "wga_step",
    "BoundOutOfRegime",
    "NoisyBoundParams",
    "beta_k",
    "e_m_clean",
    "hl1_bound",
    "hl1_bounds",
    "hl1_worst_sequence",
    "noisy_bound",
    "noisy_bound_const",
    "noisy_bound_derived",
    "oga_clean_bound",
    "oga_noisy_bound",
    "AtomSelection",
    "Dictionary",
    "DictionaryError",
    "DictionaryParseError",
    "InconsistentRowsError",
    "ZeroAtomError",
    "best_atom",
    "inner",
    "load_dictionary",
    "load_signal",
    "weak_atom",
    "A1Certificate",
    "StabilityReport",
    "add_noise",
    "gen_a1_signal",
    "instability_demo",
    "linear_baseline_demo",
    "make_dictionary",
    "stability_experiment",
]

__version__ = "0.1.0"
