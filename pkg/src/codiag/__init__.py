"""Codiagnosability of stochastic discrete event systems."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .automaton import (
    GLOBAL,
    DeterministicAutomaton,
    EventDecl,
    ObservationMask,
    PrefixNotInLanguage,
    StochasticAutomaton,
    Transition,
    ValidationReport,
    Violation,
    check_no_unobservable_cycles,
    deduce_dfa,
    enumerate_continuations,
    from_edges,
    language,
    make_deadlock_free,
    project,
    trace_probability,
    validate,
)
from .codiagnoser import (
    EPS,
    CodiagEvent,
    Codiagnoser,
    CodiagState,
    UniformRecurrentF,
    UnreachableState,
    ValidationFailed,
    Verdict,
    Witness,
    build_codiagnoser,
    check_codiagnosability,
    codiag_certainty,
    enumerate_cycles,
    find_uniform_recurrent_F,
    reachability_witness,
)
from .io import (
    ParseError,
    Report,
    SemanticError,
    curves_csv,
    export_dot,
    format_model,
    parse_model,
)
from .observer import (
    NORMAL,
    Certainty,
    LogicalDiagnoser,
    UndefinedObservation,
    build_logical_diagnoser,
    classify,
    condition_function,
    observe,
    unobservable_reach,
)
from .stochastic import (
    ComponentNode,
    DivergentUnobservableMass,
    MarkovChain,
    RecurrenceReport,
    StochasticDiagnoser,
    build_stochastic_diagnoser,
    classify_recurrence,
    component_chain,
    global_stochastic_diagnoser,
    is_diagnosable_centralized,
    recurrent_F_components,
    transient_escape_bound,
)
from .verifier import (
    DecayCurve,
    NonDetectionQuery,
    behaviourally_codiagnosable,
    decay_curve,
    enumerated_nondetection,
    exact_nondetection,
    limit_nondetection,
    sample_nondetection,
    witness_probability,
)
