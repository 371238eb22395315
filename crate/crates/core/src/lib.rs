//! Probabilistic generation of quantifier-instantiation terms.
//!
//! The library learns symbol-frequency statistics from ground terms observed
//! in recorded instantiation traces and generates new candidate terms that
//! either mimic the learned distribution or deliberately invert it. It also
//! ships the evaluation machinery around that idea: effort-scheduled session
//! replay, strategy-grid enumeration, gain/loss aggregation against a
//! reference strategy, and greedy complementarity covers.
//!
//! Modules:
//! - [`term`]: sorts, typed symbols, ground terms, signature/term syntax
//! - [`stats`]: global and path-indexed occurrence counts
//! - [`generator`]: recursive term construction with random/weights/paths
//!   head selection, flip inversion and depth capping
//! - [`replay`]: trace parsing, firing policy, round-based sessions
//! - [`harness`]: grid expansion, results matrices, aggregation, greedy cover

pub mod cli;
pub mod generator;
pub mod harness;
pub mod replay;
pub mod sexpr;
pub mod stats;
pub mod term;

pub use generator::{
    generate_batch, invert_weights, make_term, pick, sample_categorical, EffortMode, GenConfig,
    GenError, Pick, SeededRng, SymbolUniverse, UniverseKind,
};
pub use harness::{
    aggregate_vs_reference, enumerate_grid, greedy_cover, load_results, CoverReport, CoverRow,
    GridSpec, HarnessError, ResultsMatrix, StrategySummary,
};
pub use replay::{
    parse_trace, parse_trace_with, run_session, run_session_with, should_fire, EffortLevel,
    InstRecord, Quantifier, Round, SessionOptions, SessionReport, Trace, TraceError,
};
pub use stats::{Path, StatsStore, WeightVector};
pub use term::{
    parse_signature, parse_term, print_term, symbols_of_sort, GroundTerm, Signature, Sort,
    SymbolDecl, TermError,
};
