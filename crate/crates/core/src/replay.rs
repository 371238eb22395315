//! Round-based session replay over a recorded instantiation trace.
//!
//! A trace carries the signature, the asserted quantifiers with their
//! bound-variable sorts, and a list of rounds. Each round records the effort
//! level the scheduler reached, whether some other module produced a lemma,
//! and the ground terms those modules instantiated with. Replaying a trace
//! feeds those terms into a stats store, decides per round whether the
//! generator fires, and emits one generated batch per bound-variable sort
//! encountered in that round.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::generator::{
    self, EffortMode, GenConfig, SeededRng, SymbolUniverse, UniverseKind,
};
use crate::sexpr::{self, Pos, SExpr};
use crate::stats::StatsStore;
use crate::term::{self, GroundTerm, Signature, Sort, TermError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("{pos}unknown quantifier `{id}`")]
    UnknownQuantifier { id: String, pos: Pos },
    #[error("{pos}duplicate quantifier `{id}`")]
    DuplicateQuantifier { id: String, pos: Pos },
    #[error("{pos}bad effort level `{value}` (expected conflict, standard, model or lastcall)")]
    BadEffortLevel { value: String, pos: Pos },
    #[error("{pos}instantiation of `{quantifier}` expects {expected} term(s), got {got}")]
    InstArity { quantifier: String, expected: usize, got: usize, pos: Pos },
    #[error("{pos}instantiation of `{quantifier}` has sort `{got}` at position {index}, expected `{expected}`")]
    InstSort { quantifier: String, index: usize, expected: String, got: String, pos: Pos },
    #[error("{pos}malformed trace: {msg}")]
    Malformed { msg: String, pos: Pos },
}

impl From<sexpr::SyntaxError> for TraceError {
    fn from(e: sexpr::SyntaxError) -> Self {
        TraceError::Term(TermError::Syntax(e))
    }
}

/// Scheduler tier a round reached, in increasing effort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffortLevel {
    Conflict,
    Standard,
    Model,
    Lastcall,
}

impl EffortLevel {
    pub const ALL: [EffortLevel; 4] =
        [EffortLevel::Conflict, EffortLevel::Standard, EffortLevel::Model, EffortLevel::Lastcall];
}

impl fmt::Display for EffortLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffortLevel::Conflict => "conflict",
            EffortLevel::Standard => "standard",
            EffortLevel::Model => "model",
            EffortLevel::Lastcall => "lastcall",
        })
    }
}

impl FromStr for EffortLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conflict" => Ok(EffortLevel::Conflict),
            "standard" => Ok(EffortLevel::Standard),
            "model" => Ok(EffortLevel::Model),
            "lastcall" => Ok(EffortLevel::Lastcall),
            other => Err(format!("bad effort level `{other}`")),
        }
    }
}

/// One observed instantiation: a quantifier and the term tuple substituted
/// for its bound variables.
#[derive(Debug, Clone, PartialEq)]
pub struct InstRecord {
    pub quantifier_id: String,
    pub terms: Vec<GroundTerm>,
}

/// One scheduler round as recorded in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub effort_reached: EffortLevel,
    pub lemma_produced_by_others: bool,
    pub observed: Vec<InstRecord>,
}

/// An asserted quantifier: its id and the sorts of its bound variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantifier {
    pub id: String,
    pub var_sorts: Vec<Sort>,
}

/// A full recorded session: signature, quantifiers, rounds.
#[derive(Debug, Clone)]
pub struct Trace {
    pub signature: Signature,
    pub quantifiers: Vec<Quantifier>,
    pub rounds: Vec<Round>,
}

/// Parse a self-contained trace document: declarations, then
/// `(quantifier <id> (<sort>*))` forms, then
/// `(round :effort <level> :lemma <bool> (inst <id> <term>*)*)` forms.
pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    parse_trace_with(text, None)
}

/// [`parse_trace`] against a base signature: the document may omit
/// declarations, and any it does contain must already be declared in `base`
/// with the same profile.
pub fn parse_trace_with(text: &str, base: Option<&Signature>) -> Result<Trace, TraceError> {
    let forms = sexpr::parse_all(text)?;
    let mut signature = base.cloned().unwrap_or_default();
    let mut quantifiers: Vec<Quantifier> = Vec::new();
    let mut rounds: Vec<Round> = Vec::new();

    #[derive(PartialEq, PartialOrd)]
    enum Section {
        Declarations,
        Quantifiers,
        Rounds,
    }
    let mut section = Section::Declarations;

    for form in &forms {
        let pos = form.pos();
        let items = form
            .as_list()
            .ok_or_else(|| TraceError::Malformed { msg: "expected a list form".into(), pos })?;
        match items.first().and_then(SExpr::as_atom) {
            Some("declare-sort") | Some("declare-fun") | Some("declare-const") => {
                if section > Section::Declarations {
                    return Err(TraceError::Malformed {
                        msg: "declarations must precede quantifier and round forms".into(),
                        pos,
                    });
                }
                match term::parse_declaration(form, &mut signature) {
                    Ok(()) => {}
                    // restating something from the base signature is accepted
                    // as long as the profile is identical
                    Err(TermError::DuplicateSort { ref name, .. })
                        if base.is_some_and(|b| b.sort(name).is_some()) => {}
                    Err(TermError::DuplicateSymbol { ref name, .. })
                        if base.is_some_and(|b| b.symbol(name).is_some()) =>
                    {
                        check_redeclaration(form, &signature, base.expect("guard checked"))?;
                    }
                    Err(other) => return Err(other.into()),
                }
            }
            Some("quantifier") => {
                if section > Section::Quantifiers {
                    return Err(TraceError::Malformed { msg: "quantifier forms must precede rounds".into(), pos });
                }
                section = Section::Quantifiers;
                quantifiers.push(parse_quantifier(items, pos, &signature, &quantifiers)?);
            }
            Some("round") => {
                section = Section::Rounds;
                rounds.push(parse_round(items, pos, &signature, &quantifiers)?);
            }
            _ => {
                return Err(TraceError::Malformed {
                    msg: "expected a declaration, quantifier or round form".into(),
                    pos,
                });
            }
        }
    }
    Ok(Trace { signature, quantifiers, rounds })
}

fn check_redeclaration(form: &SExpr, current: &Signature, base: &Signature) -> Result<(), TraceError> {
    // re-parse the form into a scratch signature holding the known sorts so
    // the redeclared profile can be compared against the base one
    let items = form.as_list().expect("caller checked");
    let pos = form.pos();
    let mut scratch = Signature::new();
    for sort in current.sorts() {
        scratch.declare_sort(sort.name()).expect("declared sorts are valid");
    }
    term::parse_declaration(form, &mut scratch)?;
    let name = items[1].as_atom().ok_or_else(|| TraceError::Malformed { msg: "expected a symbol name".into(), pos })?;
    let redecl = scratch.symbol(name).expect("just declared");
    let original = base.symbol(name).expect("caller checked presence");
    if redecl != original {
        return Err(TraceError::Malformed {
            msg: format!("declaration of `{name}` conflicts with the supplied signature"),
            pos,
        });
    }
    Ok(())
}

fn parse_quantifier(
    items: &[SExpr],
    pos: Pos,
    sig: &Signature,
    existing: &[Quantifier],
) -> Result<Quantifier, TraceError> {
    if items.len() != 3 {
        return Err(TraceError::Malformed { msg: "quantifier form takes an id and a sort list".into(), pos });
    }
    let id = items[1]
        .as_atom()
        .ok_or_else(|| TraceError::Malformed { msg: "quantifier id must be an atom".into(), pos: items[1].pos() })?;
    if existing.iter().any(|q| q.id == id) {
        return Err(TraceError::DuplicateQuantifier { id: id.to_string(), pos: items[1].pos() });
    }
    let sort_list = items[2]
        .as_list()
        .ok_or_else(|| TraceError::Malformed { msg: "quantifier sorts must be a list".into(), pos: items[2].pos() })?;
    let mut var_sorts = Vec::with_capacity(sort_list.len());
    for s in sort_list {
        let name = s
            .as_atom()
            .ok_or_else(|| TraceError::Malformed { msg: "sorts must be plain names".into(), pos: s.pos() })?;
        let sort = sig
            .sort(name)
            .cloned()
            .ok_or_else(|| TermError::UndeclaredSort { name: name.to_string(), pos: s.pos() })?;
        var_sorts.push(sort);
    }
    Ok(Quantifier { id: id.to_string(), var_sorts })
}

fn parse_round(
    items: &[SExpr],
    pos: Pos,
    sig: &Signature,
    quantifiers: &[Quantifier],
) -> Result<Round, TraceError> {
    let mut effort = None;
    let mut lemma = None;
    let mut observed = Vec::new();
    let mut rest = items[1..].iter().peekable();
    while let Some(item) = rest.next() {
        match item.as_atom() {
            Some(":effort") => {
                let value = rest
                    .next()
                    .and_then(SExpr::as_atom)
                    .ok_or_else(|| TraceError::Malformed { msg: ":effort expects a level".into(), pos: item.pos() })?;
                let level = value
                    .parse::<EffortLevel>()
                    .map_err(|_| TraceError::BadEffortLevel { value: value.to_string(), pos: item.pos() })?;
                effort = Some(level);
            }
            Some(":lemma") => {
                let value = rest
                    .next()
                    .and_then(SExpr::as_atom)
                    .ok_or_else(|| TraceError::Malformed { msg: ":lemma expects true or false".into(), pos: item.pos() })?;
                lemma = Some(match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(TraceError::Malformed {
                            msg: format!(":lemma expects true or false, got `{other}`"),
                            pos: item.pos(),
                        })
                    }
                });
            }
            _ => {
                let inst = item
                    .as_list()
                    .filter(|l| l.first().and_then(SExpr::as_atom) == Some("inst"))
                    .ok_or_else(|| TraceError::Malformed {
                        msg: "round entries are :effort, :lemma or (inst ...) forms".into(),
                        pos: item.pos(),
                    })?;
                observed.push(parse_inst(inst, item.pos(), sig, quantifiers)?);
            }
        }
    }
    let effort_reached =
        effort.ok_or_else(|| TraceError::Malformed { msg: "round is missing :effort".into(), pos })?;
    let lemma_produced_by_others =
        lemma.ok_or_else(|| TraceError::Malformed { msg: "round is missing :lemma".into(), pos })?;
    Ok(Round { effort_reached, lemma_produced_by_others, observed })
}

fn parse_inst(
    items: &[SExpr],
    pos: Pos,
    sig: &Signature,
    quantifiers: &[Quantifier],
) -> Result<InstRecord, TraceError> {
    let id = items
        .get(1)
        .and_then(SExpr::as_atom)
        .ok_or_else(|| TraceError::Malformed { msg: "inst form expects a quantifier id".into(), pos })?;
    let quantifier = quantifiers
        .iter()
        .find(|q| q.id == id)
        .ok_or_else(|| TraceError::UnknownQuantifier { id: id.to_string(), pos: items[1].pos() })?;
    let term_forms = &items[2..];
    if term_forms.len() != quantifier.var_sorts.len() {
        return Err(TraceError::InstArity {
            quantifier: id.to_string(),
            expected: quantifier.var_sorts.len(),
            got: term_forms.len(),
            pos,
        });
    }
    let mut terms = Vec::with_capacity(term_forms.len());
    for (i, (form, expected)) in term_forms.iter().zip(&quantifier.var_sorts).enumerate() {
        let t = term::term_from_sexpr(form, sig)?;
        if t.sort() != expected {
            return Err(TraceError::InstSort {
                quantifier: id.to_string(),
                index: i + 1,
                expected: expected.name().to_string(),
                got: t.sort().name().to_string(),
                pos: form.pos(),
            });
        }
        terms.push(t);
    }
    Ok(InstRecord { quantifier_id: id.to_string(), terms })
}

/// Firing policy: `lastcall` mode fires only at the last-call level when no
/// other module produced a lemma; `interleave` fires from standard effort
/// upward regardless of the lemma flag.
pub fn should_fire(mode: EffortMode, round: &Round) -> bool {
    match mode {
        EffortMode::Lastcall => {
            round.effort_reached == EffortLevel::Lastcall && !round.lemma_produced_by_others
        }
        EffortMode::Interleave => round.effort_reached >= EffortLevel::Standard,
    }
}

/// Per-sort generated batch in encounter order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortBatch {
    pub sort: Sort,
    pub terms: Vec<GroundTerm>,
}

/// A sort whose generation failed this round, with the diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortFailure {
    pub sort: Sort,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub index: usize,
    pub fired: bool,
    pub batches: Vec<SortBatch>,
    pub failures: Vec<SortFailure>,
    /// Fingerprint of the cumulative stats store after this round.
    pub stats_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub strategy: String,
    pub rounds: Vec<RoundReport>,
}

impl SessionReport {
    pub fn fired_rounds(&self) -> impl Iterator<Item = &RoundReport> {
        self.rounds.iter().filter(|r| r.fired)
    }

    /// Byte-stable s-expression rendering.
    pub fn to_sexpr(&self) -> String {
        let mut out = format!("(session {}\n", self.strategy);
        for round in &self.rounds {
            out.push_str(&format!(
                "  (round {} :fired {} :stats {}",
                round.index, round.fired, round.stats_id
            ));
            for batch in &round.batches {
                out.push_str(&format!("\n    (batch {}", batch.sort));
                for t in &batch.terms {
                    out.push_str(&format!(" {t}"));
                }
                out.push(')');
            }
            for failure in &round.failures {
                out.push_str(&format!("\n    (error {} \"{}\"", failure.sort, failure.message.replace('"', "'")));
                out.push(')');
            }
            out.push_str(")\n");
        }
        out.push_str(")\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Session knobs that are not part of the strategy grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct SessionOptions {
    /// Feed the generator's own batches back into the stats store at the end
    /// of each fired round. Off by default: only other modules' terms count.
    pub feedback: bool,
    /// Candidate universe for generation.
    pub universe: UniverseKind,
}

/// Replay the trace under one strategy.
///
/// Per round: observe the recorded terms, decide firing, and if firing,
/// shuffle the quantifier list with the session rng, collect bound-variable
/// sorts in shuffled encounter order, and generate one batch per distinct
/// sort. Generation failures are recorded per sort; the session always runs
/// to completion.
pub fn run_session(trace: &Trace, cfg: &GenConfig) -> SessionReport {
    run_session_with(trace, cfg, SessionOptions::default())
}

pub fn run_session_with(trace: &Trace, cfg: &GenConfig, opts: SessionOptions) -> SessionReport {
    let mut store = StatsStore::new();
    let mut rng = SeededRng::new(cfg.seed);
    let mut rounds = Vec::with_capacity(trace.rounds.len());

    for (index, round) in trace.rounds.iter().enumerate() {
        for record in &round.observed {
            store.observe_all(&record.terms);
        }
        let fired = should_fire(cfg.effort, round);
        let mut batches = Vec::new();
        let mut failures = Vec::new();
        if fired {
            let mut shuffled: Vec<&Quantifier> = trace.quantifiers.iter().collect();
            shuffled.shuffle(&mut rng);
            let mut sorts: Vec<&Sort> = Vec::new();
            for quantifier in &shuffled {
                for sort in &quantifier.var_sorts {
                    if !sorts.contains(&sort) {
                        sorts.push(sort);
                    }
                }
            }
            let universe = match opts.universe {
                UniverseKind::Observed => SymbolUniverse::from_observed(&store),
                UniverseKind::Signature => SymbolUniverse::from_signature(&trace.signature),
            };
            for sort in sorts {
                match generator::generate_batch_in(&universe, sort, cfg, &store, &mut rng) {
                    Ok(terms) => batches.push(SortBatch { sort: sort.clone(), terms }),
                    Err(e) => failures.push(SortFailure { sort: sort.clone(), message: e.to_string() }),
                }
            }
            if opts.feedback {
                // own terms count from the next round on
                for batch in &batches {
                    store.observe_all(&batch.terms);
                }
            }
        }
        rounds.push(RoundReport {
            index,
            fired,
            batches,
            failures,
            stats_id: format!("{:016x}", store.fingerprint()),
        });
    }
    SessionReport { strategy: cfg.strategy_id(), rounds }
}
