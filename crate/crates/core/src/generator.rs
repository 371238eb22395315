//! Recursive probabilistic term generation.
//!
//! A term of a requested sort is built top-down: pick a head symbol among the
//! candidates for that sort, then recurse into each argument sort with the
//! depth counter incremented and the head appended to the path. Once the
//! depth cap is reached, only constants remain eligible.
//!
//! Head selection supports three strategies: uniform `random`, global
//! count-weighted `weights`, and position-conditioned `paths`. The weighted
//! strategies can invert their weight vector (`w -> 1/w`) with probability
//! `flip`, drawn independently at every pick, to steer generation away from
//! what was observed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::stats::{Path, StatsStore, WeightVector};
use crate::term::{GroundTerm, Signature, Sort, SymbolDecl};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("cannot sample from an empty weight vector")]
    EmptyWeightVector,
    #[error("no candidate symbols for sort `{0}`")]
    NoSymbolsForSort(Sort),
    #[error("no constant of sort `{0}` available under the depth cutoff")]
    NoConstant(Sort),
    #[error("flip probability must lie in [0, 1], got {0}")]
    InvalidFlip(f64),
    #[error("batch size must be positive")]
    InvalidBatchSize,
}

/// Head-symbol selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pick {
    Random,
    Weights,
    Paths,
}

impl Pick {
    /// Flip only applies to the count-weighted strategies.
    pub fn uses_flip(self) -> bool {
        matches!(self, Pick::Weights | Pick::Paths)
    }

    pub const ALL: [Pick; 3] = [Pick::Random, Pick::Weights, Pick::Paths];
}

impl fmt::Display for Pick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pick::Random => "random",
            Pick::Weights => "weights",
            Pick::Paths => "paths",
        })
    }
}

impl FromStr for Pick {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Pick::Random),
            "weights" => Ok(Pick::Weights),
            "paths" => Ok(Pick::Paths),
            other => Err(format!("unknown pick strategy `{other}` (expected random, weights or paths)")),
        }
    }
}

/// When the generator fires during a session: only at last-call effort with
/// no lemma from other modules, or from standard effort upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffortMode {
    Lastcall,
    Interleave,
}

impl fmt::Display for EffortMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffortMode::Lastcall => "lastcall",
            EffortMode::Interleave => "interleave",
        })
    }
}

impl FromStr for EffortMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lastcall" => Ok(EffortMode::Lastcall),
            "interleave" => Ok(EffortMode::Interleave),
            other => Err(format!("unknown effort mode `{other}` (expected lastcall or interleave)")),
        }
    }
}

/// Which symbols the generator may use as heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniverseKind {
    /// Symbols seen in observed terms (the default).
    #[default]
    Observed,
    /// Every symbol declared in the signature.
    Signature,
}

impl FromStr for UniverseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "observed" => Ok(UniverseKind::Observed),
            "signature" => Ok(UniverseKind::Signature),
            other => Err(format!("unknown universe `{other}` (expected observed or signature)")),
        }
    }
}

/// One strategy grid point: selection method, depth cap, flip probability and
/// firing mode, plus the seed and batch size used to run it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenConfig {
    pub pick: Pick,
    pub depth: u32,
    pub flip: f64,
    pub effort: EffortMode,
    pub seed: u64,
    pub batch_size: usize,
}

pub const DEFAULT_BATCH_SIZE: usize = 20;

impl GenConfig {
    pub fn new(effort: EffortMode, pick: Pick, depth: u32, flip: f64) -> Result<Self, GenError> {
        if !(0.0..=1.0).contains(&flip) || flip.is_nan() {
            return Err(GenError::InvalidFlip(flip));
        }
        Ok(GenConfig { pick, depth, flip, effort, seed: 0, batch_size: DEFAULT_BATCH_SIZE })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Result<Self, GenError> {
        if batch_size == 0 {
            return Err(GenError::InvalidBatchSize);
        }
        self.batch_size = batch_size;
        Ok(self)
    }

    /// Canonical name of the grid point, e.g. `lastcall-weights-d0-f0.5`.
    /// The flip component is omitted for `random`, which ignores it.
    pub fn strategy_id(&self) -> String {
        if self.pick.uses_flip() {
            format!("{}-{}-d{}-f{:?}", self.effort, self.pick, self.depth, self.flip)
        } else {
            format!("{}-{}-d{}", self.effort, self.pick, self.depth)
        }
    }
}

/// Deterministic random stream: ChaCha8 seeded from a 64-bit value. The same
/// seed yields the same draw sequence on every platform; nothing here depends
/// on process-global RNG state.
#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}

/// Entry-wise reciprocal; the domain is unchanged and weights stay positive.
pub fn invert_weights(w: &WeightVector) -> WeightVector {
    WeightVector::from_entries(w.iter().map(|(s, weight)| (s, 1.0 / weight)))
}

/// Sample a symbol with probability proportional to its weight: draw a point
/// in `[0, total)` and walk the entries in lexicographic order until the
/// running prefix sum exceeds it.
pub fn sample_categorical<'w>(w: &'w WeightVector, rng: &mut SeededRng) -> Result<&'w str, GenError> {
    if w.is_empty() {
        return Err(GenError::EmptyWeightVector);
    }
    let point = rng.random_range(0.0..w.total());
    let mut prefix = 0.0;
    let mut last = None;
    for (symbol, weight) in w.iter() {
        prefix += weight;
        if point < prefix {
            return Ok(symbol);
        }
        last = Some(symbol);
    }
    // rounding can leave the final prefix just below `total`
    Ok(last.expect("non-empty vector"))
}

/// Pick one symbol out of `candidates` according to the configured strategy.
///
/// `random` ignores the statistics entirely. `weights` samples from the
/// global counts, falling back to uniform when no candidate was ever
/// observed. `paths` samples from the counts conditioned on `path`, with
/// default weight 1 for candidates unseen there. For the weighted strategies
/// a fresh Bernoulli draw decides, independently at every call, whether the
/// whole vector is inverted first.
pub fn pick<'a>(
    cfg: &GenConfig,
    sort: &Sort,
    candidates: &'a [Arc<SymbolDecl>],
    store: &StatsStore,
    path: &Path,
    rng: &mut SeededRng,
) -> Result<&'a Arc<SymbolDecl>, GenError> {
    if candidates.is_empty() {
        return Err(GenError::NoSymbolsForSort(sort.clone()));
    }
    match cfg.pick {
        Pick::Random => {
            let index = rng.random_range(0..candidates.len());
            Ok(&candidates[index])
        }
        Pick::Weights | Pick::Paths => {
            let mut w = match cfg.pick {
                Pick::Weights => {
                    let w = store.weights_global(candidates);
                    if w.is_empty() {
                        // nothing observed yet: uniform keeps early rounds alive
                        WeightVector::uniform(candidates.iter().map(|d| d.name()))
                    } else {
                        w
                    }
                }
                _ => store.weights_path(path, candidates),
            };
            if cfg.flip > 0.0 && rng.random_bool(cfg.flip) {
                w = invert_weights(&w);
            }
            let chosen = sample_categorical(&w, rng)?;
            Ok(candidates
                .iter()
                .find(|d| d.name() == chosen)
                .expect("sampled symbol comes from the candidate set"))
        }
    }
}

/// Candidate head symbols grouped by result sort, each group in name order.
#[derive(Debug, Clone, Default)]
pub struct SymbolUniverse {
    by_sort: BTreeMap<Sort, Vec<Arc<SymbolDecl>>>,
}

impl SymbolUniverse {
    fn from_iter<'a>(symbols: impl IntoIterator<Item = &'a Arc<SymbolDecl>>) -> Self {
        let mut by_sort: BTreeMap<Sort, Vec<Arc<SymbolDecl>>> = BTreeMap::new();
        for decl in symbols {
            by_sort.entry(decl.result_sort().clone()).or_default().push(Arc::clone(decl));
        }
        // name order within each sort; inputs are already sorted but don't rely on it
        for group in by_sort.values_mut() {
            group.sort_by(|a, b| a.name().cmp(b.name()));
        }
        SymbolUniverse { by_sort }
    }

    /// Universe of symbols seen in observed terms.
    pub fn from_observed(store: &StatsStore) -> Self {
        Self::from_iter(store.observed_symbols())
    }

    /// Universe widened to the whole declared signature.
    pub fn from_signature(sig: &Signature) -> Self {
        Self::from_iter(sig.symbols())
    }

    pub fn of_sort(&self, sort: &Sort) -> &[Arc<SymbolDecl>] {
        self.by_sort.get(sort).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.by_sort.is_empty()
    }
}

/// Build one term of sort `sort` from the observed-symbol universe.
pub fn make_term(
    sort: &Sort,
    cfg: &GenConfig,
    store: &StatsStore,
    rng: &mut SeededRng,
) -> Result<GroundTerm, GenError> {
    make_term_in(&SymbolUniverse::from_observed(store), sort, cfg, store, rng)
}

/// Build one term of sort `sort` using an explicit candidate universe.
pub fn make_term_in(
    universe: &SymbolUniverse,
    sort: &Sort,
    cfg: &GenConfig,
    store: &StatsStore,
    rng: &mut SeededRng,
) -> Result<GroundTerm, GenError> {
    build(universe, sort, cfg, store, rng, 0, &Path::root())
}

fn build(
    universe: &SymbolUniverse,
    sort: &Sort,
    cfg: &GenConfig,
    store: &StatsStore,
    rng: &mut SeededRng,
    depth: u32,
    path: &Path,
) -> Result<GroundTerm, GenError> {
    let all = universe.of_sort(sort);
    if all.is_empty() {
        return Err(GenError::NoSymbolsForSort(sort.clone()));
    }
    let constants_only;
    let eligible: &[Arc<SymbolDecl>] = if depth >= cfg.depth {
        constants_only = all.iter().filter(|d| d.is_constant()).cloned().collect::<Vec<_>>();
        if constants_only.is_empty() {
            return Err(GenError::NoConstant(sort.clone()));
        }
        &constants_only
    } else {
        all
    };
    let head = pick(cfg, sort, eligible, store, path, rng)?;
    if head.is_constant() {
        return Ok(GroundTerm::constant(Arc::clone(head)).expect("constant is trivially well-sorted"));
    }
    let head = Arc::clone(head);
    let child_path = path.child(head.name());
    let mut args = Vec::with_capacity(head.arity());
    for arg_sort in head.arg_sorts() {
        args.push(build(universe, arg_sort, cfg, store, rng, depth + 1, &child_path)?);
    }
    Ok(GroundTerm::new(head, args).expect("arguments were built at their declared sorts"))
}

/// Generate `cfg.batch_size` terms of `sort` and drop duplicates, keeping
/// first-generation order. The result holds between 1 and `batch_size`
/// distinct terms.
pub fn generate_batch(
    sort: &Sort,
    cfg: &GenConfig,
    store: &StatsStore,
    rng: &mut SeededRng,
) -> Result<Vec<GroundTerm>, GenError> {
    generate_batch_in(&SymbolUniverse::from_observed(store), sort, cfg, store, rng)
}

/// [`generate_batch`] with an explicit candidate universe.
pub fn generate_batch_in(
    universe: &SymbolUniverse,
    sort: &Sort,
    cfg: &GenConfig,
    store: &StatsStore,
    rng: &mut SeededRng,
) -> Result<Vec<GroundTerm>, GenError> {
    let mut batch: Vec<GroundTerm> = Vec::new();
    for _ in 0..cfg.batch_size {
        let term = make_term_in(universe, sort, cfg, store, rng)?;
        if !batch.contains(&term) {
            batch.push(term);
        }
    }
    Ok(batch)
}
