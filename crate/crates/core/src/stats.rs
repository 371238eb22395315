//! Symbol occurrence statistics learned from observed instantiation terms.
//!
//! Two tables are kept: a global per-symbol count and a per-path count, where
//! the path of a node is the list of head symbols above it in the syntax tree
//! (argument indices excluded, so siblings share one path). The path table
//! refines the global one: summing a symbol's counts over all paths gives its
//! global count.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::sexpr::{self, SExpr};
use crate::term::{GroundTerm, Signature, Sort, SymbolDecl, TermError};

/// Ancestor head symbols of a tree position, root first. The root position is
/// the empty path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(Vec<String>);

impl Path {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_symbols<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Self {
        Path(symbols.into_iter().map(Into::into).collect())
    }

    /// The path of children under a node with head `symbol` at this path.
    pub fn child(&self, symbol: &str) -> Self {
        let mut symbols = self.0.clone();
        symbols.push(symbol.to_string());
        Path(symbols)
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(s)?;
        }
        f.write_str(")")
    }
}

/// Strictly positive sampling weights keyed by symbol name. Iteration is in
/// lexicographic symbol order, which the sampler relies on for determinism.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightVector(BTreeMap<String, f64>);

impl WeightVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from `(symbol, weight)` pairs.
    ///
    /// Panics if a weight is not strictly positive and finite, or if a symbol
    /// repeats; callers only construct weights from positive counts or their
    /// reciprocals.
    pub fn from_entries<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Self {
        let mut w = WeightVector::new();
        for (symbol, weight) in entries {
            w.set(symbol.into(), weight);
        }
        w
    }

    /// Weight 1 for every name: the uniform vector.
    pub fn uniform<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self::from_entries(names.into_iter().map(|n| (n, 1.0)))
    }

    fn set(&mut self, symbol: String, weight: f64) {
        assert!(weight.is_finite() && weight > 0.0, "weight for `{symbol}` must be positive, got {weight}");
        let prev = self.0.insert(symbol, weight);
        assert!(prev.is_none(), "duplicate weight entry");
    }

    pub fn get(&self, symbol: &str) -> Option<f64> {
        self.0.get(symbol).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// Entries in lexicographic symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(s, &w)| (s.as_str(), w))
    }
}

/// Learned occurrence statistics: global and path-indexed symbol counts plus
/// the set of symbols observed so far.
///
/// Single writer: observation takes `&mut self`, queries take `&self`. Clone
/// is a snapshot for parallel runs.
#[derive(Debug, Clone, Default)]
pub struct StatsStore {
    global_counts: BTreeMap<String, u64>,
    path_counts: BTreeMap<Path, BTreeMap<String, u64>>,
    observed_symbols: BTreeMap<String, Arc<SymbolDecl>>,
    terms_observed: u64,
}

impl StatsStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Count every node of `t` (with multiplicity) into both tables and add
    /// its symbols to the observed set.
    pub fn observe_term(&mut self, t: &GroundTerm) {
        self.observe_node(t, &Path::root());
        self.terms_observed += 1;
    }

    fn observe_node(&mut self, t: &GroundTerm, path: &Path) {
        let name = t.head().name();
        *self.global_counts.entry(name.to_string()).or_insert(0) += 1;
        *self
            .path_counts
            .entry(path.clone())
            .or_default()
            .entry(name.to_string())
            .or_insert(0) += 1;
        self.observed_symbols
            .entry(name.to_string())
            .or_insert_with(|| Arc::clone(t.head()));
        if !t.args().is_empty() {
            let child_path = path.child(name);
            for arg in t.args() {
                self.observe_node(arg, &child_path);
            }
        }
    }

    pub fn observe_all<'a>(&mut self, terms: impl IntoIterator<Item = &'a GroundTerm>) {
        for t in terms {
            self.observe_term(t);
        }
    }

    /// Global counts restricted to `candidates`, dropping never-observed
    /// symbols. May be empty.
    pub fn weights_global(&self, candidates: &[Arc<SymbolDecl>]) -> WeightVector {
        WeightVector::from_entries(candidates.iter().filter_map(|d| {
            let count = self.global_count(d.name());
            (count > 0).then(|| (d.name().to_string(), count as f64))
        }))
    }

    /// Counts at `path` restricted to `candidates`, padded with the default
    /// weight 1 for every candidate unseen at that position. Total over the
    /// candidate set, never empty for non-empty `candidates`.
    pub fn weights_path(&self, path: &Path, candidates: &[Arc<SymbolDecl>]) -> WeightVector {
        let at_path = self.path_counts.get(path);
        WeightVector::from_entries(candidates.iter().map(|d| {
            let count = at_path.and_then(|m| m.get(d.name())).copied().unwrap_or(0);
            (d.name().to_string(), if count > 0 { count as f64 } else { 1.0 })
        }))
    }

    pub fn global_count(&self, symbol: &str) -> u64 {
        self.global_counts.get(symbol).copied().unwrap_or(0)
    }

    pub fn path_count(&self, path: &Path, symbol: &str) -> u64 {
        self.path_counts
            .get(path)
            .and_then(|m| m.get(symbol))
            .copied()
            .unwrap_or(0)
    }

    /// Symbols with at least one observation, in name order.
    pub fn observed_symbols(&self) -> impl Iterator<Item = &Arc<SymbolDecl>> {
        self.observed_symbols.values()
    }

    pub fn is_observed(&self, symbol: &str) -> bool {
        self.observed_symbols.contains_key(symbol)
    }

    /// Observed symbols whose result sort is `sort`, in name order.
    pub fn observed_of_sort(&self, sort: &Sort) -> Vec<Arc<SymbolDecl>> {
        self.observed_symbols
            .values()
            .filter(|d| d.result_sort() == sort)
            .cloned()
            .collect()
    }

    pub fn terms_observed(&self) -> u64 {
        self.terms_observed
    }

    /// Paths with at least one count, lexicographically.
    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.path_counts.keys()
    }

    pub fn global_counts(&self) -> impl Iterator<Item = (&str, u64)> {
        self.global_counts.iter().map(|(s, &c)| (s.as_str(), c))
    }

    pub fn path_table(&self, path: &Path) -> impl Iterator<Item = (&str, u64)> {
        self.path_counts
            .get(path)
            .into_iter()
            .flat_map(|m| m.iter().map(|(s, &c)| (s.as_str(), c)))
    }

    /// Byte-stable dump: one `(global ...)` form followed by one
    /// `(path (<sym>*) ...)` form per path, everything sorted
    /// lexicographically, one form per line.
    pub fn dump(&self) -> String {
        let mut out = String::from("(global");
        for (symbol, count) in &self.global_counts {
            out.push_str(&format!(" ({symbol} {count})"));
        }
        out.push_str(")\n");
        for (path, counts) in &self.path_counts {
            out.push_str(&format!("(path {path}"));
            for (symbol, count) in counts {
                out.push_str(&format!(" ({symbol} {count})"));
            }
            out.push_str(")\n");
        }
        out
    }

    /// Parse a [`dump`](Self::dump) back into a store, resolving symbols
    /// against `sig`. The global table is recomputed from the path table and
    /// checked against the dumped one.
    pub fn load_dump(text: &str, sig: &Signature) -> Result<Self, TermError> {
        let forms = sexpr::parse_all(text)?;
        let mut store = StatsStore::new();
        let mut dumped_global: BTreeMap<String, u64> = BTreeMap::new();
        for form in &forms {
            let pos = form.pos();
            let items = form
                .as_list()
                .ok_or_else(|| TermError::Malformed { msg: "expected (global ...) or (path ...)".into(), pos })?;
            match items.first().and_then(SExpr::as_atom) {
                Some("global") => {
                    for entry in &items[1..] {
                        let (symbol, count) = parse_count_entry(entry, sig)?;
                        dumped_global.insert(symbol, count);
                    }
                }
                Some("path") => {
                    let path_list = items
                        .get(1)
                        .and_then(SExpr::as_list)
                        .ok_or_else(|| TermError::Malformed { msg: "path form expects a symbol list".into(), pos })?;
                    let mut symbols = Vec::with_capacity(path_list.len());
                    for s in path_list {
                        symbols.push(
                            s.as_atom()
                                .ok_or_else(|| TermError::Malformed { msg: "path entries must be symbols".into(), pos: s.pos() })?
                                .to_string(),
                        );
                    }
                    let path = Path(symbols);
                    for entry in &items[2..] {
                        let (symbol, count) = parse_count_entry(entry, sig)?;
                        let decl = sig.symbol(&symbol).expect("checked by parse_count_entry");
                        *store.global_counts.entry(symbol.clone()).or_insert(0) += count;
                        *store.path_counts.entry(path.clone()).or_default().entry(symbol.clone()).or_insert(0) += count;
                        store.observed_symbols.entry(symbol).or_insert_with(|| Arc::clone(decl));
                    }
                }
                _ => {
                    return Err(TermError::Malformed { msg: "expected (global ...) or (path ...)".into(), pos });
                }
            }
        }
        if store.global_counts != dumped_global {
            return Err(TermError::Malformed {
                msg: "global table does not match the per-path sums".into(),
                pos: Default::default(),
            });
        }
        Ok(store)
    }

    /// Stable 64-bit fingerprint of the current tables (FNV-1a over the
    /// dump); identifies stats snapshots in session reports.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        for byte in self.dump().bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(PRIME);
        }
        hash
    }
}

fn parse_count_entry(entry: &SExpr, sig: &Signature) -> Result<(String, u64), TermError> {
    let pos = entry.pos();
    let pair = entry
        .as_list()
        .ok_or_else(|| TermError::Malformed { msg: "expected a (<symbol> <count>) entry".into(), pos })?;
    if pair.len() != 2 {
        return Err(TermError::Malformed { msg: "expected a (<symbol> <count>) entry".into(), pos });
    }
    let symbol = pair[0]
        .as_atom()
        .ok_or_else(|| TermError::Malformed { msg: "expected a symbol".into(), pos: pair[0].pos() })?;
    if sig.symbol(symbol).is_none() {
        return Err(TermError::UnknownSymbol { name: symbol.to_string(), pos: pair[0].pos() });
    }
    let count = pair[1]
        .as_atom()
        .and_then(|a| a.parse::<u64>().ok())
        .ok_or_else(|| TermError::Malformed { msg: "expected a non-negative count".into(), pos: pair[1].pos() })?;
    Ok((symbol.to_string(), count))
}
