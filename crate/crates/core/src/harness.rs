//! Strategy-grid enumeration and evaluation bookkeeping: solved-problem
//! matrices, per-strategy gains/losses against a reference strategy, and
//! greedy complementarity covers.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::generator::{EffortMode, GenConfig, Pick, DEFAULT_BATCH_SIZE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("grid axis `{0}` is empty")]
    EmptyGridAxis(&'static str),
    #[error("{0}")]
    Grid(#[from] crate::generator::GenError),
    #[error("results file has no header row")]
    MissingHeader,
    #[error("results header must start with `problem`, got `{0}`")]
    BadHeader(String),
    #[error("line {row}: expected {expected} cells, got {got}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("line {row}, column {col}: cell must be 0 or 1, got `{value}`")]
    NonBinaryCell { row: usize, col: usize, value: String },
    #[error("duplicate strategy id `{0}`")]
    DuplicateStrategy(String),
    #[error("duplicate problem id `{0}`")]
    DuplicateProblem(String),
    #[error("line {row}: bad directive `{text}`")]
    BadDirective { row: usize, text: String },
    #[error("no reference strategy set (use a `#reference=<id>` directive or --ref)")]
    NoReference,
    #[error("reference strategy `{0}` is not in the matrix")]
    UnknownReference(String),
    #[error("results matrix has no strategies")]
    EmptyMatrix,
}

/// Axes of a strategy grid sweep. `flips` applies only to picks that use
/// flip; `random` expands without a flip dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub efforts: Vec<EffortMode>,
    pub picks: Vec<Pick>,
    pub depths: Vec<u32>,
    pub flips: Vec<f64>,
    /// Seed assigned to every expanded config.
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for GridSpec {
    /// The full built-in sweep: 2 efforts x 3 picks x 5 depths x 5 flips
    /// under the flip-applicability rule, 110 strategies in total.
    fn default() -> Self {
        GridSpec {
            efforts: vec![EffortMode::Lastcall, EffortMode::Interleave],
            picks: vec![Pick::Random, Pick::Weights, Pick::Paths],
            depths: vec![0, 1, 2, 3, 4],
            flips: vec![0.0, 0.2, 0.5, 0.8, 1.0],
            seed: 0,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

/// Cartesian expansion of the grid in (effort, pick, depth, flip) order.
/// `flips` may be empty only when no pick in the grid uses it.
pub fn enumerate_grid(spec: &GridSpec) -> Result<Vec<GenConfig>, HarnessError> {
    if spec.efforts.is_empty() {
        return Err(HarnessError::EmptyGridAxis("efforts"));
    }
    if spec.picks.is_empty() {
        return Err(HarnessError::EmptyGridAxis("picks"));
    }
    if spec.depths.is_empty() {
        return Err(HarnessError::EmptyGridAxis("depths"));
    }
    if spec.flips.is_empty() && spec.picks.iter().any(|p| p.uses_flip()) {
        return Err(HarnessError::EmptyGridAxis("flips"));
    }
    let mut configs = Vec::new();
    for &effort in &spec.efforts {
        for &pick in &spec.picks {
            for &depth in &spec.depths {
                let flips: &[f64] = if pick.uses_flip() { &spec.flips } else { &[0.0] };
                for &flip in flips {
                    let cfg = GenConfig::new(effort, pick, depth, flip)?
                        .with_seed(spec.seed)
                        .with_batch_size(spec.batch_size)?;
                    configs.push(cfg);
                }
            }
        }
    }
    Ok(configs)
}

/// Boolean solved table over (strategy, problem) pairs, with an optional
/// designated reference strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsMatrix {
    problems: Vec<String>,
    strategies: Vec<String>,
    /// `solved[strategy][problem]`
    solved: Vec<Vec<bool>>,
    reference: Option<String>,
}

impl ResultsMatrix {
    /// Empty matrix over the given ids; fill with [`set_solved`](Self::set_solved).
    pub fn new(strategies: Vec<String>, problems: Vec<String>) -> Result<Self, HarnessError> {
        let mut seen = BTreeSet::new();
        for s in &strategies {
            if !seen.insert(s) {
                return Err(HarnessError::DuplicateStrategy(s.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &problems {
            if !seen.insert(p) {
                return Err(HarnessError::DuplicateProblem(p.clone()));
            }
        }
        let solved = vec![vec![false; problems.len()]; strategies.len()];
        Ok(ResultsMatrix { problems, strategies, solved, reference: None })
    }

    pub fn set_solved(&mut self, strategy: usize, problem: usize, value: bool) {
        self.solved[strategy][problem] = value;
    }

    pub fn strategies(&self) -> &[String] {
        &self.strategies
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn reference(&self) -> Option<&str> {
        self.reference.as_deref()
    }

    pub fn set_reference(&mut self, id: &str) -> Result<(), HarnessError> {
        if !self.strategies.iter().any(|s| s == id) {
            return Err(HarnessError::UnknownReference(id.to_string()));
        }
        self.reference = Some(id.to_string());
        Ok(())
    }

    pub fn strategy_index(&self, id: &str) -> Option<usize> {
        self.strategies.iter().position(|s| s == id)
    }

    pub fn is_solved(&self, strategy: usize, problem: usize) -> bool {
        self.solved[strategy][problem]
    }

    /// Problems solved by one strategy.
    pub fn solve_count(&self, strategy: usize) -> usize {
        self.solved[strategy].iter().filter(|&&b| b).count()
    }
}

/// Parse a results CSV: header `problem,<strategy id>...`, one row per
/// problem with 0/1 cells, optional `#reference=<id>` directive lines.
/// Row/column numbers in errors are 1-based over the physical file.
pub fn load_results(text: &str) -> Result<ResultsMatrix, HarnessError> {
    let mut header: Option<Vec<String>> = None;
    let mut problems = Vec::new();
    let mut rows: Vec<Vec<bool>> = Vec::new(); // problem-major while loading
    let mut reference: Option<String> = None;

    for (index, line) in text.lines().enumerate() {
        let row = index + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            if let Some(id) = directive.strip_prefix("reference=") {
                if id.trim().is_empty() {
                    return Err(HarnessError::BadDirective { row, text: line.to_string() });
                }
                reference = Some(id.trim().to_string());
                continue;
            }
            // other #-lines are comments
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match &header {
            None => {
                if cells.first() != Some(&"problem") {
                    return Err(HarnessError::BadHeader(cells.first().unwrap_or(&"").to_string()));
                }
                header = Some(cells[1..].iter().map(|s| s.to_string()).collect());
            }
            Some(strategies) => {
                if cells.len() != strategies.len() + 1 {
                    return Err(HarnessError::RaggedRow {
                        row,
                        expected: strategies.len() + 1,
                        got: cells.len(),
                    });
                }
                problems.push(cells[0].to_string());
                let mut bits = Vec::with_capacity(strategies.len());
                for (i, cell) in cells[1..].iter().enumerate() {
                    match *cell {
                        "0" => bits.push(false),
                        "1" => bits.push(true),
                        other => {
                            return Err(HarnessError::NonBinaryCell {
                                row,
                                col: i + 2,
                                value: other.to_string(),
                            })
                        }
                    }
                }
                rows.push(bits);
            }
        }
    }

    let strategies = header.ok_or(HarnessError::MissingHeader)?;
    let mut matrix = ResultsMatrix::new(strategies, problems)?;
    for (p, bits) in rows.iter().enumerate() {
        for (s, &bit) in bits.iter().enumerate() {
            matrix.set_solved(s, p, bit);
        }
    }
    if let Some(id) = reference {
        matrix.set_reference(&id)?;
    }
    Ok(matrix)
}

/// Per-strategy totals against the reference: `total` problems solved,
/// `gained` solved that the reference misses, `lost` missed that the
/// reference solves. `total = ref_total + gained - lost` by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub total: usize,
    pub gained: usize,
    pub lost: usize,
}

pub fn aggregate_vs_reference(matrix: &ResultsMatrix) -> Result<Vec<StrategySummary>, HarnessError> {
    let reference = matrix.reference().ok_or(HarnessError::NoReference)?;
    let ref_index = matrix.strategy_index(reference).expect("reference is validated on set");
    let mut summaries = Vec::with_capacity(matrix.strategies().len());
    for (s, strategy) in matrix.strategies().iter().enumerate() {
        let mut total = 0;
        let mut gained = 0;
        let mut lost = 0;
        for p in 0..matrix.problems().len() {
            let solved = matrix.is_solved(s, p);
            let ref_solved = matrix.is_solved(ref_index, p);
            total += usize::from(solved);
            gained += usize::from(solved && !ref_solved);
            lost += usize::from(!solved && ref_solved);
        }
        summaries.push(StrategySummary { strategy: strategy.clone(), total, gained, lost });
    }
    Ok(summaries)
}

/// One greedy-cover row: solo `solves`, marginal `new`, `adds` as the
/// fraction new/previous-total (None on the first row), and the running
/// portfolio `total`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverRow {
    pub strategy: String,
    pub solves: usize,
    pub new: usize,
    pub adds: Option<f64>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub rows: Vec<CoverRow>,
}

/// `new / prev_total` as a percentage rounded half-up to two decimals,
/// e.g. `"3.90"`. Exact integer arithmetic, no float rounding.
pub fn adds_percent_display(new: usize, prev_total: usize) -> String {
    assert!(prev_total > 0, "previous total must be positive");
    let basis_points = (new as u128 * 10_000 * 2 + prev_total as u128) / (prev_total as u128 * 2);
    format!("{}.{:02}", basis_points / 100, basis_points % 100)
}

/// Greedy complementarity cover: start from the strategy with the most
/// solves, then repeatedly take the one solving the most still-unsolved
/// problems, until `top` rows are placed (all strategies when `None`).
/// Ties break on higher marginal gain, then higher solo solves, then
/// lexicographically smaller id.
pub fn greedy_cover(matrix: &ResultsMatrix, top: Option<usize>) -> Result<CoverReport, HarnessError> {
    let strategy_count = matrix.strategies().len();
    if strategy_count == 0 {
        return Err(HarnessError::EmptyMatrix);
    }
    let limit = top.unwrap_or(strategy_count).min(strategy_count);
    let solo: Vec<usize> = (0..strategy_count).map(|s| matrix.solve_count(s)).collect();
    let mut covered = vec![false; matrix.problems().len()];
    let mut remaining: Vec<usize> = (0..strategy_count).collect();
    let mut rows = Vec::with_capacity(limit);
    let mut total = 0usize;

    while rows.len() < limit {
        let mut best: Option<(usize, usize)> = None; // (strategy index, marginal)
        for &s in &remaining {
            let marginal = (0..covered.len())
                .filter(|&p| matrix.is_solved(s, p) && !covered[p])
                .count();
            let better = match best {
                None => true,
                Some((b, best_marginal)) => {
                    (marginal, solo[s], std::cmp::Reverse(&matrix.strategies()[s]))
                        > (best_marginal, solo[b], std::cmp::Reverse(&matrix.strategies()[b]))
                }
            };
            if better {
                best = Some((s, marginal));
            }
        }
        let (chosen, new) = best.expect("remaining is non-empty while rows < limit");
        remaining.retain(|&s| s != chosen);
        let adds = if rows.is_empty() { None } else { Some(new as f64 / total as f64) };
        total += new;
        for p in 0..covered.len() {
            if matrix.is_solved(chosen, p) {
                covered[p] = true;
            }
        }
        rows.push(CoverRow {
            strategy: matrix.strategies()[chosen].clone(),
            solves: solo[chosen],
            new,
            adds,
            total,
        });
    }
    Ok(CoverReport { rows })
}

impl CoverReport {
    /// Aligned text table in solves / +new / adds / =total column order.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.strategy.len()).max().unwrap_or(8).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}", "strategy", "solves", "+new", "adds", "=total");
        for (k, row) in self.rows.iter().enumerate() {
            let adds = match row.adds {
                None => "-".to_string(),
                Some(_) => format!("+{}%", adds_percent_display(row.new, self.rows[k - 1].total)),
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}",
                row.strategy,
                row.solves,
                format!("+{}", row.new),
                adds,
                format!("={}", row.total),
            );
        }
        out
    }

    /// Machine output: full-precision `adds` fraction, empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,solves,new,adds,total\n");
        for row in &self.rows {
            let adds = row.adds.map(|f| f.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", row.strategy, row.solves, row.new, adds, row.total);
        }
        out
    }
}
