//! Repeated attack experiments and their rank statistics: Friedman test,
//! Nemenyi critical difference, and per-method median / MAD / confidence
//! interval.
//!
//! Cells hold accuracy declines in percentage points (attacked minus clean
//! accuracy, so a stronger attack is more negative). Within each block the
//! method with the most negative decline gets rank `k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::attack::{attack_testset, audit_summary, AttackConfig, AttackError, AuditReport};
use crate::graph::Split;
use crate::learners::SurrogateKind;
use crate::perturb::Strategy;
use crate::synth::{generate, GeneratorConfig, Range, SynthError};
use crate::target::{train_target, BlackBoxTarget, OracleMode, TargetError};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 blocks for ranking, got {0}")]
    TooFewBlocks(usize),
    #[error("need at least 2 methods for ranking, got {0}")]
    TooFewMethods(usize),
    #[error("critical values are tabulated for 2..=10 methods, got {0}")]
    TooManyMethods(usize),
    #[error("critical values are tabulated for alpha 0.05 and 0.10, got {0}")]
    UnsupportedAlpha(f64),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

/// Declines indexed by `[row][method][repetition]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    rows: Vec<String>,
    methods: Vec<String>,
    values: Vec<Vec<Vec<f64>>>,
}

impl ResultTable {
    pub fn new(rows: Vec<String>, methods: Vec<String>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if rows.is_empty() || methods.is_empty() {
            return Err(BenchError::InvalidConfig("result table needs at least one row and one method".into()));
        }
        let reps = values.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let rectangular = values.len() == rows.len()
            && values
                .iter()
                .all(|r| r.len() == methods.len() && r.iter().all(|c| c.len() == reps));
        if !rectangular || reps == 0 {
            return Err(BenchError::InvalidConfig("result table is not rectangular".into()));
        }
        Ok(Self { rows, methods, values })
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn repetitions(&self) -> usize {
        self.values[0][0].len()
    }

    pub fn cell(&self, row: usize, method: usize) -> &[f64] {
        &self.values[row][method]
    }

    /// One block per `(row, repetition)`, each holding a value per method.
    pub fn blocks(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for row in &self.values {
            for rep in 0..self.repetitions() {
                out.push(row.iter().map(|cell| cell[rep]).collect());
            }
        }
        out
    }

    /// Every value of method `j`, block order.
    pub fn method_values(&self, j: usize) -> Vec<f64> {
        self.values.iter().flat_map(|row| row[j].iter().copied()).collect()
    }

    pub fn method_mean(&self, j: usize) -> f64 {
        let v = self.method_values(j);
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Long format: `config,repetition,method,decline`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,repetition,method,decline\n");
        for (i, row) in self.rows.iter().enumerate() {
            for rep in 0..self.repetitions() {
                for (j, m) in self.methods.iter().enumerate() {
                    let _ = writeln!(out, "{row},{rep},{m},{}", self.values[i][j][rep]);
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "config,repetition,method,decline" => {}
            _ => {
                return Err(BenchError::Csv {
                    line: 1,
                    message: "expected header `config,repetition,method,decline`".into(),
                })
            }
        }
        let mut rows: Vec<String> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        let mut max_rep = 0;
        for (idx, line) in lines {
            let err = |message: String| BenchError::Csv { line: idx + 1, message };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [row, rep, method, value] = fields[..] else {
                return Err(err(format!("expected 4 fields, got {}", fields.len())));
            };
            let rep: usize = rep.parse().map_err(|_| err(format!("bad repetition `{rep}`")))?;
            let value: f64 = value.parse().map_err(|_| err(format!("bad decline `{value}`")))?;
            let r = position_or_push(&mut rows, row);
            let m = position_or_push(&mut methods, method);
            if cells.insert((r, m, rep), value).is_some() {
                return Err(err(format!("duplicate cell ({row}, {rep}, {method})")));
            }
            max_rep = max_rep.max(rep + 1);
        }
        let mut values = vec![vec![vec![0.0; max_rep]; methods.len()]; rows.len()];
        for r in 0..rows.len() {
            for m in 0..methods.len() {
                for rep in 0..max_rep {
                    values[r][m][rep] = *cells.get(&(r, m, rep)).ok_or_else(|| BenchError::Csv {
                        line: 0,
                        message: format!("missing cell ({}, {rep}, {})", rows[r], methods[m]),
                    })?;
                }
            }
        }
        Self::new(rows, methods, values)
    }
}

fn position_or_push(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|x| x == name) {
        Some(i) => i,
        None => {
            list.push(name.to_string());
            list.len() - 1
        }
    }
}

/// Ranks within one block: the largest value gets rank 1, the most negative
/// rank `k`; ties share their average rank.
pub fn block_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Critical values `q_alpha` of the Nemenyi test (studentized range over
/// `sqrt(2)`) for `k = 2..=10`.
const Q_05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_10: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(BenchError::TooManyMethods(k));
    }
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_10
    } else {
        return Err(BenchError::UnsupportedAlpha(alpha));
    };
    Ok(table[k - 2])
}

/// `CD = q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn critical_difference(k: usize, n_blocks: usize, alpha: f64) -> Result<f64> {
    Ok(nemenyi_q(k, alpha)? * ((k * (k + 1)) as f64 / (6.0 * n_blocks as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub mean: f64,
    pub median: f64,
    pub mad: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile(&s, 0.5)
}

/// Mean, median, median absolute deviation and the notched-median interval
/// `MED +- 1.58 IQR / sqrt(m)`. Panics on an empty slice.
pub fn rank_descriptives(values: &[f64]) -> Descriptives {
    assert!(!values.is_empty(), "descriptives of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = quantile(&sorted, 0.5);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let half = 1.58 * iqr / (values.len() as f64).sqrt();
    Descriptives {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: med,
        mad: median(&deviations),
        ci_low: med - half,
        ci_high: med + half,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub ranking: String,
    pub methods: Vec<String>,
    pub k: usize,
    pub n_blocks: usize,
    pub alpha: f64,
    pub mean_ranks: Vec<f64>,
    pub descriptives: Vec<Descriptives>,
    pub friedman_statistic: f64,
    pub p_value: f64,
    pub critical_difference: f64,
    /// `significant[i][j]`: mean ranks of `i` and `j` differ by more than the CD.
    pub significant: Vec<Vec<bool>>,
}

pub const RANKING_NOTE: &str = "rank k = most negative decline (strongest attack)";

pub fn friedman_nemenyi(table: &ResultTable, alpha: f64) -> Result<RankReport> {
    let k = table.methods().len();
    if k < 2 {
        return Err(BenchError::TooFewMethods(k));
    }
    let blocks = table.blocks();
    let n = blocks.len();
    if n < 2 {
        return Err(BenchError::TooFewBlocks(n));
    }
    let cd = critical_difference(k, n, alpha)?;
    let mut mean_ranks = vec![0.0; k];
    for b in &blocks {
        for (j, r) in block_ranks(b).into_iter().enumerate() {
            mean_ranks[j] += r;
        }
    }
    for r in &mut mean_ranks {
        *r /= n as f64;
    }
    let kf = k as f64;
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let stat = 12.0 * n as f64 / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let stat = stat.max(0.0);
    let chi = ChiSquared::new(kf - 1.0).expect("k >= 2");
    let p_value = (1.0 - chi.cdf(stat)).clamp(0.0, 1.0);
    let significant = (0..k)
        .map(|i| (0..k).map(|j| (mean_ranks[i] - mean_ranks[j]).abs() > cd).collect())
        .collect();
    Ok(RankReport {
        ranking: RANKING_NOTE.into(),
        methods: table.methods().to_vec(),
        k,
        n_blocks: n,
        alpha,
        descriptives: (0..k).map(|j| rank_descriptives(&table.method_values(j))).collect(),
        mean_ranks,
        friedman_statistic: stat,
        p_value,
        critical_difference: cd,
        significant,
    })
}

impl RankReport {
    /// Method with the highest mean rank (strongest attack); earliest on ties.
    pub fn best_method(&self) -> &str {
        let mut best = 0;
        for j in 1..self.k {
            if self.mean_ranks[j] > self.mean_ranks[best] {
                best = j;
            }
        }
        &self.methods[best]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,mean_rank,mean,median,mad,ci_low,ci_high\n");
        for j in 0..self.k {
            let d = &self.descriptives[j];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.methods[j], self.mean_ranks[j], d.mean, d.median, d.mad, d.ci_low, d.ci_high
            );
        }
        out
    }

    /// Text description of a critical-difference diagram: methods ordered on
    /// the mean-rank axis and the maximal groups whose spread is within the CD.
    pub fn cd_diagram(&self) -> String {
        let mut order: Vec<usize> = (0..self.k).collect();
        order.sort_by(|&a, &b| self.mean_ranks[a].total_cmp(&self.mean_ranks[b]).then(a.cmp(&b)));
        let mut out = String::new();
        let _ = writeln!(out, "# critical difference diagram ({RANKING_NOTE})");
        let _ = writeln!(
            out,
            "axis 1 {} cd {:.4} alpha {} blocks {}",
            self.k, self.critical_difference, self.alpha, self.n_blocks
        );
        let _ = writeln!(
            out,
            "friedman chi2 {:.4} p {:.6}",
            self.friedman_statistic, self.p_value
        );
        for &j in &order {
            let _ = writeln!(out, "method {} {:.4}", self.methods[j], self.mean_ranks[j]);
        }
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for start in 0..order.len() {
            let mut end = start;
            while end + 1 < order.len()
                && self.mean_ranks[order[end + 1]] - self.mean_ranks[order[start]] <= self.critical_difference
            {
                end += 1;
            }
            if end > start && !groups.iter().any(|&(s, e)| s <= start && end <= e) {
                groups.push((start, end));
            }
        }
        for (s, e) in groups {
            let names: Vec<&str> = order[s..=e].iter().map(|&j| self.methods[j].as_str()).collect();
            let _ = writeln!(out, "clique {}", names.join(" "));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub generator: GeneratorConfig,
}

/// A method column: overrides of the base attack config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub surrogate: Option<SurrogateKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSpec {
    pub wl_iterations: usize,
    pub c: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            wl_iterations: crate::wl::DEFAULT_WL_ITERATIONS,
            c: 1.0,
        }
    }
}

fn default_repetitions() -> usize {
    10
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    /// Perturbation ratios to sweep; empty means the base config's `r` only.
    #[serde(default)]
    pub budgets: Vec<f64>,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: &str| Err(BenchError::InvalidConfig(m.into()));
        if self.repetitions == 0 {
            return invalid("repetitions must be >= 1");
        }
        if self.datasets.is_empty() {
            return invalid("no datasets");
        }
        if self.methods.is_empty() {
            return invalid("no methods");
        }
        for (i, m) in self.methods.iter().enumerate() {
            if m.name.is_empty() || m.name.contains(',') || self.methods[..i].iter().any(|o| o.name == m.name) {
                return invalid("method names must be unique, nonempty and free of commas");
            }
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if d.name.is_empty() || d.name.contains(',') || self.datasets[..i].iter().any(|o| o.name == d.name) {
                return invalid("dataset names must be unique, nonempty and free of commas");
            }
            d.generator.validate()?;
        }
        if self.budgets.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return invalid("budgets must be finite and > 0");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid("alpha must be in (0, 1)");
        }
        for cfg in self.attack_configs(0) {
            cfg.validate()?;
        }
        Ok(())
    }

    pub fn budgets(&self) -> Vec<f64> {
        if self.budgets.is_empty() {
            vec![self.attack.r]
        } else {
            self.budgets.clone()
        }
    }

    fn method_config(&self, m: &MethodSpec, r: f64, rep: usize) -> AttackConfig {
        AttackConfig {
            r,
            strategy: m.strategy.unwrap_or(self.attack.strategy),
            surrogate: m.surrogate.unwrap_or(self.attack.surrogate),
            seed: self.attack.seed.wrapping_add(rep as u64),
            ..self.attack.clone()
        }
    }

    fn attack_configs(&self, rep: usize) -> Vec<AttackConfig> {
        self.budgets()
            .iter()
            .flat_map(|&r| self.methods.iter().map(move |m| self.method_config(m, r, rep)))
            .collect()
    }

    /// The reference scene-graph generator: 6 objects with 4 features each
    /// (30 nodes), 150 graphs per class split 100 / 50.
    pub fn reference_generator() -> GeneratorConfig {
        GeneratorConfig::default()
    }

    /// The three perturbation strategies at budgets of 1, 2 and 3 flips on
    /// the reference generator.
    pub fn strategy_sweep() -> Self {
        let n = 30.0 * 30.0;
        Self {
            repetitions: 10,
            datasets: vec![DatasetSpec {
                name: "reference".into(),
                generator: Self::reference_generator(),
            }],
            methods: Strategy::ALL
                .iter()
                .map(|&s| MethodSpec {
                    name: s.name().into(),
                    strategy: Some(s),
                    surrogate: None,
                })
                .collect(),
            budgets: vec![1.0 / n, 2.0 / n, 3.0 / n],
            attack: AttackConfig::default(),
            target: TargetSpec::default(),
            oracle: OracleMode::Score,
            alpha: 0.05,
        }
    }

    /// The four surrogate families under eigencentrality perturbations on
    /// three generator configurations.
    pub fn surrogate_comparison() -> Self {
        let base = Self::reference_generator();
        Self {
            repetitions: 10,
            datasets: vec![
                DatasetSpec {
                    name: "reference".into(),
                    generator: base.clone(),
                },
                DatasetSpec {
                    name: "many_objects".into(),
                    generator: GeneratorConfig {
                        objects: Range::fixed(8),
                        features_per_object: Range::fixed(3),
                        ..base.clone()
                    },
                },
                DatasetSpec {
                    name: "varied_size".into(),
                    generator: GeneratorConfig {
                        objects: Range { min: 5, max: 7 },
                        features_per_object: Range { min: 3, max: 5 },
                        ..base
                    },
                },
            ],
            methods: SurrogateKind::ALL
                .iter()
                .map(|&s| MethodSpec {
                    name: s.name().into(),
                    strategy: Some(Strategy::Eigencentrality),
                    surrogate: Some(s),
                })
                .collect(),
            budgets: vec![2.0 / 900.0],
            attack: AttackConfig::default(),
            target: TargetSpec::default(),
            oracle: OracleMode::Score,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetTable {
    pub r: f64,
    pub table: ResultTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub tables: Vec<BudgetTable>,
    /// Clean test accuracy of the target, `[dataset][repetition]`.
    pub clean_accuracy: Vec<Vec<f64>>,
    pub audit: AuditReport,
}

impl BenchOutcome {
    /// Mean decline per method (rows) and budget (columns).
    pub fn budget_sweep_csv(&self) -> String {
        let methods = self.tables[0].table.methods();
        let mut out = String::from("method");
        for t in &self.tables {
            let _ = write!(out, ",r={}", t.r);
        }
        out.push('\n');
        for (j, m) in methods.iter().enumerate() {
            out.push_str(m);
            for t in &self.tables {
                let _ = write!(out, ",{}", t.table.method_mean(j));
            }
            out.push('\n');
        }
        out
    }
}

struct CellResult {
    /// `[budget][method]`
    declines: Vec<Vec<f64>>,
    clean_accuracy: f64,
    audit: AuditReport,
}

fn run_cell(spec: &BenchSpec, dataset: &DatasetSpec, rep: usize) -> Result<CellResult> {
    let generator = GeneratorConfig {
        seed: dataset.generator.seed.wrapping_add(rep as u64),
        ..dataset.generator.clone()
    };
    let ds = generate(&generator)?;
    let train = ds.subset(Split::Train);
    let test = ds.subset(Split::Test);
    let model = train_target(&train, spec.target.wl_iterations, spec.target.c)?;
    let clean_accuracy = model.accuracy(&test)?;
    let oracle = BlackBoxTarget::new(model, spec.oracle);
    let mut audit = AuditReport::default();
    let mut declines = Vec::new();
    for r in spec.budgets() {
        let mut row = Vec::new();
        for m in &spec.methods {
            let summary = attack_testset(&oracle, &test, &spec.method_config(m, r, rep))?;
            audit.merge(audit_summary(&summary, &test));
            row.push(summary.decline);
        }
        declines.push(row);
    }
    Ok(CellResult {
        declines,
        clean_accuracy,
        audit,
    })
}

/// Runs every `(dataset, repetition)` cell: generate data with the
/// repetition's seed, train one target, and attack it with every method and
/// budget (paired design). Cells run in parallel on `workers` threads
/// (`None` = rayon default); the result does not depend on the count.
pub fn run_benchmark(spec: &BenchSpec, workers: Option<usize>) -> Result<BenchOutcome> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| BenchError::Pool(e.to_string()))?;
    let tasks: Vec<(usize, usize)> = (0..spec.datasets.len())
        .flat_map(|d| (0..spec.repetitions).map(move |rep| (d, rep)))
        .collect();
    let cells: Vec<CellResult> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(d, rep)| run_cell(spec, &spec.datasets[d], rep))
            .collect::<Result<_>>()
    })?;

    let budgets = spec.budgets();
    let rows: Vec<String> = spec.datasets.iter().map(|d| d.name.clone()).collect();
    let methods: Vec<String> = spec.methods.iter().map(|m| m.name.clone()).collect();
    let mut tables = Vec::new();
    for (b, &r) in budgets.iter().enumerate() {
        let values = (0..rows.len())
            .map(|d| {
                (0..methods.len())
                    .map(|m| {
                        (0..spec.repetitions)
                            .map(|rep| cells[d * spec.repetitions + rep].declines[b][m])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        tables.push(BudgetTable {
            r,
            table: ResultTable::new(rows.clone(), methods.clone(), values)?,
        });
    }
    let mut audit = AuditReport::default();
    let mut clean_accuracy = vec![Vec::new(); rows.len()];
    for (i, cell) in cells.into_iter().enumerate() {
        clean_accuracy[i / spec.repetitions].push(cell.clean_accuracy);
        audit.merge(cell.audit);
    }
    Ok(BenchOutcome {
        tables,
        clean_accuracy,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[f64]]) -> ResultTable {
        // each inner slice is one block with a value per method
        let k = rows[0].len();
        let values = vec![(0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect()];
        ResultTable::new(vec!["d".into()], (0..k).map(|j| format!("m{j}")).collect(), values).unwrap()
    }

    #[test]
    fn cd_fixture() {
        assert!((critical_difference(4, 5, 0.05).unwrap() - 2.0977).abs() < 1e-3);
        assert!(critical_difference(11, 5, 0.05).is_err());
        assert!(critical_difference(4, 5, 0.01).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(block_ranks(&[-10.0, -20.0, -5.0]), vec![2.0, 3.0, 1.0]);
        assert_eq!(block_ranks(&[-1.0, -1.0, -3.0]), vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn identical_columns() {
        let t = table(&[&[-3.0, -3.0], &[-5.0, -5.0], &[-1.0, -1.0]]);
        let r = friedman_nemenyi(&t, 0.05).unwrap();
        assert_eq!(r.mean_ranks, vec![1.5, 1.5]);
        assert!(r.friedman_statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(r.significant.iter().flatten().all(|&s| !s));
    }

    #[test]
    fn dominance_fixture() {
        // m0 always the strongest attack, m2 always the weakest: ranks 3, 2, 1 in all 4 blocks.
        let t = table(&[
            &[-30.0, -20.0, -10.0],
            &[-25.0, -12.0, -3.0],
            &[-40.0, -39.0, -38.0],
            &[-11.0, -10.0, -9.0],
        ]);
        let r = friedman_nemenyi(&t, 0.05).unwrap();
        assert_eq!(r.mean_ranks, vec![3.0, 2.0, 1.0]);
        // 12 * 4 / 12 * (9 + 4 + 1 - 3 * 16 / 4) = 4 * 2 = 8
        assert!((r.friedman_statistic - 8.0).abs() < 1e-12);
        assert!((r.p_value - (-4.0f64).exp()).abs() < 1e-9);
        assert_eq!(r.best_method(), "m0");
    }

    #[test]
    fn descriptive_fixtures() {
        let d = rank_descriptives(&[-27.0, -27.0, -27.0]);
        assert_eq!((d.median, d.mad), (-27.0, 0.0));
        let d = rank_descriptives(&[-13.0, -14.0, -16.0]);
        assert_eq!((d.median, d.mad), (-14.0, 1.0));
        let d = rank_descriptives(&[-4.0]);
        assert_eq!((d.ci_low, d.median, d.ci_high), (-4.0, -4.0, -4.0));
    }

    #[test]
    fn csv_round_trip() {
        let t = ResultTable::new(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![
                vec![vec![-1.5, -2.0], vec![0.0, -3.25]],
                vec![vec![-7.0, -1.0], vec![-0.1, -0.2]],
            ],
        )
        .unwrap();
        assert_eq!(ResultTable::from_csv(&t.to_csv()).unwrap(), t);
        assert!(ResultTable::from_csv("config,repetition,method,decline\na,0,x,1\na,1,x,2\na,0,y,3\n").is_err());
        assert!(ResultTable::from_csv("bad header\n").is_err());
    }

    #[test]
    fn cd_diagram_groups() {
        let t = table(&[&[-3.0, -2.0, -1.0], &[-3.0, -2.0, -1.0]]);
        let r = friedman_nemenyi(&t, 0.05).unwrap();
        let text = r.cd_diagram();
        assert!(text.contains("method m2 1.0000"));
        // with only two blocks the CD exceeds the whole axis
        assert!(text.contains("clique m2 m1 m0"));
    }

    #[test]
    fn spec_validation() {
        let mut s = BenchSpec::strategy_sweep();
        s.validate().unwrap();
        s.methods.clear();
        assert!(matches!(s.validate(), Err(BenchError::InvalidConfig(_))));
        let s = BenchSpec {
            repetitions: 0,
            ..BenchSpec::strategy_sweep()
        };
        assert!(s.validate().is_err());
    }
}
