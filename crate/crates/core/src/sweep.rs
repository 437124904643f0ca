//! Bandwidth sweeps over seeds and strategies.
//!
//! Every `(seed, B^max, strategy)` cell is solved independently, optionally
//! on a thread pool, and collected in cell order, so the table does not
//! depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::AllocationReport;
use crate::distortion::DistortionTable;
use crate::error::{Error, Result};
use crate::scenario::{self, Scenario, ScenarioParams};
use crate::solver::{self, SolveOptions, SolveResult, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// One instance for every seed; the seed only drives random pairings.
    Fixed(Box<Scenario>),
    /// A fresh instance per seed, optionally sharing one distortion table.
    Generated {
        params: ScenarioParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<DistortionTable>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub source: ScenarioSource,
    pub b_max_values: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub options: SolveOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.b_max_values.is_empty() {
            return Err(Error::Input("bandwidth list is empty".into()));
        }
        if let Some(b) = self.b_max_values.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::Input(format!("bandwidth values must be positive, got {b}")));
        }
        if self.b_max_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("bandwidth list must be strictly ascending".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Input("strategy list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Input("seed list is empty".into()));
        }
        Ok(())
    }
}

/// Outcome of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub seed: u64,
    pub b_max: f64,
    pub result: SolveResult,
}

/// Aggregate over seeds for one `(B^max, strategy)`. Means of distortion,
/// bandwidth and energy cover feasible draws only; `None` when there are
/// none. Candidate counts average over all draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b_max: f64,
    pub strategy: Strategy,
    pub seeds: usize,
    pub feasible: usize,
    pub mean_distortion: Option<f64>,
    pub mean_bandwidth_used: Option<f64>,
    pub mean_candidates_tried: f64,
    pub mean_transmit_energy: Option<f64>,
}

impl SweepRow {
    pub fn feasibility_rate(&self) -> f64 {
        self.feasible as f64 / self.seeds as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Cells ordered by seed, then `B^max`, then strategy as listed.
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn row(&self, b_max: f64, strategy: Strategy) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.b_max == b_max && r.strategy == strategy)
    }
}

pub const CSV_COLUMNS: [&str; 9] = [
    "b_max_hz",
    "strategy",
    "seeds",
    "feasible",
    "feasibility_rate",
    "mean_distortion",
    "mean_bandwidth_used_hz",
    "mean_candidates_tried",
    "mean_transmit_energy_j",
];

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn solve_cell(sc: &Scenario, seed: u64, b_max: f64, strategy: Strategy, opts: &SolveOptions) -> Result<SweepCell> {
    let sc = sc.with_b_max(b_max);
    let mut rng = scenario::pairing_rng(seed);
    let result = solver::solve(&sc, strategy, opts, &mut rng)?;
    Ok(SweepCell { seed, b_max, result })
}

fn run_cells(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    let scenarios: Vec<Scenario> = match &spec.source {
        ScenarioSource::Fixed(sc) => {
            sc.validate()?;
            vec![(**sc).clone()]
        }
        ScenarioSource::Generated { params, table } => {
            spec.seeds.par_iter().map(|&seed| scenario::generate(params, seed, table.clone())).collect::<Result<_>>()?
        }
    };
    let keys: Vec<(usize, u64, f64, Strategy)> = spec
        .seeds
        .iter()
        .enumerate()
        .flat_map(|(k, &seed)| {
            let idx = if scenarios.len() == 1 { 0 } else { k };
            spec.b_max_values.iter().flat_map(move |&b| spec.strategies.iter().map(move |&st| (idx, seed, b, st)))
        })
        .collect();
    keys.par_iter().map(|&(idx, seed, b, st)| solve_cell(&scenarios[idx], seed, b, st, &spec.options)).collect()
}

fn aggregate(spec: &SweepSpec, cells: &[SweepCell]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &b in &spec.b_max_values {
        for &st in &spec.strategies {
            let group: Vec<&SolveResult> = cells.iter().filter(|c| c.b_max == b && c.result.strategy == st).map(|c| &c.result).collect();
            let ok: Vec<&SolveResult> = group.iter().copied().filter(|r| r.feasible).collect();
            let alloc = |f: fn(&AllocationReport) -> f64| mean(ok.iter().filter_map(|r| r.allocation.as_ref()).map(f));
            rows.push(SweepRow {
                b_max: b,
                strategy: st,
                seeds: group.len(),
                feasible: ok.len(),
                mean_distortion: mean(ok.iter().filter_map(|r| r.total_distortion)),
                mean_bandwidth_used: alloc(|a| a.bandwidth_used),
                mean_candidates_tried: mean(group.iter().map(|r| r.candidates_tried as f64)).unwrap_or(0.0),
                mean_transmit_energy: alloc(|a| a.objective),
            });
        }
    }
    rows
}

/// Solve every cell with `jobs` worker threads (`0` picks the default).
pub fn sweep_bandwidth(spec: &SweepSpec, jobs: usize) -> Result<SweepTable> {
    spec.validate()?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Error::Input(format!("cannot start {jobs} workers: {e}")))?;
    let cells = pool.install(|| run_cells(spec))?;
    let rows = aggregate(spec, &cells);
    Ok(SweepTable { rows, cells })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Rows as comma-separated values under [`CSV_COLUMNS`]; empty fields mark
/// means with no feasible draw.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            r.b_max.to_string(),
            r.strategy.to_string(),
            r.seeds.to_string(),
            r.feasible.to_string(),
            r.feasibility_rate().to_string(),
            fmt_opt(r.mean_distortion),
            fmt_opt(r.mean_bandwidth_used),
            r.mean_candidates_tried.to_string(),
            fmt_opt(r.mean_transmit_energy),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
