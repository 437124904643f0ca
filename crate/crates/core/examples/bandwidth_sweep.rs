//! Sweep `B^max` over 5..40 MHz for every strategy on generated scenarios
//! and print the metric table.
//!
//! `cargo run --release --example bandwidth_sweep -- [seeds]`

use std::time::Instant;

use pairband::scenario::ScenarioParams;
use pairband::solver::{SolveOptions, Strategy};
use pairband::sweep::{rows_to_csv, sweep_bandwidth, ScenarioSource, SweepSpec};

fn main() -> pairband::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let spec = SweepSpec {
        source: ScenarioSource::Generated { params: ScenarioParams::default(), table: None },
        b_max_values: (1..=8).map(|k| k as f64 * 5e6).collect(),
        strategies: Strategy::ALL.to_vec(),
        seeds: (0..seeds).collect(),
        options: SolveOptions::default(),
    };
    let start = Instant::now();
    let table = sweep_bandwidth(&spec, 0)?;
    print!("{}", rows_to_csv(&table.rows));
    eprintln!("{} cells in {:.2?}", table.cells.len(), start.elapsed());
    Ok(())
}
