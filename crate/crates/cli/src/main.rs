use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pairband::distortion::{load_distortion_table, DistortionTable};
use pairband::latency_energy::SystemConfig;
use pairband::scenario::{self, Scenario, ScenarioParams};
use pairband::solver::{self, SolveOptions, SolveResult, Strategy, DEFAULT_W_COUNT};
use pairband::sweep::{self, ScenarioSource, SweepSpec};

const TOOL: &str = "pairband";
const VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_INPUT: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "pairband", version, about = "Joint user pairing and bandwidth allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scenario file.
    GenScenario(GenArgs),
    /// Solve one scenario with one strategy.
    Solve(SolveArgs),
    /// Sweep the bandwidth budget over seeds and strategies; writes CSV.
    Sweep(SweepArgs),
}

/// Budget overrides shared by every command.
#[derive(Args, Debug, Clone, Default, Serialize)]
struct Budgets {
    /// Latency budget T^max in seconds.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tmax: Option<f64>,
    /// Energy budget E^max in joules.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    emax: Option<f64>,
    /// Per-user distortion cap D^max.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dmax: Option<f64>,
}

impl Budgets {
    fn apply(&self, cfg: &mut SystemConfig) {
        if let Some(t) = self.tmax {
            cfg.t_max = t;
        }
        if let Some(e) = self.emax {
            cfg.e_max = e;
        }
        if let Some(d) = self.dmax {
            cfg.d_max = Some(d);
        }
    }

    fn apply_params(&self, p: &mut ScenarioParams) {
        if let Some(t) = self.tmax {
            p.t_max_s = t;
        }
        if let Some(e) = self.emax {
            p.e_max_j = e;
        }
        if let Some(d) = self.dmax {
            p.d_max = Some(d);
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Side of the square area in metres.
    #[arg(long, default_value_t = 500.0)]
    area_m: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bandwidth budget B^max (Hz; `k`, `M`, `G` suffixes accepted).
    #[arg(long, value_parser = parse_hz)]
    bmax: Option<f64>,
    #[command(flatten)]
    budgets: Budgets,
    /// Use this distortion table instead of the synthetic model.
    #[arg(long)]
    distortion_file: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "proposed", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Candidate batch size for the proposed method.
    #[arg(long, default_value_t = DEFAULT_W_COUNT, value_parser = clap::value_parser!(usize))]
    w_count: usize,
    /// Seed for random pairings; defaults to the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_hz)]
    bmax: Option<f64>,
    #[command(flatten)]
    budgets: Budgets,
    /// Replace the scenario's distortion table.
    #[arg(long)]
    distortion_file: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Fixed scenario; when absent, one scenario is generated per seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 500.0)]
    area_m: f64,
    /// Comma-separated B^max values, strictly ascending.
    #[arg(long, value_delimiter = ',', value_parser = parse_hz,
          default_value = "5M,10M,15M,20M,25M,30M,35M,40M")]
    bmax: Vec<f64>,
    /// Comma-separated strategies, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all", value_parser = parse_choice)]
    strategy: Vec<Choice>,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    #[arg(long, default_value_t = DEFAULT_W_COUNT)]
    w_count: usize,
    /// Worker threads (0 = all cores). Does not affect the output.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    budgets: Budgets,
    #[arg(long)]
    distortion_file: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_hz(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let t = t.strip_suffix("Hz").or_else(|| t.strip_suffix("hz")).unwrap_or(t);
    let (num, scale) = match t.chars().last() {
        Some('k') | Some('K') => (&t[..t.len() - 1], 1e3),
        Some('M') => (&t[..t.len() - 1], 1e6),
        Some('G') => (&t[..t.len() - 1], 1e9),
        _ => (t, 1.0),
    };
    let v: f64 = num.trim().parse().map_err(|_| format!("not a frequency: {s:?}"))?;
    let hz = v * scale;
    if hz > 0.0 && hz.is_finite() {
        Ok(hz)
    } else {
        Err(format!("bandwidth must be positive, got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy)]
enum Choice {
    All,
    One(Strategy),
}

fn parse_choice(s: &str) -> Result<Choice, String> {
    if s == "all" {
        Ok(Choice::All)
    } else {
        parse_strategy(s).map(Choice::One)
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse::<Strategy>().map_err(|_| {
        let names: Vec<&str> = Strategy::ALL.iter().map(|st| st.name()).collect();
        format!("unknown strategy {s:?}; expected one of {}", names.join(", "))
    })
}

/// Reproducibility record embedded in every output.
#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distortion_file: Option<String>,
    overrides: serde_json::Value,
}

impl RunManifest {
    fn new(command: &str, seed: u64, scenario: Option<&Path>, table: Option<&Path>, overrides: serde_json::Value) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
            scenario_path: scenario.map(|p| p.display().to_string()),
            distortion_file: table.map(|p| p.display().to_string()),
            overrides,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    manifest: RunManifest,
    scenario: Scenario,
}

#[derive(Serialize)]
struct SolveFile<'a> {
    manifest: RunManifest,
    config: &'a SystemConfig,
    options: &'a SolveOptions,
    result: &'a SolveResult,
}

enum Failure {
    Input(anyhow::Error),
    Infeasible,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<pairband::Error> for Failure {
    fn from(e: pairband::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_table(path: &Path) -> anyhow::Result<DistortionTable> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    load_distortion_table(&text).with_context(|| format!("invalid distortion table {}", path.display()))
}

/// Accepts a scenario file written by `gen-scenario` or a bare scenario.
fn read_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    let inner = match value.get("scenario") {
        Some(s) => s.clone(),
        None => value,
    };
    let sc: Scenario = serde_json::from_value(inner).with_context(|| format!("{} is not a scenario file", path.display()))?;
    sc.validate().with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(sc)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serialises");
    s.push('\n');
    s
}

fn gen_scenario(a: &GenArgs) -> Result<(), Failure> {
    if a.n < 2 || a.n % 2 != 0 {
        return Err(anyhow!("--n must be even and at least 2, got {}", a.n).into());
    }
    let mut params = ScenarioParams { n_users: a.n, area_m: a.area_m, ..Default::default() };
    if let Some(b) = a.bmax {
        params.b_max_hz = b;
    }
    a.budgets.apply_params(&mut params);
    let table = a.distortion_file.as_deref().map(read_table).transpose()?;
    let sc = scenario::generate(&params, a.seed, table)?;
    let overrides = serde_json::json!({ "n": a.n, "area_m": a.area_m, "bmax": a.bmax, "budgets": a.budgets });
    let file =
        ScenarioFile { manifest: RunManifest::new("gen-scenario", a.seed, None, a.distortion_file.as_deref(), overrides), scenario: sc };
    write_output(a.output.as_deref(), &to_json(&file))?;
    eprintln!("wrote scenario with {} users (seed {})", a.n, a.seed);
    Ok(())
}

fn summary(r: &SolveResult) -> String {
    let mut out = format!("strategy {}: ", r.strategy);
    match (&r.matching, &r.allocation) {
        (Some(m), Some(a)) => {
            out += &format!(
                "{} after {} candidate(s); distortion {:.6}, bandwidth {:.6e} Hz, transmit energy {:.6} J",
                if r.feasible { "feasible" } else { "INFEASIBLE" },
                r.candidates_tried,
                m.total_cost,
                a.bandwidth_used,
                a.objective
            );
            for g in &a.groups {
                out += &format!(
                    "\n  pair ({:>2}, {:>2})  b = {:>12.1} Hz  T = {:.4} s  E_tx = {:.4} J",
                    g.pair.0, g.pair.1, g.bandwidth, g.group_time, g.transmit_energy
                );
            }
        }
        _ => out += &format!("no feasible pairing after {} candidate(s)", r.candidates_tried),
    }
    if let Some(reason) = r.infeasibility_reason {
        out += &format!("\n  binding constraint: {reason:?}");
    }
    out
}

fn solve_cmd(a: &SolveArgs) -> Result<(), Failure> {
    if a.w_count == 0 {
        return Err(anyhow!("--w-count must be at least 1").into());
    }
    let mut sc = read_scenario(&a.scenario)?;
    if let Some(b) = a.bmax {
        sc.cfg.b_max = b;
    }
    a.budgets.apply(&mut sc.cfg);
    if let Some(p) = &a.distortion_file {
        sc.distortions = read_table(p)?;
    }
    sc.validate()?;
    let seed = a.seed.unwrap_or(sc.seed);
    let opts = SolveOptions { w_count: a.w_count, ..Default::default() };
    let result = solver::solve(&sc, a.strategy, &opts, &mut scenario::pairing_rng(seed))?;

    let overrides = serde_json::json!({ "strategy": a.strategy, "bmax": a.bmax, "budgets": a.budgets });
    let file = SolveFile {
        manifest: RunManifest::new("solve", seed, Some(&a.scenario), a.distortion_file.as_deref(), overrides),
        config: &sc.cfg,
        options: &opts,
        result: &result,
    };
    write_output(a.output.as_deref(), &to_json(&file))?;
    eprintln!("{}", summary(&result));
    if a.strategy == Strategy::Proposed && !result.feasible {
        return Err(Failure::Infeasible);
    }
    Ok(())
}

fn sweep_cmd(a: &SweepArgs) -> Result<(), Failure> {
    let mut strategies = Vec::new();
    for c in &a.strategy {
        let add: &[Strategy] = match c {
            Choice::All => &Strategy::ALL,
            Choice::One(st) => std::slice::from_ref(st),
        };
        for st in add {
            if !strategies.contains(st) {
                strategies.push(*st);
            }
        }
    }
    let table = a.distortion_file.as_deref().map(read_table).transpose()?;
    let source = match &a.scenario {
        Some(path) => {
            let mut sc = read_scenario(path)?;
            a.budgets.apply(&mut sc.cfg);
            if let Some(t) = table {
                sc.distortions = t;
            }
            sc.validate()?;
            ScenarioSource::Fixed(Box::new(sc))
        }
        None => {
            let mut params = ScenarioParams { n_users: a.n, area_m: a.area_m, ..Default::default() };
            a.budgets.apply_params(&mut params);
            params.validate()?;
            ScenarioSource::Generated { params, table }
        }
    };
    let spec = SweepSpec {
        source,
        b_max_values: a.bmax.clone(),
        strategies,
        seeds: (a.seed..a.seed + a.seeds).collect(),
        options: SolveOptions { w_count: a.w_count, ..Default::default() },
    };
    let result = sweep::sweep_bandwidth(&spec, a.jobs)?;

    let manifest = RunManifest::new(
        "sweep",
        a.seed,
        a.scenario.as_deref(),
        a.distortion_file.as_deref(),
        serde_json::json!({ "seeds": a.seeds, "budgets": a.budgets }),
    );
    // The resolved configuration, minus any fixed scenario's user list
    // (recorded by path instead).
    let config = match &spec.source {
        ScenarioSource::Fixed(sc) => serde_json::json!({ "fixed_config": sc.cfg }),
        ScenarioSource::Generated { params, .. } => serde_json::json!({ "generated": params }),
    };
    let mut out = String::new();
    out += &format!("# {TOOL} {VERSION}\n");
    out += &format!("# manifest {}\n", serde_json::to_string(&manifest).expect("manifest serialises"));
    out += &format!("# source {}\n", serde_json::to_string(&config).expect("config serialises"));
    out += &format!(
        "# b_max_values {}\n# strategies {}\n# seeds {}..{}\n# options {}\n",
        serde_json::to_string(&spec.b_max_values).expect("list serialises"),
        spec.strategies.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
        a.seed,
        a.seed + a.seeds,
        serde_json::to_string(&spec.options).expect("options serialise"),
    );
    out += &sweep::rows_to_csv(&result.rows);
    write_output(a.output.as_deref(), &out)?;
    eprintln!("{} rows from {} cells", result.rows.len(), result.cells.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Sweep(a) = &cli.command {
        if a.bmax.is_empty() {
            clap::Error::raw(clap::error::ErrorKind::ValueValidation, "--bmax needs at least one value\n").exit();
        }
        if a.bmax.windows(2).any(|w| w[0] >= w[1]) {
            clap::Error::raw(clap::error::ErrorKind::ValueValidation, "--bmax values must be strictly ascending\n").exit();
        }
        if a.seeds == 0 {
            clap::Error::raw(clap::error::ErrorKind::ValueValidation, "--seeds must be at least 1\n").exit();
        }
    }
    let outcome = match &cli.command {
        Command::GenScenario(a) => gen_scenario(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Infeasible) => {
            eprintln!("no feasible pairing and bandwidth allocation exists within the budgets");
            ExitCode::from(EXIT_INFEASIBLE)
        }
    }
}
