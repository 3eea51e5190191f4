//! `ptensor`: count, enumerate and check equivariant maps between P-tensors,
//! and run small message-passing models on graphs.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 failed verification, 4 size cap exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptensors::combinatorics::{count_overlap_with, count_same_domain_with};
use ptensors::gnn::{parse_features, parse_graph, Model, ModelConfig};
use ptensors::maps::enumerate_specs_with;
use ptensors::verify::{relabeling_deviation, run_suite, Suite};
use ptensors::{describe_spec, Error, Limits, MapMode};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "ptensor",
    version,
    about = "Equivariant maps between P-tensors"
)]
struct Cli {
    #[command(flatten)]
    caps: Caps,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the built-in size caps.
#[derive(Args)]
struct Caps {
    #[arg(long, global = true)]
    max_bell: Option<usize>,
    #[arg(long, global = true)]
    max_partition_elements: Option<usize>,
    #[arg(long, global = true)]
    max_spec_order: Option<usize>,
    #[arg(long, global = true)]
    max_group_elements: Option<u128>,
    #[arg(long, global = true)]
    max_nullspace_unknowns: Option<u128>,
    #[arg(long, global = true)]
    max_matrix_entries: Option<u128>,
    #[arg(long, global = true)]
    max_tensor_entries: Option<u128>,
}

impl Caps {
    fn limits(&self) -> Limits {
        let d = Limits::default();
        Limits {
            max_bell: self.max_bell.unwrap_or(d.max_bell),
            max_partition_elements: self
                .max_partition_elements
                .unwrap_or(d.max_partition_elements),
            max_spec_order: self.max_spec_order.unwrap_or(d.max_spec_order),
            max_group_elements: self.max_group_elements.unwrap_or(d.max_group_elements),
            max_nullspace_unknowns: self
                .max_nullspace_unknowns
                .unwrap_or(d.max_nullspace_unknowns),
            max_matrix_entries: self.max_matrix_entries.unwrap_or(d.max_matrix_entries),
            max_tensor_entries: self.max_tensor_entries.unwrap_or(d.max_tensor_entries),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Same,
    Overlap,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Same => "same",
            Mode::Overlap => "overlap",
        }
    }
}

impl From<Mode> for MapMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Same => MapMode::SameDomain,
            Mode::Overlap => MapMode::Overlap,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Counts,
    Equivariance,
    Rank,
    Burnside,
    Gnn,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Counts => Suite::Counts,
            SuiteArg::Equivariance => Suite::Equivariance,
            SuiteArg::Rank => Suite::Rank,
            SuiteArg::Burnside => Suite::Burnside,
            SuiteArg::Gnn => Suite::Gnn,
        }
    }
}

#[derive(Args)]
struct Orders {
    #[arg(long)]
    k_in: usize,
    #[arg(long)]
    k_out: usize,
    #[arg(long, value_enum)]
    mode: Mode,
}

#[derive(Subcommand)]
enum Command {
    /// Number of basis maps from order k_in to order k_out.
    Count {
        #[command(flatten)]
        orders: Orders,
    },
    /// Lists the basis maps, one per line.
    Enumerate {
        #[command(flatten)]
        orders: Orders,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Runs a self-check suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Embeds a graph with a configured model.
    Demo {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rerun under this many random vertex relabelings and report the drift.
        #[arg(long, value_name = "N")]
        check_invariance: Option<usize>,
    },
}

enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_owned(), e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let limits = cli.caps.limits();
    match cli.command {
        Command::Count { orders } => {
            let count = match orders.mode {
                Mode::Same => count_same_domain_with(orders.k_in, orders.k_out, &limits)?,
                Mode::Overlap => count_overlap_with(orders.k_in, orders.k_out, &limits)?,
            };
            println!("{count}");
            // Counts can exceed 64 bits; the digits are emitted as a JSON number literal.
            println!(
                "{{\"k_in\":{},\"k_out\":{},\"mode\":\"{}\",\"count\":{count}}}",
                orders.k_in,
                orders.k_out,
                orders.mode.name()
            );
        }
        Command::Enumerate { orders, format } => {
            for spec in
                enumerate_specs_with(orders.k_in, orders.k_out, orders.mode.into(), &limits)?
            {
                match format {
                    Format::Text => println!("{}", describe_spec(&spec)),
                    Format::Json => {
                        println!("{}", serde_json::to_string(&spec).expect("spec serializes"))
                    }
                }
            }
        }
        Command::Verify { suite, seed } => {
            let suite = Suite::from(suite);
            let reports = run_suite(suite, seed)?;
            for r in &reports {
                println!("{r}");
            }
            let passed = reports.iter().all(|r| r.passed());
            let summary = json!({
                "suite": suite.name(),
                "seed": seed,
                "passed": passed,
                "checks": reports.iter().map(|r| json!({
                    "name": r.name,
                    "cases": r.cases,
                    "failed": r.failed,
                })).collect::<Vec<_>>(),
            });
            println!("{summary}");
            if !passed {
                return Err(Failure::Verification);
            }
        }
        Command::Demo {
            graph,
            features,
            config,
            seed,
            check_invariance,
        } => {
            let g = parse_graph(&read(&graph)?)?;
            let feats = match features {
                Some(path) => parse_features(&read(&path)?, g.num_vertices())?,
                None => vec![vec![1.0]; g.num_vertices()],
            };
            let model_config = ModelConfig::from_json(&read(&config)?)?.reseeded(seed);
            let c0 = feats.first().map_or(1, Vec::len);
            let embedding = Model::<f64>::new(&model_config, c0)?.forward(&g, &feats)?;
            let mut out = json!({
                "vertices": g.num_vertices(),
                "edges": g.edges().len(),
                "seed": seed,
                "embedding": embedding,
            });
            let mut drift_ok = true;
            if let Some(n) = check_invariance {
                let worst = relabeling_deviation(&g, &feats, &model_config, n, seed)?;
                drift_ok = worst <= 1e-9;
                out["relabelings"] = json!(n);
                out["max_relative_deviation"] = json!(worst);
                out["invariant"] = json!(drift_ok);
            }
            println!("{out}");
            if !drift_ok {
                return Err(Failure::Verification);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(3),
        Err(Failure::Io(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Size { .. } => 4,
                Error::Parse { .. } | Error::Config { .. } | Error::IsolatedNeuron { .. } => 2,
                Error::Consistency(_) => 3,
                _ => 1,
            })
        }
    }
}
