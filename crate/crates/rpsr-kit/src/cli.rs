//! Command-line front end: `parse`, `analyze`, `solve`, and `compare`
//! subcommands over `.pomdp` files, with JSON/CSV/text output.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 value iteration
//! stopped at the iteration cap, 1 anything else.

use crate::evaluation::{
    cross_evaluate, EvalOptions, EvaluationGrid, ModelSet, PolicyTag, ScorerTag,
};
use crate::parser::parse_pomdp;
use crate::pomdp::Pomdp;
use crate::psr::{
    build_psr, discover_core_tests, CoreSearchOptions, PsrModel, DEFAULT_ACCURACY_EPSILON,
};
use crate::rpsr::{build_rpsr, discover_core_intents_bfs, discover_core_intents_dfs, RpsrModel};
use crate::value_iteration::{
    SolveOptions, ViModel, DEFAULT_BELLMAN_EPSILON, DEFAULT_LP_TOLERANCE, DEFAULT_MAX_ITERATIONS,
};
use crate::{numerics, SCHEMA_VERSION};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

/// Seed fallback read when `--seed` is not given.
pub const SEED_ENV_VAR: &str = "RPSR_KIT_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "rpsr-kit",
    version,
    about = "Predictive and reward-predictive state representations for finite POMDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SearchVariant {
    Bfs,
    Dfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Pomdp,
    Psr,
    Rpsr,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input model file (.pomdp text).
    file: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Linear-independence and singular-value tolerance.
    #[arg(long, default_value_t = numerics::DEFAULT_TOLERANCE)]
    tau: f64,
    /// Reward-accuracy threshold on the reconstruction error.
    #[arg(long, default_value_t = DEFAULT_ACCURACY_EPSILON)]
    eps_acc: f64,
    /// Bellman stopping tolerance for value iteration.
    #[arg(long, default_value_t = DEFAULT_BELLMAN_EPSILON)]
    eps_bellman: f64,
    /// Discount override; defaults to the value in the file.
    #[arg(long)]
    gamma: Option<f64>,
    /// Core-intent search variant.
    #[arg(long, value_enum, default_value_t = SearchVariant::Bfs)]
    search: SearchVariant,
    /// Cap on value iteration backups.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Cap simulation worker threads; output is identical for any value.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a model file and print its dimensions.
    Parse {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build both representations and report the reward-accuracy analysis.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Present the core test set in canonical order (sorted by length,
        /// then observation and action indices; the empty test excluded).
        #[arg(long)]
        canonical: bool,
    },
    /// Solve one model with value iteration and emit the value function.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Which model to solve.
        #[arg(long, value_enum, default_value_t = ModelKind::Pomdp)]
        model: ModelKind,
        /// Write the value-function JSON here in addition to the summary.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the full policy-by-scorer return grid.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Episodes per policy.
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Steps per episode.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Master seed; falls back to RPSR_KIT_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Score with discount 1 instead of the domain's discount.
        #[arg(long)]
        undiscounted: bool,
    },
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Parse { common } => with_model(&common, cmd_parse),
        Command::Analyze { common, canonical } => {
            with_model(&common, |m, c| cmd_analyze(m, c, canonical))
        }
        Command::Solve {
            common,
            model,
            output,
        } => with_model(&common, |m, c| cmd_solve(m, c, model, output.as_deref())),
        Command::Compare {
            common,
            episodes,
            steps,
            seed,
            undiscounted,
        } => {
            let seed = seed.unwrap_or_else(env_seed);
            with_model(&common, |m, c| {
                cmd_compare(m, c, episodes, steps, seed, undiscounted)
            })
        }
    }
}

fn env_seed() -> u64 {
    std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn with_model(common: &CommonArgs, body: impl FnOnce(Pomdp, &CommonArgs) -> u8) -> u8 {
    let text = match std::fs::read_to_string(&common.file) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.file.display());
            return EXIT_OTHER;
        }
    };
    let mut model = match parse_pomdp(&text) {
        Ok(model) => model,
        Err(e) => {
            eprintln!("error: {}: {e}", common.file.display());
            return EXIT_PARSE;
        }
    };
    if let Some(gamma) = common.gamma {
        if !(0.0..=1.0).contains(&gamma) {
            eprintln!("error: --gamma {gamma} is outside [0, 1]");
            return EXIT_PARSE;
        }
        model = override_discount(&model, gamma);
    }
    if let Some(threads) = common.threads {
        // ignore failure: the pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    body(model, common)
}

fn override_discount(m: &Pomdp, gamma: f64) -> Pomdp {
    let transition = (0..m.num_actions())
        .map(|a| m.transition(a).clone())
        .collect();
    let observation = (0..m.num_actions())
        .map(|a| m.observation(a).clone())
        .collect();
    Pomdp::new(
        transition,
        observation,
        m.reward().clone(),
        gamma,
        m.start().clone(),
    )
    .expect("discount override keeps the model valid")
    .with_names(
        m.state_names().to_vec(),
        m.action_names().to_vec(),
        m.observation_names().to_vec(),
    )
}

fn domain_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_parse(m: Pomdp, common: &CommonArgs) -> u8 {
    match common.format {
        Format::Json => {
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "domain": domain_name(&common.file),
                "states": m.num_states(),
                "actions": m.num_actions(),
                "observations": m.num_observations(),
                "discount": m.discount(),
                "start": m.start().iter().copied().collect::<Vec<f64>>(),
                "state_names": m.state_names(),
                "action_names": m.action_names(),
                "observation_names": m.observation_names(),
            });
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
        _ => {
            println!(
                "states={} actions={} observations={} discount={}",
                m.num_states(),
                m.num_actions(),
                m.num_observations(),
                m.discount()
            );
            println!(
                "start: {}",
                m.start()
                    .iter()
                    .map(|v| format!("{v:.6}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
        }
    }
    EXIT_OK
}

fn build_models(m: &Pomdp, common: &CommonArgs, canonical: bool) -> (PsrModel, RpsrModel) {
    let mut options = if canonical {
        CoreSearchOptions::canonical()
    } else {
        CoreSearchOptions::default()
    };
    options.tolerance = common.tau;
    let core_tests = discover_core_tests(m, &options);
    let psr = build_psr(m, core_tests, common.tau, common.eps_acc)
        .expect("freshly discovered core tests are independent");
    let core_intents = match common.search {
        SearchVariant::Bfs => discover_core_intents_bfs(m, common.tau),
        SearchVariant::Dfs => discover_core_intents_dfs(m, common.tau),
    };
    let rpsr = build_rpsr(m, core_intents, common.tau)
        .expect("freshly discovered core intents are independent");
    (psr, rpsr)
}

#[derive(Serialize)]
struct AnalyzeReport {
    schema_version: u32,
    domain: String,
    psr: crate::psr::PsrReport,
    rpsr: crate::rpsr::RpsrReport,
}

fn cmd_analyze(m: Pomdp, common: &CommonArgs, canonical: bool) -> u8 {
    let (psr, rpsr) = build_models(&m, common, canonical);
    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        domain: domain_name(&common.file),
        psr: psr.report(&m),
        rpsr: rpsr.report(&m),
    };
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        _ => {
            println!("domain: {}", report.domain);
            println!("psr rank: {}", report.psr.rank);
            for (test, q) in psr.core_tests().iter().enumerate() {
                println!("  core test {test}: {}", q.render(&m));
            }
            println!("accurate: {}", report.psr.accurate);
            println!("d_inf: {}", report.psr.d_inf);
            println!("rel_d_inf: {}", report.psr.rel_d_inf);
            println!("rpsr rank: {}", report.rpsr.rank);
            println!(
                "rpsr reconstruction error: {}",
                report.rpsr.reconstruction_error
            );
        }
    }
    EXIT_OK
}

fn cmd_solve(m: Pomdp, common: &CommonArgs, kind: ModelKind, output: Option<&Path>) -> u8 {
    let vi = match kind {
        ModelKind::Pomdp => ViModel::from_pomdp(&m),
        ModelKind::Psr => {
            let core =
                discover_core_tests(&m, &CoreSearchOptions::default().with_tolerance(common.tau));
            let psr = build_psr(&m, core, common.tau, common.eps_acc)
                .expect("freshly discovered core tests are independent");
            ViModel::from_psr(&psr, m.discount())
        }
        ModelKind::Rpsr => {
            let core = match common.search {
                SearchVariant::Bfs => discover_core_intents_bfs(&m, common.tau),
                SearchVariant::Dfs => discover_core_intents_dfs(&m, common.tau),
            };
            let rpsr = build_rpsr(&m, core, common.tau)
                .expect("freshly discovered core intents are independent");
            ViModel::from_rpsr(&rpsr, m.discount())
        }
    };
    let vf = vi.solve(&SolveOptions {
        bellman_epsilon: common.eps_bellman,
        lp_tolerance: DEFAULT_LP_TOLERANCE,
        max_iterations: common.max_iter,
    });
    let mut report = serde_json::to_value(vf.report()).unwrap();
    report["schema_version"] = json!(SCHEMA_VERSION);
    if let Some(path) = output {
        if let Err(e) = std::fs::write(path, serde_json::to_string_pretty(&report).unwrap()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_OTHER;
        }
    }
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        _ => {
            println!(
                "space={} horizon={} residual={:e} vectors={} converged={}",
                vf.space,
                vf.horizon,
                vf.residual,
                vf.vectors.len(),
                vf.converged
            );
        }
    }
    if vf.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn cmd_compare(
    m: Pomdp,
    common: &CommonArgs,
    episodes: usize,
    steps: usize,
    seed: u64,
    undiscounted: bool,
) -> u8 {
    let (psr, rpsr) = build_models(&m, common, false);
    let solve_options = SolveOptions {
        bellman_epsilon: common.eps_bellman,
        lp_tolerance: DEFAULT_LP_TOLERANCE,
        max_iterations: common.max_iter,
    };
    let pomdp_vf = ViModel::from_pomdp(&m).solve(&solve_options);
    let psr_vf = ViModel::from_psr(&psr, m.discount()).solve(&solve_options);
    let rpsr_vf = ViModel::from_rpsr(&rpsr, m.discount()).solve(&solve_options);
    let all_converged = pomdp_vf.converged && psr_vf.converged && rpsr_vf.converged;

    let models = ModelSet {
        pomdp: &m,
        psr: &psr,
        rpsr: &rpsr,
        pomdp_vf: &pomdp_vf,
        psr_vf: &psr_vf,
        rpsr_vf: &rpsr_vf,
    };
    let discount = if undiscounted { 1.0 } else { m.discount() };
    let grid = cross_evaluate(&models, &EvalOptions::new(episodes, steps, seed, discount));

    match common.format {
        Format::Json => print_grid_json(&common.file, &grid),
        Format::Csv => print_grid_csv(&grid),
        Format::Text => print_grid_text(&grid),
    }
    if all_converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn print_grid_json(file: &Path, grid: &EvaluationGrid) {
    let best: Vec<_> = grid
        .best_policies()
        .into_iter()
        .map(|(scorer, policy)| json!({"scorer": scorer.label(), "policy": policy.label()}))
        .collect();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "domain": domain_name(file),
        "episodes": grid.episodes,
        "steps": grid.steps,
        "seed": grid.seed,
        "discount": grid.discount,
        "grid": grid.cells,
        "best": best,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}

fn print_grid_csv(grid: &EvaluationGrid) {
    let header: Vec<&str> = PolicyTag::ALL.iter().map(|p| p.label()).collect();
    println!("scorer,{}", header.join(","));
    for (row, scorer) in grid.cells.iter().zip(ScorerTag::ALL) {
        let cells: Vec<String> = row
            .iter()
            .map(|c| format!("\"{},{}\"", c.mean, c.std))
            .collect();
        println!("{},{}", scorer.label(), cells.join(","));
    }
}

fn print_grid_text(grid: &EvaluationGrid) {
    let best = grid.best_policies();
    println!(
        "{:<8} {:>14} {:>14} {:>14} {:>14}",
        "scorer",
        PolicyTag::ALL[0].label(),
        PolicyTag::ALL[1].label(),
        PolicyTag::ALL[2].label(),
        PolicyTag::ALL[3].label()
    );
    for (row, scorer) in grid.cells.iter().zip(ScorerTag::ALL) {
        let best_policy = best.iter().find(|(s, _)| *s == scorer).map(|(_, p)| *p);
        let cells: Vec<String> = row
            .iter()
            .map(|c| {
                let mark = if Some(c.policy) == best_policy {
                    "*"
                } else {
                    " "
                };
                format!("{: >8.1} ± {:<4.1}{mark}", c.mean, c.std)
            })
            .collect();
        println!("{:<8} {}", scorer.label(), cells.join(" "));
    }
    println!("(* marks each scorer's best policy)");
}
