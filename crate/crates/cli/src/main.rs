//! `catchment`: ingest topologies, run scenarios, plan measurements and
//! validate the inference engine.

mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use catchment::planner::ExactGuard;
use catchment::scenario::{
    prepending_sweep, run_scenario, InferenceMode, PlannerConfig, Scenario, ScenarioReport,
};
use catchment::topology::{parse_caida_asrel, parse_topology, write_topology, IngressId, NodeId};

const VALIDATION_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "catchment", version, about = "Catchment inference for inter-domain routing")]
struct Cli {
    /// Seed for every random choice; overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Directory searched for relative scenario paths.
    #[arg(long, global = true, env = "CATCHMENT_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct InferenceArgs {
    /// Inference mode; overrides the scenario.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Prefer shorter paths among equally preferred routes.
    #[arg(long)]
    sp: bool,
    /// Skip observations that contradict the model.
    #[arg(long)]
    skip_conflicts: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Certain,
    Probabilistic,
    CertainOracles,
    ProbabilisticOracles,
}

impl From<Mode> for InferenceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Certain => InferenceMode::Certain,
            Mode::Probabilistic => InferenceMode::Probabilistic,
            Mode::CertainOracles => InferenceMode::CertainOracles,
            Mode::ProbabilisticOracles => InferenceMode::ProbabilisticOracles,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a CAIDA relationship file or canonical topology and write the
    /// canonical form to `<out>/topology.txt`.
    Ingest {
        path: PathBuf,
        /// Write to stdout instead.
        #[arg(long)]
        stdout: bool,
    },
    /// Run a scenario and write `report.json` and `report.csv`.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        inference: InferenceArgs,
        /// Prepending sweep `INGRESS:KMAX`; writes one report per k.
        #[arg(long, value_name = "INGRESS:KMAX")]
        sweep: Option<String>,
    },
    /// Select nodes to measure and write `plan.csv` and `plan.json`.
    Plan {
        scenario: PathBuf,
        #[command(flatten)]
        inference: InferenceArgs,
        /// Measurement budget; overrides the scenario.
        #[arg(long)]
        budget: Option<f64>,
        /// Candidate nodes, one id per line.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Random plans in the baseline column.
        #[arg(long, default_value_t = 100)]
        random: usize,
        /// Also compute the exact optimum over sets of at most this size.
        #[arg(long, value_name = "MAX_SET")]
        exact_guard: Option<usize>,
    },
    /// Run the self-check suites.
    Validate {
        #[arg(value_enum, default_value = "quick")]
        level: Level,
        /// Swap in a deliberately wrong certain inference; the suites must fail.
        #[arg(long, hide = true)]
        inject_bug: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Ingest { path, stdout } => ingest(&cli, path, *stdout)?,
        Command::Run {
            scenario,
            inference,
            sweep,
        } => run(&cli, scenario, inference, sweep.as_deref())?,
        Command::Plan {
            scenario,
            inference,
            budget,
            candidates,
            random,
            exact_guard,
        } => plan(&cli, scenario, inference, *budget, candidates.as_deref(), *random, *exact_guard)?,
        Command::Validate { level, inject_bug } => {
            let full = matches!(level, Level::Full);
            let results = validate::run_all(full, *inject_bug, cli.seed.unwrap_or(0));
            let mut ok = true;
            for r in &results {
                println!("{r}");
                ok &= r.passed();
            }
            println!("{}", if ok { "all suites passed" } else { "validation FAILED" });
            if !ok {
                return Ok(ExitCode::from(VALIDATION_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn ingest(cli: &Cli, path: &Path, stdout: bool) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let topo = if text.trim_start().starts_with("# catchment-topology") {
        parse_topology(&text)
    } else {
        parse_caida_asrel(&text)
    }
    .with_context(|| format!("parsing {}", path.display()))?;
    let out = write_topology(&topo);
    if stdout {
        print!("{out}");
    } else {
        write(&cli.out, "topology.txt", &out)?;
    }
    Ok(())
}

fn load_scenario(cli: &Cli, path: &Path, args: &InferenceArgs) -> Result<Scenario> {
    let mut s = Scenario::from_file(path, cli.data_dir.as_deref())
        .with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(m) = args.mode {
        s.mode = m.into();
    }
    s.shortest_path |= args.sp;
    s.skip_conflicting_oracles |= args.skip_conflicts;
    Ok(s)
}

fn write_report(dir: &Path, stem: &str, r: &ScenarioReport) -> Result<()> {
    write(dir, &format!("{stem}.json"), &(r.to_json() + "\n"))?;
    write(dir, &format!("{stem}.csv"), &r.to_csv())
}

fn run(cli: &Cli, path: &Path, args: &InferenceArgs, sweep: Option<&str>) -> Result<()> {
    let s = load_scenario(cli, path, args)?;
    match sweep {
        None => {
            let r = run_scenario(&s)?;
            println!(
                "{}: {} of {} nodes certain ({})",
                s.name,
                r.summary.certain_nodes,
                r.summary.real_nodes,
                r.summary.algorithms.join(" > ")
            );
            write_report(&cli.out, "report", &r)
        }
        Some(spec) => {
            let (m, k) = spec
                .rsplit_once(':')
                .context("sweep expects INGRESS:KMAX")?;
            let k: i64 = k.parse().context("sweep KMAX must be an integer")?;
            if !s.shortest_path_enabled() {
                log::warn!("prepending has no effect without the shortest-path preference");
            }
            let m = IngressId::new(m);
            let reports = prepending_sweep(&s, &m, k)?;
            println!("k,certain_{m},certain_nodes");
            for (k, r) in reports.iter().enumerate() {
                println!("{k},{},{}", r.summary.certain_catchment[&m], r.summary.certain_nodes);
                write_report(&cli.out, &format!("report-k{k}"), r)?;
            }
            Ok(())
        }
    }
}

fn read_candidates(path: &Path) -> Result<Vec<NodeId>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (i == 0 && line == "node") {
            continue;
        }
        let id: NodeId = line
            .parse()
            .with_context(|| format!("{}:{}: bad node id `{line}`", path.display(), i + 1))?;
        out.push(id);
    }
    Ok(out)
}

fn plan(
    cli: &Cli,
    path: &Path,
    args: &InferenceArgs,
    budget: Option<f64>,
    candidates: Option<&Path>,
    random: usize,
    exact_guard: Option<usize>,
) -> Result<()> {
    let mut s = load_scenario(cli, path, args)?;
    if s.mode == InferenceMode::Certain {
        s.mode = InferenceMode::Probabilistic;
    }
    let mut cfg = s.planner.clone().unwrap_or(PlannerConfig {
        budget: 0.0,
        candidates: None,
        random_plans: random,
        exhaustive: false,
    });
    match (budget, &s.planner) {
        (Some(b), _) => cfg.budget = b,
        (None, Some(_)) => {}
        (None, None) => bail!("no budget: pass --budget or set [planner] in the scenario"),
    }
    if let Some(c) = candidates {
        cfg.candidates = Some(read_candidates(c)?);
    }
    cfg.random_plans = random;
    cfg.exhaustive = false;
    s.planner = Some(cfg.clone());
    s.simulation = None;
    let r = run_scenario(&s)?;
    let summary = r.summary.plan.as_ref().expect("planner ran");
    let greedy = &summary.greedy;

    // random baseline at each plan size
    let g = &r.graph;
    let pool: Vec<NodeId> = cfg
        .candidates
        .clone()
        .unwrap_or_else(|| g.counted().map(|i| g.id(i)).collect());
    let baseline = validate::random_baseline(&r, &pool, greedy.selected.len(), random, s.seed)?;

    let mut csv = String::from("rank,node,expected_nc_after,random_baseline_nc\n");
    for (k, (n, v)) in greedy.selected.iter().zip(&greedy.values).enumerate() {
        let b = baseline.get(k).map_or(String::new(), |b| b.to_string());
        csv.push_str(&format!("{},{n},{v},{b}\n", k + 1));
    }
    write(&cli.out, "plan.csv", &csv)?;

    let mut report = serde_json::json!({ "greedy": greedy, "random_baseline": baseline });
    if let Some(max_measured) = exact_guard {
        let guard = ExactGuard {
            max_measured,
            ..ExactGuard::default()
        };
        let best = validate::exhaustive(&r, &pool, cfg.budget, &guard)
            .context("exact optimum")?;
        let gap = best.value() - greedy.value();
        println!("exhaustive optimum {} (greedy gap {gap})", best.value());
        report["exhaustive"] = serde_json::to_value(&best)?;
        report["gap"] = gap.into();
    }
    write(&cli.out, "plan.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!(
        "selected {:?}, expected certain nodes {} (from {})",
        greedy.selected.iter().map(|n| n.0).collect::<Vec<_>>(),
        greedy.value(),
        greedy.initial
    );
    Ok(())
}
