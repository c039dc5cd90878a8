use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use fogplace::config::RunConfig;
use fogplace::engine::{self, run_experiment_traced};
use fogplace::plangen::write_plan_set;
use fogplace::workload::{load_profiles, write_profile_csv, write_request_csv};
use fogplace::{output, Error};

#[derive(Parser, Debug)]
#[command(name = "fogplace", version, about = "Decentralized fog service placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run the strategy comparison grid declared in the config.
    Grid(Common),
    /// Write the network edge list and node table.
    GenTopology(Common),
    /// Write the workload profiles and the requests of each selected profile.
    GenWorkload(Common),
    /// Check a config without running it.
    Validate(Common),
    /// Run EPOS and dump every agent's candidate plans and the selection.
    ExportPlans(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML or JSON config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "FOGPLACE_OUT")]
    out: Option<PathBuf>,
    /// Base seed, overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config key, e.g. `--set epos.lambda=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

/// A failure tagged with its exit status.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn config_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        err: err.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config() { 1 } else { 2 };
        Failure {
            code,
            err: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 2, err }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Run(c) => run(&c),
        Command::Grid(c) => grid(&c),
        Command::GenTopology(c) => gen_topology(&c),
        Command::GenWorkload(c) => gen_workload(&c),
        Command::Validate(c) => validate(&c),
        Command::ExportPlans(c) => export_plans(&c),
    }
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut overrides = c.set.clone();
    if let Some(seed) = c.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match &c.config {
        Some(path) => {
            if !path.exists() {
                return Err(config_err(anyhow!("config file {} not found", path.display())));
            }
            RunConfig::load(path, &overrides)?
        }
        None => RunConfig::with_overrides(&overrides)?,
    };
    Ok(cfg)
}

fn out_dir(c: &Common) -> Result<PathBuf, Failure> {
    let dir = c
        .out
        .clone()
        .ok_or_else(|| config_err(anyhow!("no output directory: pass --out or set FOGPLACE_OUT")))?;
    let non_empty = dir.is_dir()
        && fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_some();
    if non_empty {
        if !c.force {
            return Err(config_err(anyhow!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
        fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
    } else if dir.exists() && !dir.is_dir() {
        return Err(config_err(anyhow!("{} is not a directory", dir.display())));
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    Ok(pool.install(f))
}

fn write_config(dir: &Path, cfg: &RunConfig) -> CmdResult {
    let path = dir.join("config.toml");
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    cfg.validate()?;
    let dir = out_dir(c)?;
    let run = with_pool(c.parallel, || run_experiment_traced(&cfg, false))??;
    write_config(&dir, &cfg)?;
    output::write_run(&dir, &run)?;
    let r = &run.report;
    println!(
        "{} rounds, strategy {}, overall variance {}, violation rate {}",
        r.rounds.len(),
        r.strategy,
        r.aggregate_value("variance_overall").unwrap_or(f64::NAN),
        r.aggregate_value("deadline_violation_rate").unwrap_or(f64::NAN),
    );
    match &r.error {
        Some(e) => Err(anyhow!("run aborted: {e}").into()),
        None => Ok(()),
    }
}

fn grid(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    cfg.validate_grid()?;
    let dir = out_dir(c)?;
    let cells = cfg.expand_grid();
    let table = with_pool(c.parallel, || {
        engine::compare_strategies(&cells, &cfg.grid.strategies)
    })??;
    write_config(&dir, &cfg)?;
    output::write_grid(&dir, &table)?;
    let failed = table
        .cells
        .iter()
        .flat_map(|cell| &cell.results)
        .filter(|r| r.outcome.is_err())
        .count();
    println!(
        "{} cells x {} strategies, {failed} failed",
        table.cells.len(),
        cfg.grid.strategies.len()
    );
    if failed > 0 {
        return Err(anyhow!("{failed} grid runs failed").into());
    }
    Ok(())
}

fn gen_topology(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    cfg.validate()?;
    let dir = out_dir(c)?;
    let g = engine::build_network(&cfg)?;
    g.write_edge_list(&dir.join("edges.txt"))?;
    g.write_node_csv(&dir.join("nodes.csv"))?;
    println!(
        "{} topology: {} nodes, {} edges, {} bridges added",
        g.kind(),
        g.len(),
        g.edge_count(),
        g.bridges_added()
    );
    Ok(())
}

fn gen_workload(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    cfg.validate()?;
    let dir = out_dir(c)?;
    let all = load_profiles(&cfg.profile_source()?, cfg.workload.duration_ms)?;
    write_profile_csv(&all, &dir.join("profiles.csv"))?;
    let g = engine::build_network(&cfg)?;
    let mut total = 0;
    for p in engine::selected_profiles(&cfg)? {
        let reqs = engine::profile_requests(&cfg, &g, &p)?;
        total += reqs.len();
        write_request_csv(&reqs, &dir.join(format!("requests_p{}.csv", p.index)))?;
    }
    println!("{} profiles, {total} requests written", all.len());
    Ok(())
}

fn validate(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    cfg.validate()?;
    let grid_ok = cfg.validate_grid().is_ok();
    println!(
        "config ok: strategy {}, {} {} nodes, hop limit {}, lambda {}, {} profiles, seed {}",
        cfg.strategy,
        cfg.topology.kind,
        cfg.topology.nodes,
        cfg.epos.hop_limit,
        cfg.epos.lambda,
        cfg.workload.profiles.len(),
        cfg.seed
    );
    if grid_ok {
        println!("grid: {} cells", cfg.expand_grid().len());
    } else {
        println!("grid: not runnable");
    }
    Ok(())
}

fn export_plans(c: &Common) -> CmdResult {
    let mut cfg = load_config(c)?;
    cfg.strategy = fogplace::Strategy::Epos;
    cfg.validate()?;
    let dir = out_dir(c)?;
    let run = with_pool(c.parallel, || run_experiment_traced(&cfg, true))??;
    for t in &run.traces {
        let rd = dir.join(format!("round{}", t.round));
        fs::create_dir_all(&rd).with_context(|| format!("creating {}", rd.display()))?;
        for (agent, plans) in t.agents.iter().zip(&t.plans) {
            write_plan_set(plans, &rd.join(format!("agent{agent}.plans")))?;
        }
        let sel: String = t
            .agents
            .iter()
            .zip(&t.outcome.selections)
            .map(|(a, s)| format!("{a},{s}\n"))
            .collect();
        let path = rd.join("selected.csv");
        fs::write(&path, format!("agent,plan\n{sel}"))
            .with_context(|| format!("writing {}", path.display()))?;
        output::write_iteration_csv(&t.outcome.history, &rd.join("iterations.csv"))?;
    }
    write_config(&dir, &cfg)?;
    println!("{} rounds of plans exported", run.traces.len());
    match &run.report.error {
        Some(e) => Err(anyhow!("run aborted: {e}").into()),
        None => Ok(()),
    }
}
