use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dust_cli::config::ExperimentConfig;
use dust_cli::sweep::parse_sweep_spec;
use dust_cli::{run_experiment, sweep, CliError};

/// Run DUST experiments on the PEV scenario or a stored instance.
///
/// Settings are layered: defaults, then `--config`, then `--set`, then the
/// named flags. Exit codes: 0 ok, 2 config error, 3 assumption violation,
/// 4 numeric failure.
#[derive(Debug, Parser)]
#[command(name = "dust", version)]
struct Args {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides (any config key).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// `pev` or `file` (with `--set instance_file=...`).
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    t_horizon: Option<usize>,
    #[arg(long)]
    b_window: Option<usize>,
    /// static_ring, static_complete, cyclic_partition or random_bconnected.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    seed_instance: Option<u64>,
    #[arg(long)]
    seed_graph: Option<u64>,
    #[arg(long)]
    seed_init: Option<u64>,
    #[arg(long)]
    alpha_pow: Option<f64>,
    #[arg(long)]
    eta_pow: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel runs in a sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Check the network conditions before running.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    validate: Option<bool>,
    /// Solve every round exactly so regret and V_t can be reported.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    compute_optima: Option<bool>,
    /// Dump the full state every k rounds (0 = never).
    #[arg(long)]
    dump_every: Option<usize>,
    /// Sweep one axis: `B=2,10`, `N=10,20`, `T=500,1000`, `seed=1,2,3`.
    #[arg(long, value_name = "AXIS=V1,V2")]
    sweep: Option<String>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        cfg.merge_text(&text)?;
    }
    for kv in &args.set {
        cfg.apply_override(kv)?;
    }
    let named: [(&str, Option<String>); 16] = [
        ("scenario", args.scenario.clone()),
        ("n", args.n.map(|v| v.to_string())),
        ("d", args.d.map(|v| v.to_string())),
        ("p", args.p.map(|v| v.to_string())),
        ("t_horizon", args.t_horizon.map(|v| v.to_string())),
        ("b_window", args.b_window.map(|v| v.to_string())),
        ("graph", args.graph.clone()),
        ("seed_instance", args.seed_instance.map(|v| v.to_string())),
        ("seed_graph", args.seed_graph.map(|v| v.to_string())),
        ("seed_init", args.seed_init.map(|v| v.to_string())),
        ("alpha_pow", args.alpha_pow.map(|v| format!("{v:?}"))),
        ("eta_pow", args.eta_pow.map(|v| format!("{v:?}"))),
        ("out", args.out.as_ref().map(|v| v.display().to_string())),
        ("validate", args.validate.map(|v| v.to_string())),
        ("compute_optima", args.compute_optima.map(|v| v.to_string())),
        ("dump_every", args.dump_every.map(|v| v.to_string())),
    ];
    for (key, value) in named {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    Ok(cfg)
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let cfg = build_config(args)?;
    if args.print_config {
        print!("{}", cfg.serialize());
        return Ok(0);
    }
    match &args.sweep {
        None => {
            let out = run_experiment(&cfg)?;
            let last = out.last();
            println!(
                "{}: t={} avg_violation={} avg_regret={} ({:.2}s)",
                out.dir.display(),
                last.t,
                last.avg_violation,
                last.avg_regret.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
                out.wall_time_s
            );
            Ok(0)
        }
        Some(spec) => {
            let (axis, values) = parse_sweep_spec(spec)?;
            let report = sweep(&cfg, axis, &values, args.jobs)?;
            for e in &report.entries {
                match &e.result {
                    Ok(_) => println!("{}={}: ok", axis.name(), e.value),
                    Err(err) => eprintln!("{}={}: {err}", axis.name(), e.value),
                }
            }
            println!("summary: {}", report.summary_path.display());
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dust: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
