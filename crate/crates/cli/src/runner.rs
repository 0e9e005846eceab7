use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dust_core::dust::{run, RoundObserver, RunOptions, StateRecorder};
use dust_core::format::{parse_instance, serialize_instance, serialize_state, StateDump};
use dust_core::graph::{parse_edge_csv, validate_assumption1, GraphSequence, Violation};
use dust_core::metrics::{empirical_r, max_tracker_norm, records, records_csv, theory_constants, RunRecord};
use dust_core::oracle::{optima_csv, solve_rounds, SolverOptions};
use dust_core::problem::{make_pev_instance, ProblemInstance};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Scenario};
use crate::CliError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const GRAPH_FILE: &str = "graph.csv";
pub const INSTANCE_FILE: &str = "instance.txt";
pub const OPTIMA_FILE: &str = "optima.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATES_DIR: &str = "states";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub config_hash: String,
    /// Paths relative to `dir`.
    pub files: Vec<String>,
    pub records: Vec<RunRecord>,
    pub wall_time_s: f64,
}

impl RunOutcome {
    pub fn last(&self) -> &RunRecord {
        self.records.last().expect("runs have at least one round")
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

pub fn load_instance(cfg: &ExperimentConfig) -> Result<ProblemInstance, CliError> {
    match cfg.scenario {
        Scenario::Pev => Ok(make_pev_instance(&cfg.pev_params())?),
        Scenario::File => {
            let path = cfg
                .instance_file
                .as_ref()
                .ok_or_else(|| CliError::Config("scenario = file needs instance_file".into()))?;
            parse_instance(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

pub fn load_graph(cfg: &ExperimentConfig, n: usize) -> Result<GraphSequence, CliError> {
    match &cfg.graph_file {
        Some(path) => {
            parse_edge_csv(&read(path)?, n, cfg.b_window).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
        None => Ok(GraphSequence::generate(cfg.graph, n, cfg.b_window, cfg.seed_graph)?),
    }
}

fn describe(v: &Violation) -> String {
    match v {
        Violation::WeightFloor { t, min_positive } => format!("round {t}: weight {min_positive} below the floor"),
        Violation::ColumnSum { t, error } => format!("round {t}: column sum off by {error:e}"),
        Violation::Disconnected { window } => format!("window {window}: union graph not strongly connected"),
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Runs one experiment and writes its files under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let inst = load_instance(cfg)?;
    let n = inst.n();
    if n < 2 {
        return Err(CliError::Config("the network needs at least 2 nodes".into()));
    }
    let seq = load_graph(cfg, n)?;
    let floor = 1.0 / n as f64;
    if cfg.validate {
        let report = validate_assumption1(&seq, cfg.t_horizon, floor)?;
        if let Some(first) = report.violations.first() {
            return Err(CliError::Assumption(format!(
                "{} violation(s); first: {}",
                report.violations.len(),
                describe(first)
            )));
        }
    }
    let sched = cfg.schedule()?;
    let opts = RunOptions {
        init: cfg.init_kind(),
        ..RunOptions::default()
    };
    let mut recorder = (cfg.dump_every > 0).then(|| StateRecorder::every(cfg.dump_every));
    let mut none = ();
    let observer: &mut dyn RoundObserver = match recorder.as_mut() {
        Some(r) => r,
        None => &mut none,
    };
    let traj = run(&inst, &seq, &sched, cfg.t_horizon, opts, observer)?;
    let optima = if cfg.compute_optima {
        Some(solve_rounds(&inst, cfg.t_horizon + 1, &SolverOptions::default())?)
    } else {
        None
    };
    let recs = records(&traj, optima.as_deref())?;

    let dir = cfg.out.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut files = Vec::new();
    let mut write = |name: &str, body: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        files.push(name.to_string());
        Ok(())
    };
    write(CONFIG_FILE, &cfg.serialize())?;
    write(METRICS_FILE, &records_csv(&recs))?;
    write(GRAPH_FILE, &seq.edge_csv(cfg.t_horizon))?;
    write(INSTANCE_FILE, &serialize_instance(&inst))?;
    let mut solver = Value::Null;
    if let Some(opt) = &optima {
        write(OPTIMA_FILE, &optima_csv(opt))?;
        solver = json!({
            "rounds": opt.len(),
            "unconverged": opt.iter().filter(|o| !o.converged).count(),
            "max_kkt_residual": opt.iter().map(|o| o.kkt_residual).fold(0.0, f64::max),
        });
    }
    if let Some(rec) = &recorder {
        fs::create_dir_all(dir.join(STATES_DIR)).map_err(|e| CliError::io("creating state directory", e))?;
        for s in &rec.states {
            let name = format!("{STATES_DIR}/state_{:06}.txt", s.t);
            write(&name, &serialize_state(&StateDump::from(s)))?;
        }
    }

    let bounds = inst.bound_constants();
    let consts = theory_constants(n, inst.p(), seq.window(), floor, bounds)?;
    let last = recs.last().expect("horizon >= 1");
    let hash = cfg.hash();
    let wall = started.elapsed().as_secs_f64();
    let manifest = json!({
        "config_hash": hash,
        "scenario": match cfg.scenario { Scenario::Pev => "pev", Scenario::File => "file" },
        "n": n,
        "p": inst.p(),
        "t_horizon": cfg.t_horizon,
        "b_window": seq.window(),
        "files": files.iter().map(|f| json!({ "path": f, "config_hash": hash })).collect::<Vec<_>>(),
        "constants": {
            "R": bounds.diameter,
            "F": bounds.value_bound,
            "G": bounds.gradient_bound,
            "B_y": finite_or_null(consts.tracker_bound),
            "ln_B_y": consts.ln_tracker_bound,
            "r_lower": finite_or_null(consts.r_lower),
            "ln_r_lower": consts.ln_r_lower,
            "sensitivity": finite_or_null(consts.sensitivity),
            "ln_sensitivity": consts.ln_sensitivity,
            "overflow": consts.overflow,
            "r_empirical": empirical_r(&traj),
            "max_tracker_norm": max_tracker_norm(&traj),
        },
        "final": {
            "t": last.t,
            "cum_regret": last.cum_regret,
            "avg_regret": last.avg_regret,
            "cum_violation": last.cum_violation,
            "avg_violation": last.avg_violation,
            "V_t": last.variation,
        },
        "solver": solver,
        "wall_time_s": wall,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text + "\n").map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    files.push(MANIFEST_FILE.to_string());

    Ok(RunOutcome {
        dir,
        config_hash: hash,
        files,
        records: recs,
        wall_time_s: wall,
    })
}
