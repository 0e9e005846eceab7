use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::runner::{run_experiment, RunOutcome};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str =
    "axis,value,status,exit_code,t,cum_regret,avg_regret,cum_violation,avg_violation,consensus_err,mu_bar_norm,config_hash,dir,error";
pub const SWEEP_MANIFEST_FILE: &str = "sweep_manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    B,
    N,
    T,
    Seed,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::B => "B",
            Axis::N => "N",
            Axis::T => "T",
            Axis::Seed => "seed",
        }
    }

    fn apply(self, cfg: &mut ExperimentConfig, value: u64) -> Result<(), CliError> {
        let v = value.to_string();
        match self {
            Axis::B => cfg.set("b_window", &v),
            Axis::N => cfg.set("n", &v),
            Axis::T => cfg.set("t_horizon", &v),
            Axis::Seed => cfg.set("seed", &v),
        }
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "B" | "b" | "b_window" => Ok(Axis::B),
            "N" | "n" => Ok(Axis::N),
            "T" | "t" | "t_horizon" => Ok(Axis::T),
            "seed" => Ok(Axis::Seed),
            _ => Err(CliError::Config(format!("unknown sweep axis `{s}` (B, N, T or seed)"))),
        }
    }
}

#[derive(Debug)]
pub struct SweepEntry {
    pub value: u64,
    pub dir: PathBuf,
    pub result: Result<RunOutcome, CliError>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub axis: Axis,
    pub entries: Vec<SweepEntry>,
    pub summary_path: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.result.is_err()).count()
    }

    /// Exit code of the first failed entry in value order, 0 when all passed.
    pub fn exit_code(&self) -> u8 {
        self.entries
            .iter()
            .find_map(|e| e.result.as_ref().err().map(CliError::exit_code))
            .unwrap_or(0)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs `template` once per value along `axis`, up to `jobs` at a time.
/// Each run writes to `<out>/<axis>_<value>`; a failing run is recorded in
/// the summary and does not stop the others.
pub fn sweep(template: &ExperimentConfig, axis: Axis, values: &[u64], jobs: usize) -> Result<SweepReport, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let root = template.out.clone();
    fs::create_dir_all(&root).map_err(|e| CliError::io(format!("creating {}", root.display()), e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        values
            .par_iter()
            .map(|&value| {
                let dir = root.join(format!("{}_{value}", axis.name()));
                let mut cfg = template.clone();
                cfg.out = dir.clone();
                let result = axis.apply(&mut cfg, value).and_then(|_| run_experiment(&cfg));
                SweepEntry { value, dir, result }
            })
            .collect()
    });

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut runs = Vec::new();
    for e in &entries {
        let dir = e.dir.display().to_string();
        match &e.result {
            Ok(out) => {
                let r = out.last();
                let _ = writeln!(
                    summary,
                    "{},{},ok,0,{},{},{},{},{},{},{},{},{},",
                    axis.name(),
                    e.value,
                    r.t,
                    opt(r.cum_regret),
                    opt(r.avg_regret),
                    r.cum_violation,
                    r.avg_violation,
                    r.consensus_err,
                    r.mu_bar_norm,
                    out.config_hash,
                    csv_field(&dir)
                );
                runs.push(json!({ "value": e.value, "status": "ok", "dir": dir, "config_hash": out.config_hash, "files": out.files }));
            }
            Err(err) => {
                let _ = writeln!(
                    summary,
                    "{},{},failed,{},,,,,,,,,{},{}",
                    axis.name(),
                    e.value,
                    err.exit_code(),
                    csv_field(&dir),
                    csv_field(&err.to_string())
                );
                runs.push(json!({ "value": e.value, "status": "failed", "dir": dir, "exit_code": err.exit_code(), "error": err.to_string() }));
            }
        }
    }
    let summary_path = root.join(SUMMARY_FILE);
    fs::write(&summary_path, summary).map_err(|e| CliError::io(format!("writing {}", summary_path.display()), e))?;
    let manifest = json!({ "axis": axis.name(), "template_hash": template.hash(), "summary": SUMMARY_FILE, "runs": runs });
    let mpath = root.join(SWEEP_MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
    fs::write(&mpath, text + "\n").map_err(|e| CliError::io(format!("writing {}", mpath.display()), e))?;
    Ok(SweepReport {
        axis,
        entries,
        summary_path,
    })
}

/// Parses `AXIS=v1,v2,...`.
pub fn parse_sweep_spec(spec: &str) -> Result<(Axis, Vec<u64>), CliError> {
    let (axis, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("sweep `{spec}` is not AXIS=v1,v2,...")))?;
    let axis: Axis = axis.trim().parse()?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|e| CliError::Config(format!("sweep value `{v}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((axis, values))
}
