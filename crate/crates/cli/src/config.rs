//! Flat `key = value` experiment configuration.
//!
//! Precedence, lowest first: built-in defaults, the config file, `--set`
//! overrides, then the dedicated command-line flags.

use std::fmt::Write as _;
use std::path::PathBuf;

use dust_core::dust::{InitKind, StepSchedule};
use dust_core::graph::GraphKind;
use dust_core::problem::{Coupling, PevParams, Refresh};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Pev,
    /// Instance read from a `dust-instance` text file.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    ZeroProjected,
    SeededRandom,
    FeasiblePoint,
}

impl Init {
    fn name(self) -> &'static str {
        match self {
            Init::ZeroProjected => "zero_projected",
            Init::SeededRandom => "seeded_random",
            Init::FeasiblePoint => "feasible_point",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub instance_file: Option<PathBuf>,
    /// Periodic edge list (`t,from,to[,weight]`) replacing the generated graph.
    pub graph_file: Option<PathBuf>,
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub t_horizon: usize,
    pub b_window: usize,
    pub graph: GraphKind,
    pub seed_instance: u64,
    pub seed_graph: u64,
    pub seed_init: u64,
    pub init: Init,
    pub alpha_pow: f64,
    pub eta_pow: f64,
    pub kappa: f64,
    pub x_max: f64,
    pub linear_sign: f64,
    pub coupling: Coupling,
    pub cost_refresh: Refresh,
    pub compute_optima: bool,
    pub validate: bool,
    /// Write a state dump every `k` rounds; 0 disables dumps.
    pub dump_every: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Pev,
            instance_file: None,
            graph_file: None,
            n: 10,
            d: 4,
            p: 6,
            t_horizon: 1000,
            b_window: 2,
            graph: GraphKind::CyclicPartition,
            seed_instance: 1,
            seed_graph: 1,
            seed_init: 1,
            init: Init::ZeroProjected,
            alpha_pow: 0.5,
            eta_pow: 1.0,
            kappa: 0.5,
            x_max: 1.0,
            linear_sign: 1.0,
            coupling: Coupling::Capacity,
            cost_refresh: Refresh::EveryRound,
            compute_optima: false,
            validate: false,
            dump_every: 0,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 25] = [
    "scenario",
    "instance_file",
    "graph_file",
    "n",
    "d",
    "p",
    "t_horizon",
    "b_window",
    "graph",
    "seed_instance",
    "seed_graph",
    "seed_init",
    "init",
    "alpha_pow",
    "eta_pow",
    "kappa",
    "x_max",
    "linear_sign",
    "coupling",
    "cost_refresh",
    "compute_optima",
    "validate",
    "dump_every",
    "out",
    "seed",
];

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key} = `{value}`: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

fn float(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = num(key, value)?;
    if !v.is_finite() {
        return Err(bad(key, value, "must be finite"));
    }
    Ok(v)
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl ExperimentConfig {
    /// Sets one key. `seed` is shorthand for all three seeds.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "scenario" => {
                self.scenario = match value {
                    "pev" => Scenario::Pev,
                    "file" => Scenario::File,
                    _ => return Err(bad(key, value, "expected pev or file")),
                }
            }
            "instance_file" => self.instance_file = path(value),
            "graph_file" => self.graph_file = path(value),
            "n" => self.n = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "t_horizon" => self.t_horizon = num(key, value)?,
            "b_window" => self.b_window = num(key, value)?,
            "graph" => self.graph = value.parse().map_err(|e| bad(key, value, e))?,
            "seed_instance" => self.seed_instance = num(key, value)?,
            "seed_graph" => self.seed_graph = num(key, value)?,
            "seed_init" => self.seed_init = num(key, value)?,
            "seed" => {
                let s = num(key, value)?;
                self.seed_instance = s;
                self.seed_graph = s;
                self.seed_init = s;
            }
            "init" => {
                self.init = match value {
                    "zero_projected" => Init::ZeroProjected,
                    "seeded_random" => Init::SeededRandom,
                    "feasible_point" => Init::FeasiblePoint,
                    _ => return Err(bad(key, value, "expected zero_projected, seeded_random or feasible_point")),
                }
            }
            "alpha_pow" => self.alpha_pow = float(key, value)?,
            "eta_pow" => self.eta_pow = float(key, value)?,
            "kappa" => self.kappa = float(key, value)?,
            "x_max" => self.x_max = float(key, value)?,
            "linear_sign" => self.linear_sign = float(key, value)?,
            "coupling" => self.coupling = value.parse().map_err(|e| bad(key, value, e))?,
            "cost_refresh" => self.cost_refresh = value.parse().map_err(|e| bad(key, value, e))?,
            "compute_optima" => self.compute_optima = flag(key, value)?,
            "validate" => self.validate = flag(key, value)?,
            "dump_every" => self.dump_every = num(key, value)?,
            "out" => {
                if value.is_empty() {
                    return Err(bad(key, value, "output path is empty"));
                }
                self.out = PathBuf::from(value)
            }
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Reads `key = value` lines on top of `self`. `#` starts a comment line.
    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", idx + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::Config(format!("line {}: {}", idx + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    fn body(&self) -> String {
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut out = String::new();
        let scenario = match self.scenario {
            Scenario::Pev => "pev",
            Scenario::File => "file",
        };
        let _ = writeln!(out, "scenario = {scenario}");
        let _ = writeln!(out, "instance_file = {}", opt_path(&self.instance_file));
        let _ = writeln!(out, "graph_file = {}", opt_path(&self.graph_file));
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "d = {}", self.d);
        let _ = writeln!(out, "p = {}", self.p);
        let _ = writeln!(out, "t_horizon = {}", self.t_horizon);
        let _ = writeln!(out, "b_window = {}", self.b_window);
        let _ = writeln!(out, "graph = {}", self.graph.name());
        let _ = writeln!(out, "seed_instance = {}", self.seed_instance);
        let _ = writeln!(out, "seed_graph = {}", self.seed_graph);
        let _ = writeln!(out, "seed_init = {}", self.seed_init);
        let _ = writeln!(out, "init = {}", self.init.name());
        let _ = writeln!(out, "alpha_pow = {:?}", self.alpha_pow);
        let _ = writeln!(out, "eta_pow = {:?}", self.eta_pow);
        let _ = writeln!(out, "kappa = {:?}", self.kappa);
        let _ = writeln!(out, "x_max = {:?}", self.x_max);
        let _ = writeln!(out, "linear_sign = {:?}", self.linear_sign);
        let _ = writeln!(out, "coupling = {}", self.coupling.name());
        let _ = writeln!(out, "cost_refresh = {}", self.cost_refresh.name());
        let _ = writeln!(out, "compute_optima = {}", self.compute_optima);
        let _ = writeln!(out, "validate = {}", self.validate);
        let _ = writeln!(out, "dump_every = {}", self.dump_every);
        out
    }

    pub fn serialize(&self) -> String {
        format!("{}out = {}\n", self.body(), self.out.display())
    }

    /// SHA-256 of the serialized config without the output path, so the
    /// same experiment written to two places shares a hash.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.body().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: &str| Err(CliError::Config(m.to_string()));
        if self.t_horizon < 1 {
            return fail("t_horizon must be at least 1");
        }
        if self.b_window < 1 {
            return fail("b_window must be at least 1");
        }
        match self.scenario {
            Scenario::Pev => {
                if self.n < 2 {
                    return fail("n must be at least 2");
                }
                if self.d < 1 || self.p < 1 {
                    return fail("d and p must be at least 1");
                }
                if !(0.0..=1.0).contains(&self.kappa) {
                    return fail("kappa must lie in [0, 1]");
                }
                if !(self.x_max > 0.0) {
                    return fail("x_max must be positive");
                }
            }
            Scenario::File => {
                if self.instance_file.is_none() {
                    return fail("scenario = file needs instance_file");
                }
            }
        }
        if self.validate && self.t_horizon < self.b_window {
            return fail("validation needs t_horizon >= b_window");
        }
        self.schedule()?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<StepSchedule, CliError> {
        StepSchedule::powers(self.alpha_pow, self.eta_pow).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn init_kind(&self) -> InitKind {
        match self.init {
            Init::ZeroProjected => InitKind::ZeroProjected,
            Init::SeededRandom => InitKind::SeededRandom(self.seed_init),
            Init::FeasiblePoint => InitKind::FeasiblePoint,
        }
    }

    pub fn pev_params(&self) -> PevParams {
        PevParams {
            x_max: self.x_max,
            kappa: self.kappa,
            linear_sign: self.linear_sign,
            refresh: self.cost_refresh,
            coupling: self.coupling,
            ..PevParams::new(self.n, self.d, self.p, self.seed_instance, self.t_horizon)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.serialize()).unwrap(), cfg);
    }

    #[test]
    fn every_key_is_settable() {
        let mut cfg = ExperimentConfig::default();
        let samples = [
            ("scenario", "file"),
            ("instance_file", "a.txt"),
            ("graph_file", "g.csv"),
            ("n", "3"),
            ("d", "2"),
            ("p", "1"),
            ("t_horizon", "7"),
            ("b_window", "3"),
            ("graph", "static_ring"),
            ("seed_instance", "4"),
            ("seed_graph", "5"),
            ("seed_init", "6"),
            ("init", "seeded_random"),
            ("alpha_pow", "0.25"),
            ("eta_pow", "0.75"),
            ("kappa", "0.1"),
            ("x_max", "2.5"),
            ("linear_sign", "-1"),
            ("coupling", "balance"),
            ("cost_refresh", "doubling"),
            ("compute_optima", "true"),
            ("validate", "yes"),
            ("dump_every", "9"),
            ("out", "/tmp/x"),
            ("seed", "11"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            cfg.set(k, v).unwrap();
        }
        assert_eq!(cfg.seed_graph, 11);
        assert_eq!(ExperimentConfig::parse(&cfg.serialize()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let err = ExperimentConfig::parse("n = 4\nkappa = abc\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("kappa"), "{err}");
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("n 4").is_err());
        assert!(ExperimentConfig::parse("alpha_pow = inf").is_err());
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed_graph = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.t_horizon = 0;
        assert!(cfg.validate().is_err());
        cfg.t_horizon = 1;
        cfg.validate = true;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { eta_pow: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { scenario: Scenario::File, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
