//! Run configuration: a flat JSON object with dotted keys.
//!
//! The on-disk format is a single JSON object whose keys are dotted paths,
//! e.g. `{"grid.nx": 64, "noise.nu": 2.5}`. Unknown keys are rejected.
//! [`RunConfig::echo`] produces the canonical serialization (all keys,
//! sorted, shortest-roundtrip numbers); writing it next to the outputs makes
//! every run reproducible from its artifacts alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::constitutive::{GrowthSpec, MobilitySpec, PotentialSpec};
use crate::error::SimError;
use crate::mesh::Grid;
use crate::noise::ModeVariances;
use crate::postproc::format_g17;
use crate::stepper::{ModelParams, SigmaBc};

/// What the run should do; normally set by the CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Ensemble,
    Sweep,
    Verify,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Ensemble => "ensemble",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
        }
    }

    fn parse(s: &str) -> Result<Mode, SimError> {
        match s {
            "run" => Ok(Mode::Run),
            "ensemble" => Ok(Mode::Ensemble),
            "sweep" => Ok(Mode::Sweep),
            "verify" => Ok(Mode::Verify),
            other => Err(SimError::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Complete description of one invocation: grid, model, sampling, output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub params: ModelParams,
    pub n_samples: usize,
    pub base_seed: u64,
    pub out_dir: String,
    pub snapshot_times: Vec<f64>,
    pub qoi_every: usize,
    pub mode: Mode,
    /// Noise intensities visited by `sweep` mode.
    pub sweep_nu: Vec<f64>,
}

impl Default for RunConfig {
    /// The reference setup: 100x100 grid on the unit square, dt = 0.01,
    /// T = 1, nu = 0.5, 50 samples.
    fn default() -> Self {
        RunConfig {
            nx: 100,
            ny: 100,
            lx: 1.0,
            ly: 1.0,
            params: ModelParams::default(),
            n_samples: 50,
            base_seed: 0,
            out_dir: "out".to_string(),
            snapshot_times: Vec::new(),
            qoi_every: 1,
            mode: Mode::Run,
            sweep_nu: vec![0.0, 0.5, 1.0, 2.5],
        }
    }
}

fn want_f64(key: &str, v: &Value) -> Result<f64, SimError> {
    v.as_f64()
        .ok_or_else(|| SimError::Config(format!("key '{key}': expected a number, got {v}")))
}

fn want_usize(key: &str, v: &Value) -> Result<usize, SimError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| SimError::Config(format!("key '{key}': expected a nonnegative integer, got {v}")))
}

fn want_bool(key: &str, v: &Value) -> Result<bool, SimError> {
    v.as_bool()
        .ok_or_else(|| SimError::Config(format!("key '{key}': expected a boolean, got {v}")))
}

fn want_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, SimError> {
    v.as_str()
        .ok_or_else(|| SimError::Config(format!("key '{key}': expected a string, got {v}")))
}

fn want_f64_array(key: &str, v: &Value) -> Result<Vec<f64>, SimError> {
    let arr = v
        .as_array()
        .ok_or_else(|| SimError::Config(format!("key '{key}': expected an array, got {v}")))?;
    arr.iter().map(|e| want_f64(key, e)).collect()
}

impl RunConfig {
    /// Parse a JSON file of dotted keys on top of the defaults.
    pub fn from_file(path: &Path) -> Result<RunConfig, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut cfg = RunConfig::default();
        cfg.apply_json(&text)?;
        Ok(cfg)
    }

    /// Apply a JSON object of dotted keys to this config.
    pub fn apply_json(&mut self, text: &str) -> Result<(), SimError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| SimError::Config(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| SimError::Config("top level must be a JSON object".into()))?;
        // Sorted application keeps behavior independent of file key order
        // for the one order-sensitive pair (mobility kind before value).
        let sorted: BTreeMap<&String, &Value> = obj.iter().collect();
        for (key, v) in sorted {
            self.apply_key(key, v)?;
        }
        Ok(())
    }

    /// Set a single dotted-key field. Unknown keys are an error.
    pub fn apply_key(&mut self, key: &str, v: &Value) -> Result<(), SimError> {
        match key {
            "grid.nx" => self.nx = want_usize(key, v)?,
            "grid.ny" => self.ny = want_usize(key, v)?,
            "grid.lx" => self.lx = want_f64(key, v)?,
            "grid.ly" => self.ly = want_f64(key, v)?,
            "model.epsilon" => self.params.epsilon = want_f64(key, v)?,
            "model.chi" => self.params.chi = want_f64(key, v)?,
            "model.alpha" => self.params.alpha = want_f64(key, v)?,
            "model.beta" => self.params.beta = want_f64(key, v)?,
            "model.delta" => self.params.delta = want_f64(key, v)?,
            "model.dt" => self.params.dt = want_f64(key, v)?,
            "model.t_end" => self.params.t_end = want_f64(key, v)?,
            "model.solver_tol" => self.params.solver_tol = want_f64(key, v)?,
            "model.lumped_mass" => self.params.lumped_mass = want_bool(key, v)?,
            "model.decoupled" => self.params.decoupled = want_bool(key, v)?,
            "model.c_psi" => {
                let c = want_f64(key, v)?;
                self.params.potential = PotentialSpec::QuarticDoubleWell { c_psi: c };
            }
            "model.growth" => {
                self.params.f = match want_str(key, v)? {
                    "logistic" => GrowthSpec::Logistic,
                    "gompertz" => GrowthSpec::Gompertz,
                    other => {
                        return Err(SimError::Config(format!(
                            "key '{key}': unknown growth law '{other}'"
                        )))
                    }
                }
            }
            "model.m1.kind" => self.params.m1 = parse_mobility_kind(key, v, self.params.m1)?,
            "model.m1.value" => self.params.m1 = set_mobility_value(key, v, self.params.m1)?,
            "model.m2.kind" => self.params.m2 = parse_mobility_kind(key, v, self.params.m2)?,
            "model.m2.value" => self.params.m2 = set_mobility_value(key, v, self.params.m2)?,
            "model.sigma_bc.kind" => {
                self.params.sigma_bc = match want_str(key, v)? {
                    "neumann" => SigmaBc::NeumannZero,
                    "dirichlet" => match self.params.sigma_bc {
                        SigmaBc::DirichletConstant(c) => SigmaBc::DirichletConstant(c),
                        SigmaBc::NeumannZero => SigmaBc::DirichletConstant(1.0),
                    },
                    other => {
                        return Err(SimError::Config(format!(
                            "key '{key}': unknown boundary condition '{other}'"
                        )))
                    }
                }
            }
            "model.sigma_bc.value" => {
                self.params.sigma_bc = SigmaBc::DirichletConstant(want_f64(key, v)?)
            }
            "noise.nu" => self.params.noise.nu = want_f64(key, v)?,
            "noise.sigma_amp" => self.params.noise.sigma_amp = want_f64(key, v)?,
            "noise.mass_project" => self.params.noise.mass_project = want_bool(key, v)?,
            "noise.q.kind" => {
                self.params.noise.q = match want_str(key, v)? {
                    "unit" => ModeVariances::Unit,
                    "power_decay" => match self.params.noise.q {
                        ModeVariances::PowerDecay { gamma } => ModeVariances::PowerDecay { gamma },
                        ModeVariances::Unit => ModeVariances::PowerDecay { gamma: 2.0 },
                    },
                    other => {
                        return Err(SimError::Config(format!(
                            "key '{key}': unknown mode-variance family '{other}'"
                        )))
                    }
                }
            }
            "noise.q.gamma" => {
                self.params.noise.q = ModeVariances::PowerDecay {
                    gamma: want_f64(key, v)?,
                }
            }
            "run.samples" => self.n_samples = want_usize(key, v)?,
            "run.seed" => {
                self.base_seed = v.as_u64().ok_or_else(|| {
                    SimError::Config(format!("key '{key}': expected a nonnegative integer, got {v}"))
                })?
            }
            "run.out" => self.out_dir = want_str(key, v)?.to_string(),
            "run.snapshot_times" => self.snapshot_times = want_f64_array(key, v)?,
            "run.qoi_every" => {
                let q = want_usize(key, v)?;
                if q == 0 {
                    return Err(SimError::Config("key 'run.qoi_every': must be >= 1".into()));
                }
                self.qoi_every = q;
            }
            "run.mode" => self.mode = Mode::parse(want_str(key, v)?)?,
            "sweep.nu" => self.sweep_nu = want_f64_array(key, v)?,
            other => return Err(SimError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(SimError::InvalidInput("grid.nx and grid.ny must be >= 1".into()));
        }
        if !(self.lx > 0.0) || !(self.ly > 0.0) {
            return Err(SimError::InvalidInput("grid.lx and grid.ly must be positive".into()));
        }
        if self.mode != Mode::Verify && self.n_samples == 0 {
            return Err(SimError::InvalidInput("run.samples must be >= 1".into()));
        }
        for &t in &self.snapshot_times {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(SimError::InvalidInput(
                    "run.snapshot_times entries must be finite and nonnegative".into(),
                ));
            }
        }
        for &nu in &self.sweep_nu {
            if !(nu >= 0.0) {
                return Err(SimError::InvalidInput("sweep.nu entries must be nonnegative".into()));
            }
        }
        self.params.validate()
    }

    pub fn build_grid(&self) -> Result<Grid, SimError> {
        Grid::build(self.nx, self.ny, self.lx, self.ly)
    }

    /// Canonical serialization: every key, sorted, one per line. Parsing the
    /// echo reproduces the config exactly.
    pub fn echo(&self) -> String {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let num = |k: &str, v: f64, pairs: &mut Vec<(String, String)>| {
            pairs.push((k.to_string(), format_g17(v)));
        };
        pairs.push(("grid.nx".into(), self.nx.to_string()));
        pairs.push(("grid.ny".into(), self.ny.to_string()));
        num("grid.lx", self.lx, &mut pairs);
        num("grid.ly", self.ly, &mut pairs);
        let p = &self.params;
        num("model.epsilon", p.epsilon, &mut pairs);
        num("model.chi", p.chi, &mut pairs);
        num("model.alpha", p.alpha, &mut pairs);
        num("model.beta", p.beta, &mut pairs);
        num("model.delta", p.delta, &mut pairs);
        num("model.dt", p.dt, &mut pairs);
        num("model.t_end", p.t_end, &mut pairs);
        num("model.solver_tol", p.solver_tol, &mut pairs);
        pairs.push(("model.lumped_mass".into(), p.lumped_mass.to_string()));
        pairs.push(("model.decoupled".into(), p.decoupled.to_string()));
        let PotentialSpec::QuarticDoubleWell { c_psi } = p.potential;
        num("model.c_psi", c_psi, &mut pairs);
        pairs.push((
            "model.growth".into(),
            match p.f {
                GrowthSpec::Logistic => "\"logistic\"".into(),
                GrowthSpec::Gompertz => "\"gompertz\"".into(),
            },
        ));
        for (name, m) in [("model.m1", p.m1), ("model.m2", p.m2)] {
            match m {
                MobilitySpec::Constant(c) => {
                    pairs.push((format!("{name}.kind"), "\"constant\"".into()));
                    num(&format!("{name}.value"), c, &mut pairs);
                }
                MobilitySpec::QuarticInterface { floor } => {
                    pairs.push((format!("{name}.kind"), "\"quartic_interface\"".into()));
                    num(&format!("{name}.value"), floor, &mut pairs);
                }
            }
        }
        match p.sigma_bc {
            SigmaBc::NeumannZero => {
                pairs.push(("model.sigma_bc.kind".into(), "\"neumann\"".into()))
            }
            SigmaBc::DirichletConstant(c) => {
                pairs.push(("model.sigma_bc.kind".into(), "\"dirichlet\"".into()));
                num("model.sigma_bc.value", c, &mut pairs);
            }
        }
        num("noise.nu", p.noise.nu, &mut pairs);
        num("noise.sigma_amp", p.noise.sigma_amp, &mut pairs);
        pairs.push(("noise.mass_project".into(), p.noise.mass_project.to_string()));
        match p.noise.q {
            ModeVariances::Unit => pairs.push(("noise.q.kind".into(), "\"unit\"".into())),
            ModeVariances::PowerDecay { gamma } => {
                pairs.push(("noise.q.kind".into(), "\"power_decay\"".into()));
                num("noise.q.gamma", gamma, &mut pairs);
            }
        }
        pairs.push(("run.samples".into(), self.n_samples.to_string()));
        pairs.push(("run.seed".into(), self.base_seed.to_string()));
        pairs.push(("run.out".into(), serde_json::to_string(&self.out_dir).unwrap()));
        let times: Vec<String> = self.snapshot_times.iter().map(|&t| format_g17(t)).collect();
        pairs.push(("run.snapshot_times".into(), format!("[{}]", times.join(", "))));
        pairs.push(("run.qoi_every".into(), self.qoi_every.to_string()));
        pairs.push((
            "run.mode".into(),
            format!("\"{}\"", self.mode.as_str()),
        ));
        let nus: Vec<String> = self.sweep_nu.iter().map(|&t| format_g17(t)).collect();
        pairs.push(("sweep.nu".into(), format!("[{}]", nus.join(", "))));

        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = String::from("{\n");
        for (i, (k, v)) in pairs.iter().enumerate() {
            let comma = if i + 1 == pairs.len() { "" } else { "," };
            writeln!(out, "  \"{k}\": {v}{comma}").unwrap();
        }
        out.push_str("}\n");
        out
    }
}

fn parse_mobility_kind(key: &str, v: &Value, current: MobilitySpec) -> Result<MobilitySpec, SimError> {
    match want_str(key, v)? {
        "constant" => Ok(match current {
            MobilitySpec::Constant(c) => MobilitySpec::Constant(c),
            MobilitySpec::QuarticInterface { .. } => MobilitySpec::Constant(1.0),
        }),
        "quartic_interface" => Ok(match current {
            MobilitySpec::QuarticInterface { floor } => MobilitySpec::QuarticInterface { floor },
            MobilitySpec::Constant(_) => MobilitySpec::QuarticInterface { floor: 1e-16 },
        }),
        other => Err(SimError::Config(format!(
            "key '{key}': unknown mobility kind '{other}'"
        ))),
    }
}

fn set_mobility_value(key: &str, v: &Value, current: MobilitySpec) -> Result<MobilitySpec, SimError> {
    let val = want_f64(key, v)?;
    Ok(match current {
        MobilitySpec::Constant(_) => MobilitySpec::Constant(val),
        MobilitySpec::QuarticInterface { .. } => MobilitySpec::QuarticInterface { floor: val },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.nx, 100);
        assert_eq!(cfg.params.epsilon, 0.01);
        assert_eq!(cfg.params.chi, 5.0);
        assert_eq!(cfg.params.beta, 15.0);
        assert_eq!(cfg.params.delta, 100.0);
        assert_eq!(cfg.params.noise.nu, 0.5);
        assert_eq!(cfg.n_samples, 50);
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let mut cfg = RunConfig::default();
        cfg.apply_json(r#"{"grid.nx": 16, "noise.nu": 0.0, "model.dt": 0.005}"#)
            .unwrap();
        assert_eq!(cfg.nx, 16);
        assert_eq!(cfg.params.noise.nu, 0.0);
        assert_eq!(cfg.params.dt, 0.005);

        let err = cfg.apply_json(r#"{"model.dx": 1}"#).unwrap_err();
        assert!(err.to_string().contains("model.dx"), "{err}");
    }

    #[test]
    fn type_errors_name_the_key() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_json(r#"{"grid.nx": "many"}"#).unwrap_err();
        assert!(err.to_string().contains("grid.nx"));
        let err = cfg.apply_json(r#"{"noise.nu": true}"#).unwrap_err();
        assert!(err.to_string().contains("noise.nu"));
    }

    #[test]
    fn negative_dt_fails_validation() {
        let mut cfg = RunConfig::default();
        cfg.apply_json(r#"{"model.dt": -0.01}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mobility_and_bc_keys() {
        let mut cfg = RunConfig::default();
        cfg.apply_json(
            r#"{"model.m1.kind": "constant", "model.m1.value": 2.0,
                "model.sigma_bc.kind": "neumann"}"#,
        )
        .unwrap();
        assert_eq!(cfg.params.m1, MobilitySpec::Constant(2.0));
        assert_eq!(cfg.params.sigma_bc, SigmaBc::NeumannZero);

        let mut cfg = RunConfig::default();
        cfg.apply_json(r#"{"model.sigma_bc.value": 0.5}"#).unwrap();
        assert_eq!(cfg.params.sigma_bc, SigmaBc::DirichletConstant(0.5));
    }

    #[test]
    fn echo_roundtrips() {
        let mut cfg = RunConfig::default();
        cfg.apply_json(
            r#"{"grid.nx": 7, "model.dt": 0.0025, "noise.nu": 2.5,
                "run.snapshot_times": [0.25, 0.5], "run.mode": "ensemble",
                "model.m2.value": 3.5, "run.out": "results/a"}"#,
        )
        .unwrap();
        let echo = cfg.echo();
        let mut back = RunConfig::default();
        back.apply_json(&echo).unwrap();
        assert_eq!(back, cfg);
        // The echo is itself canonical: re-echo is identical.
        assert_eq!(back.echo(), echo);
    }

    #[test]
    fn echo_is_valid_json_with_sorted_keys() {
        let echo = RunConfig::default().echo();
        let v: Value = serde_json::from_str(&echo).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
