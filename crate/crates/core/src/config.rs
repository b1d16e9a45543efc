//! Flat key/value run configuration shared by the command-line tool and the
//! sweep runner.
//!
//! A configuration file is a single JSON object whose keys are the field
//! names of [`RunConfig`]; any subset may be given. Overrides of the form
//! `key=value` are applied on top, with `value` parsed as JSON when possible
//! and as a bare string otherwise.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::classify::Rules;
use crate::dynamics::{IntegratorConfig, Method, DEFAULT_SEED_AMPLITUDE};
use crate::error::{Error, Result};
use crate::model::{CondensateState, ModelParams, SystemState};
use crate::steady::ImaginaryTimeConfig;
use crate::twa::EnsembleConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // Model.
    pub delta_c: f64,
    pub u0n: f64,
    pub kappa: f64,
    pub eta: f64,
    pub g1d: f64,
    pub atom_number: f64,
    pub n_max: usize,
    pub grid_points: usize,

    // Deterministic evolution.
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub dt: f64,
    pub dt_out: f64,
    pub t_end: f64,
    pub ramp_time: Option<f64>,
    /// Initial real cavity amplitude; its sign selects the `Z₂` branch.
    pub seed_amplitude: f64,
    pub chi_orders: Vec<usize>,

    // Classification.
    pub window_start: f64,
    pub window_end: f64,
    pub intensity_floor: f64,
    pub constancy: f64,
    pub activity: f64,
    pub ipr_split: f64,

    // Steady state.
    pub dtau: f64,
    pub steady_tol: f64,
    pub max_iter: usize,
    /// Sign of the symmetry-breaking seed of the steady-state solve.
    pub steady_branch: i8,

    // Truncated Wigner ensembles.
    pub n_traj: usize,
    pub twa_dt: f64,
    pub include_initial_noise: bool,
    pub include_dynamical_noise: bool,

    /// Master seed of every random stream.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::<f64>::default();
        let ic = IntegratorConfig::<f64>::default();
        let rules = Rules::<f64>::default();
        let it = ImaginaryTimeConfig::<f64>::default();
        let ens = EnsembleConfig::<f64>::default();
        Self {
            delta_c: p.delta_c,
            u0n: p.u0n,
            kappa: p.kappa,
            eta: p.eta,
            g1d: p.g1d,
            atom_number: p.atom_number,
            n_max: p.n_max,
            grid_points: p.grid_points,
            method: ic.method,
            rtol: ic.rtol,
            atol: ic.atol,
            dt: ic.dt,
            dt_out: ic.dt_out,
            t_end: ic.t_end,
            ramp_time: ic.ramp_time,
            seed_amplitude: DEFAULT_SEED_AMPLITUDE,
            chi_orders: ic.chi_orders,
            window_start: rules.window_start,
            window_end: rules.window_end,
            intensity_floor: rules.intensity_floor,
            constancy: rules.constancy,
            activity: rules.activity,
            ipr_split: rules.ipr_split,
            dtau: it.dtau,
            steady_tol: it.tol,
            max_iter: it.max_iter,
            steady_branch: 1,
            n_traj: ens.n_traj,
            twa_dt: ens.dt,
            include_initial_noise: ens.include_initial_noise,
            include_dynamical_noise: ens.include_dynamical_noise,
            seed: ens.master_seed,
        }
    }
}

impl RunConfig {
    /// Every recognized key, sorted.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(RunConfig::default()) {
            Ok(Value::Object(map)) => map.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Loads an optional file and applies `key=value` overrides on top.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let value: Value = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                Self::default().merged(value)?
            }
            None => Self::default(),
        };
        for item in overrides {
            cfg = cfg.with_override(item)?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn with_override(self, item: &str) -> Result<Self> {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not of the form key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut map = Map::new();
        map.insert(key.to_string(), value);
        self.merged(Value::Object(map))
    }

    fn merged(self, patch: Value) -> Result<Self> {
        let Value::Object(patch) = patch else {
            return Err(Error::Config("configuration must be a JSON object".into()));
        };
        let Value::Object(mut base) = serde_json::to_value(&self)? else {
            unreachable!("RunConfig serializes to an object")
        };
        for (key, value) in patch {
            if !base.contains_key(&key) {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; valid keys: {}",
                    Self::keys().join(", ")
                )));
            }
            base.insert(key, value);
        }
        serde_json::from_value(Value::Object(base)).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams {
            delta_c: self.delta_c,
            u0n: self.u0n,
            kappa: self.kappa,
            eta: self.eta,
            g1d: self.g1d,
            atom_number: self.atom_number,
            n_max: self.n_max,
            grid_points: self.grid_points,
        }
        .validate()
    }

    pub fn integrator(&self) -> IntegratorConfig<f64> {
        IntegratorConfig {
            method: self.method,
            rtol: self.rtol,
            atol: self.atol,
            dt: self.dt,
            dt_out: self.dt_out,
            t_end: self.t_end,
            chi_orders: self.chi_orders.clone(),
            ramp_time: self.ramp_time,
            ..IntegratorConfig::default()
        }
    }

    pub fn rules(&self) -> Rules<f64> {
        Rules {
            window_start: self.window_start,
            window_end: self.window_end,
            intensity_floor: self.intensity_floor,
            constancy: self.constancy,
            activity: self.activity,
            ipr_split: self.ipr_split,
            ..Rules::default()
        }
    }

    pub fn imaginary_time(&self) -> ImaginaryTimeConfig<f64> {
        ImaginaryTimeConfig {
            dtau: self.dtau,
            tol: self.steady_tol,
            max_iter: self.max_iter,
            ..ImaginaryTimeConfig::default()
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig<f64> {
        EnsembleConfig {
            n_traj: self.n_traj,
            master_seed: self.seed,
            dt: self.twa_dt,
            dt_out: self.dt_out,
            t_end: self.t_end,
            window: (self.window_start, self.window_end),
            include_initial_noise: self.include_initial_noise,
            include_dynamical_noise: self.include_dynamical_noise,
        }
    }

    /// Homogeneous condensate with the configured cavity seed.
    pub fn initial_state(&self) -> SystemState<f64> {
        SystemState::new(
            CondensateState::homogeneous(self.n_max),
            num_complex::Complex::new(self.seed_amplitude, 0.0),
            0.0,
        )
    }
}
