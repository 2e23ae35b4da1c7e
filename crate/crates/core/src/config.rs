//! Experiment description and its `key = value` file form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::device::PowerLawParams;
use crate::error::{Error, Result};
use crate::kv;
use crate::signals::{SignalKind, SignalSpec};

/// Transformation the network is taught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetFunction {
    Identity,
    Square,
}

impl TargetFunction {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TargetFunction::Identity => x.to_vec(),
            TargetFunction::Square => x.iter().map(|v| v * v).collect(),
        }
    }
}

impl FromStr for TargetFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "x" => Ok(TargetFunction::Identity),
            "square" | "x2" => Ok(TargetFunction::Square),
            other => Err(Error::Config(format!("unknown function `{other}` (identity|square)"))),
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetFunction::Identity => "identity",
            TargetFunction::Square => "square",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Discrete SET pulses on memristor pairs.
    Mpes,
    /// Continuous, noiseless weights.
    Pes,
    /// Weights frozen at their initial memristor values.
    None,
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpes" => Ok(Rule::Mpes),
            "pes" => Ok(Rule::Pes),
            "none" => Ok(Rule::None),
            other => Err(Error::Config(format!("unknown rule `{other}` (mpes|pes|none)"))),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Mpes => "mpes",
            Rule::Pes => "pes",
            Rule::None => "none",
        })
    }
}

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_neurons: usize,
    pub dim: usize,
    pub function: TargetFunction,
    pub learn_signal: SignalKind,
    pub test_signal: SignalKind,
    /// Seconds.
    pub sim_time: f64,
    /// Seconds; the error ensemble is inhibited from here on.
    pub learn_time: f64,
    pub dt: f64,
    pub rule: Rule,
    pub gamma: f64,
    pub kappa: f64,
    /// Fractional parameter noise applied on every SET pulse.
    pub noise: f64,
    pub device: PowerLawParams,
    /// Overrides the device exponent at the pulse voltage.
    pub exponent: Option<f64>,
    pub pulse_voltage: f64,
    pub error_threshold: f64,
    /// Relative spread of the initial resistances around `init_resistance`.
    pub init_spread: f64,
    pub init_resistance: f64,
    /// White-noise period; defaults to twice `sim_time`.
    pub white_period: Option<f64>,
    pub white_cutoff: f64,
    pub white_rms: f64,
    /// Synapse time constant on neuron-to-neuron signals.
    pub synapse_tau: f64,
    /// Filter time constant on recorded outputs.
    pub probe_tau: f64,
    /// Inhibitory current after `learn_time`, in units of each neuron's gain.
    pub inhibition: f64,
    /// Multiply the learned connection's input by each post neuron's gain.
    pub scale_by_gain: bool,
    pub seed: u64,
    pub seeds_per_point: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_neurons: 10,
            dim: 3,
            function: TargetFunction::Identity,
            learn_signal: SignalKind::Sine,
            test_signal: SignalKind::Sine,
            sim_time: 30.0,
            learn_time: 22.0,
            dt: 0.001,
            rule: Rule::Mpes,
            gamma: 1e4,
            kappa: 1e-4,
            noise: 0.15,
            device: PowerLawParams::default(),
            exponent: None,
            pulse_voltage: 0.1,
            error_threshold: 1e-5,
            init_spread: 0.15,
            init_resistance: 1e8,
            white_period: None,
            white_cutoff: 5.0,
            white_rms: 0.5,
            synapse_tau: 0.005,
            probe_tau: 0.01,
            inhibition: 20.0,
            scale_by_gain: true,
            seed: 0,
            seeds_per_point: 20,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_neurons == 0 || self.dim == 0 {
            return bad("neurons and dim must be >= 1".into());
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt {} must be positive", self.dt));
        }
        if !(self.learn_time >= 0.0 && self.learn_time < self.sim_time) {
            return bad(format!(
                "need 0 <= learn_time < sim_time (got {} / {})",
                self.learn_time, self.sim_time
            ));
        }
        if self.test_steps() < 2 {
            return bad("test window shorter than two steps".into());
        }
        if !(self.gamma > 0.0) || !(self.kappa > 0.0) {
            return bad("gamma and kappa must be positive".into());
        }
        if !(self.noise >= 0.0) {
            return bad(format!("noise {} must be >= 0", self.noise));
        }
        if !(self.init_spread >= 0.0 && self.init_spread < 1.0) {
            return bad(format!("init_spread {} outside [0, 1)", self.init_spread));
        }
        if !(self.pulse_voltage > 0.0 && self.pulse_voltage <= 1.0) {
            return bad(format!("pulse_voltage {} outside (0, 1]", self.pulse_voltage));
        }
        if let Some(c) = self.exponent {
            if !(c < 0.0) {
                return bad(format!("exponent {c} must be negative"));
            }
        }
        if !(self.synapse_tau > 0.0 && self.probe_tau > 0.0) {
            return bad("filter time constants must be positive".into());
        }
        self.device.validate()?;
        if !(self.init_resistance * (1.0 + self.init_spread) <= self.device.r_high())
            || !(self.init_resistance * (1.0 - self.init_spread) > self.device.r_zero)
        {
            return bad("initial resistances fall outside the device window".into());
        }
        self.signal_spec(self.learn_signal, 0).validate()?;
        self.signal_spec(self.test_signal, 0).validate()?;
        Ok(())
    }

    /// Total number of simulation steps.
    pub fn steps(&self) -> usize {
        (self.sim_time / self.dt).round() as usize
    }

    /// Steps whose time stamp lies in the learning window.
    pub fn learn_steps(&self) -> usize {
        (self.learn_time / self.dt).round() as usize
    }

    pub fn test_steps(&self) -> usize {
        self.steps().saturating_sub(self.learn_steps())
    }

    /// Device parameters with the exponent override applied.
    pub fn effective_device(&self) -> PowerLawParams {
        match self.exponent {
            Some(c) => self.device.with_exponent_at(c, self.pulse_voltage),
            None => self.device,
        }
    }

    pub fn signal_spec(&self, kind: SignalKind, seed: u64) -> SignalSpec {
        SignalSpec {
            kind,
            dim: self.dim,
            period: self.white_period.unwrap_or(2.0 * self.sim_time),
            cutoff: self.white_cutoff,
            rms: self.white_rms,
            seed,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match key.as_str() {
            "neurons" | "n_neurons" => self.n_neurons = parse_num(&key, value)?,
            "dim" => self.dim = parse_num(&key, value)?,
            "function" => self.function = value.parse()?,
            "learn_signal" => self.learn_signal = value.parse()?,
            "test_signal" => self.test_signal = value.parse()?,
            "sim_time" => self.sim_time = parse_num(&key, value)?,
            "learn_time" => self.learn_time = parse_num(&key, value)?,
            "dt" => self.dt = parse_num(&key, value)?,
            "rule" => self.rule = value.parse()?,
            "gamma" => self.gamma = parse_num(&key, value)?,
            "kappa" => self.kappa = parse_num(&key, value)?,
            "noise" => self.noise = parse_num(&key, value)?,
            "r_zero" => self.device.r_zero = parse_num(&key, value)?,
            "r_one" => self.device.r_one = parse_num(&key, value)?,
            "a" => self.device.a = parse_num(&key, value)?,
            "b" => self.device.b = parse_num(&key, value)?,
            "exponent" => {
                self.exponent = match value {
                    "" | "none" => None,
                    v => Some(parse_num(&key, v)?),
                }
            }
            "pulse_voltage" => self.pulse_voltage = parse_num(&key, value)?,
            "error_threshold" => self.error_threshold = parse_num(&key, value)?,
            "init_spread" => self.init_spread = parse_num(&key, value)?,
            "init_resistance" => self.init_resistance = parse_num(&key, value)?,
            "white_period" => self.white_period = Some(parse_num(&key, value)?),
            "white_cutoff" => self.white_cutoff = parse_num(&key, value)?,
            "white_rms" => self.white_rms = parse_num(&key, value)?,
            "synapse_tau" => self.synapse_tau = parse_num(&key, value)?,
            "probe_tau" => self.probe_tau = parse_num(&key, value)?,
            "inhibition" => self.inhibition = parse_num(&key, value)?,
            "scale_by_gain" => self.scale_by_gain = parse_bool(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "seeds_per_point" => self.seeds_per_point = parse_num(&key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_kv_str(text)?;
        Ok(cfg)
    }

    pub fn merge_kv_str(&mut self, text: &str) -> Result<()> {
        for (k, v) in kv::parse(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// Every setting as `(key, value)`; feeding these back through
    /// [`ExperimentConfig::set`] reproduces the config.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("neurons", self.n_neurons.to_string()),
            ("dim", self.dim.to_string()),
            ("function", self.function.to_string()),
            ("learn_signal", self.learn_signal.to_string()),
            ("test_signal", self.test_signal.to_string()),
            ("sim_time", self.sim_time.to_string()),
            ("learn_time", self.learn_time.to_string()),
            ("dt", self.dt.to_string()),
            ("rule", self.rule.to_string()),
            ("gamma", self.gamma.to_string()),
            ("kappa", self.kappa.to_string()),
            ("noise", self.noise.to_string()),
            ("r_zero", self.device.r_zero.to_string()),
            ("r_one", self.device.r_one.to_string()),
            ("a", self.device.a.to_string()),
            ("b", self.device.b.to_string()),
            (
                "exponent",
                self.exponent.map_or("none".to_string(), |c| c.to_string()),
            ),
            ("pulse_voltage", self.pulse_voltage.to_string()),
            ("error_threshold", self.error_threshold.to_string()),
            ("init_spread", self.init_spread.to_string()),
            ("init_resistance", self.init_resistance.to_string()),
            (
                "white_period",
                self.white_period.unwrap_or(2.0 * self.sim_time).to_string(),
            ),
            ("white_cutoff", self.white_cutoff.to_string()),
            ("white_rms", self.white_rms.to_string()),
            ("synapse_tau", self.synapse_tau.to_string()),
            ("probe_tau", self.probe_tau.to_string()),
            ("inhibition", self.inhibition.to_string()),
            ("scale_by_gain", self.scale_by_gain.to_string()),
            ("seed", self.seed.to_string()),
            ("seeds_per_point", self.seeds_per_point.to_string()),
        ]
    }

    pub fn to_kv_string(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
