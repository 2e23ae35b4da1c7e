//! Error-driven learning rules: continuous PES on ideal weights and mPES,
//! which turns the sign of each PES update into a single SET pulse on one
//! device of a differential pair.
//!
//! Sign convention: the error is `E = y - f(x)` (output minus target). The
//! local error `eps_j = -(e_j . E)` is positive when post neuron `j` should
//! fire more, and both rules move `W_ij` in the direction of `eps_j * a_i`.

use rand::Rng;

use crate::device::{NoiseSpec, PulseOutcome};
use crate::error::{Error, Result};
use crate::nef::Ensemble;
use crate::synapse::{Polarity, SynapseArray};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PesConfig {
    pub kappa: f64,
}

impl Default for PesConfig {
    fn default() -> Self {
        PesConfig { kappa: 1e-4 }
    }
}

impl PesConfig {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa {kappa} must be positive")));
        }
        Ok(PesConfig { kappa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpesConfig {
    /// Steps where every `|eps_j|` is at or below this are skipped.
    pub error_threshold: f64,
    pub pulse_voltage: f64,
    pub noise: NoiseSpec,
    /// Filtered activity (Hz) above which a pre neuron counts as active.
    pub activity_floor: f64,
}

impl Default for MpesConfig {
    fn default() -> Self {
        MpesConfig {
            error_threshold: 1e-5,
            pulse_voltage: 0.1,
            noise: NoiseSpec::default(),
            activity_floor: 1e-3,
        }
    }
}

impl MpesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.error_threshold >= 0.0) {
            return Err(Error::InvalidArgument("error threshold must be >= 0".into()));
        }
        if !(self.pulse_voltage > 0.0 && self.pulse_voltage <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pulse voltage {} outside (0, 1]",
                self.pulse_voltage
            )));
        }
        if !(self.noise.fraction >= 0.0) {
            return Err(Error::InvalidArgument("noise fraction must be >= 0".into()));
        }
        Ok(())
    }
}

/// `eps_j = -(e_j . E)` for every post neuron.
pub fn local_error(post: &Ensemble, error: &[f64]) -> Result<Vec<f64>> {
    if error.len() != post.dim {
        return Err(Error::DimensionMismatch {
            expected: post.dim,
            got: error.len(),
        });
    }
    let mut eps = vec![0.0; post.n_neurons];
    post.project(error, &mut eps);
    eps.iter_mut().for_each(|e| *e = -*e);
    Ok(eps)
}

/// PES weight change, row-major `n_post x n_pre`:
/// `dW_ij = kappa * alpha_j * eps_j * a_i`.
pub fn pes_update(kappa: f64, post: &Ensemble, error: &[f64], activities: &[f64]) -> Result<Vec<f64>> {
    let eps = local_error(post, error)?;
    let mut delta = Vec::with_capacity(post.n_neurons * activities.len());
    for (j, e) in eps.iter().enumerate() {
        let row_scale = kappa * post.gains[j] * e;
        delta.extend(activities.iter().map(|a| row_scale * a));
    }
    Ok(delta)
}

/// Adds a PES delta to a continuous weight matrix in place.
pub fn apply_pes_continuous(weights: &mut [f64], delta: &[f64]) -> Result<()> {
    if weights.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: delta.len(),
        });
    }
    weights.iter_mut().zip(delta).for_each(|(w, d)| *w += d);
    Ok(())
}

/// One pulse issued by [`mpes_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseRecord {
    pub pre: usize,
    pub post: usize,
    pub polarity: Polarity,
    pub applied: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MpesStepStats {
    /// True when the threshold test suppressed the whole step.
    pub gated: bool,
    pub pulses: usize,
    pub skipped: usize,
}

/// One mPES update.
///
/// Pre activities are binarized (`a_i > activity_floor`), the delta
/// `eps_j * a_i` is reduced to its sign, and a positive entry pulses `M+`
/// of pair `(j, i)` while a negative one pulses `M-`. At most one device per
/// pair is touched. `on_pulse` sees every pulse in the order issued.
pub fn mpes_step<R, F>(
    cfg: &MpesConfig,
    post: &Ensemble,
    error: &[f64],
    activities: &[f64],
    arr: &mut SynapseArray,
    rng: &mut R,
    mut on_pulse: F,
) -> Result<MpesStepStats>
where
    R: Rng + ?Sized,
    F: FnMut(PulseRecord),
{
    if arr.n_post() != post.n_neurons || arr.n_pre() != activities.len() {
        return Err(Error::DimensionMismatch {
            expected: arr.n_post() * arr.n_pre(),
            got: post.n_neurons * activities.len(),
        });
    }
    let eps = local_error(post, error)?;
    let max_abs = eps.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if max_abs <= cfg.error_threshold {
        return Ok(MpesStepStats {
            gated: true,
            ..Default::default()
        });
    }
    let mut stats = MpesStepStats::default();
    for (j, &e) in eps.iter().enumerate() {
        let polarity = if e > 0.0 {
            Polarity::Positive
        } else if e < 0.0 {
            Polarity::Negative
        } else {
            continue;
        };
        for (i, &a) in activities.iter().enumerate() {
            if a <= cfg.activity_floor {
                continue;
            }
            let outcome = arr.pulse(j, i, polarity, cfg.pulse_voltage, &cfg.noise, rng);
            let applied = outcome == PulseOutcome::Applied;
            stats.pulses += 1;
            if !applied {
                stats.skipped += 1;
            }
            on_pulse(PulseRecord {
                pre: i,
                post: j,
                polarity,
                applied,
            });
        }
    }
    Ok(stats)
}
