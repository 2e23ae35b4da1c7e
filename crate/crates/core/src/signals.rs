//! Input signals: phase-shifted sines and periodic band-limited white noise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Sine,
    White,
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(SignalKind::Sine),
            "white" => Ok(SignalKind::White),
            other => Err(Error::Config(format!("unknown signal `{other}` (sine|white)"))),
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Sine => "sine",
            SignalKind::White => "white",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub dim: usize,
    /// Seconds; white noise only.
    pub period: f64,
    /// Hz; white noise only.
    pub cutoff: f64,
    /// Target RMS before clipping; white noise only.
    pub rms: f64,
    pub seed: u64,
}

impl SignalSpec {
    pub fn sine(dim: usize) -> Self {
        SignalSpec {
            kind: SignalKind::Sine,
            dim,
            period: 8.0,
            cutoff: 5.0,
            rms: 0.5,
            seed: 0,
        }
    }

    pub fn white(dim: usize, period: f64, cutoff: f64, seed: u64) -> Self {
        SignalSpec {
            kind: SignalKind::White,
            dim,
            period,
            cutoff,
            rms: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("signal dimension must be >= 1".into()));
        }
        if self.kind == SignalKind::White {
            if !(self.period > 0.0) || !(self.cutoff > 0.0) || !(self.rms > 0.0) {
                return Err(Error::InvalidArgument(
                    "white signal needs period, cutoff and rms > 0".into(),
                ));
            }
            if self.cutoff < 1.0 / self.period {
                return Err(Error::InvalidArgument(format!(
                    "cutoff {} Hz below the fundamental 1/{} Hz: no harmonics",
                    self.cutoff, self.period
                )));
            }
        }
        Ok(())
    }
}

/// Component `i` is `sin(pi/2 * t + 2*pi*i/dim)`.
pub fn sine_signal(t: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    sine_into(t, &mut out);
    out
}

fn sine_into(t: f64, out: &mut [f64]) {
    let dim = out.len() as f64;
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0.25 * 2.0 * PI * t + i as f64 * 2.0 * PI / dim).sin();
    }
}

/// Periodic band-limited Gaussian noise, one independent Fourier series per
/// dimension over harmonics `k / period <= cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteSignal {
    dim: usize,
    period: f64,
    /// Per dimension: `(cos, sin)` coefficient of harmonics 1..=K.
    coeffs: Vec<Vec<(f64, f64)>>,
}

impl WhiteSignal {
    pub fn new(spec: &SignalSpec) -> Result<Self> {
        spec.validate()?;
        let harmonics = (spec.cutoff * spec.period + 1e-9).floor() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut coeffs = Vec::with_capacity(spec.dim);
        for _ in 0..spec.dim {
            let mut c: Vec<(f64, f64)> = (0..harmonics)
                .map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let mean_square: f64 = c.iter().map(|(a, b)| 0.5 * (a * a + b * b)).sum();
            let scale = spec.rms / mean_square.sqrt();
            c.iter_mut().for_each(|(a, b)| {
                *a *= scale;
                *b *= scale;
            });
            coeffs.push(c);
        }
        Ok(WhiteSignal {
            dim: spec.dim,
            period: spec.period,
            coeffs,
        })
    }

    pub fn harmonics(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    /// Unclipped Fourier sum.
    pub fn raw_into(&self, t: f64, out: &mut [f64]) {
        let theta = 2.0 * PI * (t / self.period).fract();
        let (s1, c1) = theta.sin_cos();
        for (o, coeffs) in out.iter_mut().zip(&self.coeffs) {
            // rotate (cos k.theta, sin k.theta) one harmonic at a time
            let (mut ck, mut sk) = (c1, s1);
            let mut acc = 0.0;
            for &(a, b) in coeffs {
                acc += a * ck + b * sk;
                let next_c = ck * c1 - sk * s1;
                sk = sk * c1 + ck * s1;
                ck = next_c;
            }
            *o = acc;
        }
    }

    /// Signal value clipped to `[-1, 1]`.
    pub fn value_into(&self, t: f64, out: &mut [f64]) {
        self.raw_into(t, out);
        out.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.value_into(t, &mut out);
        out
    }
}

/// Evaluates `spec` at time `t`.
pub fn white_signal(spec: &SignalSpec, t: f64) -> Result<Vec<f64>> {
    Ok(WhiteSignal::new(spec)?.value(t))
}

/// A ready-to-evaluate signal of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Sine { dim: usize },
    White(WhiteSignal),
}

impl Signal {
    pub fn new(spec: &SignalSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            SignalKind::Sine => Signal::Sine { dim: spec.dim },
            SignalKind::White => Signal::White(WhiteSignal::new(spec)?),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Signal::Sine { dim } => *dim,
            Signal::White(w) => w.dim,
        }
    }

    pub fn value_into(&self, t: f64, out: &mut [f64]) {
        match self {
            Signal::Sine { .. } => sine_into(t, out),
            Signal::White(w) => w.value_into(t, out),
        }
    }
}
