//! Minimal Neural Engineering Framework substrate: LIF neurons, encoding,
//! synaptic filtering and least-squares decoders.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    /// Membrane time constant, seconds.
    pub tau_rc: f64,
    /// Refractory period, seconds.
    pub tau_ref: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            tau_rc: 0.02,
            tau_ref: 0.002,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_rc > 0.0) || !(self.tau_ref > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "LIF time constants must be positive ({:?})",
                self
            )));
        }
        Ok(())
    }
}

/// Steady-state firing rate (Hz) for a constant input current.
pub fn lif_rate(j: f64, lif: &LifParams) -> f64 {
    if j <= 1.0 {
        return 0.0;
    }
    1.0 / (lif.tau_ref + lif.tau_rc * (1.0 / (j - 1.0)).ln_1p())
}

/// Gain and bias such that a neuron fires at `max_rate` for a unit aligned
/// input and starts firing at `intercept`.
pub fn gain_bias_from_tuning(max_rate: f64, intercept: f64, lif: &LifParams) -> Result<(f64, f64)> {
    if !(max_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("max rate {max_rate} must be positive")));
    }
    if max_rate >= 1.0 / lif.tau_ref {
        return Err(Error::InvalidArgument(format!(
            "max rate {max_rate} Hz unreachable with refractory period {} s",
            lif.tau_ref
        )));
    }
    if !(intercept > -1.0 && intercept < 1.0) {
        return Err(Error::InvalidArgument(format!("intercept {intercept} outside (-1, 1)")));
    }
    // current that produces max_rate
    let j_max = 1.0 / -((lif.tau_ref - 1.0 / max_rate) / lif.tau_rc).exp_m1();
    let gain = (j_max - 1.0) / (1.0 - intercept);
    let bias = 1.0 - gain * intercept;
    Ok((gain, bias))
}

/// Distributions used to draw neuron parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningDistribution {
    pub max_rate_low: f64,
    pub max_rate_high: f64,
    pub intercept_low: f64,
    pub intercept_high: f64,
}

impl Default for TuningDistribution {
    fn default() -> Self {
        TuningDistribution {
            max_rate_low: 200.0,
            max_rate_high: 400.0,
            intercept_low: -1.0,
            intercept_high: 0.9,
        }
    }
}

/// A population of LIF neurons representing a `dim`-dimensional vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub n_neurons: usize,
    pub dim: usize,
    /// Row-major `n_neurons x dim`, unit-norm rows.
    pub encoders: Vec<f64>,
    pub gains: Vec<f64>,
    pub biases: Vec<f64>,
    pub lif: LifParams,
    pub radius: f64,
}

/// Uniform sample on the unit sphere in `dim` dimensions.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform sample in the ball of the given radius.
pub fn random_in_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = random_unit_vector(dim, rng);
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / dim as f64);
    dir.into_iter().map(|x| x * scale).collect()
}

impl Ensemble {
    pub fn new(
        dim: usize,
        encoders: Vec<f64>,
        gains: Vec<f64>,
        biases: Vec<f64>,
        lif: LifParams,
        radius: f64,
    ) -> Result<Self> {
        lif.validate()?;
        let n = gains.len();
        if n == 0 || dim == 0 {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        if biases.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: biases.len() });
        }
        if encoders.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                got: encoders.len(),
            });
        }
        if gains.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidArgument("gains must be positive".into()));
        }
        for row in encoders.chunks(dim) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("encoder norm {norm} != 1")));
            }
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
        }
        Ok(Ensemble {
            n_neurons: n,
            dim,
            encoders,
            gains,
            biases,
            lif,
            radius,
        })
    }

    /// Draws encoders uniformly on the sphere and tuning curves from `tuning`.
    pub fn sample<R: Rng + ?Sized>(
        n_neurons: usize,
        dim: usize,
        lif: LifParams,
        tuning: &TuningDistribution,
        radius: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut encoders = Vec::with_capacity(n_neurons * dim);
        let mut gains = Vec::with_capacity(n_neurons);
        let mut biases = Vec::with_capacity(n_neurons);
        for _ in 0..n_neurons {
            encoders.extend(random_unit_vector(dim, rng));
            let max_rate = rng.random_range(tuning.max_rate_low..tuning.max_rate_high);
            let intercept = rng.random_range(tuning.intercept_low..tuning.intercept_high);
            let (g, b) = gain_bias_from_tuning(max_rate, intercept, &lif)?;
            gains.push(g);
            biases.push(b);
        }
        Ensemble::new(dim, encoders, gains, biases, lif, radius)
    }

    pub fn encoder(&self, i: usize) -> &[f64] {
        &self.encoders[i * self.dim..(i + 1) * self.dim]
    }

    /// Input currents for represented value `x`.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.n_neurons];
        self.encode_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`Ensemble::encode`] writing into `out`.
    pub fn encode_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let proj: f64 = self.encoder(i).iter().zip(x).map(|(e, v)| e * v).sum();
            *o = self.gains[i] * proj / self.radius + self.biases[i];
        }
    }

    /// Rate-model activities at `x`.
    pub fn rates(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .encode(x)?
            .into_iter()
            .map(|j| lif_rate(j, &self.lif))
            .collect())
    }

    /// `e_i . v` for every neuron.
    pub fn project(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.encoder(i).iter().zip(v).map(|(e, x)| e * x).sum();
        }
    }
}

/// Runtime state of one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub voltages: Vec<f64>,
    pub refractory: Vec<f64>,
}

impl EnsembleState {
    pub fn new(n: usize) -> Self {
        EnsembleState {
            voltages: vec![0.0; n],
            refractory: vec![0.0; n],
        }
    }
}

/// Advances LIF neurons by `dt` under constant `currents`.
///
/// The membrane equation is integrated exactly over the step; spike times
/// are interpolated within the step so the refractory period starts at the
/// threshold crossing rather than the step boundary. Writes `true` into
/// `spikes[i]` for each neuron that fired.
pub fn lif_step(state: &mut EnsembleState, currents: &[f64], dt: f64, lif: &LifParams, spikes: &mut [bool]) {
    let n = state.voltages.len();
    debug_assert_eq!(currents.len(), n);
    debug_assert_eq!(spikes.len(), n);
    for i in 0..n {
        let j = currents[i];
        let refr = state.refractory[i] - dt;
        let active_dt = (dt - refr).clamp(0.0, dt);
        let mut v = state.voltages[i];
        v -= (j - v) * (-active_dt / lif.tau_rc).exp_m1();
        if v > 1.0 {
            // time from the crossing to the end of the step
            let overshoot = dt + lif.tau_rc * (-(v - 1.0) / (j - 1.0)).ln_1p();
            state.voltages[i] = 0.0;
            state.refractory[i] = lif.tau_ref + overshoot;
            spikes[i] = true;
        } else {
            state.voltages[i] = v.max(0.0);
            state.refractory[i] = refr.max(0.0);
            spikes[i] = false;
        }
    }
}

/// One step of a first-order low-pass filter.
pub fn filter_lowpass(previous: f64, input: f64, tau: f64, dt: f64) -> f64 {
    let decay = (-dt / tau).exp();
    previous * decay + input * (1.0 - decay)
}

/// First-order low-pass filter over a vector signal, with the decay factor
/// precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Lowpass {
    decay: f64,
    pub state: Vec<f64>,
}

impl Lowpass {
    pub fn new(tau: f64, dt: f64, len: usize) -> Self {
        Lowpass {
            decay: (-dt / tau).exp(),
            state: vec![0.0; len],
        }
    }

    pub fn step(&mut self, input: &[f64]) {
        let keep = self.decay;
        let take = 1.0 - keep;
        for (s, x) in self.state.iter_mut().zip(input) {
            *s = *s * keep + x * take;
        }
    }

    /// Filters a spike train: each spike is an impulse of area one.
    pub fn step_spikes(&mut self, spikes: &[bool], dt: f64) {
        let keep = self.decay;
        let kick = (1.0 - keep) / dt;
        for (s, &fired) in self.state.iter_mut().zip(spikes) {
            *s *= keep;
            if fired {
                *s += kick;
            }
        }
    }
}

/// Linear readout, `n_neurons x dim_out`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoders {
    pub n_neurons: usize,
    pub dim_out: usize,
    pub matrix: Vec<f64>,
}

impl Decoders {
    /// `sum_i d_i * a_i` written into `out`.
    pub fn decode_into(&self, activities: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &a) in self.matrix.chunks(self.dim_out).zip(activities) {
            if a != 0.0 {
                for (o, d) in out.iter_mut().zip(row) {
                    *o += d * a;
                }
            }
        }
    }

    pub fn decode(&self, activities: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_out];
        self.decode_into(activities, &mut out);
        out
    }

    pub fn negated(&self) -> Decoders {
        Decoders {
            matrix: self.matrix.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }
}

/// Default number of evaluation points used to solve decoders.
pub fn default_eval_points(n_neurons: usize, dim: usize) -> usize {
    (500 * dim).clamp(750, 2500).max(2 * n_neurons)
}

/// Ridge-regularised least-squares decoders for `target` over points drawn
/// uniformly in the ensemble's radius ball, using rate-model activities.
pub fn solve_decoders<R, F>(
    ens: &Ensemble,
    target: F,
    dim_out: usize,
    n_samples: usize,
    regularization: f64,
    rng: &mut R,
) -> Result<Decoders>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n_samples == 0 {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    let n = ens.n_neurons;
    let mut a = DMatrix::<f64>::zeros(n_samples, n);
    let mut y = DMatrix::<f64>::zeros(n_samples, dim_out);
    for s in 0..n_samples {
        let x = random_in_ball(ens.dim, ens.radius, rng);
        for (i, r) in ens.rates(&x)?.into_iter().enumerate() {
            a[(s, i)] = r;
        }
        let t = target(&x);
        if t.len() != dim_out {
            return Err(Error::DimensionMismatch {
                expected: dim_out,
                got: t.len(),
            });
        }
        for (k, v) in t.into_iter().enumerate() {
            y[(s, k)] = v;
        }
    }
    let max_act = a.max();
    if !(max_act > 0.0) {
        return Err(Error::Numeric("ensemble is silent at every evaluation point".into()));
    }
    let sigma = regularization * max_act;
    let mut gram = a.transpose() * &a;
    for i in 0..n {
        gram[(i, i)] += sigma * sigma * n_samples as f64;
    }
    let rhs = a.transpose() * y;
    let d = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("decoder Gram matrix".into()))?,
    };
    let mut matrix = Vec::with_capacity(n * dim_out);
    for i in 0..n {
        for k in 0..dim_out {
            matrix.push(d[(i, k)]);
        }
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite decoder".into()));
    }
    Ok(Decoders {
        n_neurons: n,
        dim_out,
        matrix,
    })
}
