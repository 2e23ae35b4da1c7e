//! Differential memristor pairs and the conductance-to-weight map.

use std::io::Write;

use rand::Rng;

use crate::device::{init_resistance, MemristorState, NoiseSpec, PowerLawParams, PulseOutcome};
use crate::error::{Error, Result};

/// Which device of a pair receives a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// `M+`: pulsing it raises the weight.
    Positive,
    /// `M-`: pulsing it lowers the weight.
    Negative,
}

impl Polarity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Polarity::Positive => "+",
            Polarity::Negative => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapsePair {
    pub m_plus: MemristorState,
    pub m_minus: MemristorState,
}

impl SynapsePair {
    pub fn swapped(&self) -> SynapsePair {
        SynapsePair {
            m_plus: self.m_minus,
            m_minus: self.m_plus,
        }
    }
}

/// Maps a resistance to `[0, 1]`: 1 at `r_min`, 0 at `r_max`.
///
/// Out-of-window values clamp to the nearest end; the returned flag reports
/// whether that happened.
pub fn normalized_conductance(r: f64, r_min: f64, r_max: f64) -> (f64, bool) {
    let clamped = r.clamp(r_min, r_max);
    let g = (1.0 / clamped - 1.0 / r_max) / (1.0 / r_min - 1.0 / r_max);
    (g, clamped != r)
}

/// `gain * (norm(R+) - norm(R-))`.
pub fn weight(pair: &SynapsePair, gain: f64, r_min: f64, r_max: f64) -> f64 {
    let (gp, _) = normalized_conductance(pair.m_plus.resistance, r_min, r_max);
    let (gm, _) = normalized_conductance(pair.m_minus.resistance, r_min, r_max);
    gain * (gp - gm)
}

/// Fully connected `n_post x n_pre` array of differential pairs, with the
/// resulting weight matrix kept in sync after every pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseArray {
    n_pre: usize,
    n_post: usize,
    pairs: Vec<SynapsePair>,
    weights: Vec<f64>,
    pub gain: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Pulses that pushed a device outside `[r_min, r_max]`.
    pub saturations: u64,
    /// Pulses dropped because of a degenerate noise draw.
    pub skipped_pulses: u64,
    pub applied_pulses: u64,
}

/// Parameters for [`SynapseArray::init`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayInit {
    pub base_resistance: f64,
    pub spread: f64,
    pub params: PowerLawParams,
}

impl Default for ArrayInit {
    fn default() -> Self {
        ArrayInit {
            base_resistance: 1e8,
            spread: 0.15,
            params: PowerLawParams::default(),
        }
    }
}

impl SynapseArray {
    /// Every device starts at an independent uniform draw around
    /// `base_resistance`. The normalization window is the device's own
    /// range, `[r_zero, r_zero + r_one]`.
    pub fn init<R: Rng + ?Sized>(
        n_pre: usize,
        n_post: usize,
        gain: f64,
        init: &ArrayInit,
        rng: &mut R,
    ) -> Result<Self> {
        if n_pre == 0 || n_post == 0 {
            return Err(Error::InvalidArgument("synapse array needs n_pre, n_post > 0".into()));
        }
        if !(init.base_resistance > init.params.r_zero) {
            return Err(Error::InvalidArgument(format!(
                "base resistance {} must exceed r_zero {}",
                init.base_resistance, init.params.r_zero
            )));
        }
        if !(init.spread >= 0.0 && init.spread < 1.0) {
            return Err(Error::InvalidArgument(format!("spread {} outside [0, 1)", init.spread)));
        }
        let mut pairs = Vec::with_capacity(n_pre * n_post);
        for _ in 0..n_pre * n_post {
            let rp = init_resistance(rng, init.base_resistance, init.spread);
            let rm = init_resistance(rng, init.base_resistance, init.spread);
            pairs.push(SynapsePair {
                m_plus: MemristorState::new(rp, init.params)?,
                m_minus: MemristorState::new(rm, init.params)?,
            });
        }
        Self::from_pairs(n_pre, n_post, pairs, gain, init.params.r_zero, init.params.r_high())
    }

    /// Builds an array from explicit pairs laid out row-major by post neuron.
    pub fn from_pairs(
        n_pre: usize,
        n_post: usize,
        pairs: Vec<SynapsePair>,
        gain: f64,
        r_min: f64,
        r_max: f64,
    ) -> Result<Self> {
        if pairs.len() != n_pre * n_post {
            return Err(Error::DimensionMismatch {
                expected: n_pre * n_post,
                got: pairs.len(),
            });
        }
        if !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::InvalidArgument(format!(
                "normalization window [{r_min}, {r_max}] is empty"
            )));
        }
        let weights = pairs.iter().map(|p| weight(p, gain, r_min, r_max)).collect();
        Ok(SynapseArray {
            n_pre,
            n_post,
            pairs,
            weights,
            gain,
            r_min,
            r_max,
            saturations: 0,
            skipped_pulses: 0,
            applied_pulses: 0,
        })
    }

    pub fn n_pre(&self) -> usize {
        self.n_pre
    }

    pub fn n_post(&self) -> usize {
        self.n_post
    }

    pub fn pair(&self, post: usize, pre: usize) -> &SynapsePair {
        &self.pairs[post * self.n_pre + pre]
    }

    pub fn weight_at(&self, post: usize, pre: usize) -> f64 {
        self.weights[post * self.n_pre + pre]
    }

    /// Row-major `n_post x n_pre` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Owned copy of the weight matrix, one row per post neuron.
    pub fn weights_matrix(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.n_pre).map(<[f64]>::to_vec).collect()
    }

    /// Applies one SET pulse to one device of pair `(post, pre)` and
    /// refreshes that single weight.
    pub fn pulse<R: Rng + ?Sized>(
        &mut self,
        post: usize,
        pre: usize,
        polarity: Polarity,
        voltage: f64,
        noise: &NoiseSpec,
        rng: &mut R,
    ) -> PulseOutcome {
        let idx = post * self.n_pre + pre;
        let pair = &mut self.pairs[idx];
        let device = match polarity {
            Polarity::Positive => &mut pair.m_plus,
            Polarity::Negative => &mut pair.m_minus,
        };
        let outcome = device.apply_set_pulse(voltage, noise, rng);
        match outcome {
            PulseOutcome::Applied => {
                self.applied_pulses += 1;
                let r = device.resistance;
                if r < self.r_min || r > self.r_max {
                    self.saturations += 1;
                }
                self.weights[idx] = weight(pair, self.gain, self.r_min, self.r_max);
            }
            PulseOutcome::Skipped => self.skipped_pulses += 1,
        }
        outcome
    }

    /// `out[post] = sum_pre W[post][pre] * activities[pre]`.
    pub fn apply(&self, activities: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.weights.chunks(self.n_pre)) {
            *o = row.iter().zip(activities).map(|(w, a)| w * a).sum();
        }
    }

    /// Writes the weight matrix as CSV, one row per post neuron.
    pub fn write_weights_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_matrix_csv(&mut out, &self.weights, self.n_pre)
    }
}

/// Row-major matrix as headerless CSV.
pub fn write_matrix_csv<W: Write>(out: &mut W, values: &[f64], cols: usize) -> Result<()> {
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|w| format!("{w:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R_MIN: f64 = 200.0;
    const R_MAX: f64 = 2.3e8 + 200.0;

    fn pair(rp: f64, rm: f64) -> SynapsePair {
        let p = PowerLawParams::default();
        SynapsePair {
            m_plus: MemristorState::new(rp, p).unwrap(),
            m_minus: MemristorState::new(rm, p).unwrap(),
        }
    }

    #[test]
    fn normalization_anchors() {
        assert_eq!(normalized_conductance(R_MIN, R_MIN, R_MAX), (1.0, false));
        assert_eq!(normalized_conductance(R_MAX, R_MIN, R_MAX), (0.0, false));
        // independent evaluation: (1e-8 - 1/R_MAX) / (1/200 - 1/R_MAX)
        let (g, clamped) = normalized_conductance(1e8, R_MIN, R_MAX);
        assert!(!clamped);
        assert!((g - 1.130_436_521_739_130_4e-6).abs() < 1e-18, "{g}");
    }

    #[test]
    fn normalization_clamps() {
        assert_eq!(normalized_conductance(100.0, R_MIN, R_MAX), (1.0, true));
        assert_eq!(normalized_conductance(3e8, R_MIN, R_MAX), (0.0, true));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(&pair(1e8, 1e8), 1e4, R_MIN, R_MAX), 0.0);
        let extreme = SynapsePair {
            m_plus: MemristorState {
                resistance: R_MIN,
                params: PowerLawParams::default(),
            },
            ..pair(R_MAX, R_MAX)
        };
        assert_eq!(weight(&extreme, 1e4, R_MIN, R_MAX), 1e4);
        let p = pair(0.9e8, 1.1e8);
        assert_eq!(
            weight(&p.swapped(), 1e4, R_MIN, R_MAX),
            -weight(&p, 1e4, R_MIN, R_MAX)
        );
    }

    #[test]
    fn zero_spread_gives_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let init = ArrayInit {
            spread: 0.0,
            ..ArrayInit::default()
        };
        let arr = SynapseArray::init(4, 3, 1e4, &init, &mut rng).unwrap();
        assert!(arr.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn spread_breaks_symmetry_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arr = SynapseArray::init(10, 10, 1e4, &ArrayInit::default(), &mut rng).unwrap();
        let (bound, _) = normalized_conductance(0.85e8, R_MIN, R_MAX);
        for &w in arr.weights() {
            assert_ne!(w, 0.0);
            assert!(w.abs() <= 1e4 * bound);
        }
    }

    #[test]
    fn pulses_are_local_and_signed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut arr = SynapseArray::init(4, 3, 1e4, &ArrayInit::default(), &mut rng).unwrap();
        let before = arr.weights().to_vec();
        arr.pulse(1, 2, Polarity::Positive, 0.1, &NoiseSpec::disabled(), &mut rng);
        for (k, (&b, &a)) in before.iter().zip(arr.weights()).enumerate() {
            if k == 4 + 2 {
                assert!(a > b);
            } else {
                assert_eq!(a, b);
            }
        }
        let mid = arr.weights().to_vec();
        arr.pulse(0, 0, Polarity::Negative, 0.1, &NoiseSpec::disabled(), &mut rng);
        assert!(arr.weight_at(0, 0) < mid[0]);
        assert_eq!(arr.applied_pulses, 2);
    }

    #[test]
    fn apply_is_matrix_vector_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arr = SynapseArray::init(3, 2, 1e4, &ArrayInit::default(), &mut rng).unwrap();
        let a = [10.0, 0.0, 5.0];
        let mut out = [0.0; 2];
        arr.apply(&a, &mut out);
        for post in 0..2 {
            let expected = arr.weight_at(post, 0) * 10.0 + arr.weight_at(post, 2) * 5.0;
            assert!((out[post] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_csv_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let arr = SynapseArray::init(3, 2, 1e4, &ArrayInit::default(), &mut rng).unwrap();
        let mut buf = Vec::new();
        arr.write_weights_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.split(',').count() == 3));
    }

    proptest! {
        #[test]
        fn weights_stay_within_gain(
            seed in 0u64..200, pulses in proptest::collection::vec((0usize..3, 0usize..3, any::<bool>()), 0..200),
            noise in 0.0f64..1.0
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gain = 1e4;
            let mut arr = SynapseArray::init(3, 3, gain, &ArrayInit::default(), &mut rng).unwrap();
            let spec = NoiseSpec::new(noise).unwrap();
            for (post, pre, plus) in pulses {
                let pol = if plus { Polarity::Positive } else { Polarity::Negative };
                arr.pulse(post, pre, pol, 0.1, &spec, &mut rng);
                for &w in arr.weights() {
                    prop_assert!(w.abs() <= gain);
                }
            }
        }

        #[test]
        fn noiseless_pulses_move_weights_monotonically(
            seed in 0u64..200, post in 0usize..3, pre in 0usize..3, plus in any::<bool>()
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut arr = SynapseArray::init(3, 3, 1e4, &ArrayInit::default(), &mut rng).unwrap();
            let before = arr.weight_at(post, pre);
            let pol = if plus { Polarity::Positive } else { Polarity::Negative };
            arr.pulse(post, pre, pol, 0.1, &NoiseSpec::disabled(), &mut rng);
            let after = arr.weight_at(post, pre);
            if plus { prop_assert!(after >= before) } else { prop_assert!(after <= before) }
        }
    }
}
