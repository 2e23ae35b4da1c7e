//! The three-ensemble learning network and its time-stepped simulation.
//!
//! `pre` encodes the input, `post` receives it through the learned
//! connection, and `error` represents `y - f(x)` until `learn_time`, after
//! which it is inhibited and learning stops.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Rule};
use crate::device::NoiseSpec;
use crate::error::Result;
use crate::learning::{self, MpesConfig, PulseRecord};
use crate::metrics::{self, MetricsReport};
use crate::nef::{self, Decoders, Ensemble, EnsembleState, LifParams, Lowpass, TuningDistribution};
use crate::signals::Signal;
use crate::synapse::{ArrayInit, SynapseArray};

/// Ridge regularization for every decoder solve.
pub const DECODER_REG: f64 = 0.1;

/// Seconds after `learn_time` by which the error ensemble has gone quiet.
pub const SETTLE_TIME: f64 = 0.5;

/// Derives an independent seed for `tag` from a master seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(master ^ splitmix(tag))
}

mod tag {
    pub const PRE: u64 = 1;
    pub const POST: u64 = 2;
    pub const ERROR: u64 = 3;
    pub const DECODERS: u64 = 4;
    pub const SYNAPSES: u64 = 5;
    pub const PULSES: u64 = 6;
    pub const LEARN_SIGNAL: u64 = 7;
    pub const TEST_SIGNAL: u64 = 8;
}

fn rng_for(seed: u64, t: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, t))
}

/// Learned connection weights, row-major `n_post x n_pre`.
#[derive(Debug, Clone)]
pub enum LearnedWeights {
    Memristive(SynapseArray),
    Continuous(Vec<f64>),
}

impl LearnedWeights {
    pub fn weights(&self) -> &[f64] {
        match self {
            LearnedWeights::Memristive(arr) => arr.weights(),
            LearnedWeights::Continuous(w) => w,
        }
    }
}

/// Everything built from a config before the first step.
#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: ExperimentConfig,
    pub pre: Ensemble,
    pub post: Ensemble,
    pub error: Ensemble,
    /// `f(x)` read out of `pre`.
    pub pre_f: Decoders,
    pub post_id: Decoders,
    pub error_id: Decoders,
    pub weights: LearnedWeights,
    learn_signal: Signal,
    test_signal: Signal,
}

impl Model {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let lif = LifParams::default();
        let tuning = TuningDistribution::default();
        let (n, d) = (cfg.n_neurons, cfg.dim);
        let pre = Ensemble::sample(n, d, lif, &tuning, 1.0, &mut rng_for(cfg.seed, tag::PRE))?;
        let post = Ensemble::sample(n, d, lif, &tuning, 1.0, &mut rng_for(cfg.seed, tag::POST))?;
        let error = Ensemble::sample(n, d, lif, &tuning, 1.0, &mut rng_for(cfg.seed, tag::ERROR))?;

        let mut rng = rng_for(cfg.seed, tag::DECODERS);
        let pts = nef::default_eval_points(n, d);
        let func = cfg.function;
        let pre_f = nef::solve_decoders(&pre, |x| func.apply(x), d, pts, DECODER_REG, &mut rng)?;
        let identity = |x: &[f64]| x.to_vec();
        let post_id = nef::solve_decoders(&post, identity, d, pts, DECODER_REG, &mut rng)?;
        let error_id = nef::solve_decoders(&error, identity, d, pts, DECODER_REG, &mut rng)?;

        let init = ArrayInit {
            base_resistance: cfg.init_resistance,
            spread: cfg.init_spread,
            params: cfg.effective_device(),
        };
        let arr = SynapseArray::init(n, n, cfg.gamma, &init, &mut rng_for(cfg.seed, tag::SYNAPSES))?;
        let weights = match cfg.rule {
            Rule::Pes => LearnedWeights::Continuous(arr.weights().to_vec()),
            Rule::Mpes | Rule::None => LearnedWeights::Memristive(arr),
        };

        let learn_signal = Signal::new(&cfg.signal_spec(
            cfg.learn_signal,
            derive_seed(cfg.seed, tag::LEARN_SIGNAL),
        ))?;
        let test_signal = Signal::new(&cfg.signal_spec(
            cfg.test_signal,
            derive_seed(cfg.seed, tag::TEST_SIGNAL),
        ))?;
        Ok(Model {
            cfg: cfg.clone(),
            pre,
            post,
            error,
            pre_f,
            post_id,
            error_id,
            weights,
            learn_signal,
            test_signal,
        })
    }
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub pulses_applied: u64,
    pub pulses_skipped: u64,
    pub saturations: u64,
    /// Steps suppressed by the error threshold.
    pub gated_steps: u64,
    /// Pulses issued after `learn_time + SETTLE_TIME`.
    pub pulses_after_settle: u64,
    pub error_spikes_before: u64,
    pub error_spikes_after: u64,
}

/// One step's probe values, `dim` each.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub t: f64,
    pub reference: Vec<f64>,
    pub estimate: Vec<f64>,
    pub error: Vec<f64>,
}

/// Stateful simulator over a built [`Model`].
pub struct Simulation {
    pub model: Model,
    step: usize,
    x: Vec<f64>,
    input_filter: Lowpass,
    pre_state: EnsembleState,
    post_state: EnsembleState,
    error_state: EnsembleState,
    pre_spikes: Vec<bool>,
    post_spikes: Vec<bool>,
    error_spikes: Vec<bool>,
    pre_syn: Lowpass,
    post_syn: Lowpass,
    error_syn: Lowpass,
    pre_probe: Lowpass,
    post_probe: Lowpass,
    currents: Vec<f64>,
    decoded: Vec<f64>,
    error_value: Vec<f64>,
    mpes: MpesConfig,
    pulse_rng: ChaCha8Rng,
    /// Replace the learned connection by a direct encoding of the input.
    direct_post: bool,
    pub counters: RunCounters,
}

impl Simulation {
    pub fn new(model: Model) -> Result<Self> {
        let cfg = &model.cfg;
        let (n, d, dt) = (cfg.n_neurons, cfg.dim, cfg.dt);
        let noise = if cfg.noise > 0.0 {
            NoiseSpec::new(cfg.noise)?
        } else {
            NoiseSpec::disabled()
        };
        let mpes = MpesConfig {
            error_threshold: cfg.error_threshold,
            pulse_voltage: cfg.pulse_voltage,
            noise,
            ..MpesConfig::default()
        };
        mpes.validate()?;
        Ok(Simulation {
            step: 0,
            x: vec![0.0; d],
            input_filter: Lowpass::new(cfg.synapse_tau, dt, d),
            pre_state: EnsembleState::new(n),
            post_state: EnsembleState::new(n),
            error_state: EnsembleState::new(n),
            pre_spikes: vec![false; n],
            post_spikes: vec![false; n],
            error_spikes: vec![false; n],
            pre_syn: Lowpass::new(cfg.synapse_tau, dt, n),
            post_syn: Lowpass::new(cfg.synapse_tau, dt, n),
            error_syn: Lowpass::new(cfg.synapse_tau, dt, n),
            pre_probe: Lowpass::new(cfg.probe_tau, dt, n),
            post_probe: Lowpass::new(cfg.probe_tau, dt, n),
            currents: vec![0.0; n],
            decoded: vec![0.0; d],
            error_value: vec![0.0; d],
            mpes,
            pulse_rng: rng_for(cfg.seed, tag::PULSES),
            direct_post: false,
            counters: RunCounters::default(),
            model,
        })
    }

    /// Drives `post` straight from the filtered input instead of through
    /// the learned weights.
    pub fn set_direct_post(&mut self, on: bool) {
        self.direct_post = on;
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.model.cfg.dt
    }

    /// Advances one `dt`. `on_pulse` receives `(step, record)` for every
    /// mPES pulse.
    pub fn step(&mut self, on_pulse: &mut dyn FnMut(usize, PulseRecord)) -> Result<StepOutput> {
        let cfg = &self.model.cfg;
        let dt = cfg.dt;
        let k = self.step;
        let t = (k + 1) as f64 * dt;
        let learning = k < cfg.learn_steps();

        // input and pre
        let signal = if learning {
            &self.model.learn_signal
        } else {
            &self.model.test_signal
        };
        signal.value_into(t, &mut self.x);
        self.input_filter.step(&self.x);
        let pre = &self.model.pre;
        pre.encode_into(&self.input_filter.state, &mut self.currents);
        nef::lif_step(&mut self.pre_state, &self.currents, dt, &pre.lif, &mut self.pre_spikes);
        self.pre_syn.step_spikes(&self.pre_spikes, dt);
        self.pre_probe.step_spikes(&self.pre_spikes, dt);

        // post through the learned connection
        let post = &self.model.post;
        if self.direct_post {
            post.encode_into(&self.input_filter.state, &mut self.currents);
        } else {
            let acts = &self.pre_syn.state;
            let w = self.model.weights.weights();
            for ((c, row), (g, b)) in self
                .currents
                .iter_mut()
                .zip(w.chunks(cfg.n_neurons))
                .zip(post.gains.iter().zip(&post.biases))
            {
                let drive: f64 = row.iter().zip(acts).map(|(w, a)| w * a).sum();
                *c = if cfg.scale_by_gain { g * drive + b } else { drive + b };
            }
        }
        nef::lif_step(&mut self.post_state, &self.currents, dt, &post.lif, &mut self.post_spikes);
        self.post_syn.step_spikes(&self.post_spikes, dt);
        self.post_probe.step_spikes(&self.post_spikes, dt);

        // error = y - f(x), inhibited once learning ends
        let err = &self.model.error;
        self.model.post_id.decode_into(&self.post_syn.state, &mut self.error_value);
        self.model.pre_f.decode_into(&self.pre_syn.state, &mut self.decoded);
        for (e, f) in self.error_value.iter_mut().zip(&self.decoded) {
            *e -= f;
        }
        err.encode_into(&self.error_value, &mut self.currents);
        if !learning {
            for (c, g) in self.currents.iter_mut().zip(&err.gains) {
                *c -= cfg.inhibition * g;
            }
        }
        nef::lif_step(&mut self.error_state, &self.currents, dt, &err.lif, &mut self.error_spikes);
        self.error_syn.step_spikes(&self.error_spikes, dt);
        self.model.error_id.decode_into(&self.error_syn.state, &mut self.error_value);
        let fired = self.error_spikes.iter().filter(|&&s| s).count() as u64;
        if learning {
            self.counters.error_spikes_before += fired;
        } else {
            self.counters.error_spikes_after += fired;
        }

        // learning rule
        let after_settle = t > cfg.learn_time + SETTLE_TIME;
        match &mut self.model.weights {
            LearnedWeights::Memristive(arr) if cfg.rule == Rule::Mpes => {
                let counters = &mut self.counters;
                let stats = learning::mpes_step(
                    &self.mpes,
                    post,
                    &self.error_value,
                    &self.pre_syn.state,
                    arr,
                    &mut self.pulse_rng,
                    |rec| on_pulse(k, rec),
                )?;
                if stats.gated {
                    counters.gated_steps += 1;
                }
                if after_settle {
                    counters.pulses_after_settle += stats.pulses as u64;
                }
                counters.pulses_applied = arr.applied_pulses;
                counters.pulses_skipped = arr.skipped_pulses;
                counters.saturations = arr.saturations;
            }
            LearnedWeights::Continuous(w) => {
                // per-step rate scaled by dt / n_pre
                let kappa = cfg.kappa * dt / cfg.n_neurons as f64;
                let eps = learning::local_error(post, &self.error_value)?;
                let acts = &self.pre_syn.state;
                for ((row, e), g) in w.chunks_mut(cfg.n_neurons).zip(&eps).zip(&post.gains) {
                    let s = kappa * g * e;
                    row.iter_mut().zip(acts).for_each(|(w, a)| *w += s * a);
                }
            }
            LearnedWeights::Memristive(_) => {}
        }

        // probes
        let mut reference = vec![0.0; cfg.dim];
        let mut estimate = vec![0.0; cfg.dim];
        self.model.pre_f.decode_into(&self.pre_probe.state, &mut reference);
        self.model.post_id.decode_into(&self.post_probe.state, &mut estimate);
        self.step += 1;
        Ok(StepOutput {
            t,
            reference,
            estimate,
            error: self.error_value.clone(),
        })
    }
}

/// Probe traces, row-major `T x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeseries {
    pub dim: usize,
    pub t: Vec<f64>,
    pub reference: Vec<f64>,
    pub estimate: Vec<f64>,
}

impl Timeseries {
    fn new(dim: usize) -> Self {
        Timeseries {
            dim,
            t: Vec::new(),
            reference: Vec::new(),
            estimate: Vec::new(),
        }
    }

    fn push(&mut self, out: &StepOutput) {
        self.t.push(out.t);
        self.reference.extend_from_slice(&out.reference);
        self.estimate.extend_from_slice(&out.estimate);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Writes `t,ref_0..,est_0..` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|d| format!("ref_{d}")));
        header.extend((0..self.dim).map(|d| format!("est_{d}")));
        writeln!(out, "{}", header.join(","))?;
        for (k, t) in self.t.iter().enumerate() {
            let span = k * self.dim..(k + 1) * self.dim;
            let mut line = format!("{t}");
            for v in self.reference[span.clone()].iter().chain(&self.estimate[span]) {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// What to keep from a run beyond the metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep probe traces for the whole run, not just the test window.
    pub full_timeseries: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub metrics: MetricsReport,
    /// Test window always; the whole run with `full_timeseries`.
    pub timeseries: Timeseries,
    pub counters: RunCounters,
    pub initial_weights: Vec<f64>,
    /// Snapshot at `learn_time + SETTLE_TIME`.
    pub settled_weights: Vec<f64>,
    pub final_weights: Vec<f64>,
}

impl RunResult {
    pub fn write_weights_csv<W: Write>(&self, mut out: W) -> Result<()> {
        crate::synapse::write_matrix_csv(&mut out, &self.final_weights, self.config.n_neurons)
    }
}

/// Runs one configuration end to end, optionally streaming pulse records.
pub fn run_with(
    cfg: &ExperimentConfig,
    opts: RunOptions,
    mut pulse_sink: Option<&mut dyn Write>,
) -> Result<RunResult> {
    let model = Model::build(cfg)?;
    let initial_weights = model.weights.weights().to_vec();
    let mut sim = Simulation::new(model)?;
    let learn_steps = cfg.learn_steps();
    let settle_step = ((cfg.learn_time + SETTLE_TIME) / cfg.dt).round() as usize;
    let mut series = Timeseries::new(cfg.dim);
    let mut settled_weights = None;
    let mut io_error: Option<std::io::Error> = None;
    for k in 0..cfg.steps() {
        let mut sink = |step: usize, rec: PulseRecord| {
            if let (Some(w), None) = (pulse_sink.as_mut(), io_error.as_ref()) {
                if let Err(e) = writeln!(w, "{step},{},{},{}", rec.pre, rec.post, rec.polarity.as_str()) {
                    io_error = Some(e);
                }
            }
        };
        let out = sim.step(&mut sink)?;
        if opts.full_timeseries || k >= learn_steps {
            series.push(&out);
        }
        if k + 1 == settle_step.min(cfg.steps()) {
            settled_weights = Some(sim.model.weights.weights().to_vec());
        }
    }
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let test_start = series.len() - cfg.test_steps();
    let span = test_start * cfg.dim..;
    let metrics = metrics::report(&series.reference[span.clone()], &series.estimate[span], cfg.dim)?;
    let final_weights = sim.model.weights.weights().to_vec();
    Ok(RunResult {
        config: cfg.clone(),
        metrics,
        timeseries: series,
        counters: sim.counters,
        initial_weights,
        settled_weights: settled_weights.unwrap_or_else(|| final_weights.clone()),
        final_weights,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_with(cfg, RunOptions::default(), None)
}

/// Header line for streamed pulse records.
pub const PULSE_CSV_HEADER: &str = "timestep,pre,post,polarity";
