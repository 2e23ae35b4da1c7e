//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Verdict lines go straight to stderr, so they show up even when libtest
//! captures output. Run alone with `cargo test -p mpes-core --test acceptance`.

use std::collections::HashSet;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpes_core::config::{ExperimentConfig, Rule, TargetFunction};
use mpes_core::device::{
    fit_power_law, pulse_count_from_resistance, resistance_after_pulses, MemristorState, NoiseSpec,
    PowerLawParams, PulseSeries,
};
use mpes_core::learning::{mpes_step, MpesConfig};
use mpes_core::metrics::{self, MetricsReport};
use mpes_core::model::run;
use mpes_core::nef::{Ensemble, LifParams, TuningDistribution};
use mpes_core::signals::{sine_signal, SignalSpec, WhiteSignal};
use mpes_core::sweep::{self, run_seed};
use mpes_core::synapse::{weight, ArrayInit, SynapseArray, SynapsePair};

const MASTER_SEED: u64 = 2021;
const HEADLINE_SEEDS: usize = 20;
/// Frozen-weight runs are cheap, so the null uses the 100-run average.
const NULL_SEEDS: usize = 100;
const GAMMA_SEEDS: usize = 20;
const NOISE_SEEDS: usize = 10;
const EXPONENT_SEEDS: usize = 10;
/// Grid points within this relative distance of the minimum MSE form the
/// argmin region.
const ARGMIN_REL: f64 = 0.05;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn many_seeds(base: &ExperimentConfig, count: usize) -> Vec<MetricsReport> {
    (0..count)
        .map(|k| {
            let mut cfg = base.clone();
            cfg.seed = run_seed(MASTER_SEED, k);
            run(&cfg).unwrap().metrics
        })
        .collect()
}

fn headline_config() -> ExperimentConfig {
    ExperimentConfig {
        n_neurons: 100,
        function: TargetFunction::Identity,
        rule: Rule::Mpes,
        gamma: 1e4,
        noise: 0.15,
        ..ExperimentConfig::default()
    }
}

/// The 100-neuron sine/identity mPES runs, shared by criteria 3 and 8.
fn headline_runs() -> &'static [MetricsReport] {
    static RUNS: OnceLock<Vec<MetricsReport>> = OnceLock::new();
    RUNS.get_or_init(|| many_seeds(&headline_config(), HEADLINE_SEEDS))
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        n_neurons: 10,
        seed: MASTER_SEED,
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_1_device_round_trip() {
    let p = PowerLawParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n: f64 = rng.random_range(1.0..=1e6);
        // (0, 1]
        let v: f64 = 1.0 - rng.random_range(0.0..1.0);
        let r = resistance_after_pulses(n, v, &p).unwrap();
        let back = pulse_count_from_resistance(r, v, &p).unwrap();
        worst = worst.max((back - n).abs() / n);
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        "device round trip",
        worst <= 1e-9 && elapsed < 1.0,
        format!("worst relative error {worst:.3e}, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_2_fit_recovery() {
    let p = PowerLawParams::default();
    let series: Vec<PulseSeries> = [0.1, 0.5, 1.0]
        .iter()
        .map(|&v| PulseSeries {
            voltage: v,
            points: (1..=25)
                .map(|n| {
                    let n = n as f64;
                    (n, resistance_after_pulses(n, v, &p).unwrap())
                })
                .collect(),
        })
        .collect();
    let fit = fit_power_law(&series, 200.0).unwrap();
    let (da, db) = ((fit.params.a + 0.093).abs(), (fit.params.b + 0.53).abs());
    verdict(
        2,
        "fit recovery",
        da <= 1e-6 && db <= 1e-6,
        format!("a = {:.9}, b = {:.9}", fit.params.a, fit.params.b),
    );
}

#[test]
fn criterion_3_learning_headline() {
    let runs = headline_runs();
    let mse = mean(runs.iter().map(|m| m.mse));
    let rho = mean(runs.iter().map(|m| m.spearman_rho));
    verdict(
        3,
        "learning headline",
        (0.06..=0.24).contains(&mse) && rho >= 0.85,
        format!("{} seeds: mean MSE {mse:.4}, mean rho {rho:.4}", runs.len()),
    );
}

#[test]
fn criterion_4_no_learning_null() {
    let cfg = ExperimentConfig {
        rule: Rule::None,
        ..headline_config()
    };
    let runs = many_seeds(&cfg, NULL_SEEDS);
    let mse = mean(runs.iter().map(|m| m.mse));
    let rho = mean(runs.iter().map(|m| m.spearman_rho));
    verdict(
        4,
        "no-learning null",
        rho.abs() <= 0.10 && mse >= 0.25,
        format!("{} seeds: mean MSE {mse:.4}, mean rho {rho:.4}", runs.len()),
    );
}

#[test]
fn criterion_5_gamma_sweep_shape() {
    let table = sweep::sweep_gamma(&small_config(), &sweep::default_gammas(), GAMMA_SEEDS).unwrap();
    let best = table.best().unwrap().value;
    let rho_low = table.row(1e1).unwrap().rho;
    let summary: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:e}:{:.2}", r.value, r.ratio))
        .collect();
    verdict(
        5,
        "gamma sweep shape",
        best == 1e4 && rho_low < 0.15,
        format!(
            "argmax rho/MSE at {best:e}, rho(1e1) {rho_low:.4}; rho/MSE [{}]",
            summary.join(" ")
        ),
    );
}

#[test]
fn criterion_6_noise_plateau() {
    let table =
        sweep::sweep_noise(&small_config(), &sweep::default_noise_levels(), NOISE_SEEDS).unwrap();
    let high: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.value >= 0.3 - 1e-12)
        .map(|r| (r.value, r.mse))
        .collect();
    let plateau_ok = high.iter().all(|(_, m)| (0.35..=0.55).contains(m));
    let argmin = table.min_mse().unwrap().value;
    let argmin_ok = (0.05 - 1e-12..=0.25 + 1e-12).contains(&argmin);
    let summary: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.1}:{:.3}", r.value, r.mse))
        .collect();
    verdict(
        6,
        "noise plateau",
        plateau_ok && argmin_ok,
        format!("min MSE at {argmin:.2}; MSE by level [{}]", summary.join(" ")),
    );
}

#[test]
fn criterion_7_exponent_sensitivity() {
    let table =
        sweep::sweep_exponent(&small_config(), &sweep::default_exponents(), EXPONENT_SEEDS).unwrap();
    let region = table.argmin_region(ARGMIN_REL);
    let hits = region.iter().any(|c| (-0.20..=-0.03).contains(c));
    let min = table.min_mse().unwrap();
    let at_minus_one = table.row(-1.0).unwrap().mse;
    let summary: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.4}:{:.3}", r.value, r.mse))
        .collect();
    verdict(
        7,
        "exponent sensitivity",
        hits && at_minus_one >= 1.5 * min.mse,
        format!(
            "argmin region {region:?}, MSE(-1) {at_minus_one:.4} vs min {:.4}; [{}]",
            min.mse,
            summary.join(" ")
        ),
    );
}

#[test]
fn criterion_8_square_is_harder() {
    let identity = mean(headline_runs().iter().map(|m| m.spearman_rho));
    let cfg = ExperimentConfig {
        function: TargetFunction::Square,
        ..headline_config()
    };
    let square = mean(many_seeds(&cfg, HEADLINE_SEEDS).iter().map(|m| m.spearman_rho));
    verdict(
        8,
        "square is harder",
        identity > square,
        format!("{HEADLINE_SEEDS} seeds: rho identity {identity:.4}, rho square {square:.4}"),
    );
}

fn ensemble(n: usize, seed: u64) -> Ensemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ensemble::sample(
        n,
        3,
        LifParams::default(),
        &TuningDistribution::default(),
        1.0,
        &mut rng,
    )
    .unwrap()
}

fn array(n_pre: usize, n_post: usize, seed: u64) -> SynapseArray {
    let init = ArrayInit {
        base_resistance: 1e8,
        spread: 0.15,
        params: PowerLawParams::default(),
    };
    SynapseArray::init(n_pre, n_post, 1e4, &init, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn check_learning_rule_properties() -> Vec<String> {
    let mut failures = Vec::new();
    let mut fail = |msg: String| failures.push(msg);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noiseless = MpesConfig {
        noise: NoiseSpec::disabled(),
        ..MpesConfig::default()
    };
    for trial in 0..50u64 {
        let (n_pre, n_post) = (12, 8);
        let post = ensemble(n_post, 100 + trial);
        let acts: Vec<f64> = (0..n_pre)
            .map(|_| if rng.random_bool(0.7) { rng.random_range(0.5..300.0) } else { 0.0 })
            .collect();
        let mut arr = array(n_pre, n_post, 200 + trial);

        // gating: E = 0 leaves every device untouched
        let before = arr.clone();
        let stats = mpes_step(&noiseless, &post, &[0.0; 3], &acts, &mut arr, &mut rng, |_| {}).unwrap();
        if !stats.gated || stats.pulses != 0 || arr != before {
            fail(format!("trial {trial}: zero error changed the array"));
        }

        let error: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut eps = vec![0.0; n_post];
        post.project(&error, &mut eps);
        eps.iter_mut().for_each(|e| *e = -*e);
        let mut pairs = HashSet::new();
        let mut duplicate = false;
        mpes_step(&noiseless, &post, &error, &acts, &mut arr, &mut rng, |rec| {
            duplicate |= !pairs.insert((rec.post, rec.pre));
        })
        .unwrap();
        if duplicate {
            fail(format!("trial {trial}: a pair was pulsed twice in one step"));
        }
        for j in 0..n_post {
            for i in 0..n_pre {
                let old = before.pair(j, i);
                let new = arr.pair(j, i);
                let plus_moved = old.m_plus.resistance != new.m_plus.resistance;
                let minus_moved = old.m_minus.resistance != new.m_minus.resistance;
                let (w0, w1) = (before.weight_at(j, i), arr.weight_at(j, i));
                // one device per pair
                if plus_moved && minus_moved {
                    fail(format!("trial {trial}: both devices of ({j},{i}) moved"));
                }
                // locality: only pulsed pairs change
                if (plus_moved || minus_moved) != pairs.contains(&(j, i)) {
                    fail(format!("trial {trial}: pair ({j},{i}) changed without a pulse"));
                }
                // bounds
                if w1.abs() > arr.gain {
                    fail(format!("trial {trial}: |W| {w1} exceeds gain"));
                }
                // sign correctness
                let d = eps[j] * acts[i];
                if acts[i] > noiseless.activity_floor {
                    if d > 0.0 && !(w1 >= w0 && plus_moved) {
                        fail(format!("trial {trial}: ({j},{i}) should be facilitated"));
                    }
                    if d < 0.0 && !(w1 <= w0 && minus_moved) {
                        fail(format!("trial {trial}: ({j},{i}) should be depressed"));
                    }
                }
            }
        }
    }
    failures
}

fn check_antisymmetry() -> Vec<String> {
    let p = PowerLawParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for _ in 0..1000 {
        let pair = SynapsePair {
            m_plus: MemristorState::new(rng.random_range(201.0..2.3e8), p).unwrap(),
            m_minus: MemristorState::new(rng.random_range(201.0..2.3e8), p).unwrap(),
        };
        let w = weight(&pair, 1e4, p.r_zero, p.r_high());
        let s = weight(&pair.swapped(), 1e4, p.r_zero, p.r_high());
        if s != -w {
            failures.push(format!("swap gives {s}, expected {}", -w));
        }
    }
    failures
}

fn check_signals() -> Vec<String> {
    let mut failures = Vec::new();
    let s0 = sine_signal(0.0, 3);
    let h = 3f64.sqrt() / 2.0;
    if s0[0] != 0.0 || (s0[1] - h).abs() > 1e-12 || (s0[2] + h).abs() > 1e-12 {
        failures.push(format!("sine at t=0 is {s0:?}"));
    }
    let w = WhiteSignal::new(&SignalSpec::white(3, 60.0, 5.0, 8)).unwrap();
    for k in 0..2000 {
        let t = k as f64 * 0.0137;
        for x in sine_signal(t, 3).into_iter().chain(w.value(t)) {
            if !(-1.0..=1.0).contains(&x) {
                failures.push(format!("signal value {x} at t={t} out of range"));
            }
        }
        let (a, b) = (w.value(t), w.value(t + 60.0));
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-9) {
            failures.push(format!("white signal not periodic at t={t}"));
        }
        let (a, b) = (sine_signal(t, 3), sine_signal(t + 4.0, 3));
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-9) {
            failures.push(format!("sine not 4 s periodic at t={t}"));
        }
    }
    failures
}

fn check_spearman_invariance() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    for _ in 0..200 {
        let len = rng.random_range(2..200);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
        let warped: Vec<f64> = y.iter().map(|v| v.powi(3) + v.exp()).collect();
        let (a, b) = (
            metrics::spearman(&x, &y, 1).unwrap(),
            metrics::spearman(&x, &warped, 1).unwrap(),
        );
        if a != b {
            failures.push(format!("rho {a} changed to {b} under a monotone map"));
        }
    }
    failures
}

fn check_reproducibility() -> Vec<String> {
    let cfg = ExperimentConfig {
        sim_time: 1.5,
        learn_time: 1.0,
        seed: 77,
        ..small_config()
    };
    let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
    let mut failures = Vec::new();
    if a.metrics != b.metrics || a.final_weights != b.final_weights || a.timeseries != b.timeseries {
        failures.push("two identical runs differ".into());
    }
    let t1 = sweep::sweep_gamma(&cfg, &[1e3, 1e4], 2).unwrap();
    let t2 = sweep::sweep_gamma(&cfg, &[1e3, 1e4], 2).unwrap();
    if t1 != t2 {
        failures.push("two identical sweeps differ".into());
    }
    failures
}

#[test]
fn criterion_9_property_suite() {
    let start = Instant::now();
    let groups: [(&str, fn() -> Vec<String>); 5] = [
        ("gating, one pulse per pair, locality, bounds, sign", check_learning_rule_properties),
        ("antisymmetry", check_antisymmetry),
        ("signal contracts", check_signals),
        ("spearman invariance", check_spearman_invariance),
        ("reproducibility", check_reproducibility),
    ];
    let mut failed = Vec::new();
    for (name, check) in groups {
        let f = check();
        if !f.is_empty() {
            failed.push(format!("{name}: {} ({} total)", f[0], f.len()));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = if failed.is_empty() {
        format!("all property groups hold, {elapsed:.2} s")
    } else {
        format!("{}; {elapsed:.2} s", failed.join("; "))
    };
    verdict(9, "property suite", failed.is_empty() && elapsed < 30.0, detail);
}
