//! Parameter sweeps and the rule comparison. Every grid point is run with
//! the same seed list, so differences between points are paired.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, Rule, TargetFunction};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::model::{derive_seed, run};
use crate::signals::SignalKind;

/// Seed of the `k`-th repetition under master seed `master`.
pub fn run_seed(master: u64, k: usize) -> u64 {
    derive_seed(master, 0x5EED_0000 + k as u64)
}

/// `{10^1, ..., 10^6}`.
pub fn default_gammas() -> Vec<f64> {
    (1..=6).map(|e| 10f64.powi(e)).collect()
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                let f = k as f64 / (count - 1) as f64;
                lo * (1.0 - f) + hi * f
            })
            .collect(),
    }
}

pub fn default_noise_levels() -> Vec<f64> {
    linspace(0.0, 1.0, 11)
}

pub fn default_exponents() -> Vec<f64> {
    linspace(-1.0, -0.01, 21)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mse: f64,
    pub rho: f64,
    /// Mean rho over mean MSE.
    pub ratio: f64,
    pub seeds: usize,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: &'static str,
    pub rows: Vec<SweepRow>,
    /// Per run: `(row index, seed, metrics)`.
    pub runs: Vec<(usize, u64, MetricsReport)>,
}

impl SweepTable {
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.best)
    }

    pub fn row(&self, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value)
    }

    pub fn min_mse(&self) -> Option<&SweepRow> {
        self.rows.iter().min_by(|a, b| a.mse.total_cmp(&b.mse))
    }

    /// Grid values whose mean MSE is within `rel` of the minimum.
    pub fn argmin_region(&self, rel: f64) -> Vec<f64> {
        let Some(min) = self.min_mse().map(|r| r.mse) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| r.mse <= min * (1.0 + rel))
            .map(|r| r.value)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},mse,rho,rho_over_mse,seeds,best", self.parameter)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.value, r.mse, r.rho, r.ratio, r.seeds, r.best as u8
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Best {
    MaxRatio,
    MinMse,
}

fn sweep<F>(
    base: &ExperimentConfig,
    parameter: &'static str,
    values: &[f64],
    seeds: usize,
    best: Best,
    apply: F,
) -> Result<SweepTable>
where
    F: Fn(&mut ExperimentConfig, f64) + Sync,
{
    if values.is_empty() || seeds == 0 {
        return Err(Error::InvalidArgument("sweep needs values and seeds".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|g| (0..seeds).map(move |k| (g, k)))
        .collect();
    let results: Vec<(usize, u64, MetricsReport)> = jobs
        .par_iter()
        .map(|&(g, k)| {
            let mut cfg = base.clone();
            apply(&mut cfg, values[g]);
            cfg.seed = run_seed(base.seed, k);
            run(&cfg).map(|r| (g, cfg.seed, r.metrics))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<SweepRow> = values
        .iter()
        .enumerate()
        .map(|(g, &value)| {
            let own: Vec<&MetricsReport> =
                results.iter().filter(|r| r.0 == g).map(|r| &r.2).collect();
            let n = own.len() as f64;
            let mse = own.iter().map(|m| m.mse).sum::<f64>() / n;
            let rho = own.iter().map(|m| m.spearman_rho).sum::<f64>() / n;
            SweepRow {
                value,
                mse,
                rho,
                ratio: rho / mse,
                seeds: own.len(),
                best: false,
            }
        })
        .collect();
    let pick = match best {
        Best::MaxRatio => rows
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio)),
        Best::MinMse => rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.mse.total_cmp(&b.1.mse)),
    }
    .map(|(i, _)| i);
    if let Some(i) = pick {
        rows[i].best = true;
    }
    Ok(SweepTable {
        parameter,
        rows,
        runs: results,
    })
}

/// Marks the gain with the highest rho/MSE.
pub fn sweep_gamma(base: &ExperimentConfig, values: &[f64], seeds: usize) -> Result<SweepTable> {
    sweep(base, "gamma", values, seeds, Best::MaxRatio, |c, v| c.gamma = v)
}

/// Marks the noise level with the lowest MSE.
pub fn sweep_noise(base: &ExperimentConfig, levels: &[f64], seeds: usize) -> Result<SweepTable> {
    sweep(base, "noise", levels, seeds, Best::MinMse, |c, v| c.noise = v)
}

/// Overrides the device exponent at the pulse voltage; marks the lowest MSE.
pub fn sweep_exponent(base: &ExperimentConfig, values: &[f64], seeds: usize) -> Result<SweepTable> {
    if let Some(c) = values.iter().find(|c| !(**c < 0.0)) {
        return Err(Error::InvalidArgument(format!("exponent {c} must be negative")));
    }
    sweep(base, "exponent", values, seeds, Best::MinMse, |c, v| {
        c.exponent = Some(v)
    })
}

/// One cell of the rule comparison grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub neurons: usize,
    pub learn_signal: SignalKind,
    pub function: TargetFunction,
    pub test_signal: SignalKind,
}

/// All 16 combinations of {10, 100} neurons, both signals and both functions.
pub fn default_cells() -> Vec<Cell> {
    let mut cells = Vec::new();
    for neurons in [10, 100] {
        for learn_signal in [SignalKind::Sine, SignalKind::White] {
            for function in [TargetFunction::Identity, TargetFunction::Square] {
                for test_signal in [SignalKind::Sine, SignalKind::White] {
                    cells.push(Cell {
                        neurons,
                        learn_signal,
                        function,
                        test_signal,
                    });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub cell: Cell,
    pub rule: Rule,
    pub mse: f64,
    pub rho: f64,
    pub ratio: f64,
    pub seeds: usize,
}

/// Runs PES without device noise, mPES at the base noise level, and the
/// frozen network on every cell, all from the same seeds.
pub fn compare_rules(base: &ExperimentConfig, cells: &[Cell], seeds: usize) -> Result<Vec<CompareRow>> {
    if cells.is_empty() || seeds == 0 {
        return Err(Error::InvalidArgument("comparison needs cells and seeds".into()));
    }
    let rules = [Rule::Pes, Rule::Mpes, Rule::None];
    let jobs: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..rules.len()).flat_map(move |r| (0..seeds).map(move |k| (c, r, k))))
        .collect();
    let results: Vec<MetricsReport> = jobs
        .par_iter()
        .map(|&(c, r, k)| {
            let cell = cells[c];
            let mut cfg = base.clone();
            cfg.n_neurons = cell.neurons;
            cfg.learn_signal = cell.learn_signal;
            cfg.function = cell.function;
            cfg.test_signal = cell.test_signal;
            cfg.rule = rules[r];
            cfg.seed = run_seed(base.seed, k);
            run(&cfg).map(|res| res.metrics)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (chunk, job) in results.chunks(seeds).zip(jobs.iter().step_by(seeds)) {
        let n = chunk.len() as f64;
        let mse = chunk.iter().map(|m| m.mse).sum::<f64>() / n;
        let rho = chunk.iter().map(|m| m.spearman_rho).sum::<f64>() / n;
        rows.push(CompareRow {
            cell: cells[job.0],
            rule: rules[job.1],
            mse,
            rho,
            ratio: rho / mse,
            seeds,
        });
    }
    Ok(rows)
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], mut out: W) -> Result<()> {
    writeln!(out, "neurons,learn_signal,function,test_signal,rule,mse,rho,rho_over_mse,seeds")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.cell.neurons,
            r.cell.learn_signal,
            r.cell.function,
            r.cell.test_signal,
            r.rule,
            r.mse,
            r.rho,
            r.ratio,
            r.seeds
        )?;
    }
    Ok(())
}
