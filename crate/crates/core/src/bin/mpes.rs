use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mpes_core::config::ExperimentConfig;
use mpes_core::device::{fit_power_law, read_pulse_csv, PowerLawParams};
use mpes_core::model::{run_with, RunOptions, PULSE_CSV_HEADER};
use mpes_core::sweep::{self, SweepTable};

#[derive(Parser)]
#[command(name = "mpes", version, about = "Memristive-synapse learning simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one network.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also stream every pulse to pulses.csv (large for 100 neurons).
        #[arg(long)]
        pulses: bool,
    },
    /// Sweep the conductance-to-weight gain.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Sweep the device noise fraction.
    SweepNoise {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Sweep the device exponent at the pulse voltage.
    SweepExponent {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Compare PES, mPES and no learning over network/signal/function cells.
    CompareRules {
        #[command(flatten)]
        common: Common,
    },
    /// Fit power-law parameters to pulse measurements.
    FitDevice {
        /// CSV with columns voltage,pulse_number,resistance.
        data: PathBuf,
        #[arg(long, default_value_t = 200.0)]
        r_zero: f64,
        /// Write the fitted parameters to this key-value file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Key-value file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Key-value device parameter file (r_zero, r_one, a, b).
    #[arg(long)]
    device: Option<PathBuf>,
    #[arg(long)]
    neurons: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// identity | square
    #[arg(long)]
    function: Option<String>,
    /// sine | white
    #[arg(long)]
    learn_signal: Option<String>,
    /// sine | white
    #[arg(long)]
    test_signal: Option<String>,
    /// mpes | pes | none
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds_per_point: Option<usize>,
    /// Extra `key=value` settings, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Grid {
    /// Comma-separated grid, replacing the default.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_kv_file(p)
                .with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.device {
            cfg.device = PowerLawParams::from_kv_file(p)
                .with_context(|| format!("reading device file {}", p.display()))?;
        }
        let flags = vec![
            ("neurons", self.neurons.map(|v| v.to_string())),
            ("dim", self.dim.map(|v| v.to_string())),
            ("function", self.function.clone()),
            ("learn_signal", self.learn_signal.clone()),
            ("test_signal", self.test_signal.clone()),
            ("rule", self.rule.clone()),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("kappa", self.kappa.map(|v| v.to_string())),
            ("noise", self.noise.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("seeds_per_point", self.seeds_per_point.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn prepare_out(&self, cfg: &ExperimentConfig) -> Result<&Path> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        fs::write(self.out.join("config.txt"), cfg.to_kv_string())?;
        Ok(&self.out)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run_one(common: &Common, pulses: bool) -> Result<()> {
    let cfg = common.config()?;
    let out = common.prepare_out(&cfg)?;
    let mut pulse_file = if pulses {
        let mut w = create(&out.join("pulses.csv"))?;
        writeln!(w, "{PULSE_CSV_HEADER}")?;
        Some(w)
    } else {
        None
    };
    let opts = RunOptions {
        full_timeseries: true,
    };
    let result = run_with(
        &cfg,
        opts,
        pulse_file.as_mut().map(|w| w as &mut dyn Write),
    )?;
    if let Some(mut w) = pulse_file {
        w.flush()?;
    }

    let m = &result.metrics;
    let c = &result.counters;
    let mut w = create(&out.join("metrics.csv"))?;
    writeln!(
        w,
        "seed,rule,neurons,mse,spearman_rho,rho_over_mse,pulses_applied,pulses_skipped,saturations"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        cfg.seed,
        cfg.rule,
        cfg.n_neurons,
        m.mse,
        m.spearman_rho,
        m.ratio,
        c.pulses_applied,
        c.pulses_skipped,
        c.saturations
    )?;
    w.flush()?;
    let mut w = create(&out.join("timeseries.csv"))?;
    result.timeseries.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join("weights_final.csv"))?;
    result.write_weights_csv(&mut w)?;
    w.flush()?;

    println!(
        "mse {:.6}  rho {:.6}  rho/mse {:.4}  pulses {}  ({})",
        m.mse,
        m.spearman_rho,
        m.ratio,
        c.pulses_applied,
        out.display()
    );
    Ok(())
}

fn write_sweep(common: &Common, cfg: &ExperimentConfig, table: &SweepTable) -> Result<()> {
    let out = common.prepare_out(cfg)?;
    let mut w = create(&out.join("metrics.csv"))?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join("runs.csv"))?;
    writeln!(w, "{},seed,mse,spearman_rho", table.parameter)?;
    for (g, seed, m) in &table.runs {
        writeln!(w, "{},{},{},{}", table.rows[*g].value, seed, m.mse, m.spearman_rho)?;
    }
    w.flush()?;
    println!("{:>12} {:>10} {:>10} {:>10}", table.parameter, "mse", "rho", "rho/mse");
    for r in &table.rows {
        println!(
            "{:>12} {:>10.4} {:>10.4} {:>10.3}{}",
            r.value,
            r.mse,
            r.rho,
            r.ratio,
            if r.best { "  *" } else { "" }
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, pulses } => run_one(&common, pulses)?,
        Command::SweepGamma { common, grid } => {
            let cfg = common.config()?;
            let values = grid.values.unwrap_or_else(sweep::default_gammas);
            let table = sweep::sweep_gamma(&cfg, &values, cfg.seeds_per_point)?;
            write_sweep(&common, &cfg, &table)?;
        }
        Command::SweepNoise { common, grid } => {
            let cfg = common.config()?;
            let values = grid.values.unwrap_or_else(sweep::default_noise_levels);
            let table = sweep::sweep_noise(&cfg, &values, cfg.seeds_per_point)?;
            write_sweep(&common, &cfg, &table)?;
        }
        Command::SweepExponent { common, grid } => {
            let cfg = common.config()?;
            let values = grid.values.unwrap_or_else(sweep::default_exponents);
            let table = sweep::sweep_exponent(&cfg, &values, cfg.seeds_per_point)?;
            write_sweep(&common, &cfg, &table)?;
        }
        Command::CompareRules { common } => {
            let cfg = common.config()?;
            let cells = match common.neurons {
                Some(n) => sweep::default_cells()
                    .into_iter()
                    .filter(|c| c.neurons == n)
                    .collect(),
                None => sweep::default_cells(),
            };
            let rows = sweep::compare_rules(&cfg, &cells, cfg.seeds_per_point)?;
            let out = common.prepare_out(&cfg)?;
            let mut w = create(&out.join("metrics.csv"))?;
            sweep::write_compare_csv(&rows, &mut w)?;
            w.flush()?;
            sweep::write_compare_csv(&rows, std::io::stdout().lock())?;
        }
        Command::FitDevice { data, r_zero, out } => {
            let text = fs::read_to_string(&data)
                .with_context(|| format!("reading {}", data.display()))?;
            let series = read_pulse_csv(&text)?;
            if series.is_empty() {
                bail!("{} holds no measurements", data.display());
            }
            let fit = fit_power_law(&series, r_zero)?;
            for (v, c) in &fit.exponents {
                println!("# v = {v}: exponent {c}");
            }
            let kv = fit.params.to_kv_string();
            print!("{kv}");
            if let Some(path) = out {
                fs::write(&path, kv).with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}
