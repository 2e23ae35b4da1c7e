//! Power-law memristor model.
//!
//! A SET pulse of amplitude `v` moves a device along
//! `R(n, v) = r_zero + r_one * n^(a + b*v)`, where `n` is the number of
//! pulses received so far. The pulse count is never stored: it is recovered
//! from the present resistance by inverting the law, so perturbing the
//! parameters changes the effective size of the next step.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kv;

/// Fitted parameters of the power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawParams {
    /// Resistance offset in ohms; the asymptote reached after many pulses.
    pub r_zero: f64,
    /// Resistance amplitude in ohms.
    pub r_one: f64,
    /// Exponent intercept.
    pub a: f64,
    /// Exponent slope in 1/V.
    pub b: f64,
}

impl Default for PowerLawParams {
    fn default() -> Self {
        PowerLawParams {
            r_zero: 200.0,
            r_one: 2.3e8,
            a: -0.093,
            b: -0.53,
        }
    }
}

impl PowerLawParams {
    pub fn new(r_zero: f64, r_one: f64, a: f64, b: f64) -> Result<Self> {
        let p = PowerLawParams { r_zero, r_one, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_zero, self.r_one, self.a, self.b]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite device parameter".into()));
        }
        if self.r_zero <= 0.0 || self.r_one <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "r_zero and r_one must be positive (got {}, {})",
                self.r_zero, self.r_one
            )));
        }
        // a + b*v is affine in v, so checking both ends of (0, 1] is enough.
        if self.a > 0.0 || self.a + self.b >= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "exponent a + b*v must be negative on (0, 1] (a={}, b={})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Exponent `c = a + b*v` for a fixed pulse voltage.
    pub fn exponent(&self, v: f64) -> f64 {
        self.a + self.b * v
    }

    /// Highest resistance on the fitted curve (n = 1).
    pub fn r_high(&self) -> f64 {
        self.r_zero + self.r_one
    }

    /// Copy of these parameters whose exponent at `v` equals `c`, keeping the
    /// slope `b` untouched.
    pub fn with_exponent_at(&self, c: f64, v: f64) -> PowerLawParams {
        PowerLawParams {
            a: c - self.b * v,
            ..*self
        }
    }

    /// Reads a `key = value` file with keys `r_zero`, `r_one`, `a`, `b`.
    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_kv_str(&text)
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut p = PowerLawParams::default();
        for (key, value) in kv::parse(text)? {
            let x: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: not a number: {value}")))?;
            match key.as_str() {
                "r_zero" => p.r_zero = x,
                "r_one" => p.r_one = x,
                "a" => p.a = x,
                "b" => p.b = x,
                other => return Err(Error::Config(format!("unknown device key `{other}`"))),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "r_zero = {}\nr_one = {}\na = {}\nb = {}\n",
            self.r_zero, self.r_one, self.a, self.b
        )
    }
}

impl fmt::Display for PowerLawParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "R(n,V) = {} + {:e} * n^({} + {}*V)",
            self.r_zero, self.r_one, self.a, self.b
        )
    }
}

fn check_voltage(v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain(format!("pulse voltage {v} outside (0, 1]")));
    }
    Ok(())
}

/// Resistance after `n` SET pulses of amplitude `v`.
pub fn resistance_after_pulses(n: f64, v: f64, params: &PowerLawParams) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("pulse count {n} < 1")));
    }
    check_voltage(v)?;
    Ok(params.r_zero + params.r_one * n.powf(params.exponent(v)))
}

/// Inverse of [`resistance_after_pulses`]: the (real) pulse count that puts
/// a device at resistance `r`.
pub fn pulse_count_from_resistance(r: f64, v: f64, params: &PowerLawParams) -> Result<f64> {
    check_voltage(v)?;
    if !(r > params.r_zero) {
        return Err(Error::Domain(format!(
            "resistance {r} at or below r_zero {}",
            params.r_zero
        )));
    }
    if r > params.r_high() {
        return Err(Error::Domain(format!(
            "resistance {r} above r_zero + r_one {} (n < 1)",
            params.r_high()
        )));
    }
    let ratio = (r - params.r_zero) / params.r_one;
    Ok(ratio.powf(1.0 / params.exponent(v)))
}

/// Parameter noise applied on every pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub fraction: f64,
    pub enabled: bool,
}

impl NoiseSpec {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction >= 0.0) || !fraction.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise fraction must be >= 0 (got {fraction})"
            )));
        }
        Ok(NoiseSpec {
            fraction,
            enabled: fraction > 0.0,
        })
    }

    pub fn disabled() -> Self {
        NoiseSpec {
            fraction: 0.0,
            enabled: false,
        }
    }

    pub fn active(&self) -> bool {
        self.enabled && self.fraction > 0.0
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            fraction: 0.15,
            enabled: true,
        }
    }
}

/// One simulated device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorState {
    pub resistance: f64,
    pub params: PowerLawParams,
}

/// Outcome of a single SET pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseOutcome {
    Applied,
    /// The noisy parameter draw was degenerate; the state was left as is.
    Skipped,
}

impl MemristorState {
    pub fn new(resistance: f64, params: PowerLawParams) -> Result<Self> {
        if !(resistance > params.r_zero) || !resistance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "initial resistance {resistance} must exceed r_zero {}",
                params.r_zero
            )));
        }
        Ok(MemristorState { resistance, params })
    }

    /// Applies one SET pulse of amplitude `v` in place.
    ///
    /// With noise active, `r_zero`, `r_one` and the exponent are each scaled
    /// by an independent `1 + fraction * g` draw before the pulse count is
    /// inverted and advanced by one.
    pub fn apply_set_pulse<R: Rng + ?Sized>(
        &mut self,
        v: f64,
        noise: &NoiseSpec,
        rng: &mut R,
    ) -> PulseOutcome {
        let c = self.params.exponent(v);
        let (r_zero, r_one, c) = if noise.active() {
            let f = noise.fraction;
            let g0: f64 = rng.sample(StandardNormal);
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            (
                self.params.r_zero * (1.0 + f * g0),
                self.params.r_one * (1.0 + f * g1),
                c * (1.0 + f * g2),
            )
        } else {
            (self.params.r_zero, self.params.r_one, c)
        };
        match advance_one_pulse(self.resistance, r_zero, r_one, c) {
            Some(r) => {
                self.resistance = r;
                PulseOutcome::Applied
            }
            None => PulseOutcome::Skipped,
        }
    }
}

/// `R(n+1)` where `n` is recovered from `r`, clamped to `n >= 1`.
///
/// Works in log space: `R(n+1) - r_zero = (r - r_zero) * (1 + 1/n)^c`, which
/// stays finite when `n` overflows for exponents close to zero.
fn advance_one_pulse(r: f64, r_zero: f64, r_one: f64, c: f64) -> Option<f64> {
    if !(c < 0.0) || !(r_one > 0.0) || !(r_zero > 0.0) {
        return None;
    }
    let excess = r - r_zero;
    if !(excess > 0.0) {
        return None;
    }
    let ln_n = (excess / r_one).ln() / c;
    if !ln_n.is_finite() {
        return None;
    }
    let next = if ln_n <= 0.0 {
        // n clamped to 1
        r_zero + r_one * 2f64.powf(c)
    } else {
        r_zero + excess * (c * (-ln_n).exp().ln_1p()).exp()
    };
    if next.is_finite() && next > r_zero {
        Some(next)
    } else {
        None
    }
}

/// Uniform draw in `[base*(1-spread), base*(1+spread)]`.
pub fn init_resistance<R: Rng + ?Sized>(rng: &mut R, base: f64, spread: f64) -> f64 {
    if spread == 0.0 {
        return base;
    }
    let lo = base * (1.0 - spread);
    let hi = base * (1.0 + spread);
    rng.random_range(lo..=hi)
}

/// Resistance measurements at one SET voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSeries {
    pub voltage: f64,
    /// `(pulse number, resistance)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Result of [`fit_power_law`], including the per-voltage exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub params: PowerLawParams,
    /// `(voltage, exponent)` pairs from the per-branch log-log regressions.
    pub exponents: Vec<(f64, f64)>,
}

/// Slope and intercept of the ordinary least-squares line through `(x, y)`.
fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::Singular("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits the power law to SET-pulse series, given the offset `r_zero`.
///
/// Each branch yields an exponent from a regression of `ln(R - r_zero)` on
/// `ln n`; the intercepts average into `ln r_one`, and a second regression of
/// exponent against voltage gives `a` and `b`.
pub fn fit_power_law(series: &[PulseSeries], r_zero: f64) -> Result<PowerLawFit> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 voltages, got {}",
            series.len()
        )));
    }
    let mut exponents = Vec::with_capacity(series.len());
    let mut ln_amplitudes = Vec::with_capacity(series.len());
    for s in series {
        if s.points.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "voltage {} has {} points, need at least 3",
                s.voltage,
                s.points.len()
            )));
        }
        let mut xs = Vec::with_capacity(s.points.len());
        let mut ys = Vec::with_capacity(s.points.len());
        for &(n, r) in &s.points {
            if !(n >= 1.0) || !(r > r_zero) {
                return Err(Error::Domain(format!(
                    "point (n={n}, R={r}) at {} V: need n >= 1 and R > r_zero",
                    s.voltage
                )));
            }
            xs.push(n.ln());
            ys.push((r - r_zero).ln());
        }
        let (slope, intercept) = linear_regression(&xs, &ys)?;
        exponents.push((s.voltage, slope));
        ln_amplitudes.push(intercept);
    }
    let vs: Vec<f64> = exponents.iter().map(|e| e.0).collect();
    let cs: Vec<f64> = exponents.iter().map(|e| e.1).collect();
    let (b, a) = linear_regression(&vs, &cs)?;
    let r_one = (ln_amplitudes.iter().sum::<f64>() / ln_amplitudes.len() as f64).exp();
    Ok(PowerLawFit {
        params: PowerLawParams { r_zero, r_one, a, b },
        exponents,
    })
}

/// Parses a CSV with header `voltage,pulse_number,resistance` into series
/// grouped by voltage (in order of first appearance).
pub fn read_pulse_csv(text: &str) -> Result<Vec<PulseSeries>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Config(format!("missing column `{name}`")))
    };
    let (iv, in_, ir) = (find("voltage")?, find("pulse_number")?, find("resistance")?);
    let mut out: Vec<PulseSeries> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad CSV row {}: {line}", lineno + 2)))
        };
        let (v, n, r) = (get(iv)?, get(in_)?, get(ir)?);
        match out.iter_mut().find(|s| s.voltage == v) {
            Some(s) => s.points.push((n, r)),
            None => out.push(PulseSeries {
                voltage: v,
                points: vec![(n, r)],
            }),
        }
    }
    Ok(out)
}
