//! Monte Carlo experiment runner.
//!
//! Every trial draws one channel realization, designs each enabled method's
//! beamformers once (none of the designs depend on the SNR) and evaluates
//! the subcarrier-averaged sum-rate at every SNR of the grid.
//!
//! Trials are independent: trial `t` seeds its own generators from
//! [`trial_seed`]`(seed, t)`, so results do not depend on the number of
//! worker threads or on scheduling order.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_channel, square_side, ChannelParams};
use crate::error::{Error, Result};
use crate::metrics::{avg_cov_analog, hybrid_gains, optimal_gains, LinkBudget, RateResult, StreamGains};
use crate::tucker::{design_digital, design_hybrid, AlsConfig, AlsReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tucker,
    Optimal,
    AvgCov,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tucker, Method::Optimal, Method::AvgCov];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tucker => "tucker",
            Method::Optimal => "optimal",
            Method::AvgCov => "avgcov",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tucker" => Ok(Method::Tucker),
            "optimal" => Ok(Method::Optimal),
            "avgcov" => Ok(Method::AvgCov),
            other => Err(Error::config(format!(
                "unknown method '{other}' (expected tucker, optimal or avgcov)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Data streams per subcarrier; also the RF chain count at both ends.
    pub n_s: usize,
    pub m_subcarriers: usize,
    pub n_clusters: usize,
    pub n_rays: usize,
    pub angular_spread_deg: f64,
    pub spacing: f64,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub n_ite: usize,
    pub methods: Vec<Method>,
}

impl Default for SimConfig {
    /// Desk-scale setup: 4×4 arrays at both ends, 64 subcarriers, 2 streams.
    fn default() -> Self {
        Self {
            n_tx: 16,
            n_rx: 16,
            n_s: 2,
            m_subcarriers: 64,
            n_clusters: 5,
            n_rays: 10,
            angular_spread_deg: 10.0,
            spacing: 0.5,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            trials: 50,
            seed: 1,
            eps: 1.0,
            n_ite: 10,
            methods: Method::ALL.to_vec(),
        }
    }
}

impl SimConfig {
    /// Full-size setup: 8×8 arrays, 1024 subcarriers, 4 streams, 1000 trials.
    pub fn full_scale() -> Self {
        Self {
            n_tx: 64,
            n_rx: 64,
            n_s: 4,
            m_subcarriers: 1024,
            trials: 1000,
            ..Self::default()
        }
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_subcarriers: self.m_subcarriers,
            n_clusters: self.n_clusters,
            n_rays: self.n_rays,
            angular_spread_deg: self.angular_spread_deg,
            spacing: self.spacing,
        }
    }

    pub fn als_config(&self) -> AlsConfig {
        AlsConfig {
            eps: self.eps,
            max_iters: self.n_ite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel_params().validate()?;
        if self.n_s == 0 || self.n_s > self.n_tx.min(self.n_rx) {
            return Err(Error::config(format!(
                "n_s = {} must be between 1 and min(n_tx, n_rx) = {}",
                self.n_s,
                self.n_tx.min(self.n_rx)
            )));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("SNR grid is empty"));
        }
        if let Some(bad) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::config(format!("SNR value {bad} is not finite")));
        }
        if self.methods.is_empty() {
            return Err(Error::config("no methods selected"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::config(format!("method '{m}' listed twice")));
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::config(format!("eps must be finite and non-negative, got {}", self.eps)));
        }
        Ok(())
    }
}

/// How a run executes; none of these affect the numbers produced except
/// that timings are only recorded when asked for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// Record wall-clock design/evaluation times per method.
    pub timings: bool,
}

/// SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t`: the `(t+1)`-th output of a SplitMix64 generator whose
/// state starts at `master`.
///
/// Within a trial the channel is drawn from `ChaCha8Rng` stream 0 and the
/// ALS initialization from stream 1 of the same seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Full per-trial output of one method.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    /// One entry per SNR of the grid, in grid order.
    pub rates: Vec<RateResult>,
    pub als: Option<AlsReport>,
    pub design_ms: Option<f64>,
    pub eval_ms: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrialDetail {
    pub trial: usize,
    pub seed: u64,
    pub methods: Vec<MethodOutcome>,
}

fn elapsed_ms(start: Option<Instant>) -> Option<f64> {
    start.map(|s| s.elapsed().as_secs_f64() * 1e3)
}

/// Runs one trial, keeping per-subcarrier rates.
pub fn run_trial(config: &SimConfig, trial: usize, timings: bool) -> Result<TrialDetail> {
    let seed = trial_seed(config.seed, trial as u64);
    let mut channel_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut design_rng = ChaCha8Rng::seed_from_u64(seed);
    design_rng.set_stream(1);

    let h = generate_channel(&config.channel_params(), &mut channel_rng)?;
    let budgets: Vec<LinkBudget> = config.snr_db.iter().map(|&db| LinkBudget::from_snr_db(db)).collect();
    let clock = || timings.then(Instant::now);

    let mut methods = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = clock();
        let (gains, als): (Vec<StreamGains>, Option<AlsReport>) = match method {
            Method::Tucker => {
                let (bf, report) = design_hybrid(&h, config.n_s, &config.als_config(), &mut design_rng)?;
                (hybrid_gains(&h, &bf)?, Some(report))
            }
            Method::Optimal => (optimal_gains(&h, config.n_s)?, None),
            Method::AvgCov => {
                let analog = avg_cov_analog(&h, config.n_s)?;
                let bf = design_digital(&h, &analog, config.n_s)?;
                (hybrid_gains(&h, &bf)?, None)
            }
        };
        let design_ms = elapsed_ms(start);
        let start = clock();
        let rates = budgets.iter().map(|b| RateResult::from_gains(&gains, b)).collect();
        let eval_ms = elapsed_ms(start);
        methods.push(MethodOutcome {
            method,
            rates,
            als,
            design_ms,
            eval_ms,
        });
    }
    Ok(TrialDetail { trial, seed, methods })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrRate {
    pub snr_db: f64,
    pub avg_sum_rate_bps_hz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub rates: Vec<SnrRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub als_mean_iters: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub als_converged_frac: Option<f64>,
    /// Iteration count of each designed stream.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub als_iterations: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub als_converged: Option<Vec<bool>>,
    pub design_ms: Option<f64>,
    pub eval_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub methods: Vec<MethodResult>,
}

impl TrialResult {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

impl TrialDetail {
    pub fn summary(&self, snr_db: &[f64]) -> TrialResult {
        let methods = self
            .methods
            .iter()
            .map(|o| MethodResult {
                method: o.method,
                rates: snr_db
                    .iter()
                    .zip(&o.rates)
                    .map(|(&snr_db, r)| SnrRate {
                        snr_db,
                        avg_sum_rate_bps_hz: r.average(),
                    })
                    .collect(),
                als_mean_iters: o.als.as_ref().map(AlsReport::mean_iterations),
                als_converged_frac: o.als.as_ref().map(AlsReport::converged_fraction),
                als_iterations: o.als.as_ref().map(|a| a.streams.iter().map(|s| s.iterations).collect()),
                als_converged: o.als.as_ref().map(|a| a.streams.iter().map(|s| s.converged).collect()),
                design_ms: o.design_ms,
                eval_ms: o.eval_ms,
            })
            .collect();
        TrialResult {
            trial: self.trial,
            seed: self.seed,
            methods,
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

/// Runs every trial in parallel and returns the full details in trial order.
pub fn run_trials(config: &SimConfig, exec: &ExecOptions) -> Result<Vec<TrialDetail>> {
    config.validate()?;
    pool(exec.workers)?.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t, exec.timings))
            .collect()
    })
}

pub fn run_experiment_with(config: &SimConfig, exec: &ExecOptions) -> Result<Vec<TrialResult>> {
    Ok(run_trials(config, exec)?
        .iter()
        .map(|d| d.summary(&config.snr_db))
        .collect())
}

pub fn run_experiment(config: &SimConfig) -> Result<Vec<TrialResult>> {
    run_experiment_with(config, &ExecOptions::default())
}

pub const CSV_HEADER: &str =
    "trial,seed,method,snr_db,avg_sum_rate_bps_hz,als_mean_iters,als_converged_frac,design_ms,eval_ms";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_rows<W: Write>(w: &mut W, results: &[TrialResult], suffix: &str) -> Result<()> {
    for r in results {
        for m in &r.methods {
            for rate in &m.rates {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}{}",
                    r.trial,
                    r.seed,
                    m.method,
                    rate.snr_db,
                    rate.avg_sum_rate_bps_hz,
                    opt(m.als_mean_iters),
                    opt(m.als_converged_frac),
                    opt(m.design_ms),
                    opt(m.eval_ms),
                    suffix
                )?;
            }
        }
    }
    Ok(())
}

/// One row per (trial, method, SNR). Unmeasured fields are left empty.
pub fn write_csv<W: Write>(mut w: W, results: &[TrialResult]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    write_rows(&mut w, results, "")
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a SimConfig,
    trials: &'a [TrialResult],
}

pub fn write_json<W: Write>(w: W, config: &SimConfig, results: &[TrialResult]) -> Result<()> {
    serde_json::to_writer_pretty(w, &JsonReport { config, trials: results })?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Snr,
    Streams,
    Antennas,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr" => Ok(SweepAxis::Snr),
            "streams" => Ok(SweepAxis::Streams),
            "antennas" => Ok(SweepAxis::Antennas),
            other => Err(Error::config(format!(
                "unknown sweep axis '{other}' (expected snr, streams or antennas)"
            ))),
        }
    }
}

/// Mean and standard error of the per-trial average rate for one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Swept value; for an SNR sweep this equals `snr_db`.
    pub value: f64,
    pub method: Method,
    pub snr_db: f64,
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRun {
    /// Swept value; `None` for an SNR sweep, which is a single run.
    pub value: Option<f64>,
    pub config: SimConfig,
    pub results: Vec<TrialResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    pub axis: SweepAxis,
    pub runs: Vec<SweepRun>,
    pub table: Vec<SweepRow>,
}

fn as_count(axis: SweepAxis, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::config(format!(
            "{axis:?} sweep value {v} is not a positive integer"
        )))
    }
}

fn with_context(e: Error, what: &str) -> Error {
    match e {
        Error::Config(msg) => Error::config(format!("{what}: {msg}")),
        other => other,
    }
}

fn sweep_configs(base: &SimConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<(f64, SimConfig)>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    match axis {
        SweepAxis::Snr => {
            let cfg = SimConfig {
                snr_db: values.to_vec(),
                ..base.clone()
            };
            cfg.validate()?;
            Ok(vec![(f64::NAN, cfg)])
        }
        SweepAxis::Streams => values
            .iter()
            .map(|&v| {
                let n_s = as_count(axis, v)?;
                let cfg = SimConfig { n_s, ..base.clone() };
                cfg.validate().map_err(|e| with_context(e, &format!("streams value {v}")))?;
                Ok((v, cfg))
            })
            .collect(),
        SweepAxis::Antennas => values
            .iter()
            .map(|&v| {
                let n = as_count(axis, v)?;
                if square_side(n).is_none() {
                    return Err(Error::config(format!(
                        "antennas value {v} is not a perfect square"
                    )));
                }
                let cfg = SimConfig {
                    n_tx: n,
                    n_rx: n,
                    ..base.clone()
                };
                cfg.validate().map_err(|e| with_context(e, &format!("antennas value {v}")))?;
                Ok((v, cfg))
            })
            .collect(),
    }
}

fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error per (method, SNR) over a set of trials.
pub fn aggregate(value: f64, config: &SimConfig, results: &[TrialResult]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &method in &config.methods {
        for (i, &snr_db) in config.snr_db.iter().enumerate() {
            let xs: Vec<f64> = results
                .iter()
                .filter_map(|r| r.method(method))
                .map(|m| m.rates[i].avg_sum_rate_bps_hz)
                .collect();
            if xs.is_empty() {
                continue;
            }
            let (mean, std_err) = mean_and_std_err(&xs);
            rows.push(SweepRow {
                value: if value.is_nan() { snr_db } else { value },
                method,
                snr_db,
                mean,
                std_err,
                trials: xs.len(),
            });
        }
    }
    rows
}

/// Runs the experiment once per axis value; every value is validated before
/// any trial runs.
pub fn sweep(base: &SimConfig, axis: SweepAxis, values: &[f64], exec: &ExecOptions) -> Result<SweepOutput> {
    let configs = sweep_configs(base, axis, values)?;
    let mut runs = Vec::with_capacity(configs.len());
    let mut table = Vec::new();
    for (value, config) in configs {
        let results = run_experiment_with(&config, exec)?;
        table.extend(aggregate(value, &config, &results));
        runs.push(SweepRun {
            value: (!value.is_nan()).then_some(value),
            config,
            results,
        });
    }
    Ok(SweepOutput { axis, runs, table })
}

/// Per-trial rows of every sweep run, with `n_s` and `n_antennas` appended.
pub fn write_sweep_csv<W: Write>(mut w: W, out: &SweepOutput) -> Result<()> {
    writeln!(w, "{CSV_HEADER},n_s,n_antennas")?;
    for run in &out.runs {
        let suffix = format!(",{},{}", run.config.n_s, run.config.n_tx);
        write_rows(&mut w, &run.results, &suffix)?;
    }
    Ok(())
}

pub fn write_sweep_json<W: Write>(w: W, out: &SweepOutput) -> Result<()> {
    serde_json::to_writer_pretty(w, out)?;
    Ok(())
}

pub const SUMMARY_HEADER: &str = "axis_value,method,snr_db,mean_rate_bps_hz,std_err,trials";

pub fn write_summary_csv<W: Write>(mut w: W, table: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in table {
        writeln!(w, "{},{},{},{},{},{}", r.value, r.method, r.snr_db, r.mean, r.std_err, r.trials)?;
    }
    Ok(())
}
