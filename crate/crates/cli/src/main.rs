use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tucker_hbf::harness::{
    aggregate, run_experiment_with, sweep, write_csv, write_json, write_sweep_csv, write_sweep_json, ExecOptions,
    SimConfig, SweepAxis, SweepRow,
};
use tucker_hbf::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    Snr,
    Streams,
    Antennas,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Snr => SweepAxis::Snr,
            Axis::Streams => SweepAxis::Streams,
            Axis::Antennas => SweepAxis::Antennas,
        }
    }
}

/// Monte Carlo average sum-rate of hybrid beamforming designs over a
/// clustered wideband mmWave channel.
///
/// Unset options take the desk-scale defaults (16×16 arrays, 64
/// subcarriers, 2 streams, 50 trials) or, with --full-scale, the full-size
/// ones (64×64, 1024 subcarriers, 4 streams, 1000 trials).
#[derive(Debug, Parser)]
#[command(name = "hbf-sim", version)]
struct Cli {
    /// Transmit antennas (perfect square)
    #[arg(long)]
    nt: Option<usize>,
    /// Receive antennas (perfect square)
    #[arg(long)]
    nr: Option<usize>,
    /// Data streams, equal to the RF chain count
    #[arg(long)]
    ns: Option<usize>,
    /// Subcarriers
    #[arg(long)]
    m: Option<usize>,
    /// Scattering clusters
    #[arg(long)]
    ncl: Option<usize>,
    /// Rays per cluster
    #[arg(long)]
    nray: Option<usize>,
    /// Angular spread in degrees
    #[arg(long)]
    spread_deg: Option<f64>,
    /// Element spacing in wavelengths
    #[arg(long)]
    spacing: Option<f64>,
    /// SNR grid in dB, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Channel realizations
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// ALS convergence threshold on the squared objective change
    #[arg(long)]
    eps: Option<f64>,
    /// ALS iteration cap per stream
    #[arg(long)]
    nite: Option<usize>,
    /// Methods to run, comma separated: tucker, optimal, avgcov
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Sweep axis
    #[arg(long, value_enum)]
    sweep: Option<Axis>,
    /// Values of the swept parameter, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sweep_values: Option<Vec<f64>>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads (0: one per core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Record per-method wall-clock times (makes output non-reproducible)
    #[arg(long)]
    timings: bool,
    /// Start from the full-size configuration instead of the desk-scale one
    #[arg(long)]
    full_scale: bool,
    /// Do not print the summary table to stderr
    #[arg(long, short)]
    quiet: bool,
}

impl Cli {
    fn config(&self) -> Result<SimConfig, Error> {
        let mut c = if self.full_scale {
            SimConfig::full_scale()
        } else {
            SimConfig::default()
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { c.$field = v; })*
            };
        }
        set!(nt => n_tx, nr => n_rx, ns => n_s, m => m_subcarriers, ncl => n_clusters, nray => n_rays,
             spread_deg => angular_spread_deg, spacing => spacing, snr => snr_db, trials => trials,
             seed => seed, eps => eps, nite => n_ite);
        if let Some(names) = &self.methods {
            c.methods = names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_summary(rows: &[SweepRow], axis: Option<SweepAxis>) {
    let label = match axis {
        Some(SweepAxis::Streams) => "n_s",
        Some(SweepAxis::Antennas) => "n_ant",
        _ => "",
    };
    let mut err = io::stderr().lock();
    let _ = writeln!(err, "{label:>6} {:>8} {:>8} {:>12} {:>10}", "method", "snr_db", "mean_bps_hz", "std_err");
    for r in rows {
        let value = if label.is_empty() { String::new() } else { r.value.to_string() };
        let _ = writeln!(
            err,
            "{value:>6} {:>8} {:>8} {:>12.4} {:>10.4}",
            r.method.name(),
            r.snr_db,
            r.mean,
            r.std_err
        );
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = cli.config()?;
    let exec = ExecOptions {
        workers: cli.workers,
        timings: cli.timings,
    };
    match (cli.sweep, &cli.sweep_values) {
        (None, None) => {
            let results = run_experiment_with(&config, &exec)?;
            let mut w = output(&cli.out)?;
            match cli.format {
                Format::Csv => write_csv(&mut w, &results)?,
                Format::Json => write_json(&mut w, &config, &results)?,
            }
            w.flush()?;
            if !cli.quiet {
                print_summary(&aggregate(f64::NAN, &config, &results), None);
            }
        }
        (Some(axis), Some(values)) => {
            let out = sweep(&config, axis.into(), values, &exec)?;
            let mut w = output(&cli.out)?;
            match cli.format {
                Format::Csv => write_sweep_csv(&mut w, &out)?,
                Format::Json => write_sweep_json(&mut w, &out)?,
            }
            w.flush()?;
            if !cli.quiet {
                print_summary(&out.table, Some(out.axis));
            }
        }
        (Some(_), None) => return Err(Error::Config("--sweep needs --sweep-values".into())),
        (None, Some(_)) => return Err(Error::Config("--sweep-values needs --sweep".into())),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::SvdNoConvergence { .. } | Error::InvalidArgument(_) => 3,
        Error::Io(_) | Error::Json(_) | Error::Format(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hbf-sim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
