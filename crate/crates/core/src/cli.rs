// SPDX-License-Identifier: MIT OR Apache-2.0

//! Batch front end. Exit status: 0 on success, 2 on usage errors, 1 on
//! runtime failures.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::analytics::{fit_rate, risk_floor};
use crate::detection::{detect, write_detection_csv, DetectionConfig, TestKind};
use crate::error::{Error, Result};
use crate::estimation::{estimate, Method};
use crate::model::{simulate, DesignKind, NoiseSpec, Sample, Segment};
use crate::montecarlo::{
    run_detection_sweep, run_risk_sweep, run_tail_experiment, write_tail_csv, ExperimentConfig,
    Task,
};

#[derive(Debug, Parser)]
#[command(
    name = "cpseg",
    version,
    about = "Segment detection and estimation under noisy indicator observations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a sample and write it as `i,x,y` CSV.
    Simulate {
        #[arg(long)]
        design: DesignKind,
        #[arg(long)]
        n: usize,
        /// `a,b` or `empty`
        #[arg(long, allow_hyphen_values = true)]
        segment: Segment,
        /// `family:sigma`, family one of gaussian|rademacher|uniform-bounded
        #[arg(long)]
        noise: NoiseSpec,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a test on a sample file, or a detection sweep from a config.
    Detect {
        #[arg(long, value_enum, required_unless_present = "config")]
        test: Option<TestArg>,
        #[arg(long, required_unless_present = "config")]
        h: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[arg(
            long = "in",
            conflicts_with = "config",
            required_unless_present = "config"
        )]
        input: Option<PathBuf>,
        #[arg(long, requires = "out")]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Fit a segment on a sample file.
    Estimate {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo risk sweep from a JSON config.
    RiskSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Deviation experiment for the one-change-point estimator.
    Tail {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated thresholds; defaults to the config's `x_grid`.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Log-log rate fit of the class risk in a risk-sweep report.
    Rates {
        #[arg(long = "in", conflicts_with_all = ["ns", "risks"])]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', requires = "risks")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', requires = "ns")]
        risks: Vec<f64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum TestArg {
    Counting,
    Scan,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum MethodArg {
    OneCp,
    Lse,
    TwoStep,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::Counting => TestKind::Counting,
            TestArg::Scan => TestKind::Scan,
        }
    }
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::OneCp => Method::OneCp,
            MethodArg::Lse => Method::Lse,
            MethodArg::TwoStep => Method::TwoStep,
        }
    }
}

/// Parses `argv` (program name first) and runs the command, writing to the
/// process streams.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                2
            } else {
                let _ = write!(out, "{rendered}");
                0
            };
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate {
            design,
            n,
            segment,
            noise,
            seed,
            out: path,
        } => {
            simulate(design, n, &segment, &noise, seed)?.save(path)?;
        }
        Command::Detect {
            test,
            h,
            c,
            input,
            config,
            out: out_path,
            json,
        } => {
            if let Some(config) = config {
                let cfg = ExperimentConfig::load(config)?;
                let rows = run_detection_sweep(&cfg)?;
                let path = out_path.expect("clap enforces --out with --config");
                write_detection_csv(&rows, std::io::BufWriter::new(std::fs::File::create(path)?))?;
                return Ok(());
            }
            let (test, h, input) = (
                test.expect("clap enforces --test"),
                h.expect("clap enforces --h"),
                input.expect("clap enforces --in"),
            );
            let sample = Sample::load(input)?;
            let outcome = detect(&sample, test.into(), &DetectionConfig::new(h, c)?);
            if json {
                writeln!(out, "{}", outcome.to_json())?;
            } else {
                writeln!(
                    out,
                    "test={} decision={} statistic={}{}",
                    outcome.test,
                    outcome.decision(),
                    outcome.statistic,
                    outcome
                        .flag
                        .map(|f| format!(" flag={}", serde_json::to_value(f).unwrap_or_default()))
                        .unwrap_or_default()
                )?;
            }
        }
        Command::Estimate {
            method,
            mu,
            input,
            json,
        } => {
            let sample = Sample::load(input)?;
            let result = estimate(&sample, method.into(), mu)?;
            if json {
                writeln!(out, "{}", result.to_json())?;
            } else {
                writeln!(
                    out,
                    "method={} segment={} objective={}",
                    result.method, result.segment, result.objective
                )?;
            }
        }
        Command::RiskSweep {
            config,
            out: path,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if threads.is_some() {
                cfg.threads = threads;
            }
            let report = run_risk_sweep(&cfg)?;
            let failures: usize = report.rows.iter().map(|r| r.failures).sum();
            report.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
            if failures > 0 {
                return Err(Error::input(format!("{failures} replications failed")));
            }
        }
        Command::Tail {
            config,
            out: path,
            x,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if threads.is_some() {
                cfg.threads = threads;
            }
            let x_grid = match (&cfg.task, x.is_empty()) {
                (Task::Tail { x_grid, .. }, true) => x_grid.clone(),
                _ => x,
            };
            let rows = run_tail_experiment(&cfg, &x_grid)?;
            write_tail_csv(&rows, std::io::BufWriter::new(std::fs::File::create(path)?))?;
        }
        Command::Rates {
            input,
            ns,
            risks,
            json,
        } => {
            let fits = match input {
                Some(path) => fits_from_report(&std::fs::read_to_string(path)?)?,
                None => {
                    if ns.is_empty() {
                        return Err(Error::input("rates needs --in or --ns/--risks"));
                    }
                    vec![("-".to_string(), fit_rate(&ns, &risks)?)]
                }
            };
            for (estimator, fit) in fits {
                if json {
                    let mut v = fit.to_json();
                    v["estimator"] = estimator.into();
                    writeln!(out, "{v}")?;
                } else {
                    writeln!(
                        out,
                        "estimator={estimator} slope={} intercept={} r_squared={} n_points={}",
                        fit.slope,
                        fit.intercept,
                        fit.r_squared,
                        fit.points.len()
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// One fit per estimator from a risk report, using the per-`n` family
/// maximum; zero risks are clamped to [`risk_floor`].
fn fits_from_report(text: &str) -> Result<Vec<(String, crate::analytics::RateFit)>> {
    #[derive(serde::Deserialize)]
    struct Row {
        #[allow(dead_code)]
        task: String,
        n: usize,
        #[allow(dead_code)]
        member: String,
        estimator: String,
        #[allow(dead_code)]
        mean_loss: f64,
        #[allow(dead_code)]
        stderr: f64,
        reps: usize,
        max_over_family: f64,
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    // (n, risk, reps) per row, grouped by estimator in file order
    type Points = Vec<(usize, f64, usize)>;
    let mut groups: Vec<(String, Points)> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let idx = match groups.iter().position(|g| g.0 == row.estimator) {
            Some(i) => i,
            None => {
                groups.push((row.estimator.clone(), Vec::new()));
                groups.len() - 1
            }
        };
        let g = &mut groups[idx].1;
        if !g.iter().any(|p| p.0 == row.n) {
            g.push((row.n, row.max_over_family, row.reps));
        }
    }
    if groups.is_empty() {
        return Err(Error::input("risk report has no rows"));
    }
    groups
        .into_iter()
        .map(|(est, pts)| {
            let max_n = pts.iter().map(|p| p.0).max().unwrap_or(1);
            let reps = pts.iter().map(|p| p.2).max().unwrap_or(1);
            let floor = risk_floor(max_n, reps);
            let ns: Vec<usize> = pts.iter().map(|p| p.0).collect();
            let risks: Vec<f64> = pts.iter().map(|p| p.1.max(floor)).collect();
            Ok((est, fit_rate(&ns, &risks)?))
        })
        .collect()
}
