// SPDX-License-Identifier: MIT OR Apache-2.0
//! Worst-case risk over a segment family, then a log-log rate fit.
//!
//! `cargo run --release --example risk_sweep [examples/configs/risk_s0.json]`

use cpseg::analytics::fit_rate;
use cpseg::montecarlo::{run_risk_sweep, ExperimentConfig};

fn main() -> cpseg::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/risk_s0.json").into()
    });
    let cfg = ExperimentConfig::load(path)?;
    let report = run_risk_sweep(&cfg)?;
    report.write_csv(std::io::stdout().lock())?;

    let class = report.class_risk();
    let ns: Vec<usize> = class.iter().map(|c| c.n).collect();
    let risks: Vec<f64> = class.iter().map(|c| c.risk).collect();
    let fit = fit_rate(&ns, &risks)?;
    eprintln!(
        "slope {:.3}  r^2 {:.4}  risk*n {:.2?}",
        fit.slope,
        fit.r_squared,
        fit.risk_times_n()
    );
    Ok(())
}
