// SPDX-License-Identifier: MIT OR Apache-2.0
//! Empirical survival of `n * loss` for the one-change-point estimator next
//! to the closed-form exponential bound.
//!
//! `cargo run --release --example tail_bound`

use cpseg::montecarlo::{run_tail_experiment, ExperimentConfig, SegmentFamily, Task};
use cpseg::{DesignKind, NoiseSpec};

fn main() -> cpseg::Result<()> {
    let sigma = 1.0;
    let cfg = ExperimentConfig {
        master_seed: 5,
        design: DesignKind::Dd,
        noise: NoiseSpec::gaussian(sigma)?,
        n_grid: vec![512],
        reps: 20_000,
        task: Task::Tail {
            family: SegmentFamily::S0Grid {
                thetas: Some(vec![0.5]),
            },
            x_grid: vec![],
        },
        threads: None,
    };
    let xs: Vec<f64> = (1..=8).map(|k| 4.0 * k as f64).collect();
    println!("{:>6} {:>10} {:>10}", "x", "survival", "bound");
    for r in run_tail_experiment(&cfg, &xs)? {
        println!(
            "{:>6} {:>10.5} {:>10.5}",
            r.x,
            r.survival,
            r.bound.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
