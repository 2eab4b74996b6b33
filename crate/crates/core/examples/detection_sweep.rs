// SPDX-License-Identifier: MIT OR Apache-2.0
//! Empirical type-I plus type-II error of the scan test as `n` grows with
//! `h(n) = 4 ln(n) / n`.
//!
//! `cargo run --release --example detection_sweep`

use cpseg::detection::{
    detection_error_sweep, write_detection_csv, Alternative, DetectionSweep, HRule, TestKind,
};
use cpseg::{DesignKind, NoiseSpec};

fn main() -> cpseg::Result<()> {
    let n_grid = vec![64, 256, 1024, 4096];
    let mut rows = Vec::new();
    for &n in &n_grid {
        let h = 4.0 * (n as f64).ln() / n as f64;
        rows.extend(detection_error_sweep(&DetectionSweep {
            test: TestKind::Scan,
            h: HRule::Fixed(h),
            c: 0.5,
            alternatives: vec![Alternative::Centered, Alternative::LeftAnchored],
            n_grid: vec![n],
            reps: 500,
            noise: NoiseSpec::gaussian(0.5)?,
            design: DesignKind::Rd,
            master_seed: 3,
            coupled: false,
            threads: None,
        })?);
    }
    write_detection_csv(&rows, std::io::stdout().lock())
}
