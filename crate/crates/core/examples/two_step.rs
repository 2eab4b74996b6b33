// SPDX-License-Identifier: MIT OR Apache-2.0
//! Inspect the intermediate quantities of the split-sample estimator.
//!
//! `cargo run --example two_step`

use cpseg::estimation::{estimate_segment_two_step, ArgmaxIndices};
use cpseg::model::simulate;
use cpseg::{DesignKind, NoiseSpec, Segment};

fn main() -> cpseg::Result<()> {
    let truth = Segment::new(0.2, 0.7)?;
    let sample = simulate(DesignKind::Dd, 1000, &truth, &NoiseSpec::gaussian(1.0)?, 11)?;
    let r = estimate_segment_two_step(&sample, 0.2)?;
    if let ArgmaxIndices::TwoStep(t) = &r.indices {
        println!("preliminary fit    {}", t.preliminary);
        println!("split point        {:.4}", t.midpoint);
        println!(
            "left endpoint idx  {} (fallback {})",
            t.m_minus, t.minus_fallback
        );
        println!(
            "right endpoint idx {} (fallback {})",
            t.m_plus, t.plus_fallback
        );
    }
    println!("estimate           {}  (truth {truth})", r.segment);
    Ok(())
}
