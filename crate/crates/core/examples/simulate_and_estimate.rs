// SPDX-License-Identifier: MIT OR Apache-2.0
//! Draw one noisy sample and compare the three segment estimators.
//!
//! `cargo run --example simulate_and_estimate`

use cpseg::estimation::{estimate, Method};
use cpseg::model::{nikodym_distance, simulate};
use cpseg::{DesignKind, NoiseSpec, Segment};

fn main() -> cpseg::Result<()> {
    let truth = Segment::new(0.3, 0.65)?;
    let noise = NoiseSpec::gaussian(0.5)?;
    let sample = simulate(DesignKind::Rd, 500, &truth, &noise, 7)?;

    println!("truth {truth}, n = {}", sample.len());
    for (method, mu) in [
        (Method::OneCp, None),
        (Method::Lse, None),
        (Method::TwoStep, Some(0.2)),
    ] {
        let r = estimate(&sample, method, mu)?;
        println!(
            "{:>9}: {:<44} loss {:.4}  objective {:.2}",
            method.as_str(),
            r.segment.to_string(),
            nikodym_distance(&r.segment, &truth),
            r.objective
        );
    }
    Ok(())
}
