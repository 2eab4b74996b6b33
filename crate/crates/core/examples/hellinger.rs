// SPDX-License-Identifier: MIT OR Apache-2.0
//! Hellinger affinities between the null and a shifted alternative, and the
//! test-error floor they imply.
//!
//! `cargo run --example hellinger`

use cpseg::analytics::{
    affinity_dd, hellinger_affinity_dd, hellinger_affinity_rd, test_error_lower_bound,
};
use cpseg::model::NoiseFamily;
use cpseg::NoiseSpec;

fn main() -> cpseg::Result<()> {
    println!("regular design, k points in the segment");
    for sigma in [0.25, 0.5, 1.0, 2.0] {
        let row: Vec<String> = [1u64, 4, 16]
            .iter()
            .map(|&k| {
                let a = hellinger_affinity_dd(k, sigma).unwrap();
                format!("k={k}: {a:.4} (floor {:.4})", test_error_lower_bound(a))
            })
            .collect();
        println!("  sigma {sigma:<4} {}", row.join("  "));
    }

    println!("random design, n = 256");
    for delta in [0.001, 0.005, 0.02] {
        let a = hellinger_affinity_rd(delta, 1.0, 256)?;
        println!("  delta {delta:<6} affinity {a:.4}");
    }

    println!("non-gaussian noise (Monte Carlo)");
    for family in [NoiseFamily::Rademacher, NoiseFamily::UniformBounded] {
        let est = affinity_dd(&NoiseSpec::new(family, 1.0)?, 1, 200_000, 9)?;
        println!("  {family}: {:.4} +/- {:.4}", est.value, est.stderr);
    }
    Ok(())
}
