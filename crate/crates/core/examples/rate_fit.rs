// SPDX-License-Identifier: MIT OR Apache-2.0
//! Log-log slope of a risk curve.
//!
//! `cargo run --example rate_fit`

use cpseg::analytics::fit_rate;

fn main() -> cpseg::Result<()> {
    let ns = [128usize, 512, 2048, 8192];
    let inverse: Vec<f64> = ns.iter().map(|&n| 3.0 / n as f64).collect();
    let log_over_n: Vec<f64> = ns.iter().map(|&n| (n as f64).ln() / n as f64).collect();
    for (label, risks) in [("1/n", inverse), ("ln(n)/n", log_over_n)] {
        let fit = fit_rate(&ns, &risks)?;
        println!("{label:>8}: {}", fit.to_json());
        println!(
            "          risk*n/ln n = {:.3?}",
            fit.risk_times_n_over_log()
        );
    }
    Ok(())
}
