// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form reference values and rate fitting.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{NoiseFamily, NoiseSpec};
use crate::montecarlo::{mean_and_stderr, stream};

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::input(format!(
            "sigma must be positive and finite; got {sigma}"
        )));
    }
    Ok(())
}

/// Per-point Gaussian affinity `exp(-1/(8 sigma^2))`.
fn unit_affinity(sigma: f64) -> f64 {
    (-1.0 / (8.0 * sigma * sigma)).exp()
}

/// `1 - H^2/2` between the regular-design laws of two segments whose
/// symmetric difference holds `k` design points, under Gaussian noise.
pub fn hellinger_affinity_dd(k: u64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok((-(k as f64) / (8.0 * sigma * sigma)).exp())
}

/// `1 - H^2/2` under the random design for segments whose symmetric
/// difference has measure `delta`, with `n` Gaussian observations.
pub fn hellinger_affinity_rd(delta: f64, sigma: f64, n: u64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::input(format!(
            "delta must lie in [0, 1]; got {delta}"
        )));
    }
    let per_obs = 1.0 - (1.0 - unit_affinity(sigma)) * delta;
    Ok(per_obs.powf(n as f64))
}

/// Lower bound `(1/2) * affinity^2` on the summed errors of any test
/// separating two laws with the given affinity.
pub fn test_error_lower_bound(affinity: f64) -> f64 {
    0.5 * affinity * affinity
}

/// Affinity value, with `approximate` set when it came from simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffinityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub approximate: bool,
}

/// Per-point affinity `int sqrt(p(t) p(t - 1)) dt` for any noise family.
///
/// Gaussian noise uses the closed form; other families are estimated as
/// `E_p[sqrt(p(T - 1) / p(T))]` from `draws` samples of the noise.
pub fn point_affinity(noise: &NoiseSpec, draws: usize, seed: u64) -> Result<AffinityEstimate> {
    check_sigma(noise.sigma)?;
    if noise.family == NoiseFamily::Gaussian {
        return Ok(AffinityEstimate {
            value: unit_affinity(noise.sigma),
            stderr: 0.0,
            approximate: false,
        });
    }
    if draws < 2 {
        return Err(Error::config("affinity estimate needs at least 2 draws"));
    }
    let mut rng = stream(seed);
    let ratios: Vec<f64> = (0..draws)
        .map(|_| {
            let t = noise.draw(&mut rng);
            (noise.density(t - 1.0) / noise.density(t)).sqrt()
        })
        .collect();
    let (value, stderr) = mean_and_stderr(&ratios);
    Ok(AffinityEstimate {
        value,
        stderr,
        approximate: true,
    })
}

/// Affinity over `k` separating design points, i.e. the per-point value to the `k`-th power.
pub fn affinity_dd(noise: &NoiseSpec, k: u64, draws: usize, seed: u64) -> Result<AffinityEstimate> {
    let p = point_affinity(noise, draws, seed)?;
    let kf = k as f64;
    Ok(AffinityEstimate {
        value: p.value.powf(kf),
        // delta method
        stderr: if k == 0 {
            0.0
        } else {
            kf * p.value.powf(kf - 1.0) * p.stderr
        },
        approximate: p.approximate,
    })
}

/// Deviation bound `min(1, C0 exp(-x / (8 sigma^2)))` for the
/// one-change-point estimator, with `C0 = 2 / (1 - exp(-1/(8 sigma^2)))`.
pub fn one_cp_tail_bound(x: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(x > 0.0) {
        return Err(Error::input(format!("x must be positive; got {x}")));
    }
    let c0 = 2.0 / (1.0 - unit_affinity(sigma));
    Ok((c0 * (-x / (8.0 * sigma * sigma)).exp()).min(1.0))
}

/// Minimax lower bound `1/(8n)` on left-anchored segments.
pub fn lower_bound_s0(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("n must be >= 1"));
    }
    Ok(1.0 / (8.0 * n as f64))
}

/// Floor substituted for zero empirical risks before taking logs:
/// half the smallest nonzero mean loss a run can report.
pub fn risk_floor(max_n: usize, reps: usize) -> f64 {
    1.0 / (2.0 * max_n as f64 * reps as f64)
}

/// Ordinary least squares of `ln(risk)` on `ln(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln n, ln risk)`
    pub points: Vec<(f64, f64)>,
    /// Responses had zero variance; `r_squared` is reported as 1.
    pub zero_variance: bool,
    pub ns: Vec<usize>,
    pub risks: Vec<f64>,
}

impl RateFit {
    /// `risk * n`, flat under a `1/n` rate.
    pub fn risk_times_n(&self) -> Vec<f64> {
        self.ns
            .iter()
            .zip(&self.risks)
            .map(|(&n, &r)| r * n as f64)
            .collect()
    }

    /// `risk * n / ln n`, flat under a `ln(n)/n` rate.
    pub fn risk_times_n_over_log(&self) -> Vec<f64> {
        self.ns
            .iter()
            .zip(&self.risks)
            .map(|(&n, &r)| r * n as f64 / (n as f64).ln())
            .collect()
    }

    /// `{slope, intercept, r_squared, n_points}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.points.len(),
        })
    }
}

pub fn fit_rate(ns: &[usize], risks: &[f64]) -> Result<RateFit> {
    if ns.len() != risks.len() {
        return Err(Error::input(format!(
            "ns and risks differ in length ({} vs {})",
            ns.len(),
            risks.len()
        )));
    }
    if ns.len() < 2 {
        return Err(Error::input("rate fit needs at least two points"));
    }
    if let Some(r) = risks.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::input(format!(
            "risks must be positive and finite; got {r} (clamp zeros to risk_floor first)"
        )));
    }
    if ns.contains(&0) {
        return Err(Error::input("every n must be >= 1"));
    }
    let points: Vec<(f64, f64)> = ns
        .iter()
        .zip(risks)
        .map(|(&n, &r)| ((n as f64).ln(), r.ln()))
        .collect();
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("rate fit needs at least two distinct n"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let zero_variance = syy == 0.0;
    let r_squared = if zero_variance {
        1.0
    } else {
        let sse: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
        zero_variance,
        ns: ns.to_vec(),
        risks: risks.to_vec(),
    })
}

/// Monte Carlo affinity under the random design, for cross-checking the
/// closed form: averages `prod_i a(x_i)` over uniform designs, where a point
/// in the symmetric difference `[0, delta]` contributes the per-point
/// Gaussian affinity.
pub fn mc_affinity_rd(
    delta: f64,
    sigma: f64,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<AffinityEstimate> {
    check_sigma(sigma)?;
    if draws < 2 {
        return Err(Error::config("affinity estimate needs at least 2 draws"));
    }
    let unit = unit_affinity(sigma);
    let mut rng = stream(seed);
    let vals: Vec<f64> = (0..draws)
        .map(|_| {
            let hits = (0..n).filter(|_| rng.random::<f64>() < delta).count();
            unit.powi(hits as i32)
        })
        .collect();
    let (value, stderr) = mean_and_stderr(&vals);
    Ok(AffinityEstimate {
        value,
        stderr,
        approximate: true,
    })
}
