// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tests of `H0: G = empty` against `H1: |G| >= h`.
//!
//! The counting test looks only at the window `[0, h]`, which every
//! left-anchored alternative covers. The scan test maximizes the centred sum
//! `R(G) = sum_{x_i in G} (y_i - 1/2)` over windows longer than `h`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{format_real, simulate, DesignKind, NoiseSpec, Sample, Segment};
use crate::montecarlo::{derive_seed, run_indexed, TASK_DETECTION};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionConfig {
    h: f64,
    c: f64,
}

impl DetectionConfig {
    pub fn new(h: f64, c: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::config(format!("h must lie in (0, 1]; got {h}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::config(format!("c must lie in (0, 1); got {c}")));
        }
        Ok(Self { h, c })
    }

    /// Threshold `c = 1/2`, suited to symmetric noise.
    pub fn with_h(h: f64) -> Result<Self> {
        Self::new(h, 0.5)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Counting,
    Scan,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Counting => "counting",
            TestKind::Scan => "scan",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    /// No design point in `[0, h]`.
    InsufficientPoints,
    /// No window longer than `h` fits the design.
    NoAdmissibleWindow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub test: TestKind,
    /// `true` rejects `H0`.
    pub reject: bool,
    pub statistic: f64,
    pub aux: BTreeMap<&'static str, f64>,
    pub flag: Option<TestFlag>,
}

impl TestOutcome {
    pub fn decision(&self) -> u8 {
        u8::from(self.reject)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "test": self.test.to_string(),
            "decision": self.decision(),
            "statistic": self.statistic,
            "aux": self.aux,
            "flag": self.flag,
        })
    }
}

/// Counting test on `[0, h]`: with `N` design points in the window and `S`
/// of their labels at most `1/2`, reject when `S <= c N`. An empty window
/// never rejects.
pub fn detect_left_anchored(sample: &Sample, cfg: &DetectionConfig) -> TestOutcome {
    let n_window = sample.x().partition_point(|&x| x <= cfg.h);
    let s = sample.y()[..n_window].iter().filter(|&&y| y <= 0.5).count();
    let mut aux = BTreeMap::new();
    aux.insert("N", n_window as f64);
    aux.insert("S", s as f64);
    let (reject, flag) = if n_window == 0 {
        (false, Some(TestFlag::InsufficientPoints))
    } else {
        (s as f64 <= cfg.c * n_window as f64, None)
    };
    TestOutcome {
        test: TestKind::Counting,
        reject,
        statistic: s as f64,
        aux,
        flag,
    }
}

/// A scanned window: positions `start..=end`. `closing` windows run to the
/// right edge `[x_start, 1]`; the others are `[x_start, x_{end+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanWindow {
    pub start: usize,
    pub end: usize,
    pub closing: bool,
}

/// Exact maximizer of the scan statistic, ties going to the smallest start
/// and then the shortest window.
///
/// For a fixed start the admissible half-open ends form a suffix of the
/// design, so a suffix maximum of prefix sums finds the best end in O(1);
/// the whole scan is linear.
pub fn scan_maximizer(sample: &Sample, h: f64) -> Option<ScanWindow> {
    let x = sample.x();
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    for &y in sample.y() {
        prefix.push(prefix.last().unwrap() + (2.0 * y - 1.0));
    }
    // suffix_best[l] = argmax of prefix[l..n] over half-open ends l in 1..n, smallest on ties
    let mut suffix_best = vec![usize::MAX; n + 1];
    for l in (1..n).rev() {
        let next = suffix_best[l + 1];
        suffix_best[l] = if next == usize::MAX || prefix[l] >= prefix[next] {
            l
        } else {
            next
        };
    }

    let mut best: Option<(f64, ScanWindow)> = None;
    let mut l_min = 1usize;
    for k in 0..n {
        l_min = l_min.max(k + 1);
        while l_min < n && !(x[l_min] - x[k] > h) {
            l_min += 1;
        }
        let mut cand: Option<(f64, ScanWindow)> = None;
        if l_min < n {
            let l = suffix_best[l_min];
            cand = Some((
                prefix[l] - prefix[k],
                ScanWindow {
                    start: k,
                    end: l - 1,
                    closing: false,
                },
            ));
        }
        if 1.0 - x[k] > h {
            let total = prefix[n] - prefix[k];
            if cand.is_none_or(|(v, _)| total > v) {
                cand = Some((
                    total,
                    ScanWindow {
                        start: k,
                        end: n - 1,
                        closing: true,
                    },
                ));
            }
        }
        if let Some((v, w)) = cand {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, w));
            }
        }
    }
    best.map(|(_, w)| w)
}

/// `R = (1/2) sum (2 y_i - 1)` over a window, summed left to right.
pub fn window_statistic(sample: &Sample, w: &ScanWindow) -> f64 {
    0.5 * sample.y()[w.start..=w.end]
        .iter()
        .map(|&y| 2.0 * y - 1.0)
        .sum::<f64>()
}

/// Scan test: reject when the best admissible window has `R >= 0`.
pub fn detect_scan(sample: &Sample, cfg: &DetectionConfig) -> TestOutcome {
    let mut aux = BTreeMap::new();
    match scan_maximizer(sample, cfg.h) {
        Some(w) => {
            let statistic = window_statistic(sample, &w);
            let x = sample.x();
            aux.insert("start", w.start as f64);
            aux.insert("end", w.end as f64);
            aux.insert("a", x[w.start]);
            aux.insert("b", if w.closing { 1.0 } else { x[w.end + 1] });
            aux.insert("closing", f64::from(u8::from(w.closing)));
            TestOutcome {
                test: TestKind::Scan,
                reject: statistic >= 0.0,
                statistic,
                aux,
                flag: None,
            }
        }
        None => TestOutcome {
            test: TestKind::Scan,
            reject: false,
            statistic: f64::NEG_INFINITY,
            aux,
            flag: Some(TestFlag::NoAdmissibleWindow),
        },
    }
}

pub fn detect(sample: &Sample, test: TestKind, cfg: &DetectionConfig) -> TestOutcome {
    match test {
        TestKind::Counting => detect_left_anchored(sample, cfg),
        TestKind::Scan => detect_scan(sample, cfg),
    }
}

/// Minimum alternative length as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HRule {
    Fixed(f64),
    /// `scale * n^exponent`
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl HRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            HRule::Fixed(h) => h,
            HRule::Power { scale, exponent } => scale * (n as f64).powf(exponent),
        }
    }
}

/// Alternative segment, possibly tied to `h(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `[0, h]`
    LeftAnchored,
    /// `[1/2 - h/2, 1/2 + h/2]`
    Centered,
    Fixed(Segment),
}

impl Alternative {
    pub fn at(&self, h: f64) -> Result<Segment> {
        match *self {
            Alternative::LeftAnchored => Segment::anchored(h),
            Alternative::Centered => Segment::new(0.5 - 0.5 * h, 0.5 + 0.5 * h),
            Alternative::Fixed(s) => Ok(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionSweep {
    pub test: TestKind,
    pub h: HRule,
    pub c: f64,
    pub alternatives: Vec<Alternative>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub noise: NoiseSpec,
    pub design: DesignKind,
    pub master_seed: u64,
    /// Null and alternatives share random streams, so any sample the design
    /// cannot separate is drawn identically under both.
    pub coupled: bool,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionRow {
    pub n: usize,
    pub h: f64,
    pub test: TestKind,
    /// Type-I frequency plus the worst type-II frequency.
    pub gamma_hat: f64,
    pub type1_hat: f64,
    pub type2_hat: f64,
    pub reps: usize,
    pub stderr: f64,
    pub worst_alternative: Segment,
}

/// `n,h,test,gamma_hat,type1_hat,type2_hat,reps,stderr`
pub fn write_detection_csv<W: Write>(rows: &[DetectionRow], mut w: W) -> Result<()> {
    writeln!(w, "n,h,test,gamma_hat,type1_hat,type2_hat,reps,stderr")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.n,
            format_real(r.h),
            r.test,
            format_real(r.gamma_hat),
            format_real(r.type1_hat),
            format_real(r.type2_hat),
            r.reps,
            format_real(r.stderr)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Empirical sum of type-I and worst type-II error per `n`.
pub fn detection_error_sweep(sweep: &DetectionSweep) -> Result<Vec<DetectionRow>> {
    sweep.noise.validate()?;
    if sweep.reps < 1 {
        return Err(Error::config("reps must be >= 1"));
    }
    if sweep.alternatives.is_empty() {
        return Err(Error::config("at least one alternative is required"));
    }
    if sweep.n_grid.is_empty() || sweep.n_grid.contains(&0) {
        return Err(Error::config("n_grid must be non-empty with n >= 1"));
    }
    let reps = sweep.reps as f64;
    let mut rows = Vec::with_capacity(sweep.n_grid.len());
    for (n_idx, &n) in sweep.n_grid.iter().enumerate() {
        let h = sweep.h.at(n);
        let cfg = DetectionConfig::new(h, sweep.c)?;
        let mut cells = vec![Segment::empty()];
        for alt in &sweep.alternatives {
            let g = alt.at(h)?;
            if g.length() < h - 1e-12 {
                return Err(Error::config(format!(
                    "alternative {g} shorter than h={h} at n={n}"
                )));
            }
            cells.push(g);
        }
        let mut rejections = Vec::with_capacity(cells.len());
        for (m_idx, g) in cells.iter().enumerate() {
            let member = if sweep.coupled { 0 } else { m_idx as u64 };
            let outcome = run_indexed(sweep.threads, sweep.reps, |rep| -> Result<bool> {
                let seed = derive_seed(
                    sweep.master_seed,
                    &[TASK_DETECTION, n_idx as u64, member, rep as u64],
                );
                let sample = simulate(sweep.design, n, g, &sweep.noise, seed)?;
                Ok(detect(&sample, sweep.test, &cfg).reject)
            })?;
            let count = outcome
                .into_iter()
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&r| r)
                .count();
            rejections.push(count);
        }
        let type1 = rejections[0] as f64 / reps;
        let (worst, type2) = rejections[1..]
            .iter()
            .enumerate()
            .map(|(i, &r)| (i, (sweep.reps - r) as f64 / reps))
            .fold((0usize, f64::NEG_INFINITY), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        rows.push(DetectionRow {
            n,
            h,
            test: sweep.test,
            gamma_hat: type1 + type2,
            type1_hat: type1,
            type2_hat: type2,
            reps: sweep.reps,
            stderr: (type1 * (1.0 - type1) / reps + type2 * (1.0 - type2) / reps).sqrt(),
            worst_alternative: cells[worst + 1],
        });
    }
    Ok(rows)
}
