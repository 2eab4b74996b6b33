// SPDX-License-Identifier: MIT OR Apache-2.0

//! Least-squares segment estimators.
//!
//! Minimizing the squared error `sum (y_i - 1(x_i in G'))^2` over candidate
//! segments is the same as maximizing `A(G') = sum_{x_i in G'} (2 y_i - 1)`,
//! so every estimator here is an argmax over contiguous runs of the weights
//! `w_i = 2 y_i - 1`.
//!
//! Indices are 0-based positions in the sorted sample.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{Sample, Segment};

/// Maximal contiguous run `w[start..=end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Subarray {
    pub start: usize,
    pub end: usize,
    pub total: f64,
}

/// Kadane's scan. Among maximizers the lexicographically smallest
/// `(start, end)` is returned. `total` is the left-to-right sum of the run.
pub fn max_subarray(weights: &[f64]) -> Result<Subarray> {
    let (&first, rest) = weights
        .split_first()
        .ok_or_else(|| Error::input("max_subarray needs at least one weight"))?;
    let mut best = Subarray {
        start: 0,
        end: 0,
        total: first,
    };
    let (mut cur, mut cur_start) = (first, 0usize);
    for (j, &w) in rest.iter().enumerate().map(|(j, w)| (j + 1, w)) {
        // extend on ties so the run ending at j keeps the smallest start
        if cur >= 0.0 {
            cur += w;
        } else {
            cur = w;
            cur_start = j;
        }
        if cur > best.total {
            best = Subarray {
                start: cur_start,
                end: j,
                total: cur,
            };
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OneCp,
    Lse,
    TwoStep,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::OneCp => "one-cp",
            Method::Lse => "lse",
            Method::TwoStep => "two-step",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the optimum was attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArgmaxIndices {
    /// `m_hat` is the length of the selected prefix; 0 selects nothing.
    OneChangepoint {
        m_hat: usize,
    },
    Lse {
        start: usize,
        end: usize,
    },
    TwoStep(TwoStepTrace),
}

/// Intermediate quantities of the split-sample estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStepTrace {
    /// Preliminary least-squares fit on the odd positions.
    pub preliminary: Segment,
    pub midpoint: f64,
    /// Full-sample position chosen for the left endpoint.
    pub m_minus: usize,
    /// Full-sample position chosen for the right endpoint.
    pub m_plus: usize,
    pub minus_fallback: bool,
    pub plus_fallback: bool,
    pub minus_objective: f64,
    pub plus_objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    pub segment: Segment,
    pub indices: ArgmaxIndices,
    pub objective: f64,
}

impl EstimateResult {
    /// `{method, a, b, empty, objective, indices:{...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let indices = match self.indices {
            ArgmaxIndices::OneChangepoint { m_hat } => json!({ "m_hat": m_hat }),
            ArgmaxIndices::Lse { start, end } => json!({ "start": start, "end": end }),
            ArgmaxIndices::TwoStep(t) => json!({
                "m_minus": t.m_minus,
                "m_plus": t.m_plus,
                "midpoint": t.midpoint,
                "minus_fallback": t.minus_fallback,
                "plus_fallback": t.plus_fallback,
            }),
        };
        json!({
            "method": self.method.as_str(),
            "a": self.segment.a(),
            "b": self.segment.b(),
            "empty": self.segment.is_empty(),
            "objective": self.objective,
            "indices": indices,
        })
    }
}

/// Best left-anchored segment `[0, x_M]`: maximizes the prefix criterion
/// `F(M) = sum_{i<M} w_i` over `M in 0..=n` with `F(0) = 0`, smallest
/// maximizer on ties. `M = 0` yields the empty segment.
pub fn estimate_one_changepoint(sample: &Sample) -> EstimateResult {
    let (mut best_m, mut best_f, mut f) = (0usize, 0.0f64, 0.0f64);
    for (m, &y) in sample.y().iter().enumerate() {
        f += 2.0 * y - 1.0;
        if f > best_f {
            best_f = f;
            best_m = m + 1;
        }
    }
    let segment = if best_m == 0 {
        Segment::empty()
    } else {
        segment_between(0.0, sample.x()[best_m - 1])
    };
    EstimateResult {
        method: Method::OneCp,
        segment,
        indices: ArgmaxIndices::OneChangepoint { m_hat: best_m },
        objective: best_f,
    }
}

/// Least-squares fit over all segments `[x_k, x_l]`.
///
/// When every run has negative weight the best single point is still
/// returned as a degenerate segment.
pub fn estimate_segment_lse(sample: &Sample) -> EstimateResult {
    let best = max_subarray(&sample.weights()).expect("samples are never empty");
    EstimateResult {
        method: Method::Lse,
        segment: segment_between(sample.x()[best.start], sample.x()[best.end]),
        indices: ArgmaxIndices::Lse {
            start: best.start,
            end: best.end,
        },
        objective: best.total,
    }
}

/// Split-sample estimator for segments of length at least `mu`.
///
/// The odd positions (even 1-based ranks) give a preliminary least-squares
/// fit whose midpoint splits the even positions; each endpoint is then a
/// one-sided prefix fit anchored at that midpoint. `objective` is the sum of
/// both one-sided criteria at their maximizers.
pub fn estimate_segment_two_step(sample: &Sample, mu: f64) -> Result<EstimateResult> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::input(format!("mu must lie in (0, 1); got {mu}")));
    }
    let n = sample.len();
    if n < 2 {
        return Err(Error::input("two-step estimator needs n >= 2"));
    }
    let x = sample.x();
    let w = sample.weights();

    let first_half: Vec<usize> = (1..n).step_by(2).collect();
    let preliminary = estimate_segment_lse(&sample.select(&first_half)).segment;
    let midpoint = preliminary
        .midpoint()
        .expect("lse never returns the empty segment");

    let (minus, plus): (Vec<usize>, Vec<usize>) = (0..n).step_by(2).partition(|&i| x[i] < midpoint);

    let (m_plus, plus_objective, plus_fallback) = if plus.is_empty() {
        (n - 1, 0.0, true)
    } else {
        let (mut arg, mut best, mut f) = (plus[0], f64::NEG_INFINITY, 0.0);
        for &i in &plus {
            f += w[i];
            if f > best {
                best = f;
                arg = i;
            }
        }
        (arg, best, false)
    };

    let (m_minus, minus_objective, minus_fallback) = if minus.is_empty() {
        (0, 0.0, true)
    } else {
        let (mut arg, mut best, mut f) = (minus[0], f64::NEG_INFINITY, 0.0);
        for &i in minus.iter().rev() {
            f += w[i];
            if f > best {
                best = f;
                arg = i;
            }
        }
        (arg, best, false)
    };

    let (a, b) = (x[m_minus], x[m_plus]);
    Ok(EstimateResult {
        method: Method::TwoStep,
        segment: segment_between(a.min(b), a.max(b)),
        indices: ArgmaxIndices::TwoStep(TwoStepTrace {
            preliminary,
            midpoint,
            m_minus,
            m_plus,
            minus_fallback,
            plus_fallback,
            minus_objective,
            plus_objective,
        }),
        objective: minus_objective + plus_objective,
    })
}

/// Dispatches on `method`; `mu` is only read by the two-step estimator.
pub fn estimate(sample: &Sample, method: Method, mu: Option<f64>) -> Result<EstimateResult> {
    match method {
        Method::OneCp => Ok(estimate_one_changepoint(sample)),
        Method::Lse => Ok(estimate_segment_lse(sample)),
        Method::TwoStep => {
            let mu = mu.ok_or_else(|| Error::config("two-step estimator requires mu"))?;
            estimate_segment_two_step(sample, mu)
        }
    }
}

fn segment_between(a: f64, b: f64) -> Segment {
    Segment::new(a, b).expect("design points are sorted and lie in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_design, nikodym_distance, sample_observations, DesignKind, NoiseSpec};
    use crate::montecarlo::stream;
    use proptest::prelude::*;

    fn dd(y: &[f64]) -> Sample {
        let n = y.len();
        Sample::new((1..=n).map(|i| i as f64 / n as f64).collect(), y.to_vec()).unwrap()
    }

    fn brute_subarray(w: &[f64]) -> Subarray {
        let mut best: Option<Subarray> = None;
        for k in 0..w.len() {
            for l in k..w.len() {
                let total: f64 = w[k..=l].iter().sum();
                if best.is_none_or(|b| total > b.total) {
                    best = Some(Subarray {
                        start: k,
                        end: l,
                        total,
                    });
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn subarray_examples() {
        // 1-based (2, 3, 5) and (2, 2, -1) and (1, 3, 3)
        let r = max_subarray(&[-1.0, 2.0, 3.0, -4.0, 1.0]).unwrap();
        assert_eq!((r.start, r.end, r.total), (1, 2, 5.0));
        let r = max_subarray(&[-2.0, -1.0, -3.0]).unwrap();
        assert_eq!((r.start, r.end, r.total), (1, 1, -1.0));
        let r = max_subarray(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((r.start, r.end, r.total), (0, 2, 3.0));
        assert!(max_subarray(&[]).is_err());
    }

    #[test]
    fn subarray_tie_breaks_lexicographically() {
        let r = max_subarray(&[1.0, -1.0, 1.0]).unwrap();
        assert_eq!((r.start, r.end), (0, 0));
        let r = max_subarray(&[0.0, 0.0, 2.0, 0.0]).unwrap();
        assert_eq!((r.start, r.end), (0, 2));
        let r = max_subarray(&[-1.0, -1.0]).unwrap();
        assert_eq!((r.start, r.end), (0, 0));
    }

    #[test]
    fn one_changepoint_examples() {
        let r = estimate_one_changepoint(&dd(&[1.0, 1.0, 0.0, 0.0]));
        assert_eq!(r.indices, ArgmaxIndices::OneChangepoint { m_hat: 2 });
        assert_eq!(r.segment, Segment::new(0.0, 0.5).unwrap());
        assert_eq!(r.objective, 2.0);

        let r = estimate_one_changepoint(&dd(&[0.0; 4]));
        assert_eq!(r.indices, ArgmaxIndices::OneChangepoint { m_hat: 0 });
        assert!(r.segment.is_empty());
        assert_eq!(r.objective, 0.0);

        // weights (0.8, -1.4, 0.6, -0.8): F = (0.8, -0.6, 0.0, -0.8)
        let r = estimate_one_changepoint(&dd(&[0.9, -0.2, 0.8, 0.1]));
        assert_eq!(r.indices, ArgmaxIndices::OneChangepoint { m_hat: 1 });
        assert_eq!(r.segment, Segment::new(0.0, 0.25).unwrap());
        assert!((r.objective - 0.8).abs() < 1e-12);
    }

    #[test]
    fn one_changepoint_prefers_shortest_prefix_on_ties() {
        let r = estimate_one_changepoint(&dd(&[1.0, 0.5, 0.5, 0.0]));
        assert_eq!(r.indices, ArgmaxIndices::OneChangepoint { m_hat: 1 });
        let r = estimate_one_changepoint(&dd(&[0.5, 0.5]));
        assert_eq!(r.indices, ArgmaxIndices::OneChangepoint { m_hat: 0 });
    }

    #[test]
    fn lse_examples() {
        let r = estimate_segment_lse(&dd(&[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(r.segment, Segment::new(0.5, 0.75).unwrap());
        assert_eq!(r.objective, 2.0);

        let r = estimate_segment_lse(&dd(&[0.0; 4]));
        assert_eq!(r.segment, Segment::new(0.25, 0.25).unwrap());
        assert_eq!(r.indices, ArgmaxIndices::Lse { start: 0, end: 0 });
        assert_eq!(r.objective, -1.0);
    }

    #[test]
    fn lse_matches_exhaustive_search() {
        for rep in 0..200u64 {
            let mut rng = stream(rep);
            let n = 1 + (rep as usize % 40);
            let design = make_design(DesignKind::Rd, n, &mut rng).unwrap();
            let g = Segment::new(0.3, 0.6).unwrap();
            let s = sample_observations(&design, &g, &NoiseSpec::gaussian(0.8).unwrap(), &mut rng)
                .unwrap();
            let r = estimate_segment_lse(&s);
            assert_eq!(r.objective, brute_subarray(&s.weights()).total);
        }
    }

    #[test]
    fn two_step_hand_trace() {
        // DD n = 8, G = [0.3, 0.8], noise-free.
        let s = dd(&[0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let r = estimate_segment_two_step(&s, 0.4).unwrap();
        let ArgmaxIndices::TwoStep(t) = r.indices else {
            panic!("wrong trace")
        };
        assert_eq!(t.preliminary, Segment::new(0.5, 0.75).unwrap());
        assert_eq!(t.midpoint, 0.625);
        // 1-based ranks 3 and 5
        assert_eq!((t.m_minus, t.m_plus), (2, 4));
        assert_eq!(r.segment, Segment::new(0.375, 0.625).unwrap());
        assert!(!t.minus_fallback && !t.plus_fallback);
        assert_eq!(r.objective, 2.0);
    }

    #[test]
    fn two_step_full_interval() {
        for n in [2usize, 4, 10, 64] {
            let s = dd(&vec![1.0; n]);
            let r = estimate_segment_two_step(&s, 0.5).unwrap();
            let x = s.x();
            let expected = if n == 2 {
                // the only even position lies left of the midpoint; right side falls back
                Segment::new(x[0], x[n - 1]).unwrap()
            } else {
                Segment::new(x[0], x[n - 2]).unwrap()
            };
            assert_eq!(r.segment, expected, "n={n}");
            let loss = nikodym_distance(&r.segment, &Segment::new(0.0, 1.0).unwrap());
            assert!(loss <= 4.0 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn two_step_fallbacks() {
        // preliminary fit lands on the last odd position, so no even position lies right of it
        let s = dd(&[0.5, 0.0, 0.5, 1.0]);
        let r = estimate_segment_two_step(&s, 0.5).unwrap();
        let ArgmaxIndices::TwoStep(t) = r.indices else {
            panic!()
        };
        assert_eq!(t.midpoint, 1.0);
        assert!(t.plus_fallback);
        assert_eq!(t.m_plus, 3);
        assert!(!t.minus_fallback);
        // left side argmax on ties goes to the largest position
        assert_eq!(t.m_minus, 2);
    }

    #[test]
    fn two_step_rejects_bad_arguments() {
        let s = dd(&[1.0, 0.0]);
        assert!(estimate_segment_two_step(&s, 0.0).is_err());
        assert!(estimate_segment_two_step(&s, 1.0).is_err());
        assert!(estimate_segment_two_step(&s, f64::NAN).is_err());
        assert!(estimate_segment_two_step(&dd(&[1.0]), 0.5).is_err());
        assert!(estimate(&s, Method::TwoStep, None).is_err());
    }

    #[test]
    fn json_record_shape() {
        let r = estimate_segment_lse(&dd(&[0.0, 1.0, 1.0, 0.0]));
        let v = r.to_json();
        assert_eq!(v["method"], "lse");
        assert_eq!(v["a"], 0.5);
        assert_eq!(v["b"], 0.75);
        assert_eq!(v["empty"], false);
        assert_eq!(v["indices"]["start"], 1);
        assert_eq!(v["indices"]["end"], 2);
    }

    proptest! {
        #[test]
        fn kadane_agrees_with_enumeration(w in prop::collection::vec(-3i32..4, 1..40)) {
            // small integers make exact ties common
            let w: Vec<f64> = w.into_iter().map(f64::from).collect();
            prop_assert_eq!(max_subarray(&w).unwrap(), brute_subarray(&w));
        }

        #[test]
        fn prefix_maximizer_dominates(y in prop::collection::vec(-2.0f64..3.0, 1..50)) {
            let s = dd(&y);
            let r = estimate_one_changepoint(&s);
            let ArgmaxIndices::OneChangepoint { m_hat } = r.indices else { unreachable!() };
            let f = |m: usize| -> f64 { s.weights()[..m].iter().sum() };
            prop_assert_eq!(f(m_hat), r.objective);
            for m in 0..=y.len() {
                prop_assert!(f(m) <= r.objective);
            }
        }

        #[test]
        fn prefix_argmax_invariant_under_monotone_transform(y in prop::collection::vec(-2.0f64..3.0, 1..50)) {
            // argmax over M of phi(F(M)) for strictly increasing phi is the same prefix
            let s = dd(&y);
            let ArgmaxIndices::OneChangepoint { m_hat } = estimate_one_changepoint(&s).indices else { unreachable!() };
            let w = s.weights();
            let phi = |v: f64| v.atan() * 3.0 + 1.0;
            let mut best = (0usize, phi(0.0));
            let mut f = 0.0;
            for (m, wi) in w.iter().enumerate() {
                f += wi;
                if phi(f) > best.1 {
                    best = (m + 1, phi(f));
                }
            }
            prop_assert_eq!(best.0, m_hat);
        }

        #[test]
        fn two_step_output_is_ordered(seed in any::<u64>(), n in 2usize..80, mu in 0.05f64..0.95) {
            let mut rng = stream(seed);
            let design = make_design(DesignKind::Rd, n, &mut rng).unwrap();
            let g = Segment::new(0.2, 0.7).unwrap();
            let s = sample_observations(&design, &g, &NoiseSpec::gaussian(2.0).unwrap(), &mut rng).unwrap();
            let r = estimate_segment_two_step(&s, mu).unwrap();
            prop_assert!(r.segment.a() <= r.segment.b());
            prop_assert!(s.x().contains(&r.segment.a()) && s.x().contains(&r.segment.b()));
        }
    }
}
