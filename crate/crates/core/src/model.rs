// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observation model: a unit-amplitude indicator of an unknown segment of
//! `[0, 1]`, observed at sorted design points under additive subgaussian
//! noise.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{derive_seed, stream};

/// A closed sub-interval `[a, b]` of `[0, 1]`, or the empty set.
///
/// `[a, a]` is a legal measure-zero segment and is distinct from the empty
/// segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Option<[f64; 2]>", into = "Option<[f64; 2]>")]
pub struct Segment {
    a: f64,
    b: f64,
    empty: bool,
}

impl Segment {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::input(format!(
                "segment endpoints must satisfy 0 <= a <= b <= 1; got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b, empty: false })
    }

    pub const fn empty() -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            empty: true,
        }
    }

    /// Left-anchored segment `[0, theta]`.
    pub fn anchored(theta: f64) -> Result<Self> {
        Self::new(0.0, theta)
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Endpoints, or `None` for the empty segment.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        (!self.empty).then_some((self.a, self.b))
    }

    /// Left endpoint (0 for the empty segment).
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Right endpoint (0 for the empty segment).
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.b - self.a
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.empty && self.a <= x && x <= self.b
    }

    pub fn midpoint(&self) -> Option<f64> {
        self.bounds().map(|(a, b)| 0.5 * (a + b))
    }

    /// Length of the intersection with `other`.
    pub fn overlap(&self, other: &Segment) -> f64 {
        match (self.bounds(), other.bounds()) {
            (Some((a1, b1)), Some((a2, b2))) => (b1.min(b2) - a1.max(a2)).max(0.0),
            _ => 0.0,
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bounds() {
            Some((a, b)) => write!(f, "[{a}, {b}]"),
            None => f.write_str("empty"),
        }
    }
}

impl TryFrom<Option<[f64; 2]>> for Segment {
    type Error = Error;

    fn try_from(value: Option<[f64; 2]>) -> Result<Self> {
        match value {
            Some([a, b]) => Segment::new(a, b),
            None => Ok(Segment::empty()),
        }
    }
}

impl From<Segment> for Option<[f64; 2]> {
    fn from(s: Segment) -> Self {
        s.bounds().map(|(a, b)| [a, b])
    }
}

/// Parses `a,b` or `empty`.
impl FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("empty") {
            return Ok(Segment::empty());
        }
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::input(format!("segment must be `a,b` or `empty`; got `{s}`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::input(format!("bad segment endpoint `{t}`: {e}")))
        };
        Segment::new(parse(a)?, parse(b)?)
    }
}

/// Lebesgue measure of the symmetric difference of two segments.
pub fn nikodym_distance(g1: &Segment, g2: &Segment) -> f64 {
    (g1.length() + g2.length() - 2.0 * g1.overlap(g2)).max(0.0)
}

/// Regular grid `i/n` or sorted i.i.d. uniform design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Dd,
    Rd,
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dd" => Ok(Self::Dd),
            "rd" => Ok(Self::Rd),
            other => Err(Error::input(format!(
                "unknown design `{other}` (expected dd|rd)"
            ))),
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dd => "dd",
            Self::Rd => "rd",
        })
    }
}

/// Generates `n` sorted design points in `[0, 1]`.
///
/// The random design draws exactly `n` uniforms from `rng` and sorts them;
/// the regular design does not touch `rng`.
pub fn make_design<R: Rng + ?Sized>(kind: DesignKind, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::config("design size n must be >= 1"));
    }
    Ok(match kind {
        DesignKind::Dd => {
            let nf = n as f64;
            (1..=n).map(|i| i as f64 / nf).collect()
        }
        DesignKind::Rd => {
            let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            x.sort_by(f64::total_cmp);
            x
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Gaussian,
    Rademacher,
    UniformBounded,
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::UniformBounded => "uniform-bounded",
        })
    }
}

/// Centred noise law with subgaussian scale `sigma`.
///
/// `sigma = 0` is accepted as a degenerate noise-free mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, sigma: f64) -> Result<Self> {
        let spec = Self { family, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(NoiseFamily::Gaussian, sigma)
    }

    pub const fn noiseless() -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::config(format!(
                "noise sigma must be finite and >= 0; got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.sigma;
        match self.family {
            NoiseFamily::Gaussian => s * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    s
                } else {
                    -s
                }
            }
            NoiseFamily::UniformBounded => s * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    /// Density of the noise at `t` (probability mass for the Rademacher family).
    /// Undefined for `sigma = 0`, where `NaN` is returned.
    pub fn density(&self, t: f64) -> f64 {
        let s = self.sigma;
        if s == 0.0 {
            return f64::NAN;
        }
        match self.family {
            NoiseFamily::Gaussian => {
                let z = t / s;
                (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            }
            NoiseFamily::Rademacher => {
                if t == s || t == -s {
                    0.5
                } else {
                    0.0
                }
            }
            NoiseFamily::UniformBounded => {
                if t.abs() <= s {
                    0.5 / s
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family, self.sigma)
    }
}

/// Parses `family:sigma`, e.g. `gaussian:0.25`.
impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (fam, sigma) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::input(format!("noise must be `family:sigma`; got `{s}`")))?;
        let family = match fam.trim().to_ascii_lowercase().as_str() {
            "gaussian" => NoiseFamily::Gaussian,
            "rademacher" => NoiseFamily::Rademacher,
            "uniform-bounded" | "uniform" => NoiseFamily::UniformBounded,
            other => return Err(Error::input(format!("unknown noise family `{other}`"))),
        };
        let sigma = sigma
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::input(format!("bad noise sigma `{sigma}`: {e}")))?;
        NoiseSpec::new(family, sigma)
    }
}

/// Sorted design points with their noisy labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::input("sample must contain at least one point"));
        }
        if x.len() != y.len() {
            return Err(Error::input(format!(
                "design and labels differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        validate_design(&x)?;
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite label {v}")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Least-squares weights `2 y_i - 1`.
    pub fn weights(&self) -> Vec<f64> {
        self.y.iter().map(|&y| 2.0 * y - 1.0).collect()
    }

    /// Sub-sample at the given (sorted) positions.
    pub(crate) fn select(&self, idx: &[usize]) -> Sample {
        Sample {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Writes the `i,x,y` CSV form; `i` is 1-based, reals carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,x,y")?;
        for (i, (x, y)) in self.x.iter().zip(&self.y).enumerate() {
            writeln!(w, "{},{},{}", i + 1, format_real(*x), format_real(*y))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            i: usize,
            x: f64,
            y: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "x", "y"] {
            return Err(Error::input(format!(
                "sample CSV header must be `i,x,y`; got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (k, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.i != k + 1 {
                return Err(Error::input(format!(
                    "sample rows must be in design order; row {} has i={}",
                    k + 1,
                    row.i
                )));
            }
            x.push(row.x);
            y.push(row.y);
        }
        Sample::new(x, y)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn validate_design(x: &[f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::input(format!("design point {v} outside [0, 1]")));
    }
    if x.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::input("design points must be sorted ascending"));
    }
    Ok(())
}

/// Draws `y_i = 1(x_i in g) + xi_i`, the `i`-th noise draw going to the
/// `i`-th sorted design point.
pub fn sample_observations<R: Rng + ?Sized>(
    design: &[f64],
    g: &Segment,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Sample> {
    noise.validate()?;
    let y = design
        .iter()
        .map(|&x| {
            let signal = if g.contains(x) { 1.0 } else { 0.0 };
            signal + noise.draw(rng)
        })
        .collect();
    Sample::new(design.to_vec(), y)
}

/// Seed-addressed simulation: the design stream is `derive_seed(seed, [0])`
/// and the noise stream `derive_seed(seed, [1])`.
pub fn simulate(
    kind: DesignKind,
    n: usize,
    g: &Segment,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Sample> {
    let design = make_design(kind, n, &mut stream(derive_seed(seed, &[0])))?;
    sample_observations(&design, g, noise, &mut stream(derive_seed(seed, &[1])))
}
