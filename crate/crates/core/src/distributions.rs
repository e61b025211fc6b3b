//! Preparation-time laws on `[0, 1]` and the exponential service law.
//!
//! A preparation time `B` has a polynomial (or piecewise-polynomial) CDF on
//! `[0, 1]`, possibly with an atom at zero. The service time `A` is
//! exponential with rate `μ`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::poly::{compensated_sum, derivative, horner_compensated as horner, taylor_shift};
use crate::solver::moments::exp_weighted_moments;

/// Coefficients below this magnitude at the top of the sequence are dropped.
pub const TRIM_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of `Σ c_i` from one.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Grid used to check monotonicity of user-supplied CDFs.
pub const MONOTONE_GRID: usize = 4096;

/// Anything that can be evaluated as a CDF. Jumps are only allowed at zero
/// and are reported through [`Cdf::atom`].
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    /// Probability mass at zero.
    fn atom(&self) -> f64 {
        0.0
    }

    /// Left limit `F(x−)`.
    fn cdf_left(&self, x: f64) -> f64 {
        if x == 0.0 {
            self.cdf(0.0) - self.atom()
        } else {
            self.cdf(x)
        }
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Exponential service time with rate `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialService {
    rate: f64,
}

impl ExponentialService {
    pub fn new(rate: f64) -> Result<Self> {
        if rate.is_finite() && rate > 0.0 {
            Ok(Self { rate })
        } else {
            Err(Error::Domain(format!("service rate must be positive, got {rate}")))
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Polynomial CDF `Σ c_i x^i` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialCdf {
    coeffs: Vec<f64>,
}

impl PolynomialCdf {
    /// Trims negligible trailing coefficients and checks every CDF invariant.
    pub fn validate(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::NotACdf(vec![Violation::Empty]));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NotACdf(vec![Violation::NonFinite(i)]));
        }
        let mut trimmed = coeffs.to_vec();
        while trimmed.len() > 1 && trimmed.last().is_some_and(|c| c.abs() < TRIM_TOLERANCE) {
            trimmed.pop();
        }

        let mut violations = Vec::new();
        let sum = compensated_sum(trimmed.iter().copied());
        if (sum - 1.0).abs() > SUM_TOLERANCE + rounding_floor(&trimmed, 1.0) {
            violations.push(Violation::SumNotOne(sum));
        }
        let c0 = trimmed[0];
        if !(0.0..1.0).contains(&c0) {
            violations.push(Violation::AtomOutOfRange(c0));
        }
        if trimmed.len() < 2 {
            violations.push(Violation::Degenerate);
        } else if let Some(v) = check_monotone(&derivative(&trimmed), 0.0, 1.0, MONOTONE_GRID) {
            violations.push(v);
        }
        if violations.is_empty() {
            if let Some(v) = check_unit_range(&trimmed, 0.0, 1.0, MONOTONE_GRID) {
                violations.push(v);
            }
        }
        if violations.is_empty() {
            Ok(Self { coeffs: trimmed })
        } else {
            Err(Error::NotACdf(violations))
        }
    }

    pub fn uniform() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Density `Σ i c_i x^{i−1}` on `(0, 1]`; the atom at zero is excluded.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Domain(format!("density evaluated at {x} outside (0, 1]")));
        }
        Ok(horner(&derivative(&self.coeffs), x))
    }
}

impl Cdf for PolynomialCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            horner(&self.coeffs, x)
        }
    }

    fn atom(&self) -> f64 {
        self.coeffs[0]
    }
}

/// One piece `[start, end]` of a piecewise-polynomial CDF, coefficients in
/// the global variable `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
}

/// Continuous piecewise-polynomial CDF on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePolynomialCdf {
    segments: Vec<Segment>,
}

impl PiecewisePolynomialCdf {
    pub fn new(breaks: &[f64], polys: &[Vec<f64>]) -> Result<Self> {
        let ok_breaks = breaks.len() >= 2
            && breaks[0] == 0.0
            && *breaks.last().unwrap() == 1.0
            && breaks.windows(2).all(|w| w[0] < w[1]);
        if !ok_breaks {
            return Err(Error::NotACdf(vec![Violation::BadBreakpoints]));
        }
        if polys.len() != breaks.len() - 1 {
            return Err(Error::NotACdf(vec![Violation::SegmentCount {
                expected: breaks.len() - 1,
                got: polys.len(),
            }]));
        }
        for (i, p) in polys.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::NotACdf(vec![Violation::Empty]));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NotACdf(vec![Violation::NonFinite(i)]));
            }
        }
        let segments: Vec<Segment> = breaks
            .windows(2)
            .zip(polys)
            .map(|(w, p)| Segment {
                start: w[0],
                end: w[1],
                coeffs: p.clone(),
            })
            .collect();

        let mut violations = Vec::new();
        for pair in segments.windows(2) {
            let at = pair[0].end;
            let jump = horner(&pair[1].coeffs, at) - horner(&pair[0].coeffs, at);
            let tol = SUM_TOLERANCE + rounding_floor(&pair[0].coeffs, at) + rounding_floor(&pair[1].coeffs, at);
            if jump.abs() > tol {
                violations.push(Violation::Discontinuous { at, jump });
            }
        }
        let last = segments.last().unwrap();
        let top = horner(&last.coeffs, 1.0);
        if (top - 1.0).abs() > SUM_TOLERANCE + rounding_floor(&last.coeffs, 1.0) {
            violations.push(Violation::SumNotOne(top));
        }
        let bottom = horner(&segments[0].coeffs, 0.0);
        if !(0.0..1.0).contains(&bottom) {
            violations.push(Violation::AtomOutOfRange(bottom));
        }
        for s in &segments {
            let points = ((MONOTONE_GRID as f64 * (s.end - s.start)).ceil() as usize).max(64);
            if let Some(v) = check_monotone(&derivative(&s.coeffs), s.start, s.end, points) {
                violations.push(v);
                break;
            }
        }
        if violations.is_empty() {
            for s in &segments {
                let points = ((MONOTONE_GRID as f64 * (s.end - s.start)).ceil() as usize).max(64);
                if let Some(v) = check_unit_range(&s.coeffs, s.start, s.end, points) {
                    violations.push(v);
                    break;
                }
            }
        }
        if violations.is_empty() {
            Ok(Self { segments })
        } else {
            Err(Error::NotACdf(violations))
        }
    }

    /// Symmetric triangular law on `[0, 1]`: `2x²` then `−2x² + 4x − 1`.
    pub fn triangular() -> Self {
        Self::new(&[0.0, 0.5, 1.0], &[vec![0.0, 0.0, 2.0], vec![-1.0, 4.0, -2.0]])
            .expect("triangular CDF is valid")
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn segment_for(&self, x: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| x < s.end)
            .unwrap_or_else(|| self.segments.last().unwrap())
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Domain(format!("density evaluated at {x} outside (0, 1]")));
        }
        Ok(horner(&derivative(&self.segment_for(x).coeffs), x))
    }
}

impl Cdf for PiecewisePolynomialCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            horner(&self.segment_for(x).coeffs, x)
        }
    }

    fn atom(&self) -> f64 {
        horner(&self.segments[0].coeffs, 0.0)
    }
}

/// Any supported preparation-time law.
#[derive(Debug, Clone, PartialEq)]
pub enum Preparation {
    Polynomial(PolynomialCdf),
    Piecewise(PiecewisePolynomialCdf),
}

impl From<PolynomialCdf> for Preparation {
    fn from(p: PolynomialCdf) -> Self {
        Preparation::Polynomial(p)
    }
}

impl From<PiecewisePolynomialCdf> for Preparation {
    fn from(p: PiecewisePolynomialCdf) -> Self {
        Preparation::Piecewise(p)
    }
}

impl Preparation {
    /// Pieces covering `[0, 1]`; a plain polynomial is a single piece.
    pub fn segments(&self) -> Vec<Segment> {
        match self {
            Preparation::Polynomial(p) => vec![Segment {
                start: 0.0,
                end: 1.0,
                coeffs: p.coeffs.clone(),
            }],
            Preparation::Piecewise(p) => p.segments.clone(),
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            Preparation::Polynomial(p) => p.density(x),
            Preparation::Piecewise(p) => p.density(x),
        }
    }

    pub fn as_polynomial(&self) -> Option<&PolynomialCdf> {
        match self {
            Preparation::Polynomial(p) => Some(p),
            Preparation::Piecewise(_) => None,
        }
    }

    /// Largest value of the density on `[0, 1]`, sampled on the validation grid.
    pub fn max_density(&self) -> f64 {
        (1..=MONOTONE_GRID)
            .map(|j| self.density(j as f64 / MONOTONE_GRID as f64).unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    /// Inverse-CDF draw for a uniform deviate `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u < self.atom() {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

impl Cdf for Preparation {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Preparation::Polynomial(p) => p.cdf(x),
            Preparation::Piecewise(p) => p.cdf(x),
        }
    }

    fn atom(&self) -> f64 {
        match self {
            Preparation::Polynomial(p) => p.atom(),
            Preparation::Piecewise(p) => p.atom(),
        }
    }
}

/// `E[e^{−μB}]`, the Laplace transform of `B` at the service rate.
pub fn laplace_at_rate(prep: &Preparation, svc: ExponentialService) -> f64 {
    let mu = svc.rate();
    let mut terms = vec![prep.atom()];
    for seg in prep.segments() {
        let len = seg.end - seg.start;
        let dens = taylor_shift(&derivative(&seg.coeffs), seg.start);
        if dens.is_empty() {
            continue;
        }
        let moments = exp_weighted_moments(dens.len() - 1, Complex64::new(-mu * len, 0.0));
        let weight = (-mu * seg.start).exp();
        let mut scale = len;
        for (d, m) in dens.iter().zip(&moments) {
            terms.push(weight * d * scale * m.re);
            scale *= len;
        }
    }
    compensated_sum(terms)
}

/// `P[B > A] = 1 − E[e^{−μB}]`, the contraction constant of the
/// waiting-time mapping.
pub fn prob_b_greater_a(prep: &Preparation, svc: ExponentialService) -> f64 {
    1.0 - laplace_at_rate(prep, svc)
}

/// Parsed `--dist` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DistSpec {
    Polynomial { coeffs: Vec<f64> },
    Uniform,
    Triangular,
    Piecewise { breaks: Vec<f64>, polys: Vec<Vec<f64>> },
}

impl DistSpec {
    /// Accepts either a JSON object or one of the bare names `uniform`,
    /// `triangular`.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.starts_with('{') {
            serde_json::from_str(trimmed).map_err(|e| Error::InvalidSpec(e.to_string()))
        } else {
            match trimmed {
                "uniform" => Ok(DistSpec::Uniform),
                "triangular" => Ok(DistSpec::Triangular),
                other => Err(Error::InvalidSpec(format!("unknown distribution name `{other}`"))),
            }
        }
    }

    pub fn build(&self) -> Result<Preparation> {
        Ok(match self {
            DistSpec::Polynomial { coeffs } => PolynomialCdf::validate(coeffs)?.into(),
            DistSpec::Uniform => PolynomialCdf::uniform().into(),
            DistSpec::Triangular => PiecewisePolynomialCdf::triangular().into(),
            DistSpec::Piecewise { breaks, polys } => PiecewisePolynomialCdf::new(breaks, polys)?.into(),
        })
    }
}

/// Rounding floor of `p(x)` for double coefficients: storing each
/// coefficient and evaluating by Horner each cost about `deg · u` relative
/// to `Σ|c_k||x|^k`. Steep or shifted pieces make this exceed the fixed
/// tolerances, so checks compare against both.
fn rounding_floor(coeffs: &[f64], x: f64) -> f64 {
    let magnitude = coeffs.iter().rev().fold(0.0, |acc, c| acc * x.abs() + c.abs());
    2.0 * coeffs.len() as f64 * f64::EPSILON * magnitude
}

/// Scans the density polynomial on a grid over `[a, b]` and refines with a
/// golden-section minimum search around grid values that are close to zero.
fn check_monotone(density: &[f64], a: f64, b: f64, points: usize) -> Option<Violation> {
    if density.is_empty() {
        return None;
    }
    let near_zero = 1e-6 * density.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
    let below = |t: f64, v: f64| v < -(TRIM_TOLERANCE + rounding_floor(density, t));
    let step = (b - a) / points as f64;
    for j in 0..=points {
        let x = a + j as f64 * step;
        let v = horner(density, x);
        if below(x, v) {
            return Some(Violation::Decreasing { at: x, value: v });
        }
        if v < near_zero {
            let lo = (x - step).max(a);
            let hi = (x + step).min(b);
            let (at, value) = golden_min(|t| horner(density, t), lo, hi);
            if below(at, value) {
                return Some(Violation::Decreasing { at, value });
            }
        }
    }
    None
}

fn check_unit_range(coeffs: &[f64], a: f64, b: f64, points: usize) -> Option<Violation> {
    let step = (b - a) / points as f64;
    (0..=points).find_map(|j| {
        let at = a + j as f64 * step;
        let value = horner(coeffs, at);
        let tol = SUM_TOLERANCE + rounding_floor(coeffs, at);
        (!(-tol..=1.0 + tol).contains(&value))
            .then_some(Violation::OutOfUnitRange { at, value })
    })
}

pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}
