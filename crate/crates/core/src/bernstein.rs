//! Bernstein-polynomial fits of CDFs on `[0, 1]` and sup-norm distances.

use serde::Serialize;

use crate::distributions::{Cdf, PolynomialCdf, TRIM_TOLERANCE};
use crate::error::{Error, Result};
use crate::poly::{accurate_dot, binomial, compensated_sum};

/// Highest order whose power-basis expansion stays accurate in `f64`.
pub const MAX_ORDER: usize = 40;
/// Uniform grid size used by [`sup_distance`].
pub const SUP_GRID: usize = 1 << 14;

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fitted: PolynomialCdf,
    pub order: usize,
    pub sup_error: f64,
}

/// Power-basis coefficients of `Σ_k F(k/n) C(n,k) x^k (1−x)^{n−k}`.
///
/// The coefficient of `x^m` is `C(n,m) Δ^m F(0)`, the m-th forward
/// difference of the node values scaled by an exact binomial. Differences
/// are accumulated with exact products and compensated sums.
pub fn bernstein_fit(cdf: &dyn Cdf, order: usize) -> Result<PolynomialCdf> {
    if order == 0 {
        return Err(Error::Domain("Bernstein order must be at least 1".into()));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            order,
            max: MAX_ORDER,
        });
    }
    let nodes: Vec<f64> = (0..=order).map(|k| cdf.cdf(k as f64 / order as f64)).collect();
    bernstein_from_nodes(&nodes)
}

/// Power-basis form of the Bernstein polynomial with control values
/// `nodes[k]` at `k / n`, validated as a CDF.
pub fn bernstein_from_nodes(nodes: &[f64]) -> Result<PolynomialCdf> {
    if nodes.len() < 2 {
        return Err(Error::Domain("Bernstein order must be at least 1".into()));
    }
    let order = nodes.len() - 1;
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            order,
            max: MAX_ORDER,
        });
    }
    let n = order as u32;
    if nodes[0] < 0.0 || (nodes[order] - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "input must satisfy F(0) ≥ 0 and F(1) = 1 (got {} and {})",
            nodes[0], nodes[order]
        )));
    }

    // Split off the chord F(0) + (F(1) − F(0))x, which the operator
    // reproduces exactly, so only the curvature goes through the
    // ill-conditioned difference table.
    let (start, end) = (nodes[0], nodes[order]);
    let residual: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(k, &v)| v - (start + (end - start) * (k as f64 / order as f64)))
        .collect();

    let mut coeffs = vec![start, end - start];
    coeffs.resize(order + 1, 0.0);
    for m in 1..=n {
        let mut terms: Vec<(f64, f64)> = (0..=m)
            .map(|k| {
                let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
                (sign * binomial(m, k) as f64, residual[k as usize])
            })
            .collect();
        let diff = accurate_dot(&mut terms);
        coeffs[m as usize] += binomial(n, m) as f64 * diff;
    }

    while coeffs.len() > 2 && coeffs.last().is_some_and(|c| c.abs() < TRIM_TOLERANCE) {
        coeffs.pop();
    }
    let defect = 1.0 - compensated_sum(coeffs.iter().copied());
    coeffs[1] += defect;

    PolynomialCdf::validate(&coeffs)
}

pub fn fit_report(cdf: &dyn Cdf, order: usize) -> Result<FitReport> {
    let fitted = bernstein_fit(cdf, order)?;
    let sup_error = sup_distance(cdf, &fitted);
    Ok(FitReport {
        fitted,
        order,
        sup_error,
    })
}

/// `sup_{x∈[0,1]} |F(x) − G(x)|`, with its location.
///
/// Scans a uniform grid of [`SUP_GRID`] cells, then refines the best cell
/// and its neighbours by golden-section search. The result never exceeds
/// the true supremum.
pub fn sup_distance_at(f: &dyn Cdf, g: &dyn Cdf) -> (f64, f64) {
    let gap = |x: f64| (f.cdf(x) - g.cdf(x)).abs();
    let h = 1.0 / SUP_GRID as f64;
    let (best_j, best) = (0..=SUP_GRID)
        .map(|j| (j, gap(j as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let lo = (best_j as f64 - 1.0).max(0.0) * h;
    let hi = (best_j as f64 + 1.0).min(SUP_GRID as f64) * h;
    let (at, neg) = crate::distributions::golden_min(|x| -gap(x), lo, hi);
    if -neg > best {
        (-neg, at)
    } else {
        (best, best_j as f64 * h)
    }
}

pub fn sup_distance(f: &dyn Cdf, g: &dyn Cdf) -> f64 {
    sup_distance_at(f, g).0
}
