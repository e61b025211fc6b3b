//! Random preparation-time laws for property tests and demos.

use rand::Rng;

use crate::bernstein::bernstein_from_nodes;
use crate::distributions::{PiecewisePolynomialCdf, PolynomialCdf};
use crate::poly::taylor_shift;

/// Polynomial CDF of exact degree `≤ degree` from random nondecreasing
/// Bernstein control values; with probability 0.3 it has an atom at zero.
pub fn random_polynomial_cdf<R: Rng + ?Sized>(rng: &mut R, degree: usize) -> PolynomialCdf {
    let atom = if rng.random_bool(0.3) { rng.random_range(0.0..0.5) } else { 0.0 };
    let mut nodes: Vec<f64> = (1..degree).map(|_| rng.random_range(atom..1.0)).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.insert(0, atom);
    nodes.push(1.0);
    bernstein_from_nodes(&nodes).expect("nondecreasing control values give a CDF")
}

/// Continuous piecewise-polynomial CDF with `pieces` pieces (no atom). Each
/// piece rescales one of `t`, `t²`, `2t − t²`, `3t² − 2t³` between random
/// breakpoints and levels.
pub fn random_piecewise_cdf<R: Rng + ?Sized>(rng: &mut R, pieces: usize) -> PiecewisePolynomialCdf {
    const SHAPES: [&[f64]; 4] = [&[0.0, 1.0], &[0.0, 0.0, 1.0], &[0.0, 2.0, -1.0], &[0.0, 0.0, 3.0, -2.0]];
    let pieces = pieces.max(1);
    // Breakpoints at least 0.05 apart keep the expanded coefficients tame.
    let mut breaks = vec![0.0];
    let slack = 1.0 - 0.05 * pieces as f64;
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.0..slack.max(0.0))).collect();
    cuts.sort_by(f64::total_cmp);
    for (i, c) in cuts.iter().enumerate() {
        breaks.push(c + 0.05 * (i + 1) as f64);
    }
    breaks.push(1.0);
    let mut levels: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.0..1.0)).collect();
    levels.sort_by(f64::total_cmp);
    levels.insert(0, 0.0);
    levels.push(1.0);

    let polys: Vec<Vec<f64>> = (0..pieces)
        .map(|p| {
            let (s, e) = (breaks[p], breaks[p + 1]);
            let (lo, hi) = (levels[p], levels[p + 1]);
            let shape = SHAPES[rng.random_range(0..SHAPES.len())];
            // lo + (hi − lo) g(y / L) as a polynomial in y = x − s, then in x.
            let len = e - s;
            let mut in_y: Vec<f64> = shape
                .iter()
                .enumerate()
                .map(|(k, g)| (hi - lo) * g / len.powi(k as i32))
                .collect();
            in_y[0] += lo;
            taylor_shift(&in_y, -s)
        })
        .collect();
    PiecewisePolynomialCdf::new(&breaks, &polys).expect("random piecewise law is a valid CDF")
}
