//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export takes plain numbers or a distribution string and returns a
//! JSON document; the page parses it and draws on a canvas. The `*_json`
//! functions hold the logic so they can be tested natively.

use lindley_alt::bernstein::fit_report;
use lindley_alt::bounds::BoundReport;
use lindley_alt::oracle::{fixed_point_solve, simulate, FixedPointProblem};
use lindley_alt::{solve, Cdf, DistSpec, ExponentialService, Preparation, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Grid used when a law has no exact solution.
pub const ORACLE_GRID: usize = 1 << 12;
/// Largest simulation the page may request.
pub const MAX_SAMPLES: usize = 2_000_000;

#[derive(Debug, Serialize)]
pub struct Curves {
    /// `exact` for polynomial CDFs, `fixed-point` otherwise.
    pub method: &'static str,
    pub pi0: f64,
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    pub density: Vec<f64>,
    pub prep_cdf: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct FitView {
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub sup_error: f64,
    pub contraction: f64,
    pub certified_bound: f64,
    pub x: Vec<f64>,
    pub truth: Vec<f64>,
    pub fitted: Vec<f64>,
    pub exact_waiting_cdf: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub samples: usize,
    pub pi0_hat: f64,
    pub edges: Vec<f64>,
    /// Density of the continuous part, so the bars are comparable with
    /// the density curve.
    pub heights: Vec<f64>,
}

fn grid(points: usize) -> Vec<f64> {
    let m = points.clamp(2, 4097) - 1;
    (0..=m).map(|j| j as f64 / m as f64).collect()
}

fn law(dist: &str) -> Result<Preparation> {
    DistSpec::parse(dist)?.build()
}

/// Waiting-time CDF and density on `points` equally spaced abscissae.
pub fn curves(dist: &str, mu: f64, points: usize) -> Result<Curves> {
    let prep = law(dist)?;
    let svc = ExponentialService::new(mu)?;
    let x = grid(points);
    let prep_cdf = x.iter().map(|&t| prep.cdf(t)).collect();
    if let Some(poly) = prep.as_polynomial() {
        let sol = solve(poly, svc)?;
        return Ok(Curves {
            method: "exact",
            pi0: sol.pi0,
            cdf: x.iter().map(|&t| sol.cdf(t)).collect(),
            density: x.iter().map(|&t| sol.density(t)).collect(),
            x,
            prep_cdf,
        });
    }
    let fixed = fixed_point_solve(&FixedPointProblem::new(prep, svc, ORACLE_GRID, 1e-10)?)?;
    let density = fixed.cdf.smoothed_density();
    Ok(Curves {
        method: "fixed-point",
        pi0: fixed.cdf.atom,
        cdf: x.iter().map(|&t| fixed.cdf.cdf(t)).collect(),
        density: x.iter().map(|&t| lindley_alt::oracle::GridCdf::density_at(&density, t)).collect(),
        x,
        prep_cdf,
    })
}

/// Bernstein fit of the triangular law and the waiting time it produces.
pub fn triangular_fit(order: usize, mu: f64, points: usize) -> Result<FitView> {
    let prep = law("triangular")?;
    let svc = ExponentialService::new(mu)?;
    let report = fit_report(&prep, order)?;
    let bound = BoundReport::new(report.sup_error, &prep, svc)?;
    let sol = solve(&report.fitted, svc)?;
    let x = grid(points);
    Ok(FitView {
        order,
        coeffs: report.fitted.coeffs().to_vec(),
        sup_error: report.sup_error,
        contraction: bound.contraction,
        certified_bound: bound.certified_bound,
        truth: x.iter().map(|&t| prep.cdf(t)).collect(),
        fitted: x.iter().map(|&t| report.fitted.cdf(t)).collect(),
        exact_waiting_cdf: x.iter().map(|&t| sol.cdf(t)).collect(),
        x,
    })
}

/// Simulated recursion binned on `[0, 1]`. Runs on one shard because the
/// browser target has no threads.
pub fn histogram(dist: &str, mu: f64, samples: usize, seed: u64, bins: usize) -> Result<Histogram> {
    if samples > MAX_SAMPLES {
        return Err(lindley_alt::Error::Domain(format!("at most {MAX_SAMPLES} samples")));
    }
    let prep = law(dist)?;
    let svc = ExponentialService::new(mu)?;
    let sim = simulate(&prep, svc, samples, 1000, seed, 1)?;
    let bins = bins.clamp(1, 1000);
    let mut counts = vec![0usize; bins];
    for &w in sim.empirical.sorted() {
        if w > 0.0 {
            counts[((w * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    let scale = bins as f64 / samples as f64;
    Ok(Histogram {
        samples,
        pi0_hat: sim.pi0_hat,
        edges: (0..=bins).map(|j| j as f64 / bins as f64).collect(),
        heights: counts.iter().map(|&c| c as f64 * scale).collect(),
    })
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsValue> {
    let value = value.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn solve_curves(dist: &str, mu: f64, points: usize) -> std::result::Result<String, JsValue> {
    to_js(curves(dist, mu, points))
}

#[wasm_bindgen]
pub fn fit_triangular(order: usize, mu: f64, points: usize) -> std::result::Result<String, JsValue> {
    to_js(triangular_fit(order, mu, points))
}

#[wasm_bindgen]
pub fn simulate_histogram(
    dist: &str,
    mu: f64,
    samples: usize,
    seed: u64,
    bins: usize,
) -> std::result::Result<String, JsValue> {
    to_js(histogram(dist, mu, samples, seed, bins))
}
