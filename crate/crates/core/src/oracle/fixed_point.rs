use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::distributions::{prob_b_greater_a, Cdf, ExponentialService, Preparation};
use crate::error::{Error, Result};
use crate::export::format_significant;
use crate::poly::{compensated_sum, taylor_shift};
use crate::solver::moments::exp_weighted_moments;

/// Largest accepted grid size.
pub const MAX_GRID: usize = 1 << 20;

/// A CDF on `[0, 1]` sampled at `x_j = j / grid_size`, `j = 0..=grid_size`,
/// read back by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCdf {
    pub grid_size: usize,
    pub values: Vec<f64>,
    pub atom: f64,
}

impl GridCdf {
    pub fn new(values: Vec<f64>) -> Self {
        let grid_size = values.len() - 1;
        let atom = values[0];
        Self { grid_size, values, atom }
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.grid_size as f64
    }

    /// Density by central differences, then a centred 5-point moving
    /// average (truncated at the ends).
    pub fn smoothed_density(&self) -> Vec<f64> {
        let n = self.grid_size;
        let h = 1.0 / n as f64;
        let v = &self.values;
        let raw: Vec<f64> = (0..=n)
            .map(|j| match j {
                0 => (v[1] - v[0]) / h,
                j if j == n => (v[n] - v[n - 1]) / h,
                j => (v[j + 1] - v[j - 1]) / (2.0 * h),
            })
            .collect();
        (0..=n)
            .map(|j| {
                let lo = j.saturating_sub(2);
                let hi = (j + 2).min(n);
                raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect()
    }

    /// Linear interpolation of the smoothed density.
    pub fn density_at(density: &[f64], x: f64) -> f64 {
        interpolate(density, x)
    }

    /// `x,F` rows at 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,F\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", format_significant(self.x(j)), format_significant(*v)));
        }
        out
    }
}

fn interpolate(values: &[f64], x: f64) -> f64 {
    let n = values.len() - 1;
    let t = x.clamp(0.0, 1.0) * n as f64;
    let j = (t.floor() as usize).min(n - 1);
    let w = t - j as f64;
    values[j] * (1.0 - w) + values[j + 1] * w
}

impl Cdf for GridCdf {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            interpolate(&self.values, x)
        }
    }

    fn atom(&self) -> f64 {
        self.atom
    }
}

/// `max_j |G(x_j) − F(x_j)|` over the grid points of `grid`.
pub fn grid_sup_distance(grid: &GridCdf, other: &dyn Cdf) -> f64 {
    grid.values
        .iter()
        .enumerate()
        .map(|(j, v)| (v - other.cdf(grid.x(j))).abs())
        .fold(0.0, f64::max)
}

/// `H(u) = E[F_B(u + A)]` at `u = m / grid_size`, `m = 0..=grid_size`.
///
/// Each piece of `F_B` above `u` contributes `μ e^{−μ(a−u)} ∫₀^L P(a+τ) e^{−μτ} dτ`
/// with `a = max(start, u)`, and the region past 1 contributes `e^{−μ(1−u)}`.
pub fn precompute_kernel(prep: &Preparation, svc: ExponentialService, grid_size: usize) -> Vec<f64> {
    let mu = svc.rate();
    let segments = prep.segments();
    (0..=grid_size)
        .map(|m| {
            let u = m as f64 / grid_size as f64;
            if u >= 1.0 {
                return 1.0;
            }
            let mut terms = vec![(-mu * (1.0 - u)).exp()];
            for seg in segments.iter().filter(|s| s.end > u) {
                let a = seg.start.max(u);
                let len = seg.end - a;
                let shifted = taylor_shift(&seg.coeffs, a);
                let moments = exp_weighted_moments(shifted.len() - 1, Complex64::new(-mu * len, 0.0));
                let weight = mu * (-mu * (a - u)).exp();
                let mut scale = len;
                for (q, mk) in shifted.iter().zip(&moments) {
                    terms.push(weight * q * scale * mk.re);
                    scale *= len;
                }
            }
            compensated_sum(terms).clamp(0.0, 1.0)
        })
        .collect()
}

/// The mapping `F ↦ TF` discretized on a fixed grid.
#[derive(Debug, Clone)]
pub struct FixedPointProblem {
    pub prep: Preparation,
    pub svc: ExponentialService,
    pub grid_size: usize,
    pub tolerance: f64,
    pub contraction: f64,
}

impl FixedPointProblem {
    pub fn new(prep: Preparation, svc: ExponentialService, grid_size: usize, tolerance: f64) -> Result<Self> {
        if !grid_size.is_power_of_two() || grid_size < 2 || grid_size > MAX_GRID {
            return Err(Error::Domain(format!("grid size {grid_size} is not a power of two in [2, 2^20]")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance {tolerance} must be positive")));
        }
        let contraction = prob_b_greater_a(&prep, svc);
        if !(contraction < 1.0) {
            return Err(Error::Domain(format!("P[B > A] = {contraction} is not below 1")));
        }
        Ok(Self {
            prep,
            svc,
            grid_size,
            tolerance,
            contraction,
        })
    }

    pub fn mapping(&self) -> Mapping {
        Mapping::new(precompute_kernel(&self.prep, self.svc, self.grid_size))
    }

    /// `ceil(log tol / log c) + 10`.
    pub fn iteration_cap(&self) -> usize {
        if self.contraction <= 0.0 {
            return 10;
        }
        (self.tolerance.ln() / self.contraction.ln()).ceil().max(0.0) as usize + 10
    }
}

/// Applies `(TF)_j = F_0 H_j + Σ_{k<N−j} ΔF_k h_{j+k} + (F_N − F_{N−j})`,
/// where `h_m` is the trapezoidal cell average of `H`. The sum is a
/// correlation and is evaluated with one FFT pair per application.
#[derive(Clone)]
pub struct Mapping {
    kernel: Vec<f64>,
    cell_kernel_spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Mapping {
    pub fn new(kernel: Vec<f64>) -> Self {
        let n = kernel.len() - 1;
        let size = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        for m in 0..n {
            spectrum[m] = Complex64::new(0.5 * (kernel[m] + kernel[m + 1]), 0.0);
        }
        forward.process(&mut spectrum);
        Self {
            kernel,
            cell_kernel_spectrum: spectrum,
            forward,
            inverse,
        }
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn grid_size(&self) -> usize {
        self.kernel.len() - 1
    }

    /// One application of the mapping. The result is clamped to `[0, 1]` and
    /// made nondecreasing, which only removes round-off.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let n = self.grid_size();
        assert_eq!(values.len(), n + 1, "grid CDF has the wrong length");
        let size = 2 * n;
        // Reversed increments: a_rev[i] = ΔF_{n−1−i}.
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for k in 0..n {
            buf[n - 1 - k] = Complex64::new(values[k + 1] - values[k], 0.0);
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.cell_kernel_spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;

        let mut out = Vec::with_capacity(n + 1);
        let mut running = 0.0_f64;
        for j in 0..=n {
            let correlation = if j < n { buf[n - 1 + j].re * scale } else { 0.0 };
            let value = values[0] * self.kernel[j] + correlation + (values[n] - values[n - j]);
            running = running.max(value.clamp(0.0, 1.0));
            out.push(running);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    pub cdf: GridCdf,
    pub iterations: usize,
    /// Sup change of every iteration, in order.
    pub changes: Vec<f64>,
}

/// Iterates the mapping from `F ≡ 1` until the sup change drops below the
/// problem tolerance.
pub fn fixed_point_solve(problem: &FixedPointProblem) -> Result<FixedPointResult> {
    let mapping = problem.mapping();
    let cap = problem.iteration_cap();
    let mut values = vec![1.0; problem.grid_size + 1];
    let mut changes = Vec::new();
    loop {
        let next = mapping.apply(&values);
        let change = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        changes.push(change);
        if change < problem.tolerance {
            break;
        }
        if changes.len() >= cap {
            return Err(Error::NonConvergence {
                iterations: changes.len(),
                last_change: change,
            });
        }
    }
    Ok(FixedPointResult {
        cdf: GridCdf::new(values),
        iterations: changes.len(),
        changes,
    })
}
