//! Exact waiting-time law for polynomial preparation times.
//!
//! For `B` with CDF `Σ c_i x^i` on `[0, 1]` and exponential `A` with rate
//! `μ`, the waiting time `W = max{0, B − A − W}` has an atom `π₀` at zero
//! and, on `[0, 1]`, a density that is a mixture of `2n + 2` exponentials
//! `e^{r x}` whose exponents are the roots of an even characteristic
//! polynomial. Roots come in `±r` pairs; each pair contributes one free
//! weight, and the `n + 1` weights together with `π₀` solve a small linear
//! system built from the integral equation at `x = 0` and the normalisation.
//!
//! The pipeline is:
//!
//! 1. [`nu_coefficients`]: `ν_{n−j} = μ F_B^{(j)}(1)`;
//! 2. [`characteristic_polynomial`] and [`roots::find_roots`] / [`roots::pair_roots`];
//! 3. [`mode_vector`] and [`coupling_factor`] for every representative root;
//! 4. [`assemble_linear_system`] and a pivoted complex LU solve;
//! 5. verification of every [`WaitingTimeSolution`] invariant.

pub mod linalg;
pub mod moments;
pub mod roots;

use num_complex::Complex64;
use serde::Serialize;

use crate::distributions::{prob_b_greater_a, Cdf, ExponentialService, PolynomialCdf, Preparation};
use crate::error::{Error, Result};
use crate::poly::{binomial, compensated_sum, derivative, horner};
use linalg::{solve_with_condition, ComplexMatrix};
pub use moments::{exp_weighted_moment, exp_weighted_moments, exp_weighted_moments_on};

/// Condition numbers above this are flagged (the solve still proceeds).
pub const ILL_CONDITIONED: f64 = 1e10;
/// Grid used to verify realness and nonnegativity of the density.
pub const VERIFY_GRID: usize = 1024;

const NORMALIZATION_TOLERANCE: f64 = 1e-10;
const IMAGINARY_TOLERANCE: f64 = 1e-8;
const NEGATIVITY_TOLERANCE: f64 = 1e-8;
const MODE_RESIDUAL_TOLERANCE: f64 = 1e-9;
const CONJUGATE_TOLERANCE: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `ν_0, …, ν_n` with `ν_{n−j} = μ Σ_{i=0}^{n−j} (i+j)!/i! c_{i+j} = μ F_B^{(j)}(1)`.
///
/// `ν_n = μ F_B(1)` is set to `μ` exactly.
pub fn nu_coefficients(fb: &PolynomialCdf, svc: ExponentialService) -> Vec<f64> {
    let n = fb.degree();
    let mu = svc.rate();
    let mut nu = vec![0.0; n + 1];
    let mut current = fb.coeffs().to_vec();
    nu[n] = mu;
    for j in 1..=n {
        current = derivative(&current);
        nu[n - j] = mu * compensated_sum(current.iter().copied());
    }
    nu
}

/// Coefficients (ascending) of
/// `r^{2n}(r² − μ²) + (−1)^n (Σ_{i<n} ν_i r^i)(Σ_{j<n} ν_j (−r)^j)`.
pub fn characteristic_polynomial(nu: &[f64], mu: f64) -> Result<Vec<f64>> {
    let n = nu.len() - 1;
    let mut poly = vec![0.0; 2 * n + 3];
    poly[2 * n + 2] = 1.0;
    poly[2 * n] = -mu * mu;
    let outer = if n % 2 == 0 { 1.0 } else { -1.0 };
    for (k, slot) in poly.iter_mut().enumerate().take(2 * n - 1) {
        let lo = k.saturating_sub(n - 1);
        let hi = k.min(n - 1);
        let terms = (lo..=hi).map(|i| {
            let j = k - i;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            nu[i] * nu[j] * sign
        });
        *slot += outer * compensated_sum(terms);
    }
    let even_scale = poly.iter().step_by(2).map(|v| v.abs()).fold(0.0, f64::max);
    for index in (1..poly.len()).step_by(2) {
        if poly[index].abs() > 1e-12 * even_scale {
            return Err(Error::AsymmetryDetected {
                index,
                value: poly[index],
            });
        }
        poly[index] = 0.0;
    }
    Ok(poly)
}

/// The `ν` vector and characteristic polynomial of one input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicSystem {
    pub mu: f64,
    pub nu: Vec<f64>,
    pub char_poly: Vec<f64>,
}

impl CharacteristicSystem {
    pub fn new(fb: &PolynomialCdf, svc: ExponentialService) -> Result<Self> {
        let nu = nu_coefficients(fb, svc);
        let char_poly = characteristic_polynomial(&nu, svc.rate())?;
        Ok(Self {
            mu: svc.rate(),
            nu,
            char_poly,
        })
    }

    pub fn degree(&self) -> usize {
        self.nu.len() - 1
    }

    /// `Σ_{i<n} ν_i r^i`.
    fn lower_sum(&self, r: Complex64) -> Complex64 {
        let n = self.degree();
        self.nu[..n].iter().rev().fold(c(0.0), |acc, &v| acc * r + v)
    }

    /// `Σ_{i<n} ν_i (−1)^{n+1+i} r^i`.
    fn reflected_sum(&self, r: Complex64) -> Complex64 {
        let n = self.degree();
        self.nu[..n]
            .iter()
            .enumerate()
            .rev()
            .fold(c(0.0), |acc, (i, &v)| {
                let sign = if (n + 1 + i) % 2 == 0 { 1.0 } else { -1.0 };
                acc * r + sign * v
            })
    }

    /// Residuals of both rows of the mode equations at `(r, ζ, θ)`, each
    /// relative to the size of its terms (backward error).
    pub fn mode_residuals(&self, r: Complex64, zeta: Complex64, theta: Complex64) -> [f64; 2] {
        let n = self.degree() as i32;
        let rn = r.powi(n);
        let a1 = rn * (r - self.mu);
        let b1 = self.lower_sum(r);
        let a2 = rn * (r + self.mu);
        let b2 = self.reflected_sum(r);
        // Σ|ν_i||r|^i bounds the rounding error of both sums, which can far
        // exceed their values when the ν_i alternate in sign.
        let modulus = r.norm();
        let sums = self.nu[..n as usize]
            .iter()
            .rev()
            .fold(0.0, |acc, v| acc * modulus + v.abs());
        let rel = |v: Complex64, s: f64| if s == 0.0 { v.norm() } else { v.norm() / s };
        [
            rel(a1 * zeta - b1 * theta, (a1 * zeta).norm() + sums * theta.norm()),
            rel(a2 * theta - b2 * zeta, (a2 * theta).norm() + sums * zeta.norm()),
        ]
    }
}

/// Nontrivial `(ζ, θ)` solving both rows of the mode equations at a simple
/// root `r`, scaled so that the larger component is exactly `1`.
pub fn mode_vector(r: Complex64, cs: &CharacteristicSystem) -> Result<(Complex64, Complex64)> {
    let n = cs.degree() as i32;
    let rn = r.powi(n);
    // Row 1: ζ r^n (r − μ) = θ Σ ν_i r^i  → (ζ, θ) ∝ (Σ ν_i r^i, r^n (r − μ)).
    let first = (cs.lower_sum(r), rn * (r - cs.mu));
    // Row 2: θ r^n (r + μ) = ζ Σ ν_i (−1)^{n+1+i} r^i.
    let second = (rn * (r + cs.mu), cs.reflected_sum(r));
    let size = |p: &(Complex64, Complex64)| p.0.norm().max(p.1.norm());
    let (zeta, theta) = if size(&first) >= size(&second) { first } else { second };
    let pivot = if zeta.norm() >= theta.norm() { zeta } else { theta };
    if pivot.norm() == 0.0 || !pivot.is_finite() {
        return Err(Error::DegenerateMode(r));
    }
    let (zeta, theta) = (zeta / pivot, theta / pivot);
    let worst = cs.mode_residuals(r, zeta, theta).into_iter().fold(0.0, f64::max);
    if worst > MODE_RESIDUAL_TOLERANCE {
        return Err(Error::DegenerateMode(r));
    }
    Ok((zeta, theta))
}

/// `q` such that the partner weight is `q` times the representative weight.
///
/// Matching the `e^{rx}` and `e^{−rx}` terms of the differential equation
/// gives two equivalent forms,
/// `q = e^{r} ζ r^n (r − μ) / (ζ' S(r))` and
/// `q = e^{r} ζ S(−r) / (ζ' (−r)^n (−r − μ))` with `S(r) = Σ_{j<n} ν_j r^j`.
/// Since `S(r)S(−r)` is fixed by the characteristic equation, the form using
/// the larger of `|S(r)|`, `|S(−r)|` is the well-conditioned one.
pub fn coupling_factor(
    root: Complex64,
    zeta: Complex64,
    partner_zeta: Complex64,
    cs: &CharacteristicSystem,
) -> Result<Complex64> {
    let n = cs.degree();
    let modulus = root.norm();
    let scale = cs.nu[..n]
        .iter()
        .enumerate()
        .map(|(i, v)| v.abs() * modulus.powi(i as i32))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let plus = cs.lower_sum(root);
    let minus = cs.lower_sum(-root);
    let growth = root.exp();
    let (numerator, denominator, sum) = if plus.norm() >= minus.norm() {
        (growth * zeta * root.powi(n as i32) * (root - cs.mu), partner_zeta * plus, plus)
    } else {
        (growth * zeta * minus, partner_zeta * (-root).powi(n as i32) * (-root - cs.mu), minus)
    };
    if sum.norm() < 1e-12 * scale || denominator.norm() == 0.0 {
        return Err(Error::SingularCoupling {
            root,
            magnitude: sum.norm() / scale,
        });
    }
    Ok(numerator / denominator)
}

/// One `±r` pair of exponential modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub root: Complex64,
    pub zeta: Complex64,
    pub theta: Complex64,
    pub partner_zeta: Complex64,
    pub partner_theta: Complex64,
    pub coupling: Complex64,
    pub weight: Complex64,
}

impl Mode {
    /// Coefficient of `e^{−r x}` per unit weight.
    fn partner_amplitude(&self) -> Complex64 {
        self.coupling * self.partner_zeta
    }

    /// m-th derivative of `ζ e^{rx} + q ζ' e^{−rx}` at `x`.
    fn basis_derivative(&self, m: usize, x: f64) -> Complex64 {
        let r = self.root;
        let m = m as i32;
        self.zeta * r.powi(m) * (r * x).exp() + self.partner_amplitude() * (-r).powi(m) * (-r * x).exp()
    }

    /// `∫₀^b y^k (ζ e^{ry} + q ζ' e^{−ry}) dy` for `k = 0..=kmax`.
    fn basis_moments(&self, kmax: usize, b: f64) -> Vec<Complex64> {
        let plus = exp_weighted_moments_on(kmax, self.root, b);
        let minus = exp_weighted_moments_on(kmax, -self.root, b);
        let beta = self.partner_amplitude();
        plus.iter().zip(&minus).map(|(p, m)| self.zeta * p + beta * m).collect()
    }
}

/// Square system in the unknowns `(d_1, …, d_{n+1}, π₀)`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: ComplexMatrix,
    pub rhs: Vec<Complex64>,
}

/// Builds the `n + 2` equations: the integral equation and its first `n`
/// derivatives at `x = 0`, and the normalisation `π₀ + ∫ f_W = 1`.
///
/// With `M_k = ∫₀¹ y^k f_W(y) dy`, row `ℓ ≥ 1` reads
/// `f^{(ℓ)}(0) − μ f^{(ℓ−1)}(0) + μ π₀ F_B^{(ℓ)}(0) + μ Σ_i F_B^{(ℓ)}`-weighted
/// moments `− Σ_{m=1}^{ℓ−1} ν_{n−m} (−1)^{ℓ−1−m} f^{(ℓ−1−m)}(1) = 0`; row 0 is
/// `f(0) − μ π₀ (1 − c_0) + μ Σ c_i M_i = 0`.
pub fn assemble_linear_system(modes: &[Mode], fb: &PolynomialCdf, cs: &CharacteristicSystem) -> LinearSystem {
    let n = fb.degree();
    let mu = cs.mu;
    let size = n + 2;
    let coeffs = fb.coeffs();
    let mut matrix = ComplexMatrix::zeros(size);
    let mut rhs = vec![c(0.0); size];

    // Derivative coefficient tables: deriv[l][i] = (i+l)!/i! c_{i+l}.
    let mut deriv = vec![coeffs.to_vec()];
    for l in 1..=n {
        deriv.push(derivative(&deriv[l - 1]));
    }

    for (col, mode) in modes.iter().enumerate() {
        let moments = mode.basis_moments(n, 1.0);
        let at_zero: Vec<Complex64> = (0..=n).map(|m| mode.basis_derivative(m, 0.0)).collect();
        let at_one: Vec<Complex64> = (0..n).map(|m| mode.basis_derivative(m, 1.0)).collect();

        let mut row0 = at_zero[0];
        for (i, &ci) in coeffs.iter().enumerate() {
            row0 += moments[i] * (mu * ci);
        }
        matrix.set(0, col, row0);

        for l in 1..=n {
            let mut entry = at_zero[l] - at_zero[l - 1] * mu;
            for (i, &w) in deriv[l].iter().enumerate() {
                entry += moments[i] * (mu * w);
            }
            for m in 1..l {
                let sign = if (l - 1 - m) % 2 == 0 { 1.0 } else { -1.0 };
                entry -= at_one[l - 1 - m] * (sign * cs.nu[n - m]);
            }
            matrix.set(l, col, entry);
        }
        matrix.set(n + 1, col, moments[0]);
    }

    matrix.set(0, n + 1, c(-mu * (1.0 - coeffs[0])));
    for l in 1..=n {
        matrix.set(l, n + 1, c(mu * deriv[l][0]));
    }
    matrix.set(n + 1, n + 1, c(1.0));
    rhs[n + 1] = c(1.0);
    LinearSystem { matrix, rhs }
}

/// The exact waiting-time law: atom `π₀` plus an exponential-mixture density
/// on `[0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct WaitingTimeSolution {
    pub pi0: f64,
    pub mu: f64,
    pub prep: PolynomialCdf,
    pub system: CharacteristicSystem,
    /// All `2n + 2` roots, `roots[i] = −roots[2n+1−i]`.
    pub roots: Vec<Complex64>,
    /// One entry per representative root (the first `n + 1` of `roots`).
    pub modes: Vec<Mode>,
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

/// Exact solution for a validated polynomial preparation law.
pub fn solve(fb: &PolynomialCdf, svc: ExponentialService) -> Result<WaitingTimeSolution> {
    let contraction = prob_b_greater_a(&Preparation::Polynomial(fb.clone()), svc);
    if contraction >= 1.0 {
        return Err(Error::Domain(format!("P[B > A] = {contraction} is not below 1")));
    }
    let system = CharacteristicSystem::new(fb, svc)?;
    let n = fb.degree();
    let roots = roots::pair_roots(&roots::find_roots(&system.char_poly)?)?;

    let mut modes = Vec::with_capacity(n + 1);
    for &root in &roots[..=n] {
        let (zeta, theta) = mode_vector(root, &system)?;
        let (partner_zeta, partner_theta) = mode_vector(-root, &system)?;
        let coupling = coupling_factor(root, zeta, partner_zeta, &system)?;
        modes.push(Mode {
            root,
            zeta,
            theta,
            partner_zeta,
            partner_theta,
            coupling,
            weight: c(0.0),
        });
    }

    let LinearSystem { matrix, rhs } = assemble_linear_system(&modes, fb, &system);
    let (unknowns, condition_number) = solve_with_condition(&matrix, &rhs)?;
    for (mode, &d) in modes.iter_mut().zip(&unknowns) {
        mode.weight = d;
    }
    let pi0_complex = unknowns[n + 1];
    if pi0_complex.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::PostconditionViolation {
            invariant: "pi0 is real",
            value: pi0_complex.im,
        });
    }

    let solution = WaitingTimeSolution {
        pi0: pi0_complex.re,
        mu: svc.rate(),
        prep: fb.clone(),
        system,
        roots,
        modes,
        condition_number,
        ill_conditioned: condition_number > ILL_CONDITIONED,
    };
    solution.verify()?;
    Ok(solution)
}

/// Measured defects of a solution, compared against fixed tolerances by
/// [`WaitingTimeSolution::verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionDiagnostics {
    pub normalization_defect: f64,
    pub max_imaginary: f64,
    pub min_density: f64,
    pub max_conjugate_gap: f64,
    pub max_negation_gap: f64,
    pub nu_top_defect: f64,
    pub max_odd_coefficient: f64,
}

impl WaitingTimeSolution {
    pub fn degree(&self) -> usize {
        self.prep.degree()
    }

    /// `f_W(x)` before discarding the imaginary part.
    pub fn density_complex(&self, x: f64) -> Complex64 {
        self.modes.iter().map(|m| m.weight * m.basis_derivative(0, x)).sum()
    }

    /// Density on `[0, 1]`; zero elsewhere.
    pub fn density(&self, x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            self.density_complex(x).re
        } else {
            0.0
        }
    }

    /// `∫₀^b y^k f_W(y) dy` for `k = 0..=kmax`.
    pub fn partial_moments(&self, kmax: usize, b: f64) -> Vec<Complex64> {
        let mut acc = vec![c(0.0); kmax + 1];
        for m in &self.modes {
            for (slot, v) in acc.iter_mut().zip(m.basis_moments(kmax, b)) {
                *slot += m.weight * v;
            }
        }
        acc
    }

    /// `∫₀¹ f_W`, in closed form.
    pub fn density_mass(&self) -> Complex64 {
        self.partial_moments(0, 1.0)[0]
    }

    /// `π₀ = 1 − Σ_{all 2n+2 roots} d_i ζ_i (e^{r_i} − 1) / r_i`.
    pub fn atom_from_modes(&self) -> f64 {
        1.0 - self.density_mass().re
    }

    /// Weights of all `2n + 2` modes, aligned with [`Self::roots`].
    pub fn all_weights(&self) -> Vec<(Complex64, Complex64)> {
        let n = self.degree();
        let mut out = vec![(c(0.0), c(0.0)); 2 * n + 2];
        for (i, m) in self.modes.iter().enumerate() {
            out[i] = (m.weight, m.zeta);
            out[2 * n + 1 - i] = (m.weight * m.coupling, m.partner_zeta);
        }
        out
    }

    pub fn diagnostics(&self) -> SolutionDiagnostics {
        let grid: Vec<f64> = (0..=VERIFY_GRID).map(|j| j as f64 / VERIFY_GRID as f64).collect();
        let values: Vec<Complex64> = grid.iter().map(|&x| self.density_complex(x)).collect();
        let max_imaginary = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let min_density = values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
        let normalization_defect = (self.pi0 + self.density_mass() - 1.0).norm();

        let max_conjugate_gap = self
            .roots
            .iter()
            .map(|r| {
                self.roots
                    .iter()
                    .map(|w| (w - r.conj()).norm() / r.norm().max(1.0))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        let len = self.roots.len();
        let max_negation_gap = (0..len)
            .map(|i| (self.roots[i] + self.roots[len - 1 - i]).norm())
            .fold(0.0, f64::max);
        let max_odd_coefficient = self
            .system
            .char_poly
            .iter()
            .skip(1)
            .step_by(2)
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        SolutionDiagnostics {
            normalization_defect,
            max_imaginary,
            min_density,
            max_conjugate_gap,
            max_negation_gap,
            nu_top_defect: (self.system.nu[self.degree()] - self.mu).abs(),
            max_odd_coefficient,
        }
    }

    /// Checks every solution invariant and the structural properties of the
    /// characteristic system.
    pub fn verify(&self) -> Result<()> {
        let d = self.diagnostics();
        let checks: [(&'static str, f64, bool); 8] = [
            ("pi0 in [0,1]", self.pi0, (-1e-10..=1.0 + 1e-10).contains(&self.pi0)),
            ("normalization", d.normalization_defect, d.normalization_defect < NORMALIZATION_TOLERANCE),
            ("density is real", d.max_imaginary, d.max_imaginary < IMAGINARY_TOLERANCE),
            ("density is nonnegative", d.min_density, d.min_density >= -NEGATIVITY_TOLERANCE),
            ("roots closed under conjugation", d.max_conjugate_gap, d.max_conjugate_gap < CONJUGATE_TOLERANCE),
            ("roots closed under negation", d.max_negation_gap, d.max_negation_gap == 0.0),
            ("nu_n equals mu", d.nu_top_defect, d.nu_top_defect == 0.0),
            ("characteristic polynomial is even", d.max_odd_coefficient, d.max_odd_coefficient == 0.0),
        ];
        for (invariant, value, ok) in checks {
            if !ok {
                return Err(Error::PostconditionViolation { invariant, value });
            }
        }
        Ok(())
    }

    /// Largest `|f_W(x) − μF_W(x) + μπ₀F_B(x) + μ∫₀^{1−x}F_B(x+y)f_W(y)dy + μ∫_{1−x}^1 f_W|`
    /// over `points`, every integral in closed form.
    pub fn integral_equation_residual(&self, points: &[f64]) -> f64 {
        let mu = self.mu;
        let coeffs = self.prep.coeffs();
        let n = self.degree();
        let total = self.partial_moments(0, 1.0)[0];
        points
            .iter()
            .map(|&x| {
                let head = self.partial_moments(0, x)[0];
                let tail_moments = self.partial_moments(n, 1.0 - x);
                let fw = self.pi0 + head;
                let mut coupled = c(0.0);
                for (i, &ci) in coeffs.iter().enumerate() {
                    for (k, mk) in tail_moments.iter().enumerate().take(i + 1) {
                        let weight = ci * binomial(i as u32, k as u32) as f64 * x.powi((i - k) as i32);
                        coupled += mk * weight;
                    }
                }
                let upper_tail = total - tail_moments[0];
                let residual = self.density_complex(x) - fw * mu
                    + mu * self.pi0 * horner(coeffs, x)
                    + coupled * mu
                    + upper_tail * mu;
                residual.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Serializable summary with complex numbers as `{re, im}` objects.
    pub fn export(&self) -> SolutionExport {
        let cx = |z: Complex64| ComplexJson { re: z.re, im: z.im };
        SolutionExport {
            pi0: self.pi0,
            mu: self.mu,
            coeffs: self.prep.coeffs().to_vec(),
            roots: self.modes.iter().map(|m| cx(m.root)).collect(),
            zetas: self.modes.iter().map(|m| cx(m.zeta)).collect(),
            qs: self.modes.iter().map(|m| cx(m.coupling)).collect(),
            ds: self.modes.iter().map(|m| cx(m.weight)).collect(),
            condition_number: self.condition_number,
            ill_conditioned: self.ill_conditioned,
        }
    }
}

impl Cdf for WaitingTimeSolution {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            self.pi0 + self.partial_moments(0, x)[0].re
        }
    }

    fn atom(&self) -> f64 {
        self.pi0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionExport {
    pub pi0: f64,
    pub mu: f64,
    pub coeffs: Vec<f64>,
    pub roots: Vec<ComplexJson>,
    pub zetas: Vec<ComplexJson>,
    pub qs: Vec<ComplexJson>,
    pub ds: Vec<ComplexJson>,
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

#[cfg(test)]
mod tests;
