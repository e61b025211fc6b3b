//! Roots of the even characteristic polynomial.
//!
//! The polynomial is a polynomial in `s = r²`, so we find the `n + 1` roots
//! in `s` with Aberth–Ehrlich simultaneous iteration, polish them by Newton,
//! symmetrize conjugate pairs and take square roots. The `±` pairing is then
//! exact by construction.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Two `s`-roots closer than this (relative) are treated as repeated.
pub const REPEATED_ROOT_TOLERANCE: f64 = 1e-7;
/// Required backward error of every root.
pub const ROOT_RESIDUAL_TOLERANCE: f64 = 1e-12;

const MAX_ABERTH_ITERATIONS: usize = 500;

/// Value and derivative of a real-coefficient polynomial at a complex point.
fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// `|p(z)| / Σ |a_k| |z|^k`: the relative backward error of a root.
pub fn relative_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let modulus = z.norm();
    let scale = coeffs.iter().rev().fold(0.0, |acc, c| acc * modulus + c.abs());
    let (p, _) = eval_with_derivative(coeffs, z);
    if scale == 0.0 {
        p.norm()
    } else {
        p.norm() / scale
    }
}

/// All complex roots of a real polynomial (ascending coefficients) with
/// nonzero leading and constant terms.
pub fn aberth_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if degree == 0 || lead == 0.0 || coeffs[0] == 0.0 {
        return Err(Error::ConvergenceFailure {
            iterations: 0,
            detail: "polynomial must have nonzero leading and constant coefficients".into(),
        });
    }
    if degree == 1 {
        return Ok(vec![Complex64::new(-coeffs[0] / lead, 0.0)]);
    }

    // Initial guesses on a circle of the geometric-mean root radius, rotated
    // off the real axis so conjugate pairs can separate.
    let radius = (coeffs[0].abs() / lead.abs()).powf(1.0 / degree as f64);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ABERTH_ITERATIONS {
        iterations += 1;
        let mut largest_step = 0.0_f64;
        for k in 0..degree {
            let (p, dp) = eval_with_derivative(coeffs, z[k]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let newton = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = newton / (Complex64::new(1.0, 0.0) - newton * repulsion);
            if step.is_finite() {
                z[k] -= step;
                largest_step = largest_step.max(step.norm() / z[k].norm().max(f64::MIN_POSITIVE));
            }
        }
        if largest_step < 1e-15 {
            converged = true;
            break;
        }
    }
    let worst = z
        .iter()
        .map(|&root| relative_residual(coeffs, root))
        .fold(0.0, f64::max);
    if !converged && worst > ROOT_RESIDUAL_TOLERANCE {
        return Err(Error::ConvergenceFailure {
            iterations,
            detail: format!("worst relative residual {worst:e}"),
        });
    }
    Ok(z)
}

/// Newton polish in complex or, for real roots, real arithmetic.
fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if dp == Complex64::new(0.0, 0.0) {
            break;
        }
        let step = p / dp;
        let next = if z.im == 0.0 {
            Complex64::new(z.re - step.re, 0.0)
        } else {
            z - step
        };
        if relative_residual(coeffs, next) <= relative_residual(coeffs, z) {
            z = next;
        } else {
            break;
        }
    }
    z
}

/// Makes the root set exactly closed under conjugation: near-real roots get
/// a zero imaginary part, the rest are matched with their conjugate partner.
fn symmetrize(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(roots.len());
    while let Some(z) = roots.pop() {
        let scale = z.norm().max(f64::MIN_POSITIVE);
        let partner = roots
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - z.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let self_gap = 2.0 * z.im.abs();
        match partner {
            Some((i, gap)) if gap < self_gap && z.im.abs() > 1e-12 * scale => {
                let w = roots.swap_remove(i);
                let avg = 0.5 * (z + w.conj());
                let upper = if avg.im >= 0.0 { avg } else { avg.conj() };
                out.push(upper);
                out.push(upper.conj());
            }
            _ => out.push(Complex64::new(z.re, 0.0)),
        }
    }
    out
}

/// Roots in `s = r²` of the even polynomial given by its full coefficient
/// vector (odd coefficients must already be zero).
pub fn squared_roots(even_poly: &[f64]) -> Result<Vec<Complex64>> {
    let s_poly: Vec<f64> = even_poly.iter().step_by(2).copied().collect();
    let raw = aberth_roots(&s_poly)?;
    let polished: Vec<Complex64> = symmetrize(raw)
        .into_iter()
        .map(|z| polish(&s_poly, z))
        .collect();
    let mut roots = symmetrize(polished);
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));

    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let scale = roots[i].norm().max(roots[j].norm());
            let distance = (roots[i] - roots[j]).norm() / scale;
            if distance < REPEATED_ROOT_TOLERANCE {
                return Err(Error::RepeatedRoot {
                    first: roots[i],
                    second: roots[j],
                    distance,
                });
            }
        }
    }
    Ok(roots)
}

/// Square root on the branch used for representatives: real part positive,
/// or, on the imaginary axis, imaginary part positive.
pub fn representative_sqrt(s: Complex64) -> Complex64 {
    if s.im == 0.0 {
        if s.re >= 0.0 {
            Complex64::new(s.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-s.re).sqrt())
        }
    } else {
        s.sqrt()
    }
}

/// All `2n + 2` roots of the even characteristic polynomial.
pub fn find_roots(even_poly: &[f64]) -> Result<Vec<Complex64>> {
    let s_roots = squared_roots(even_poly)?;
    let mut roots = Vec::with_capacity(2 * s_roots.len());
    for s in s_roots {
        let r = if s.im < 0.0 {
            representative_sqrt(s.conj()).conj()
        } else {
            representative_sqrt(s)
        };
        let residual = relative_residual(even_poly, r);
        if residual > ROOT_RESIDUAL_TOLERANCE {
            return Err(Error::ConvergenceFailure {
                iterations: 0,
                detail: format!("root {r} has relative residual {residual:e}"),
            });
        }
        roots.push(r);
        roots.push(-r);
    }
    Ok(roots)
}

fn is_representative(r: Complex64) -> bool {
    r.re > 0.0 || (r.re == 0.0 && r.im > 0.0)
}

/// Orders roots so that index `i` and `len − 1 − i` are exact negations and
/// the first half holds the representatives, sorted by real part then
/// imaginary part (both descending).
pub fn pair_roots(roots: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut reps: Vec<Complex64> = roots.iter().copied().filter(|&r| is_representative(r)).collect();
    for &r in &reps {
        if !roots.iter().any(|&w| w == -r) {
            return Err(Error::PairingFailure(r));
        }
    }
    if 2 * reps.len() != roots.len() {
        let orphan = roots
            .iter()
            .copied()
            .find(|&r| !is_representative(r) && !reps.contains(&-r))
            .unwrap_or_default();
        return Err(Error::PairingFailure(orphan));
    }
    reps.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut ordered = reps.clone();
    ordered.extend(reps.iter().rev().map(|&r| -r));
    Ok(ordered)
}
