//! Small helpers for real power-basis polynomials and error-free summation.

/// Evaluates `Σ coeffs[i] x^i` with Horner's scheme.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Compensated Horner evaluation: as accurate as plain Horner carried out
/// in twice the working precision. Power-basis coefficients of high-order
/// Bernstein fits are large and alternate in sign, so plain Horner loses
/// most of its digits there.
pub fn horner_compensated(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0_f64;
    let mut err = 0.0_f64;
    for &c in coeffs.iter().rev() {
        let p = acc * x;
        let p_err = acc.mul_add(x, -p);
        let s = p + c;
        let z = s - p;
        let s_err = (p - (s - z)) + (c - z);
        acc = s;
        err = err * x + (p_err + s_err);
    }
    acc + err
}

/// Coefficients of the derivative polynomial.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Coefficients of `t ↦ p(a + t)`.
pub fn taylor_shift(coeffs: &[f64], a: f64) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    // Repeated synthetic division by (x - a).
    for k in 0..n {
        for j in (k..n.saturating_sub(1)).rev() {
            out[j] += a * out[j + 1];
        }
    }
    out
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sum of products `Σ a_i b_i` using exact products (fma) and compensated
/// accumulation, visiting terms in descending magnitude.
pub fn accurate_dot(terms: &mut [(f64, f64)]) -> f64 {
    terms.sort_by(|l, r| (r.0 * r.1).abs().total_cmp(&(l.0 * l.1).abs()));
    let mut parts = Vec::with_capacity(2 * terms.len());
    for &(a, b) in terms.iter() {
        let p = a * b;
        let err = a.mul_add(b, -p);
        parts.push(p);
        parts.push(err);
    }
    compensated_sum(parts)
}

/// Exact binomial coefficient. Panics on overflow of `u128`, far beyond any
/// order used in this crate.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}
