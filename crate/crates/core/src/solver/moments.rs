//! Closed-form moments `I_k(r) = ∫₀¹ y^k e^{ry} dy` of exponential weights.
//!
//! Every integral of an exponential mode against a polynomial in this crate
//! goes through these routines, so the exact solver never needs quadrature.

use num_complex::Complex64;

/// Largest moment order accepted.
pub const MAX_MOMENT_ORDER: usize = 64;

const TAYLOR_RADIUS: f64 = 1e-4;

/// `e^z − 1` without cancellation for small `|z|`.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let half_sin = (0.5 * b).sin();
    let re = a.exp_m1() * b.cos() - 2.0 * half_sin * half_sin;
    let im = a.exp() * b.sin();
    Complex64::new(re, im)
}

/// `∫₀¹ y^k e^{ry} dy`.
pub fn exp_weighted_moment(k: usize, r: Complex64) -> Complex64 {
    exp_weighted_moments(k, r)[k]
}

/// All moments `I_0(r), …, I_kmax(r)`.
///
/// Uses the upward recurrence `I_k = (e^r − k I_{k−1}) / r` while it is
/// stable (the product `Π j/|r|` stays ≤ 1), otherwise runs the recurrence
/// downward from a seed far enough above `kmax` that the seed error is
/// damped below round-off. Tiny `|r|` uses the Taylor series directly.
pub fn exp_weighted_moments(kmax: usize, r: Complex64) -> Vec<Complex64> {
    assert!(
        kmax <= MAX_MOMENT_ORDER,
        "moment order {kmax} exceeds {MAX_MOMENT_ORDER}"
    );
    let modulus = r.norm();
    if modulus < TAYLOR_RADIUS {
        return (0..=kmax).map(|k| taylor_moment(k, r)).collect();
    }

    let upward_gain = (1..=kmax).fold(1.0_f64, |acc, j| acc * j as f64 / modulus);
    let er = r.exp();
    if upward_gain <= 1.0 {
        let mut out = Vec::with_capacity(kmax + 1);
        out.push(cexpm1(r) / r);
        for k in 1..=kmax {
            let prev = out[k - 1];
            out.push((er - prev * k as f64) / r);
        }
        return out;
    }

    // Downward (Miller-style): errors shrink by |r|/j per step.
    let mut top = kmax.max((2.0 * modulus).ceil() as usize + 1);
    let mut damping = 1.0_f64;
    while damping > 1e-20 {
        top += 1;
        damping *= modulus / top as f64;
    }
    let mut value = er / (r + (top as f64 + 1.0));
    let mut out = vec![Complex64::new(0.0, 0.0); kmax + 1];
    for j in (1..=top).rev() {
        // value holds I_j; produce I_{j-1}.
        let lower = (er - r * value) / j as f64;
        if j - 1 <= kmax {
            out[j - 1] = lower;
        }
        if j <= kmax {
            out[j] = value;
        }
        value = lower;
    }
    out
}

/// `∫₀^b y^k e^{ry} dy` for `b ≥ 0`, via the substitution `y = b t`.
pub fn exp_weighted_moments_on(kmax: usize, r: Complex64, b: f64) -> Vec<Complex64> {
    let base = exp_weighted_moments(kmax, r * b);
    let mut scale = b;
    base.into_iter()
        .map(|m| {
            let v = m * scale;
            scale *= b;
            v
        })
        .collect()
}

fn taylor_moment(k: usize, r: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for m in 0..64 {
        let term = power / (k + m + 1) as f64;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
        power = power * r / (m + 1) as f64;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Composite Gauss–Legendre (5 points, 400 panels): independent of the
    /// recurrences under test.
    fn quadrature(k: usize, r: Complex64) -> Complex64 {
        let nodes = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        let weights = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = 400;
        let h = 1.0 / panels as f64;
        let mut acc = c(0.0, 0.0);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (t, w) in nodes.iter().zip(weights) {
                let y = mid + 0.5 * h * t;
                acc += (r * y).exp() * y.powi(k as i32) * (w * 0.5 * h);
            }
        }
        acc
    }

    #[test]
    fn spec_examples() {
        let e = std::f64::consts::E;
        assert!((exp_weighted_moment(0, c(1.0, 0.0)) - c(e - 1.0, 0.0)).norm() < 1e-14);
        assert!((exp_weighted_moment(1, c(0.0, 0.0)) - c(0.5, 0.0)).norm() < 1e-15);
        let expected = 2.0 - 5.0 / e;
        assert!((exp_weighted_moment(2, c(-1.0, 0.0)).re - expected).abs() < 1e-14);
        assert!((expected - 0.160603).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_quadrature_across_regimes() {
        let rs = [
            c(1e-6, 2e-6),
            c(3e-4, 0.0),
            c(0.3, -0.2),
            c(-2.5, 0.0),
            c(4.0, 7.0),
            c(-30.0, 1.0),
            c(25.0, 0.0),
            c(0.0, 12.0),
        ];
        for &r in &rs {
            let all = exp_weighted_moments(20, r);
            for k in [0usize, 1, 3, 7, 12, 20] {
                let q = quadrature(k, r);
                let scale = q.norm().max(1e-300);
                let rel = (all[k] - q).norm() / scale;
                assert!(rel < 1e-11, "k={k} r={r}: {} vs {q} (rel {rel:e})", all[k]);
            }
        }
    }

    #[test]
    fn interval_version_scales() {
        let r = c(-1.3, 0.4);
        let b = 0.37;
        let on = exp_weighted_moments_on(3, r, b);
        // ∫₀^b y^k e^{ry} dy through a direct Simpson rule.
        let m = 20_000;
        let h = b / m as f64;
        for (k, v) in on.iter().enumerate() {
            let f = |y: f64| (r * y).exp() * y.powi(k as i32);
            let mut s = f(0.0) + f(b);
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += f(i as f64 * h) * w;
            }
            s *= h / 3.0;
            assert!((v - s).norm() < 1e-12);
        }
    }
}
