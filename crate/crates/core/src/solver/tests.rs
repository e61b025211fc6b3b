use super::*;
use crate::distributions::PolynomialCdf;

fn svc(mu: f64) -> ExponentialService {
    ExponentialService::new(mu).unwrap()
}

fn uniform() -> PolynomialCdf {
    PolynomialCdf::uniform()
}

#[test]
fn nu_examples() {
    assert_eq!(nu_coefficients(&uniform(), svc(1.0)), vec![1.0, 1.0]);
    let square = PolynomialCdf::validate(&[0.0, 0.0, 1.0]).unwrap();
    assert_eq!(nu_coefficients(&square, svc(2.0)), vec![4.0, 4.0, 2.0]);
    let mixed = PolynomialCdf::validate(&[0.1, 0.3, 0.2, 0.4]).unwrap();
    let nu = nu_coefficients(&mixed, svc(1.7));
    assert_eq!(nu[3], 1.7);
    // ν_0 = μ·3!·c_3, ν_1 = μ(2c_2 + 6c_3), ν_2 = μ(c_1 + 2c_2 + 3c_3).
    assert!((nu[0] - 1.7 * 6.0 * 0.4).abs() < 1e-14);
    assert!((nu[1] - 1.7 * (0.4 + 2.4)).abs() < 1e-14);
    assert!((nu[2] - 1.7 * (0.3 + 0.4 + 1.2)).abs() < 1e-14);
}

#[test]
fn characteristic_polynomial_examples() {
    let cs = CharacteristicSystem::new(&uniform(), svc(1.0)).unwrap();
    assert_eq!(cs.char_poly, vec![-1.0, 0.0, -1.0, 0.0, 1.0]);
    let mixed = PolynomialCdf::validate(&[0.0, 0.2, 0.5, 0.3]).unwrap();
    let cs = CharacteristicSystem::new(&mixed, svc(0.8)).unwrap();
    let n = 3;
    let expected_constant = -(cs.nu[0] * cs.nu[0]);
    assert!((cs.char_poly[0] - expected_constant).abs() < 1e-14);
    assert!(cs.char_poly.iter().skip(1).step_by(2).all(|&v| v == 0.0));
    assert_eq!(cs.char_poly.len(), 2 * n + 3);
}

#[test]
fn characteristic_polynomial_matches_determinant() {
    // Independent route: evaluate the 2×2 determinant of the mode equations
    // directly at a few complex points.
    let fb = PolynomialCdf::validate(&[0.05, 0.15, 0.3, 0.5]).unwrap();
    let cs = CharacteristicSystem::new(&fb, svc(1.3)).unwrap();
    let n = 3usize;
    for &r in &[Complex64::new(0.3, 0.7), Complex64::new(-1.1, 0.2), Complex64::new(2.0, -0.5)] {
        let rn = r.powi(n as i32);
        let s1: Complex64 = (0..n).map(|i| cs.nu[i] * r.powi(i as i32)).sum();
        let s2: Complex64 = (0..n)
            .map(|i| {
                let sign = if (n + 1 + i) % 2 == 0 { 1.0 } else { -1.0 };
                sign * cs.nu[i] * r.powi(i as i32)
            })
            .sum();
        let det = (rn * r - 1.3 * rn) * (rn * r + 1.3 * rn) - s1 * s2;
        let poly: Complex64 = cs
            .char_poly
            .iter()
            .enumerate()
            .map(|(k, &a)| a * r.powi(k as i32))
            .sum();
        assert!((det - poly).norm() < 1e-12 * det.norm().max(1.0));
    }
}

#[test]
fn mode_vector_examples() {
    let cs = CharacteristicSystem::new(&uniform(), svc(1.0)).unwrap();
    let roots = roots::pair_roots(&roots::find_roots(&cs.char_poly).unwrap()).unwrap();
    let real = roots[0];
    let (zeta, theta) = mode_vector(real, &cs).unwrap();
    let ratio = theta / zeta;
    assert!((ratio - (real * real - real)).norm() < 1e-12);
    assert!((ratio.re - 0.346014).abs() < 1e-6);
    assert!((ratio - (real * real + real).inv()).norm() < 1e-12);
    assert!(zeta.norm().max(theta.norm()) == 1.0);

    let imag = roots[1];
    let (zeta, theta) = mode_vector(imag, &cs).unwrap();
    let ratio = theta / zeta;
    assert!((ratio - Complex64::new(-0.618034, -0.786151)).norm() < 1e-6);
    for r in [real, imag, -real, -imag] {
        let (z, t) = mode_vector(r, &cs).unwrap();
        assert!(cs.mode_residuals(r, z, t).iter().all(|&v| v < 1e-9));
    }
}

/// `f^{(n+1)}(x) − μ f^{(n)}(x) − Σ_{j<n} ν_j (−1)^j f^{(j)}(1 − x)`.
fn ode_residual(mode: &Mode, cs: &CharacteristicSystem, x: f64) -> f64 {
    let n = cs.degree();
    let mut value = mode.basis_derivative(n + 1, x) - mode.basis_derivative(n, x) * cs.mu;
    let mut scale = mode.basis_derivative(n + 1, x).norm();
    for j in 0..n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = mode.basis_derivative(j, 1.0 - x) * (sign * cs.nu[j]);
        value -= term;
        scale += term.norm();
    }
    value.norm() / scale
}

#[test]
fn coupling_relations() {
    for (coeffs, mu) in [(vec![0.0, 1.0], 1.0), (vec![0.1, 0.2, 0.3, 0.4], 2.0), (vec![0.0, 0.5, 0.0, 0.5], 0.7)] {
        let fb = PolynomialCdf::validate(&coeffs).unwrap();
        let sol = solve(&fb, svc(mu)).unwrap();
        let cs = &sol.system;
        let n = cs.degree() as i32;
        let lower = |r: Complex64| -> Complex64 { (0..n as usize).map(|j| cs.nu[j] * r.powi(j as i32)).sum() };
        for mode in &sol.modes {
            let r = mode.root;
            let q = mode.coupling;
            // Relation at the representative index (d_i = 1, d_partner = q).
            let lhs = mode.zeta * r.powi(n) * (r - mu);
            let rhs = (-r).exp() * q * mode.partner_zeta * lower(r);
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(rhs.norm()));
            // The same relation written at the partner index coincides.
            let p = -r;
            let lhs_p = q * mode.partner_zeta * p.powi(n) * (p - mu);
            let rhs_p = (-p).exp() * mode.zeta * lower(p);
            assert!((lhs_p - rhs_p).norm() < 1e-9 * lhs_p.norm().max(rhs_p.norm()));
            for x in [0.0, 0.5, 1.0] {
                assert!(ode_residual(mode, cs, x) < 1e-9, "ODE residual at {x}");
            }
        }
    }
}

#[test]
fn uniform_linear_system() {
    let fb = uniform();
    let sol = solve(&fb, svc(1.0)).unwrap();
    let LinearSystem { matrix, rhs } = assemble_linear_system(&sol.modes, &fb, &sol.system);
    assert_eq!(matrix.size(), 3);
    let mut x: Vec<Complex64> = sol.modes.iter().map(|m| m.weight).collect();
    x.push(c(sol.pi0));
    let ax = matrix.mul_vec(&x);
    for (a, b) in ax.iter().zip(&rhs) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn uniform_solution_properties() {
    let sol = solve(&uniform(), svc(1.0)).unwrap();
    assert!(sol.pi0 > 0.0 && sol.pi0 < 1.0);
    assert_eq!(sol.cdf(0.0), sol.pi0);
    assert!((sol.cdf(1.0 - 1e-15) - 1.0).abs() < 1e-10);
    assert!((sol.atom_from_modes() - sol.pi0).abs() < 1e-12);
    let grid: Vec<f64> = (0..=1024).map(|j| j as f64 / 1024.0).collect();
    let values: Vec<f64> = grid.iter().map(|&x| sol.cdf(x)).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(sol.integral_equation_residual(&grid) < 1e-8);
    assert!(!sol.ill_conditioned);
}

#[test]
fn perturbed_weights_break_the_integral_equation() {
    let mut sol = solve(&uniform(), svc(1.0)).unwrap();
    let points: Vec<f64> = (0..1000).map(|j| j as f64 / 999.0).collect();
    assert!(sol.integral_equation_residual(&points) < 1e-8);
    sol.modes[0].weight *= 1.01;
    assert!(sol.integral_equation_residual(&points) > 1e-4);
}

#[test]
fn atom_in_preparation_time() {
    let fb = PolynomialCdf::validate(&[0.5, 0.5]).unwrap();
    let sol = solve(&fb, svc(1.0)).unwrap();
    let grid: Vec<f64> = (0..=200).map(|j| j as f64 / 200.0).collect();
    assert!(sol.integral_equation_residual(&grid) < 1e-9);
    assert!(sol.pi0 > 0.5);
}

#[test]
fn export_shape() {
    let sol = solve(&uniform(), svc(1.0)).unwrap();
    let json = serde_json::to_value(sol.export()).unwrap();
    assert_eq!(json["roots"].as_array().unwrap().len(), 2);
    assert!(json["roots"][0]["re"].is_number());
    assert!(json["pi0"].is_number());
}
