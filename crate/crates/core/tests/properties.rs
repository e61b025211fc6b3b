use lindley_alt::bernstein::{bernstein_fit, sup_distance};
use lindley_alt::bounds::waiting_error_bound;
use lindley_alt::distributions::prob_b_greater_a;
use lindley_alt::oracle::{ks_distance, EmpiricalCdf, FixedPointProblem};
use lindley_alt::poly::{derivative, horner_compensated};
use lindley_alt::random::{random_piecewise_cdf, random_polynomial_cdf};
use lindley_alt::{solve, Cdf, ExponentialService, Preparation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bernstein_fits_are_monotone_cdfs(seed in any::<u64>(), pieces in 1usize..6, order in 1usize..=20) {
        let truth = random_piecewise_cdf(&mut rng(seed), pieces);
        let fit = bernstein_fit(&truth, order).unwrap();
        let density = derivative(fit.coeffs());
        for j in 0..=4096 {
            let x = j as f64 / 4096.0;
            prop_assert!(horner_compensated(&density, x) >= -1e-10);
        }
        prop_assert!((fit.cdf(0.0) - truth.cdf(0.0)).abs() < 1e-12);
        prop_assert!((horner_compensated(fit.coeffs(), 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bernstein_error_shrinks_with_order(seed in any::<u64>(), pieces in 1usize..5) {
        let truth = random_piecewise_cdf(&mut rng(seed), pieces);
        let coarse = sup_distance(&truth, &bernstein_fit(&truth, 2).unwrap());
        let fine = sup_distance(&truth, &bernstein_fit(&truth, 32).unwrap());
        prop_assert!(fine <= coarse + 1e-12);
    }

    #[test]
    fn linear_inputs_are_reproduced(order in 1usize..=40) {
        let fit = bernstein_fit(&|x: f64| x.clamp(0.0, 1.0), order).unwrap();
        prop_assert_eq!(fit.coeffs().len(), 2);
        prop_assert!(fit.coeffs()[0].abs() < 1e-10);
        prop_assert!((fit.coeffs()[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_solutions_satisfy_their_invariants(seed in any::<u64>(), degree in 1usize..=8, mu in 0.25f64..4.0) {
        let fb = random_polynomial_cdf(&mut rng(seed), degree);
        let sol = solve(&fb, ExponentialService::new(mu).unwrap()).unwrap();
        let n = sol.degree();
        prop_assert_eq!(sol.system.nu[n], mu);
        prop_assert!(sol.system.char_poly.iter().skip(1).step_by(2).all(|&v| v == 0.0));
        let len = sol.roots.len();
        prop_assert_eq!(len, 2 * n + 2);
        for (i, r) in sol.roots.iter().enumerate() {
            prop_assert_eq!(*r, -sol.roots[len - 1 - i]);
            let gap = sol.roots.iter().map(|w| (w - r.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(gap <= 1e-10 * r.norm().max(1.0));
        }
        let d = sol.diagnostics();
        prop_assert!(d.normalization_defect < 1e-10);
        prop_assert!(d.max_imaginary < 1e-8);
        prop_assert!(d.min_density >= -1e-8);
        let grid: Vec<f64> = (0..=256).map(|j| j as f64 / 256.0).collect();
        prop_assert!(sol.integral_equation_residual(&grid) < 1e-7);
        let values: Vec<f64> = grid.iter().map(|&x| sol.cdf(x)).collect();
        prop_assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!((0.0..=1.0).contains(&sol.pi0));
    }

    #[test]
    fn mapping_is_a_contraction(seed in any::<u64>(), mu in 0.5f64..2.0) {
        let mut r = rng(seed);
        let truth: Preparation = random_piecewise_cdf(&mut r, 3).into();
        let svc = ExponentialService::new(mu).unwrap();
        let mapping = FixedPointProblem::new(truth.clone(), svc, 256, 1e-10).unwrap().mapping();
        let mut random_grid = || {
            let mut v: Vec<f64> = (0..=256).map(|_| r.random::<f64>()).collect();
            v.sort_by(f64::total_cmp);
            v[256] = 1.0;
            v
        };
        let g1 = random_grid();
        let g2 = random_grid();
        let t1 = mapping.apply(&g1);
        let t2 = mapping.apply(&g2);
        for t in [&t1, &t2] {
            prop_assert!(t.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(t.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((t[256] - 1.0).abs() < 1e-9);
        }
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let c = prob_b_greater_a(&truth, svc);
        prop_assert!(sup(&t1, &t2) <= c * sup(&g1, &g2) + 1e-6);
    }

    #[test]
    fn ks_stays_inside_the_dkw_band(seed in any::<u64>()) {
        let mut r = rng(seed);
        let truth: Preparation = random_piecewise_cdf(&mut r, 2).into();
        let draws: Vec<f64> = (0..2000).map(|_| truth.sample(&mut r)).collect();
        let d = ks_distance(&EmpiricalCdf::from_samples(draws), &truth);
        prop_assert!((0.0..=1.0).contains(&d));
        // Dvoretzky–Kiefer–Wolfowitz at level 1e-6.
        prop_assert!(d < (2e6_f64.ln() / 4000.0).sqrt());
    }

    #[test]
    fn bound_dominates_epsilon(eps in 0.0f64..1.0, c in 0.0f64..0.999) {
        let b = waiting_error_bound(eps, c).unwrap();
        prop_assert!(b >= eps);
        prop_assert_eq!(b, eps / (1.0 - c));
    }

    #[test]
    fn quantile_inverts_the_cdf(seed in any::<u64>(), u in 0.0f64..1.0) {
        let prep: Preparation = random_polynomial_cdf(&mut rng(seed), 5).into();
        let x = prep.quantile(u);
        prop_assert!((0.0..=1.0).contains(&x));
        if u >= prep.atom() {
            prop_assert!((prep.cdf(x) - u).abs() < 1e-9);
        }
    }
}
