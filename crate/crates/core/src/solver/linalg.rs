//! Dense complex LU with partial pivoting for the small `(n+2)×(n+2)`
//! systems assembled by the solver.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    size: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![Complex64::new(0.0, 0.0); size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.size + col] = value;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.size)
            .map(|j| (0..self.size).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn lu(&self) -> Result<Lu> {
        let n = self.size;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap();
            if a[pivot * n + k].norm() == 0.0 {
                return Err(Error::SingularSystem);
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                perm.swap(k, pivot);
            }
            let diag = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / diag;
                a[i * n + k] = factor;
                for j in k + 1..n {
                    let upper = a[k * n + j];
                    a[i * n + j] -= factor * upper;
                }
            }
        }
        Ok(Lu { size: n, factors: a, perm })
    }
}

/// `PA = LU`, unit lower triangle stored below the diagonal.
#[derive(Debug, Clone)]
pub struct Lu {
    size: usize,
    factors: Vec<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.size;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.factors[i * n + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.factors[i * n + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.factors[i * n + i];
        }
        x
    }

    /// `‖A⁻¹‖₁`, from the explicit inverse (the systems are tiny).
    pub fn inverse_norm_one(&self) -> f64 {
        let n = self.size;
        (0..n)
            .map(|col| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[col] = Complex64::new(1.0, 0.0);
                self.solve(&e).iter().map(|v| v.norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `Ax = b` with one step of iterative refinement; returns the
/// solution and the 1-norm condition number of `A`.
pub fn solve_with_condition(a: &ComplexMatrix, b: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    let lu = a.lu()?;
    let mut x = lu.solve(b);
    let ax = a.mul_vec(&x);
    let residual: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let correction = lu.solve(&residual);
    for (xi, ci) in x.iter_mut().zip(correction) {
        *xi += ci;
    }
    let condition = a.norm_one() * lu.inverse_norm_one();
    if !condition.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok((x, condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_a_pivoting_system() {
        let mut a = ComplexMatrix::zeros(3);
        let entries = [
            [c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)],
            [c(1.0, -1.0), c(0.5, 0.0), c(0.0, 3.0)],
            [c(4.0, 0.0), c(0.0, -2.0), c(1.0, 1.0)],
        ];
        for (i, row) in entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        let truth = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)];
        let b = a.mul_vec(&truth);
        let (x, cond) = solve_with_condition(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(truth) {
            assert!((xi - ti).norm() < 1e-14);
        }
        assert!(cond >= 1.0);
    }

    #[test]
    fn singular_is_reported() {
        let mut a = ComplexMatrix::zeros(2);
        a.set(0, 0, c(1.0, 0.0));
        a.set(0, 1, c(2.0, 0.0));
        a.set(1, 0, c(2.0, 0.0));
        a.set(1, 1, c(4.0, 0.0));
        assert!(solve_with_condition(&a, &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }
}
