//! Homogeneous polynomials in a few variables, stored in the monomial basis.

use nalgebra::{DMatrix, DVector};

use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPolynomial {
    dim: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
    coeffs: Vec<f64>,
}

/// All exponent vectors of total degree `degree` in `dim` variables, in
/// lexicographic order.
pub fn monomials(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(dim, degree as u32, &mut Vec::with_capacity(dim), &mut out);
    out
}

fn monomial_value(e: &[u32], u: &[f64]) -> f64 {
    e.iter().zip(u).fold(1.0, |acc, (&k, &x)| acc * x.powi(k as i32))
}

impl HomogeneousPolynomial {
    pub fn zero(dim: usize, degree: usize) -> Self {
        let exponents = monomials(dim, degree);
        let coeffs = vec![0.0; exponents.len()];
        Self { dim, degree, exponents, coeffs }
    }

    /// Least-squares fit to samples `values[i] ≈ p(points[i])`. Returns the
    /// polynomial and the relative RMS residual.
    pub fn fit(dim: usize, degree: usize, points: &[DVector<f64>], values: &[f64]) -> (Self, f64) {
        let mut p = Self::zero(dim, degree);
        let m = p.exponents.len();
        let a = DMatrix::from_fn(points.len(), m, |i, j| monomial_value(&p.exponents[j], points[i].as_slice()));
        let b = DVector::from_column_slice(values);
        let c = linalg::lstsq(&a, &b, 1e-13);
        let resid = (&a * &c - &b).norm();
        let scale = b.norm().max(f64::MIN_POSITIVE);
        p.coeffs = c.iter().cloned().collect();
        (p, resid / scale)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.exponents.iter().map(|e| e.as_slice()).zip(self.coeffs.iter().cloned())
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        self.terms().map(|(e, c)| c * monomial_value(e, u.as_slice())).sum()
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        let mut e2 = vec![0u32; self.dim];
        for (e, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for i in 0..self.dim {
                if e[i] == 0 {
                    continue;
                }
                e2.copy_from_slice(e);
                e2[i] -= 1;
                g[i] += c * e[i] as f64 * monomial_value(&e2, u.as_slice());
            }
        }
        g
    }

    pub fn hessian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        let mut e2 = vec![0u32; d];
        for (e, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in i..d {
                    e2.copy_from_slice(e);
                    let f = if i == j {
                        if e[i] < 2 {
                            continue;
                        }
                        e2[i] -= 2;
                        (e[i] * (e[i] - 1)) as f64
                    } else {
                        if e[i] == 0 || e[j] == 0 {
                            continue;
                        }
                        e2[i] -= 1;
                        e2[j] -= 1;
                        (e[i] * e[j]) as f64
                    };
                    let v = c * f * monomial_value(&e2, u.as_slice());
                    h[(i, j)] += v;
                    if i != j {
                        h[(j, i)] += v;
                    }
                }
            }
        }
        h
    }
}
