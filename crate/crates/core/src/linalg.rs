//! Dense linear-algebra helpers shared by the symplectic and search modules.

use nalgebra::{ComplexField, DMatrix, DVector, RealField};
use num_complex::Complex64;

/// Canonical symplectic matrix `[[0, I], [-I, 0]]` in `(q, p)` ordering.
pub fn canonical_omega(dim: usize) -> DMatrix<f64> {
    assert!(dim.is_multiple_of(2), "symplectic dimension must be even");
    let n = dim / 2;
    let mut w = DMatrix::zeros(dim, dim);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Largest absolute entry; used as a cheap scale for tolerances.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Orthonormal basis of the kernel of `m` (singular values below `rel_tol * sigma_max`,
/// or below `abs_floor` when the matrix is tiny).
pub fn null_space<T>(m: &DMatrix<T>, rel_tol: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least square so the SVD returns a full right factor.
    let padded = if rows < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = if sigma_max > 0.0 { rel_tol * sigma_max } else { f64::INFINITY };
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| svd.singular_values[i] <= thresh)
        .collect();
    let mut out = DMatrix::<T>::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let row = v_t.row(i);
        for k in 0..cols {
            out[(k, j)] = row[k].clone().conjugate();
        }
    }
    out
}

/// The `count` right singular vectors with the smallest singular values, plus those values.
pub fn smallest_right_singular<T>(m: &DMatrix<T>, count: usize) -> (DMatrix<T>, Vec<f64>)
where
    T: ComplexField<RealField = f64>,
{
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    let mut out = DMatrix::<T>::zeros(cols, count);
    let mut sig = Vec::with_capacity(count);
    for (j, &i) in order.iter().take(count).enumerate() {
        sig.push(svd.singular_values[i]);
        for k in 0..cols {
            out[(k, j)] = v_t[(i, k)].clone().conjugate();
        }
    }
    (out, sig)
}

/// Orthonormal basis for the column span of `m`, dropping directions with
/// singular value below `rel_tol * sigma_max`.
///
/// The SVD only decides the rank. Its left vectors can be off by far more than
/// rounding, so the basis is a QR factor of `m V_r`, which lies in the span of
/// `m` to working precision whatever the accuracy of `V_r`.
pub fn orthonormal_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * sigma_max)
        .collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut v = DMatrix::zeros(cols, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        v.set_column(j, &v_t.row(i).transpose());
    }
    let q = (m * v).qr().q();
    q.columns(0, idx.len()).into_owned()
}

/// Numerical rank with a relative singular-value threshold.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Smallest and largest singular values.
pub fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0.0, 0.0);
    }
    let s = m.clone().singular_values();
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = s.iter().cloned().fold(0.0_f64, f64::max);
    (lo, hi)
}

/// Orthonormal basis of the orthogonal complement of `span(sub)` inside `span(space)`.
/// `space` must have orthonormal columns.
pub fn complement_within(space: &DMatrix<f64>, sub: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if sub.ncols() == 0 {
        return space.clone();
    }
    // Coordinates of sub in the space basis; complement there, then map back.
    let coords = space.transpose() * sub;
    let sub_basis = orthonormal_basis(&coords, rel_tol);
    if sub_basis.ncols() == 0 {
        return space.clone();
    }
    let comp = null_space(&sub_basis.transpose(), rel_tol);
    space * comp
}

/// Minimum-norm least-squares solve via SVD pseudo-inverse.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = (rel_tol * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Realify a complex matrix whose imaginary part must be negligible.
pub fn real_part(m: &DMatrix<Complex64>) -> (DMatrix<f64>, f64) {
    let re = m.map(|z| z.re);
    let im = m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()));
    (re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Frobenius norm of the deviation from the identity.
pub fn identity_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m - DMatrix::<f64>::identity(n, n)).norm()
}

pub fn is_finite_vec<T: RealField + Copy>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}
