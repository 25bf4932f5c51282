use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{QuadraticForm, SymplecticSpace};
use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalue cluster with its complex generalized eigenspace.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Columns span the generalized eigenspace (complex, not orthonormal in general).
    pub basis: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy)]
pub struct JordanOptions {
    /// Eigenvalues closer than this (relative to the spectral radius) are merged.
    pub cluster_tol: f64,
    /// Defective blocks of size m split into eigenvalues ~eps^(1/m) apart.
    /// When set, nearby clusters within `merge_radius` are merged if
    /// `(A - μ)^m` has an m-dimensional near-kernel, i.e. they look like
    /// one perturbed Jordan block.
    pub merge_defective: bool,
    pub merge_radius: f64,
    pub nilpotency_tol: f64,
    pub symplectic_tol: f64,
}

impl Default for JordanOptions {
    fn default() -> Self {
        Self {
            cluster_tol: 1e-8,
            merge_defective: true,
            merge_radius: 2e-2,
            nilpotency_tol: 1e-9,
            symplectic_tol: 1e-8,
        }
    }
}

/// `A = A_s + A_n` with commuting semisimple and nilpotent parts in sp(V).
#[derive(Debug, Clone)]
pub struct LinearHamiltonianMap {
    pub space: SymplecticSpace,
    pub a: DMatrix<f64>,
    pub semisimple: DMatrix<f64>,
    pub nilpotent: DMatrix<f64>,
    pub clusters: Vec<EigenCluster>,
}

impl LinearHamiltonianMap {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<(Complex64, usize)> {
        self.clusters.iter().map(|c| (c.value, c.multiplicity)).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.clusters.iter().fold(0.0, |a, c| a.max(c.value.norm()))
    }

    /// `‖[A_s, A_n]‖`, `‖A_n^dim‖` and the symplectic defects of both parts.
    pub fn diagnostics(&self) -> JordanDiagnostics {
        let n = self.dim();
        let mut pow = DMatrix::<f64>::identity(n, n);
        for _ in 0..n {
            pow = &pow * &self.nilpotent;
        }
        JordanDiagnostics {
            commutator: linalg::commutator(&self.semisimple, &self.nilpotent).norm(),
            nilpotency: pow.norm(),
            semisimple_defect: self.space.symplectic_defect(&self.semisimple),
            nilpotent_defect: self.space.symplectic_defect(&self.nilpotent),
            nilpotent_norm: self.nilpotent.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JordanDiagnostics {
    pub commutator: f64,
    pub nilpotency: f64,
    pub semisimple_defect: f64,
    pub nilpotent_defect: f64,
    pub nilpotent_norm: f64,
}

pub fn jordan_chevalley(
    a: &DMatrix<f64>,
    space: &SymplecticSpace,
    opts: JordanOptions,
) -> Result<LinearHamiltonianMap> {
    let n = space.dim();
    if a.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, space has dimension {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let residual = space.symplectic_defect(a);
    if residual > opts.symplectic_tol {
        return Err(Error::NotInfinitesimallySymplectic { residual });
    }

    let eig: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
    let radius = eig.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let scale = radius.max(linalg::max_abs(a)).max(f64::MIN_POSITIVE);
    let tol = opts.cluster_tol * scale;

    let ac = linalg::to_complex(a);
    let mut groups = cluster(&eig, tol);
    if opts.merge_defective {
        groups = merge_defective(&ac, &eig, groups, scale, &opts);
    }
    check_separation(&eig, &groups, tol)?;

    let mut values: Vec<Complex64> = groups.iter().map(|g| mean(&eig, g)).collect();
    snap_values(&mut values, &groups, tol);

    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut clusters = Vec::with_capacity(groups.len());
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    let mut d = Vec::with_capacity(n);
    let mut col = 0;
    for (g, &lambda) in groups.iter().zip(&values) {
        let m = g.len();
        let shifted = &ac - &eye * lambda;
        let mut p = eye.clone();
        for _ in 0..m {
            p = &p * &shifted;
        }
        let (basis, _) = linalg::smallest_right_singular(&p, m);
        v.view_mut((0, col), (n, m)).copy_from(&basis);
        d.extend(std::iter::repeat_n(lambda, m));
        col += m;
        clusters.push(EigenCluster { value: lambda, multiplicity: m, basis });
    }

    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditionedSpectrum {
            a: "generalized eigenspaces".into(),
            b: "not complementary".into(),
            gap: 0.0,
        })?;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    let (s, _imag) = linalg::real_part(&(&v * diag * v_inv));
    let semisimple = space.project_to_algebra(&s);
    let nilpotent = a - &semisimple;

    clusters.sort_by(|x, y| {
        (x.value.im, x.value.re)
            .partial_cmp(&(y.value.im, y.value.re))
            .unwrap()
    });
    Ok(LinearHamiltonianMap {
        space: space.clone(),
        a: a.clone(),
        semisimple,
        nilpotent,
        clusters,
    })
}

/// Single-linkage clustering of eigenvalues closer than `tol`.
fn cluster(eig: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = eig.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eig[i] - eig[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    groups
}

fn mean(eig: &[Complex64], g: &[usize]) -> Complex64 {
    g.iter().map(|&i| eig[i]).sum::<Complex64>() / g.len() as f64
}

fn group_gap(eig: &[Complex64], a: &[usize], b: &[usize]) -> f64 {
    let mut gap = f64::INFINITY;
    for &i in a {
        for &j in b {
            gap = gap.min((eig[i] - eig[j]).norm());
        }
    }
    gap
}

/// Greedy merging of nearby clusters that behave like one split Jordan block.
fn merge_defective(
    a: &DMatrix<Complex64>,
    eig: &[Complex64],
    mut groups: Vec<Vec<usize>>,
    scale: f64,
    opts: &JordanOptions,
) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut rejected: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let gap = group_gap(eig, &groups[i], &groups[j]);
                if gap > opts.merge_radius * scale {
                    continue;
                }
                if rejected.iter().any(|(x, y)| {
                    (x == &groups[i] && y == &groups[j]) || (x == &groups[j] && y == &groups[i])
                }) {
                    continue;
                }
                if best.is_none_or(|(_, _, g)| gap < g) {
                    best = Some((i, j, gap));
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        let mut merged = groups[i].clone();
        merged.extend(groups[j].iter().cloned());
        merged.sort_unstable();
        let m = merged.len();
        let mu = mean(eig, &merged);
        let shifted = a - &eye * mu;
        let mut p = eye.clone();
        for _ in 0..m {
            p = &p * &shifted;
        }
        let (_, sig) = linalg::smallest_right_singular(&p, m);
        let worst = sig.iter().cloned().fold(0.0_f64, f64::max);
        if worst <= opts.nilpotency_tol * scale.powi(m as i32) {
            groups[i] = merged;
            groups.remove(j);
        } else {
            rejected.push((groups[i].clone(), groups[j].clone()));
        }
    }
    groups
}

fn check_separation(eig: &[Complex64], groups: &[Vec<usize>], tol: f64) -> Result<()> {
    for (a, ga) in groups.iter().enumerate() {
        for gb in groups.iter().skip(a + 1) {
            for &i in ga {
                for &j in gb {
                    let gap = (eig[i] - eig[j]).norm();
                    if gap <= 10.0 * tol {
                        return Err(Error::IllConditionedSpectrum {
                            a: fmt_c(eig[i]),
                            b: fmt_c(eig[j]),
                            gap,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Zero out parts below tolerance and force exact conjugate pairing, so the
/// realified semisimple part is real and lands in sp(V).
fn snap_values(values: &mut [Complex64], groups: &[Vec<usize>], tol: f64) {
    for z in values.iter_mut() {
        if z.re.abs() <= tol {
            z.re = 0.0;
        }
        if z.im.abs() <= tol {
            z.im = 0.0;
        }
    }
    let k = values.len();
    let mut paired = vec![false; k];
    for i in 0..k {
        if paired[i] || values[i].im <= 0.0 {
            continue;
        }
        let target = values[i].conj();
        let best = (0..k)
            .filter(|&j| j != i && !paired[j] && groups[j].len() == groups[i].len())
            .min_by(|&x, &y| {
                (values[x] - target)
                    .norm()
                    .partial_cmp(&(values[y] - target).norm())
                    .unwrap()
            });
        if let Some(j) = best {
            if (values[j] - target).norm() <= 10.0 * tol.max(1e-12) {
                values[j] = target;
                paired[i] = true;
                paired[j] = true;
            }
        }
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KreinReport {
    pub definite: bool,
    pub spectrum_imaginary: bool,
    pub semisimple: bool,
}

/// A definite quadratic Hamiltonian forces an elliptic, semisimple linearization.
pub fn krein_check(q: &QuadraticForm, map: &LinearHamiltonianMap) -> Result<KreinReport> {
    let scale = map.a.norm().max(f64::MIN_POSITIVE);
    let spectrum_imaginary = map
        .clusters
        .iter()
        .all(|c| c.value.re.abs() <= 1e-9 * scale);
    let semisimple = map.nilpotent.norm() <= 1e-8 * scale;
    let report = KreinReport { definite: q.is_definite(), spectrum_imaginary, semisimple };
    if report.definite && !(spectrum_imaginary && semisimple) {
        return Err(Error::KreinViolation(format!(
            "imaginary spectrum {spectrum_imaginary}, semisimple {semisimple}"
        )));
    }
    Ok(report)
}
