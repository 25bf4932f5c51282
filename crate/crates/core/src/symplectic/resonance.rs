use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{restricted_omega, LinearHamiltonianMap, Subspace};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub struct ResonanceOptions {
    /// Absolute tolerance on `λ/(iν₀) − k`.
    pub integer_tol: f64,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        Self { integer_tol: 1e-6 }
    }
}

/// Sum of the real generalized eigenspaces for `±ikν₀`, `k ≥ 1`.
#[derive(Debug, Clone)]
pub struct ResonanceSpace {
    pub nu0: f64,
    pub period: f64,
    pub subspace: Subspace,
    /// `Bᵀ A_s B` in the orthonormal basis `B`.
    pub restricted_semisimple: DMatrix<f64>,
    /// `Bᵀ A B`.
    pub restricted_map: DMatrix<f64>,
    pub restricted_omega: DMatrix<f64>,
    /// Multiples `k` present, with multiplicity of `ikν₀`.
    pub weights: Vec<(i64, usize)>,
}

impl ResonanceSpace {
    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        self.subspace.basis()
    }

    /// `‖exp(T·A_s|U) − I‖`.
    pub fn period_defect(&self) -> f64 {
        linalg::identity_defect(&(&self.restricted_semisimple * self.period).exp())
    }
}

/// Smallest positive imaginary part in the spectrum (the "auto" frequency).
pub fn lowest_frequency(map: &LinearHamiltonianMap) -> Option<f64> {
    let tol = 1e-9 * map.spectral_radius().max(1.0);
    map.clusters
        .iter()
        .filter(|c| c.value.re.abs() <= tol && c.value.im > tol)
        .map(|c| c.value.im)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

pub fn resonance_space(
    map: &LinearHamiltonianMap,
    nu0: f64,
    opts: ResonanceOptions,
) -> Result<ResonanceSpace> {
    if !(nu0 > 0.0 && nu0.is_finite()) {
        return Err(Error::FrequencyNotInSpectrum { nu0 });
    }
    let n = map.dim();
    let mut cols: Vec<DMatrix<f64>> = Vec::new();
    let mut weights: Vec<(i64, usize)> = Vec::new();
    let mut hit_base = false;
    for c in &map.clusters {
        // λ/(iν₀) = (Im λ − i Re λ)/ν₀
        let ratio_re = c.value.im / nu0;
        let ratio_im = -c.value.re / nu0;
        let k = ratio_re.round();
        if k == 0.0 || ((ratio_re - k).powi(2) + ratio_im.powi(2)).sqrt() > opts.integer_tol {
            continue;
        }
        if k == 1.0 {
            hit_base = true;
        }
        if k > 0.0 {
            weights.push((k as i64, c.multiplicity));
        }
        cols.push(c.basis.map(|z| z.re));
        cols.push(c.basis.map(|z| z.im));
    }
    if !hit_base {
        return Err(Error::FrequencyNotInSpectrum { nu0 });
    }
    weights.sort();

    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut stacked = DMatrix::zeros(n, total);
    let mut j = 0;
    for c in &cols {
        stacked.view_mut((0, j), (n, c.ncols())).copy_from(c);
        j += c.ncols();
    }
    let subspace = Subspace::span(&stacked);
    let b = subspace.basis();
    let d = b.ncols();

    let restricted_map = b.transpose() * &map.a * b;
    let invariance = (&map.a * b - b * &restricted_map).norm();
    if invariance > 1e-9 * map.a.norm().max(1.0) {
        return Err(Error::NotInvariant { residual: invariance });
    }
    let w = restricted_omega(&map.space, &subspace);
    let (lo, hi) = linalg::singular_extremes(&w);
    if !d.is_multiple_of(2) || lo <= 1e-10 * hi.max(1.0) {
        return Err(Error::DegenerateForm(format!(
            "dimension {d}, smallest singular value {lo:.3e}"
        )));
    }
    let restricted_semisimple = b.transpose() * &map.semisimple * b;
    let out = ResonanceSpace {
        nu0,
        period: 2.0 * PI / nu0,
        subspace,
        restricted_semisimple,
        restricted_map,
        restricted_omega: w,
        weights,
    };
    let defect = out.period_defect();
    if defect > 1e-8 {
        return Err(Error::DegenerateForm(format!("exp(T A_s) differs from identity by {defect:.3e}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{jordan_chevalley, JordanOptions, SymplecticSpace};

    /// Decoupled oscillators `Σ ωᵢ (qᵢ² + pᵢ²)/2` as a Hamiltonian matrix.
    fn oscillators(freqs: &[f64]) -> DMatrix<f64> {
        let n = freqs.len();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for (i, &w) in freqs.iter().enumerate() {
            a[(i, n + i)] = w;
            a[(n + i, i)] = -w;
        }
        a
    }

    fn space_for(freqs: &[f64], nu0: f64) -> Result<ResonanceSpace> {
        let a = oscillators(freqs);
        let space = SymplecticSpace::canonical(a.nrows());
        let jc = jordan_chevalley(&a, &space, JordanOptions::default()).unwrap();
        resonance_space(&jc, nu0, ResonanceOptions::default())
    }

    #[test]
    fn integer_multiples_fill_space() {
        let u = space_for(&[1.0, 2.0], 1.0).unwrap();
        assert_eq!(u.dim(), 4);
        assert_eq!(u.weights, vec![(1, 1), (2, 1)]);
        assert!(u.period_defect() < 1e-8);
    }

    #[test]
    fn irrational_ratio_is_excluded() {
        let u = space_for(&[1.0, 2f64.sqrt()], 1.0).unwrap();
        assert_eq!(u.dim(), 2);
    }

    #[test]
    fn missing_frequency_is_an_error() {
        let err = space_for(&[1.0, 2.0], 0.7).unwrap_err();
        assert!(matches!(err, Error::FrequencyNotInSpectrum { .. }));
    }

    #[test]
    fn lowest_frequency_picks_base() {
        let a = oscillators(&[3.0, 1.5]);
        let jc = jordan_chevalley(&a, &SymplecticSpace::canonical(4), JordanOptions::default()).unwrap();
        assert!((lowest_frequency(&jc).unwrap() - 1.5).abs() < 1e-12);
    }
}
