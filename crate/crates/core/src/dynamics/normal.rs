//! Symplectic normal space at a relative equilibrium and the reconstruction
//! equations on `G ×_{G_m} (m* × V_m)` in the split (Abelian) case.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{integrate, vector_field, EquivariantHamiltonianModel, IntegratorConfig};
use crate::error::{Error, Result};
use crate::linalg;

const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SymplecticNormalSpaceData {
    pub base: Vec<f64>,
    pub xi: Vec<f64>,
    pub mu: Vec<f64>,
    /// Orthonormal basis of `V_m`, columns in `V`.
    #[serde(skip)]
    pub basis: DMatrix<f64>,
    pub dim: usize,
    #[serde(skip)]
    pub omega: DMatrix<f64>,
    /// Orthonormal bases in algebra coordinates of `g_m`, `m`, `q`, and `g_μ = g_m ⊕ m`.
    #[serde(skip)]
    pub g_m: DMatrix<f64>,
    #[serde(skip)]
    pub m_part: DMatrix<f64>,
    #[serde(skip)]
    pub q_part: DMatrix<f64>,
    #[serde(skip)]
    pub g_mu: DMatrix<f64>,
    #[serde(skip)]
    pub p_gm: DMatrix<f64>,
    #[serde(skip)]
    pub p_m: DMatrix<f64>,
    #[serde(skip)]
    pub p_q: DMatrix<f64>,
    /// `G_m`-invariant inner product on `V`.
    #[serde(skip)]
    pub inner: DMatrix<f64>,
    /// Non-invariance of `inner` under the `g_m` generators.
    pub averaging_error: f64,
    pub re_residual: f64,
}

impl SymplecticNormalSpaceData {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.g_m.ncols(), self.m_part.ncols(), self.q_part.ncols())
    }
}

fn projector(b: &DMatrix<f64>) -> DMatrix<f64> {
    b * b.transpose()
}

/// `c_ij^k` with `[ξ_i, ξ_j] = Σ_k c_ij^k ξ_k`, fitted in the generator span.
fn structure_constants(gens: &[DMatrix<f64>]) -> Vec<Vec<Vec<f64>>> {
    let k = gens.len();
    let n = gens.first().map_or(0, |g| g.nrows());
    let mut basis = DMatrix::zeros(n * n, k);
    for (i, g) in gens.iter().enumerate() {
        basis.set_column(i, &DVector::from_column_slice(g.as_slice()));
    }
    let mut c = vec![vec![vec![0.0; k]; k]; k];
    for i in 0..k {
        for j in 0..k {
            let br = linalg::commutator(&gens[i], &gens[j]);
            let coeffs = linalg::lstsq(&basis, &DVector::from_column_slice(br.as_slice()), 1e-12);
            c[i][j] = coeffs.iter().cloned().collect();
        }
    }
    c
}

/// `V_m`: the complement of `T_m(G_μ·m)` in `ker T_m J`.
pub fn symplectic_normal_space(
    model: &EquivariantHamiltonianModel,
    m: &DVector<f64>,
    xi: &[f64],
) -> Result<SymplecticNormalSpaceData> {
    let n = model.dim();
    let gens = &model.action.generators;
    let k = gens.len();
    if m.len() != n || xi.len() != k {
        return Err(Error::DimensionMismatch(format!("base of length {}, xi of length {}", m.len(), xi.len())));
    }
    let xh = vector_field(model, m);
    let xim = model.action.algebra_element(xi) * m;
    let re_residual = (&xh - &xim).norm();
    let scale = xh.norm().max(xim.norm());
    if re_residual > 1e-8 * scale {
        return Err(Error::NotRelativeEquilibrium { residual: re_residual });
    }

    let mu = model.momentum_value(m);
    let mu_zero = mu.amax() <= 1e-12 * m.norm_squared().max(f64::MIN_POSITIVE);
    // g_μ = {ξ : ⟨μ, [ξ, η]⟩ = 0 ∀η}
    let g_mu = if mu_zero || k == 0 {
        DMatrix::identity(k, k)
    } else {
        let c = structure_constants(gens);
        let coad = DMatrix::from_fn(k, k, |j, i| (0..k).map(|l| c[i][j][l] * mu[l]).sum());
        let tol = RANK_TOL * mu.amax();
        if linalg::max_abs(&coad) <= tol {
            DMatrix::identity(k, k)
        } else {
            linalg::null_space(&coad, RANK_TOL)
        }
    };

    let tangent = model.action.tangent(m);
    let g_m = if m.norm() == 0.0 { DMatrix::identity(k, k) } else { linalg::null_space(&tangent, RANK_TOL) };
    let m_part = linalg::complement_within(&g_mu, &g_m, RANK_TOL);
    let q_part = linalg::complement_within(&DMatrix::identity(k, k), &g_mu, RANK_TOL);

    let (inner, averaging_error) = invariant_inner_product(model, &g_m);

    let orbit = linalg::orthonormal_basis(&(&tangent * &g_mu), RANK_TOL);
    let jac = model.momentum.jacobian(m);
    let ker = if k == 0 || linalg::max_abs(&jac) == 0.0 { DMatrix::identity(n, n) } else { linalg::null_space(&jac, RANK_TOL) };
    let basis = if orbit.ncols() == 0 {
        ker.clone()
    } else {
        let constraint = orbit.transpose() * &inner * &ker;
        let coeffs = linalg::null_space(&constraint, RANK_TOL);
        linalg::orthonormal_basis(&(&ker * coeffs), RANK_TOL)
    };
    let dim = basis.ncols();
    let omega = basis.transpose() * model.space.omega() * &basis;
    if dim % 2 != 0 {
        return Err(Error::DegenerateSplit);
    }
    if dim > 0 {
        let (lo, hi) = linalg::singular_extremes(&omega);
        if lo <= 1e-8 * hi.max(1.0) {
            return Err(Error::DegenerateSplit);
        }
    }
    Ok(SymplecticNormalSpaceData {
        base: m.iter().cloned().collect(),
        xi: xi.to_vec(),
        mu: mu.iter().cloned().collect(),
        p_gm: projector(&g_m),
        p_m: projector(&m_part),
        p_q: projector(&q_part),
        basis,
        dim,
        omega,
        g_m,
        m_part,
        q_part,
        g_mu,
        inner,
        averaging_error,
        re_residual,
    })
}

/// Euclidean product averaged over `G_m`. Skew generators leave the Euclidean
/// product invariant already, so averaging is only needed otherwise.
fn invariant_inner_product(model: &EquivariantHamiltonianModel, g_m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = model.dim();
    let gens: Vec<DMatrix<f64>> = (0..g_m.ncols())
        .map(|j| model.action.algebra_element(g_m.column(j).as_slice()))
        .collect();
    let defect = |p: &DMatrix<f64>| {
        gens.iter()
            .map(|g| linalg::max_abs(&(g.transpose() * p + p * g)))
            .fold(0.0, f64::max)
    };
    let euclid = DMatrix::identity(n, n);
    if defect(&euclid) <= 1e-12 {
        return (euclid, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let mut acc = DMatrix::zeros(n, n);
    let samples = 32;
    for _ in 0..samples {
        let theta: Vec<f64> = (0..gens.len()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let mut g = DMatrix::zeros(n, n);
        for (gen, t) in gens.iter().zip(&theta) {
            g += gen * *t;
        }
        let e = g.exp();
        acc += e.transpose() * &e;
    }
    acc /= samples as f64;
    let err = defect(&acc);
    (acc, err)
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleTrajectory {
    pub times: Vec<f64>,
    /// Group coordinates `θ` with `g = exp(Σ θ_i ξ_i)`.
    pub theta: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    #[serde(skip)]
    pub v: Vec<DVector<f64>>,
    /// `μ + ρ + J_{V_m}(v)` in algebra coordinates.
    pub momentum: Vec<Vec<f64>>,
    pub steps: usize,
}

impl BundleTrajectory {
    pub fn momentum_drift(&self) -> f64 {
        let j0 = &self.momentum[0];
        self.momentum
            .iter()
            .map(|j| j.iter().zip(j0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Point `g·(m + v)` of the original space.
    pub fn state(&self, model: &EquivariantHamiltonianModel, data: &SymplecticNormalSpaceData, i: usize) -> DVector<f64> {
        let m = DVector::from_column_slice(&data.base);
        model.action.element(&self.theta[i]) * (m + &data.basis * &self.v[i])
    }
}

/// Integrates `ġ = g·D_ρ h_r`, `ρ̇ = 0`, `v̇ = B♯ D_v h_r` for a reduced
/// Hamiltonian `h_r(ρ, v)` given in `m*` and `V_m` coordinates.
pub fn bundle_flow_abelian(
    model: &EquivariantHamiltonianModel,
    data: &SymplecticNormalSpaceData,
    start: (&[f64], &[f64], &DVector<f64>),
    t_end: f64,
    cfg: &IntegratorConfig,
    reduced: &(dyn Fn(&[f64], &DVector<f64>) -> f64 + Sync),
) -> Result<BundleTrajectory> {
    let (theta0, rho0, v0) = start;
    let k = model.action.generators.len();
    let dm = data.m_part.ncols();
    let dv = data.dim;
    if !model.action.group.is_abelian() && dm != 0 {
        return Err(Error::UnsupportedCase(
            "non-Abelian group with g_m != g_mu needs the implicit (eta, psi) solve".into(),
        ));
    }
    if theta0.len() != k || rho0.len() != dm || v0.len() != dv {
        return Err(Error::DimensionMismatch(format!(
            "bundle state ({}, {}, {}) for ({k}, {dm}, {dv})",
            theta0.len(),
            rho0.len(),
            v0.len()
        )));
    }
    let omega_inv = if dv > 0 {
        data.omega.clone().try_inverse().ok_or(Error::DegenerateSplit)?
    } else {
        DMatrix::zeros(0, 0)
    };
    let grad = |rho: &[f64], v: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let h = |r: &[f64], w: &DVector<f64>| reduced(r, w);
        let gr = DVector::from_fn(dm, |i, _| {
            let s = 1e-6 * (1.0 + rho[i].abs());
            let mut rp = rho.to_vec();
            rp[i] += s;
            let mut rm = rho.to_vec();
            rm[i] -= s;
            (h(&rp, v) - h(&rm, v)) / (2.0 * s)
        });
        let gv = DVector::from_fn(dv, |i, _| {
            let s = 1e-6 * (1.0 + v[i].abs());
            let mut vp = v.clone();
            vp[i] += s;
            let mut vm = v.clone();
            vm[i] -= s;
            (h(rho, &vp) - h(rho, &vm)) / (2.0 * s)
        });
        (gr, gv)
    };
    // state: (θ, ρ, v)
    let field = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let rho: Vec<f64> = y.rows(k, dm).iter().cloned().collect();
        let v = DVector::from_iterator(dv, y.rows(k + dm, dv).iter().cloned());
        let (gr, gv) = grad(&rho, &v);
        let mut out = DVector::zeros(k + dm + dv);
        out.rows_mut(0, k).copy_from(&(&data.m_part * gr));
        if dv > 0 {
            out.rows_mut(k + dm, dv).copy_from(&(-(&omega_inv * gv)));
        }
        Ok(out)
    };
    let mut y0 = DVector::zeros(k + dm + dv);
    y0.rows_mut(0, k).copy_from_slice(theta0);
    y0.rows_mut(k, dm).copy_from_slice(rho0);
    y0.rows_mut(k + dm, dv).copy_from(v0);
    let tr = integrate(&field, &y0, t_end, cfg)?;

    let mu = DVector::from_column_slice(&data.mu);
    let mut out = BundleTrajectory {
        times: tr.times.clone(),
        theta: Vec::new(),
        rho: Vec::new(),
        v: Vec::new(),
        momentum: Vec::new(),
        steps: tr.steps,
    };
    for y in &tr.states {
        let rho = DVector::from_iterator(dm, y.rows(k, dm).iter().cloned());
        let v = DVector::from_iterator(dv, y.rows(k + dm, dv).iter().cloned());
        let jv = &data.p_gm * model.momentum_value(&(&data.basis * &v));
        let total = &mu + &data.m_part * &rho + jv;
        out.theta.push(y.rows(0, k).iter().cloned().collect());
        out.rho.push(rho.iter().cloned().collect());
        out.v.push(v);
        out.momentum.push(total.iter().cloned().collect());
    }
    Ok(out)
}
