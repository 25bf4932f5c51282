use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::critical::{project, CriticalOrbit};
use super::problem::RestrictedProblem;
use super::radiality::TaylorAnalysis;
use crate::dynamics::EquivariantHamiltonianModel;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchOptions {
    pub r_max: f64,
    pub n_samples: usize,
    pub max_iter: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { r_max: 0.2, n_samples: 16, max_iter: 40 }
    }
}

/// One point `v(r, λ)` with multipliers `dh̄ = c dQ + dJ^Λ`.
#[derive(Debug, Clone, Serialize)]
pub struct BranchSample {
    pub r: f64,
    pub point: Vec<f64>,
    pub c: f64,
    pub multipliers: Vec<f64>,
    pub q_residual: f64,
    pub j_residual: f64,
    pub gradient_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RpoBranch {
    pub isotropy: String,
    pub lambda: Vec<f64>,
    pub seed_value: f64,
    pub order: usize,
    pub samples: Vec<BranchSample>,
    /// Least-squares `C` in `c − 1 ≈ C r^{k−2}`.
    pub c_coefficient: f64,
    pub c_fit_residual: f64,
    /// Least-squares `C` in `‖Λ‖ ≈ C r^{k−2}`.
    pub multiplier_coefficient: f64,
    /// Radius at which the corrector failed, if it did.
    pub fold_at: Option<f64>,
    pub degenerate: bool,
}

impl RpoBranch {
    pub fn max_constraint_residual(&self) -> (f64, f64) {
        self.samples.iter().fold((0.0, 0.0), |(q, j), s| (q.max(s.q_residual), j.max(s.j_residual)))
    }

    pub fn last(&self) -> &BranchSample {
        self.samples.last().expect("a branch has at least one sample")
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Corrector at radius `r`: critical point of `h̄` on `Q = r²`, `J = r²λ`.
pub fn correct(
    model: &EquivariantHamiltonianModel,
    problem: &RestrictedProblem,
    lambda: &[f64],
    r: f64,
    guess: (&DVector<f64>, f64, &[f64]),
    max_iter: usize,
) -> Result<BranchSample> {
    let d = problem.dim();
    let l = lambda.len();
    let r2 = r * r;
    let target_j: Vec<f64> = lambda.iter().map(|x| x * r2).collect();
    let (u0, c0, mult0) = guess;
    let mut u = u0.clone();
    let mut c = c0;
    let mut lam = DVector::from_column_slice(mult0);
    let residual = |u: &DVector<f64>, c: f64, lam: &DVector<f64>| {
        let dj = problem.constraint_jacobian(u);
        let mut mults = DVector::zeros(1 + l);
        mults[0] = c;
        mults.rows_mut(1, l).copy_from(lam);
        let mut out = DVector::zeros(d + 1 + l);
        out.rows_mut(0, d).copy_from(&((problem.averaged_gradient(model, u) - dj.transpose() * mults) / r));
        out.rows_mut(d, 1 + l).copy_from(&(problem.constraints(u, r2, &target_j) / r2));
        out
    };
    let mut res = residual(&u, c, &lam);
    for _ in 0..max_iter {
        if res.norm() <= 1e-12 {
            break;
        }
        let dj = problem.constraint_jacobian(&u);
        let mut mults = vec![c];
        mults.extend(lam.iter());
        let hl = problem.averaged_hessian(model, &u) - problem.constraint_hessian(&mults);
        let mut jac = DMatrix::zeros(d + 1 + l, d + 1 + l);
        jac.view_mut((0, 0), (d, d)).copy_from(&(hl / r));
        jac.view_mut((0, d), (d, 1 + l)).copy_from(&(-dj.transpose() / r));
        jac.view_mut((d, 0), (1 + l, d)).copy_from(&(dj / r2));
        let step = linalg::lstsq(&jac, &(-&res), 1e-12);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let un = &u + step.rows(0, d) * t;
            let cn = c + step[d] * t;
            let ln = &lam + step.rows(d + 1, l) * t;
            let rn = residual(&un, cn, &ln);
            if rn.norm() < res.norm() {
                u = un;
                c = cn;
                lam = ln;
                res = rn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let u = project(problem, u, r2, &target_j).ok_or(Error::BranchFold { r })?;
    let grad = problem.averaged_gradient(model, &u);
    let dj = problem.constraint_jacobian(&u);
    let mults = linalg::lstsq(&dj.transpose(), &grad, 1e-12);
    let gradient_residual = (&grad - dj.transpose() * &mults).norm() / grad.norm().max(f64::MIN_POSITIVE);
    if gradient_residual > 1e-8 {
        return Err(Error::BranchFold { r });
    }
    let cons = problem.constraints(&u, r2, &target_j);
    Ok(BranchSample {
        r,
        point: u.iter().cloned().collect(),
        c: mults[0],
        multipliers: mults.rows(1, l).iter().cloned().collect(),
        q_residual: cons[0].abs(),
        j_residual: cons.rows(1, l).norm(),
        gradient_residual,
    })
}

/// Continues a critical orbit of `h_k` into a branch `v(r, λ)` on a geometric
/// grid from `r_max/100` to `r_max`.
pub fn branch_continuation(
    model: &EquivariantHamiltonianModel,
    analysis: &TaylorAnalysis,
    orbit: &CriticalOrbit,
    opts: &BranchOptions,
) -> Result<RpoBranch> {
    let problem = &analysis.problem;
    let lambda = &orbit.lambda;
    problem.check_lambda(lambda)?;
    if !(opts.r_max > 0.0) || opts.n_samples < 2 {
        return Err(Error::Config("branch needs r_max > 0 and at least two samples".into()));
    }
    let k = analysis.first_nonradial_order as i32;
    let n = opts.n_samples;
    let radii: Vec<f64> = (0..n).map(|i| opts.r_max * 10f64.powf(-2.0 * (1.0 - i as f64 / (n - 1) as f64))).collect();

    // leading-order multipliers from the radial terms and the h_k problem
    let predict_c = |r: f64| {
        1.0 + analysis.radial_coefficients.iter().filter(|(j, _)| *j > 2).map(|(j, cj)| 0.5 * *j as f64 * cj * r.powi(*j as i32 - 2)).sum::<f64>()
            + orbit.multipliers[0] * r.powi(k - 2)
    };
    let seed = DVector::from_column_slice(&orbit.point);
    let mut u = &seed * radii[0];
    let mut c = predict_c(radii[0]);
    let mut mult: Vec<f64> = orbit.multipliers[1..].iter().map(|m| m * radii[0].powi(k - 2)).collect();

    let mut samples: Vec<BranchSample> = Vec::with_capacity(n);
    let mut fold_at = None;
    for (i, &r) in radii.iter().enumerate() {
        if i > 0 {
            let prev = radii[i - 1];
            let s = r / prev;
            u *= s;
            c = 1.0 + (c - 1.0) * s.powi(k - 2);
            mult.iter_mut().for_each(|m| *m *= s.powi(k - 2));
        }
        match correct(model, problem, lambda, r, (&u, c, &mult), opts.max_iter) {
            Ok(sample) => {
                u = DVector::from_column_slice(&sample.point);
                c = sample.c;
                mult = sample.multipliers.clone();
                samples.push(sample);
            }
            Err(e) => {
                if samples.is_empty() {
                    return Err(e);
                }
                log::warn!("branch on {} folds at r = {r:.4e}", problem.isotropy);
                fold_at = Some(r);
                break;
            }
        }
    }

    let powk: Vec<f64> = samples.iter().map(|s| s.r.powi(k - 2)).collect();
    let denom: f64 = powk.iter().map(|p| p * p).sum();
    let c_coefficient = samples.iter().zip(&powk).map(|(s, p)| (s.c - 1.0) * p).sum::<f64>() / denom;
    let c_dev: f64 = samples.iter().map(|s| (s.c - 1.0).powi(2)).sum::<f64>().sqrt();
    let c_fit = samples.iter().zip(&powk).map(|(s, p)| (s.c - 1.0 - c_coefficient * p).powi(2)).sum::<f64>().sqrt();
    let c_fit_residual = if c_dev > 0.0 { c_fit / c_dev } else { 0.0 };
    let multiplier_coefficient =
        samples.iter().zip(&powk).map(|(s, p)| norm(&s.multipliers) * p).sum::<f64>() / denom;

    let first = norm(&samples[0].multipliers);
    let last = norm(&samples[samples.len() - 1].multipliers);
    if samples.len() > 1 && first > last * (1.0 + 1e-6) + 1e-12 {
        return Err(Error::MultiplierBlowup(format!("|Lambda| = {first:.3e} at r = {:.3e} exceeds {last:.3e}", samples[0].r)));
    }

    Ok(RpoBranch {
        isotropy: problem.isotropy.clone(),
        lambda: lambda.clone(),
        seed_value: orbit.value,
        order: k as usize,
        samples,
        c_coefficient,
        c_fit_residual,
        multiplier_coefficient,
        fold_at,
        degenerate: orbit.degenerate,
    })
}

/// Branch point whose full energy `h` equals `energy`, by secant iteration in `r`.
pub fn point_at_energy(
    model: &EquivariantHamiltonianModel,
    problem: &RestrictedProblem,
    branch: &RpoBranch,
    energy: f64,
    max_iter: usize,
) -> Result<BranchSample> {
    let start = branch
        .samples
        .iter()
        .min_by(|a, b| (a.r * a.r - energy).abs().partial_cmp(&(b.r * b.r - energy).abs()).unwrap())
        .ok_or(Error::BranchFold { r: 0.0 })?
        .clone();
    let lambda = &branch.lambda;
    let eval = |r: f64, from: &BranchSample| -> Result<(BranchSample, f64)> {
        let s = r / from.r;
        let k = branch.order as i32;
        let u = DVector::from_column_slice(&from.point) * s;
        let c = 1.0 + (from.c - 1.0) * s.powi(k - 2);
        let mult: Vec<f64> = from.multipliers.iter().map(|m| m * s.powi(k - 2)).collect();
        let sample = correct(model, problem, lambda, r, (&u, c, &mult), max_iter)?;
        let e = model.value(&problem.embed(&DVector::from_column_slice(&sample.point)));
        Ok((sample, e - energy))
    };
    let mut r0 = start.r;
    let (s_start, mut f0) = eval(r0, &start)?;
    let mut r1 = energy.sqrt();
    if (r1 - r0).abs() < 1e-12 * r0 {
        r1 = r0 * 1.001;
    }
    let (mut s1, mut f1) = eval(r1, &s_start)?;
    for _ in 0..30 {
        if f1.abs() <= 1e-14 * energy.abs().max(1e-300) || f1 == f0 {
            break;
        }
        let r2 = r1 - f1 * (r1 - r0) / (f1 - f0);
        if !(r2 > 0.0) {
            return Err(Error::NoConvergence("energy secant left r > 0".into()));
        }
        let (s2, f2) = eval(r2, &s1)?;
        r0 = r1;
        f0 = f1;
        r1 = r2;
        f1 = f2;
        s1 = s2;
    }
    if f1.abs() > 1e-12 * energy.abs() {
        return Err(Error::NoConvergence(format!("energy mismatch {f1:.3e} on the branch")));
    }
    Ok(s1)
}
