use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{flow, vector_field, EquivariantHamiltonianModel, IntegratorConfig};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootOptions {
    pub max_iter: usize,
    /// Fixed Dormand–Prince steps per relative period.
    pub steps: usize,
    /// Residual target relative to the state scale.
    pub tol: f64,
    /// Keep `h` and `J` at their initial values.
    pub fix_level: bool,
    /// Gauss–Legendre steps per period for the independent re-check.
    pub verify_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { max_iter: 30, steps: 1000, tol: 1e-8, fix_level: true, verify_steps: 4000 }
    }
}

/// A state `m` with `exp(−τξ)·F_τ(m) = m`.
#[derive(Debug, Clone, Serialize)]
pub struct RpoCertificate {
    pub state: Vec<f64>,
    pub tau: f64,
    pub xi: Vec<f64>,
    /// `‖exp(−τξ)·F_τ(m) − m‖`.
    pub residual: f64,
    pub scale: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
    /// Residual of `X_h(m)` against the best group velocity, absolute and relative to `‖X_h(m)‖`.
    pub witness: f64,
    pub witness_relative: f64,
    /// Residual recomputed with the symplectic integrator.
    pub reverify_residual: f64,
    /// `|h(F_τ(m)) − h(m)|` along that recomputation.
    pub energy_drift: f64,
    pub iterations: usize,
    pub isotropy: String,
    pub lambda: Vec<f64>,
    pub provenance: String,
}

impl RpoCertificate {
    pub fn state_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.state)
    }
}

/// `exp(−τξ)·F_τ(m) − m` with the fixed-step scheme.
fn period_map(model: &EquivariantHamiltonianModel, m: &DVector<f64>, tau: f64, xi: &[f64], steps: usize) -> Result<DVector<f64>> {
    let cfg = IntegratorConfig::fixed_dp5(tau / steps as f64).endpoints_only();
    let end = flow(model, m, tau, &cfg)?;
    Ok(model.action.element(&xi.iter().map(|x| -x * tau).collect::<Vec<_>>()) * end.last())
}

/// `min_ξ' ‖X_h(m) − ξ'·m‖` over the whole algebra.
pub fn nontriviality_witness(model: &EquivariantHamiltonianModel, m: &DVector<f64>) -> (f64, f64) {
    let x = vector_field(model, m);
    let t = model.action.tangent(m);
    let w = if t.ncols() == 0 {
        x.norm()
    } else {
        let c = linalg::lstsq(&t, &x, 1e-12);
        (&x - t * c).norm()
    };
    (w, w / x.norm().max(f64::MIN_POSITIVE))
}

/// Gauss–Newton on `(m, τ, η)` for `exp(−τξ)·F_τ(m) = m` with `ξ = B η`.
pub fn shoot_rpo(
    model: &EquivariantHamiltonianModel,
    m0: &DVector<f64>,
    tau0: f64,
    xi0: &[f64],
    algebra_basis: &DMatrix<f64>,
    opts: &ShootOptions,
) -> Result<RpoCertificate> {
    let n = model.dim();
    let k = model.action.generators.len();
    if !(tau0 > 0.0) || m0.len() != n || xi0.len() != k || algebra_basis.nrows() != k {
        return Err(Error::Config("shooting needs tau0 > 0 and consistent dimensions".into()));
    }
    let b = algebra_basis.ncols();
    let xi0v = DVector::from_column_slice(xi0);
    let eta0 = if b > 0 { linalg::lstsq(algebra_basis, &xi0v, 1e-12) } else { DVector::zeros(0) };
    if (algebra_basis * &eta0 - &xi0v).norm() > 1e-10 * (1.0 + xi0v.norm()) {
        return Err(Error::Config("xi0 is not in the span of the drift basis".into()));
    }
    let scale = m0.norm().max(f64::MIN_POSITIVE);
    let x0 = vector_field(model, m0);
    let phase: Vec<DVector<f64>> = std::iter::once(x0.clone())
        .chain((0..b).map(|j| model.action.algebra_element(algebra_basis.column(j).as_slice()) * m0))
        .filter(|v| v.norm() > 1e-14 * scale)
        .map(|v| v.normalize())
        .collect();
    let h0 = model.value(m0);
    let j0 = model.momentum_value(m0);
    let energy_scale = h0.abs().max(1e-300);
    let n_level = if opts.fix_level { 1 + j0.len() } else { 0 };
    let rows = n + phase.len() + n_level;

    let unpack = |x: &DVector<f64>| -> (DVector<f64>, f64, Vec<f64>) {
        let m = x.rows(0, n).into_owned();
        let tau = x[n];
        let xi = algebra_basis * x.rows(n + 1, b);
        (m, tau, xi.iter().cloned().collect())
    };
    let residual = |x: &DVector<f64>, pm: Option<&DVector<f64>>| -> Result<DVector<f64>> {
        let (m, tau, xi) = unpack(x);
        let mut r = DVector::zeros(rows);
        let end = match pm {
            Some(p) => p.clone(),
            None => period_map(model, &m, tau, &xi, opts.steps)?,
        };
        r.rows_mut(0, n).copy_from(&((end - &m) / scale));
        let dm = &m - m0;
        for (i, p) in phase.iter().enumerate() {
            r[n + i] = p.dot(&dm) / scale;
        }
        if opts.fix_level {
            let o = n + phase.len();
            r[o] = (model.value(&m) - h0) / energy_scale;
            let j = model.momentum_value(&m);
            for i in 0..j.len() {
                r[o + 1 + i] = (j[i] - j0[i]) / energy_scale;
            }
        }
        Ok(r)
    };

    let mut x = DVector::zeros(n + 1 + b);
    x.rows_mut(0, n).copy_from(m0);
    x[n] = tau0;
    x.rows_mut(n + 1, b).copy_from(&eta0);
    let mut r = residual(&x, None)?;
    let mut iterations = 0;
    let tol = opts.tol * 0.1;
    while r.rows(0, n).norm() > tol || r.norm() > tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence(format!("shooting residual {:.3e} after {iterations} iterations", r.norm())));
        }
        iterations += 1;
        let (m, tau, xi) = unpack(&x);
        let cols = n + 1 + b;
        let h_m = 1e-6 * scale;
        let jac_cols: Vec<Result<DVector<f64>>> = (0..cols)
            .into_par_iter()
            .map(|j| {
                if j == n {
                    // d/dτ = exp(−τξ)(X_h − ξ)·F_τ(m), evaluated at the end point
                    let cfg = IntegratorConfig::fixed_dp5(tau / opts.steps as f64).endpoints_only();
                    let end = flow(model, &m, tau, &cfg)?;
                    let f = end.last();
                    let xi_m = model.action.algebra_element(&xi);
                    let g = model.action.element(&xi.iter().map(|v| -v * tau).collect::<Vec<_>>());
                    let d = g * (vector_field(model, f) - xi_m * f);
                    let mut col = DVector::zeros(rows);
                    col.rows_mut(0, n).copy_from(&(d / scale));
                    return Ok(col);
                }
                let step = if j < n { h_m } else { 1e-6 };
                let mut xp = x.clone();
                xp[j] += step;
                let mut xm = x.clone();
                xm[j] -= step;
                Ok((residual(&xp, None)? - residual(&xm, None)?) / (2.0 * step))
            })
            .collect();
        let mut jac = DMatrix::zeros(rows, cols);
        for (j, c) in jac_cols.into_iter().enumerate() {
            jac.set_column(j, &c?);
        }
        let step = linalg::lstsq(&jac, &(-&r), 1e-10);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let xn = &x + &step * t;
            if xn[n] > 0.0 {
                if let Ok(rn) = residual(&xn, None) {
                    if rn.norm() < r.norm() {
                        x = xn;
                        r = rn;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence(format!("shooting stalled at residual {:.3e}", r.norm())));
        }
    }
    let (m, tau, xi) = unpack(&x);
    let residual_abs = period_map(model, &m, tau, &xi, opts.steps)?.metric_distance(&m);
    let (witness, witness_relative) = nontriviality_witness(model, &m);
    if witness_relative <= 1e-6 {
        return Err(Error::ConvergedToRelativeEquilibrium { witness });
    }
    let cfg = IntegratorConfig::symplectic(tau / opts.verify_steps as f64).endpoints_only();
    let end = flow(model, &m, tau, &cfg)?;
    let g = model.action.element(&xi.iter().map(|v| -v * tau).collect::<Vec<_>>());
    let reverify_residual = (g * end.last() - &m).norm();
    let energy_drift = (model.value(end.last()) - model.value(&m)).abs();
    Ok(RpoCertificate {
        energy: model.value(&m),
        momentum: model.momentum_value(&m).iter().cloned().collect(),
        state: m.iter().cloned().collect(),
        scale: m.norm(),
        tau,
        xi,
        residual: residual_abs,
        witness,
        witness_relative,
        reverify_residual,
        energy_drift,
        iterations,
        isotropy: String::new(),
        lambda: Vec::new(),
        provenance: "direct".into(),
    })
}

/// `min_{t, g} ‖g·F_t(b) − a‖` over one relative period of `b`.
fn orbit_gap(model: &EquivariantHamiltonianModel, a: &RpoCertificate, b: &RpoCertificate) -> Result<f64> {
    let sym = model.action.as_product();
    let samples = 128;
    let cfg = IntegratorConfig::fixed_dp5(b.tau / (4 * samples) as f64);
    let cfg = IntegratorConfig { record_every: 4, ..cfg };
    let traj = flow(model, &b.state_vector(), b.tau, &cfg)?;
    let target = a.state_vector();
    let mut coarse: Vec<(f64, usize)> =
        traj.states.iter().enumerate().map(|(i, s)| (sym.coarse_distance(s, &target).0, i)).collect();
    coarse.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let dt = b.tau / samples as f64;
    let mut best = f64::INFINITY;
    for &(_, i) in coarse.iter().take(3) {
        let base = traj.states[i].clone();
        // golden-section search in the time offset around sample i
        let at = |s: f64| -> f64 {
            let fine = IntegratorConfig::adaptive(1e-12, 1e-14).endpoints_only();
            match flow(model, &base, s, &fine) {
                Ok(f) => sym.distance(f.last(), &target).0,
                Err(_) => f64::INFINITY,
            }
        };
        let (mut lo, mut hi) = (-dt, dt);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = at(x1);
        let mut f2 = at(x2);
        for _ in 0..40 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = at(x2);
            }
        }
        best = best.min(f1.min(f2)).min(at(0.0));
    }
    Ok(best)
}

/// Representatives of geometrically distinct relative periodic orbits, with
/// the number of certificates each one absorbs.
pub fn distinct_orbits(model: &EquivariantHamiltonianModel, certs: &[RpoCertificate]) -> Result<Vec<(RpoCertificate, usize)>> {
    let mut reps: Vec<(RpoCertificate, usize)> = Vec::new();
    for c in certs {
        let mut found = false;
        for (rep, count) in reps.iter_mut() {
            let scale = rep.scale.max(c.scale);
            let gap = orbit_gap(model, c, rep)?.max(orbit_gap(model, rep, c)?);
            if gap <= 1e-4 * scale {
                *count += 1;
                found = true;
                break;
            }
        }
        if !found {
            reps.push((c.clone(), 1));
        }
    }
    Ok(reps)
}
