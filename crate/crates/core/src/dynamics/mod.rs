//! Hamiltonian vector fields, conservative flows, augmented flows `h − J^ξ`,
//! symplectic normal spaces at relative equilibria and the Abelian
//! reconstruction equations.
//!
//! Conventions: `ω(u, v) = uᵀΩv` and `X_h = −Ω⁻¹∇h`, which for the canonical
//! form `dq ∧ dp` gives `X_h = (∂h/∂p, −∂h/∂q)`.

mod integrate;
mod normal;

pub use integrate::{integrate, Field, IntegratorConfig, Scheme, Trajectory};
pub use normal::{bundle_flow_abelian, symplectic_normal_space, BundleTrajectory, SymplecticNormalSpaceData};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equivariance::{momentum_map, LinearAction, MomentumMapQuadratic};
use crate::error::{Error, Result};
use crate::jet::{Jet, Real};
use crate::symplectic::SymplecticSpace;

/// A smooth function on `R^n` with derivatives.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, v: &DVector<f64>) -> f64;
    fn gradient(&self, v: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let step = 1e-5 * (1.0 + v.amax());
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut vp = v.clone();
            vp[j] += step;
            let mut vm = v.clone();
            vm[j] -= step;
            h.set_column(j, &((self.gradient(&vp) - self.gradient(&vm)) / (2.0 * step)));
        }
        crate::linalg::symmetric_part(&h)
    }

    /// Taylor coefficients `a_0..=a_order` of `t ↦ h(base + t·dir)`.
    /// The default interpolates samples and is exact for polynomials of
    /// degree at most `order`.
    fn ray(&self, base: &DVector<f64>, dir: &DVector<f64>, order: usize) -> Vec<f64> {
        let m = order + 1;
        let s = 0.5;
        let ts: Vec<f64> = (0..m)
            .map(|k| s * (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos())
            .collect();
        let vand = DMatrix::from_fn(m, m, |i, j| ts[i].powi(j as i32));
        let ys = DVector::from_iterator(m, ts.iter().map(|&t| self.value(&(base + dir * t))));
        let c = vand.lu().solve(&ys).unwrap_or_else(|| DVector::zeros(m));
        c.iter().cloned().collect()
    }

    fn in_domain(&self, _v: &DVector<f64>) -> bool {
        true
    }
}

/// A Hamiltonian written once over [`Real`], so it can be evaluated on jets.
pub trait Evaluate: Send + Sync {
    fn dim(&self) -> usize;
    fn eval<T: Real>(&self, v: &[T]) -> T;

    fn in_domain(&self, _v: &[f64]) -> bool {
        true
    }
}

/// Derivatives of an [`Evaluate`] by truncated Taylor arithmetic.
#[derive(Debug, Clone)]
pub struct Jetted<E>(pub E);

impl<E: Evaluate> Jetted<E> {
    fn along(&self, base: &DVector<f64>, dir: &[f64], order: usize) -> Jet {
        let v: Vec<Jet> = base.iter().zip(dir).map(|(&x, &d)| Jet::variable(x, d, order)).collect();
        self.0.eval(&v)
    }
}

impl<E: Evaluate> Hamiltonian for Jetted<E> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, v: &DVector<f64>) -> f64 {
        self.0.eval(v.as_slice())
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut dir = vec![0.0; n];
        DVector::from_fn(n, |i, _| {
            dir[i] = 1.0;
            let d = self.along(v, &dir, 1).coeff(1);
            dir[i] = 0.0;
            d
        })
    }

    fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut dir = vec![0.0; n];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            dir[i] = 1.0;
            diag[i] = self.along(v, &dir, 2).coeff(2);
            dir[i] = 0.0;
        }
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = 2.0 * diag[i];
            for j in i + 1..n {
                dir[i] = 1.0;
                dir[j] = 1.0;
                let c = self.along(v, &dir, 2).coeff(2) - diag[i] - diag[j];
                dir[i] = 0.0;
                dir[j] = 0.0;
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
        }
        h
    }

    fn ray(&self, base: &DVector<f64>, dir: &DVector<f64>, order: usize) -> Vec<f64> {
        let j = self.along(base, dir.as_slice(), order);
        (0..=order).map(|k| j.coeff(k)).collect()
    }

    fn in_domain(&self, v: &DVector<f64>) -> bool {
        self.0.in_domain(v.as_slice())
    }
}

/// `h(v) = ½ vᵀ H v`.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian {
    pub hessian: DMatrix<f64>,
}

impl Hamiltonian for QuadraticHamiltonian {
    fn dim(&self) -> usize {
        self.hessian.nrows()
    }

    fn value(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.hessian * v))
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.hessian * v
    }

    fn hessian(&self, _v: &DVector<f64>) -> DMatrix<f64> {
        self.hessian.clone()
    }

    fn ray(&self, base: &DVector<f64>, dir: &DVector<f64>, order: usize) -> Vec<f64> {
        let hb = &self.hessian * base;
        let all = [0.5 * base.dot(&hb), dir.dot(&hb), 0.5 * dir.dot(&(&self.hessian * dir))];
        (0..=order).map(|k| all.get(k).copied().unwrap_or(0.0)).collect()
    }
}

/// `(V, ω, G, J, h)` in the linear setting.
#[derive(Clone)]
pub struct EquivariantHamiltonianModel {
    pub name: String,
    pub params: serde_json::Value,
    pub space: SymplecticSpace,
    pub action: LinearAction,
    pub momentum: MomentumMapQuadratic,
    pub h: Arc<dyn Hamiltonian>,
    /// Radius of the ball on which states are sampled for checks.
    pub sample_radius: f64,
}

impl std::fmt::Debug for EquivariantHamiltonianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EquivariantHamiltonianModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.space.dim())
            .finish()
    }
}

/// Outcome of the invariance and gradient self-checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelChecks {
    pub invariance_residual: f64,
    pub gradient_residual: f64,
}

impl EquivariantHamiltonianModel {
    pub fn new(
        name: &str,
        params: serde_json::Value,
        space: SymplecticSpace,
        action: LinearAction,
        h: Arc<dyn Hamiltonian>,
        sample_radius: f64,
    ) -> Result<Self> {
        if h.dim() != space.dim() || action.dim() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "space {}, action {}, hamiltonian {}",
                space.dim(),
                action.dim(),
                h.dim()
            )));
        }
        let momentum = momentum_map(&action, &space)?;
        Ok(Self { name: name.to_string(), params, space, action, momentum, h, sample_radius })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn value(&self, v: &DVector<f64>) -> f64 {
        self.h.value(v)
    }

    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        self.h.gradient(v)
    }

    pub fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        self.h.hessian(v)
    }

    pub fn momentum_value(&self, v: &DVector<f64>) -> DVector<f64> {
        self.momentum.value(v)
    }

    pub fn in_domain(&self, v: &DVector<f64>) -> bool {
        self.h.in_domain(v)
    }

    /// `A = Ω⁻¹`-contraction of the Hessian at the origin.
    pub fn linearization(&self) -> DMatrix<f64> {
        self.space.hamiltonian_matrix(&self.hessian(&DVector::zeros(self.dim())))
    }

    fn sample_states(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)) * (self.sample_radius / (n as f64).sqrt());
            if self.in_domain(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Worst `|h(g·v) − h(v)| / (|h(v)| + tiny)` over sampled group elements and states.
    pub fn invariance_residual(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let k = self.action.generators.len();
        let mut worst = 0.0_f64;
        for v in self.sample_states(samples, seed) {
            let theta: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let gv = self.action.element(&theta) * &v;
            let h0 = self.value(&v);
            let scale = h0.abs().max(v.norm_squared()).max(1e-300);
            worst = worst.max((self.value(&gv) - h0).abs() / scale);
        }
        worst
    }

    /// Worst relative mismatch of the gradient against central differences.
    pub fn gradient_residual(&self, samples: usize, seed: u64) -> f64 {
        let mut worst = 0.0_f64;
        for v in self.sample_states(samples, seed) {
            let g = self.gradient(&v);
            let step = 1e-6 * self.sample_radius.max(1e-3);
            let fd = DVector::from_fn(v.len(), |i, _| {
                let mut vp = v.clone();
                vp[i] += step;
                let mut vm = v.clone();
                vm[i] -= step;
                (self.value(&vp) - self.value(&vm)) / (2.0 * step)
            });
            worst = worst.max((&g - fd).norm() / g.norm().max(1e-12));
        }
        worst
    }

    pub fn checks(&self, seed: u64) -> ModelChecks {
        ModelChecks {
            invariance_residual: self.invariance_residual(50, seed),
            gradient_residual: self.gradient_residual(50, seed.wrapping_add(1)),
        }
    }
}

/// `X_h(v)`.
pub fn vector_field(model: &EquivariantHamiltonianModel, v: &DVector<f64>) -> DVector<f64> {
    model.space.hamiltonian_vector(&model.gradient(v))
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DVector<f64>>,
    pub energy: Vec<f64>,
    pub momentum: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl FlowResult {
    fn from_trajectory(model: &EquivariantHamiltonianModel, tr: Trajectory) -> Self {
        let energy = tr.states.iter().map(|s| model.value(s)).collect();
        let momentum = tr.states.iter().map(|s| model.momentum_value(s).iter().cloned().collect()).collect();
        Self { times: tr.times, states: tr.states, energy, momentum, steps: tr.steps, rejected: tr.rejected }
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("flow has at least the initial state")
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    pub fn momentum_drift(&self) -> f64 {
        let j0 = &self.momentum[0];
        self.momentum
            .iter()
            .map(|j| j.iter().zip(j0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Admissible energy drift for a flow started at energy `h0`.
pub fn energy_drift_bound(cfg: &IntegratorConfig, h0: f64) -> f64 {
    match cfg.scheme {
        Scheme::SymplecticGauss4 => 1e-8 * h0.abs() + 1e-12,
        Scheme::AdaptiveDp5 => 1e3 * (cfg.rtol * h0.abs() + cfg.atol),
        Scheme::FixedDp5 => 1e-6 * h0.abs() + 1e-12,
    }
}

/// Admissible momentum drift for a flow started at momentum `j0`.
pub fn momentum_drift_bound(cfg: &IntegratorConfig, j0: f64) -> f64 {
    match cfg.scheme {
        Scheme::SymplecticGauss4 => 1e-9 * (1.0 + j0.abs()),
        Scheme::AdaptiveDp5 => 1e3 * (cfg.rtol * j0.abs() + cfg.atol),
        Scheme::FixedDp5 => 1e-6 * j0.abs() + 1e-12,
    }
}

fn guarded<'a>(
    model: &'a EquivariantHamiltonianModel,
    xi: Option<DMatrix<f64>>,
) -> impl Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + 'a {
    move |t, v| {
        if !model.in_domain(v) {
            return Err(Error::NonFiniteState { t });
        }
        let mut x = vector_field(model, v);
        if let Some(xi) = &xi {
            x -= xi * v;
        }
        Ok(x)
    }
}

/// Flow of `X_h` for time `t_end`.
pub fn flow(model: &EquivariantHamiltonianModel, v0: &DVector<f64>, t_end: f64, cfg: &IntegratorConfig) -> Result<FlowResult> {
    check_state(model, v0)?;
    let f = guarded(model, None);
    Ok(FlowResult::from_trajectory(model, integrate(&f, v0, t_end, cfg)?))
}

/// Flow of `X_{h − J^ξ} = X_h − ξ·v`.
pub fn augmented_flow(
    model: &EquivariantHamiltonianModel,
    xi: &[f64],
    v0: &DVector<f64>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowResult> {
    check_state(model, v0)?;
    if xi.len() != model.action.generators.len() {
        return Err(Error::DimensionMismatch(format!("xi has {} components", xi.len())));
    }
    let f = guarded(model, Some(model.action.algebra_element(xi)));
    Ok(FlowResult::from_trajectory(model, integrate(&f, v0, t_end, cfg)?))
}

fn check_state(model: &EquivariantHamiltonianModel, v0: &DVector<f64>) -> Result<()> {
    if v0.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!("state of length {}", v0.len())));
    }
    if !v0.iter().all(|x| x.is_finite()) || !model.in_domain(v0) {
        return Err(Error::NonFiniteState { t: 0.0 });
    }
    Ok(())
}
