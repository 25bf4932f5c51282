use nalgebra::{DMatrix, DVector};

use crate::dynamics::EquivariantHamiltonianModel;
use crate::equivariance::{CoadjointRule, Factor, IsotropyDatum, MomentumMapQuadratic, ProductAction};
use crate::error::{Error, Result};
use crate::symplectic::{QuadraticForm, ResonanceSpace};

/// Number of circle samples used to average over the flow of `A_s`.
pub const CIRCLE_SAMPLES: usize = 32;

/// The Hamiltonian on a fixed-point space `S = U^K`, averaged over the
/// resonant circle `exp(θ A_s/ν₀)`, with the constraint maps `Q` and `J_L`.
#[derive(Debug, Clone)]
pub struct RestrictedProblem {
    pub isotropy: String,
    /// Orthonormal basis of `S` in ambient coordinates.
    pub basis: DMatrix<f64>,
    /// `A_s|_S / ν₀`, a generator of period `2π`.
    pub circle: DMatrix<f64>,
    pub nu0: f64,
    pub period: f64,
    pub q: QuadraticForm,
    /// Components of `J` along `l`, restricted to `S`.
    pub momentum: MomentumMapQuadratic,
    /// Indices of the generators of `G` spanning `l`.
    pub l_indices: Vec<usize>,
    /// Those generators restricted to `S`.
    pub l_generators: Vec<DMatrix<f64>>,
    pub rule: CoadjointRule,
    rotations: Vec<DMatrix<f64>>,
}

impl RestrictedProblem {
    pub fn new(model: &EquivariantHamiltonianModel, resonance: &ResonanceSpace, datum: &IsotropyDatum) -> Result<Self> {
        let s = datum.fixed_space.basis().clone();
        let ub = resonance.basis();
        let a_s = ub * &resonance.restricted_semisimple * ub.transpose();
        let circle = s.transpose() * &a_s * &s / resonance.nu0;
        let invariance = (&a_s * &s / resonance.nu0 - &s * &circle).norm();
        if invariance > 1e-8 {
            return Err(Error::NotInvariant { residual: invariance });
        }
        let hess = model.hessian(&DVector::zeros(model.dim()));
        let q = QuadraticForm::new(s.transpose() * hess * &s * 0.5);
        let momentum = model.momentum.select(&datum.l_generators).restrict(&s);
        let l_generators = datum.l_generators.iter().map(|&i| s.transpose() * &model.action.generators[i] * &s).collect();
        let rotations = (0..CIRCLE_SAMPLES)
            .map(|i| (&circle * (std::f64::consts::TAU * i as f64 / CIRCLE_SAMPLES as f64)).exp())
            .collect();
        Ok(Self {
            isotropy: datum.name.clone(),
            basis: s,
            circle,
            nu0: resonance.nu0,
            period: resonance.period,
            q,
            momentum,
            l_indices: datum.l_generators.clone(),
            l_generators,
            rule: datum.rule,
            rotations,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn embed(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.basis * u
    }

    pub fn averaged_value(&self, model: &EquivariantHamiltonianModel, u: &DVector<f64>) -> f64 {
        self.rotations.iter().map(|r| model.value(&(&self.basis * (r * u)))).sum::<f64>() / CIRCLE_SAMPLES as f64
    }

    pub fn averaged_gradient(&self, model: &EquivariantHamiltonianModel, u: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for r in &self.rotations {
            let v = &self.basis * (r * u);
            g += r.transpose() * (self.basis.transpose() * model.gradient(&v));
        }
        g / CIRCLE_SAMPLES as f64
    }

    pub fn averaged_hessian(&self, model: &EquivariantHamiltonianModel, u: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for r in &self.rotations {
            let v = &self.basis * (r * u);
            let br = &self.basis * r;
            h += br.transpose() * model.hessian(&v) * br;
        }
        h / CIRCLE_SAMPLES as f64
    }

    /// Circle-averaged ray coefficients `ā_0..=ā_order` at `u`.
    pub fn averaged_ray(&self, model: &EquivariantHamiltonianModel, u: &DVector<f64>, order: usize) -> Vec<f64> {
        let zero = DVector::zeros(model.dim());
        let mut acc = vec![0.0; order + 1];
        for r in &self.rotations {
            let dir = &self.basis * (r * u);
            for (a, c) in acc.iter_mut().zip(model.h.ray(&zero, &dir, order)) {
                *a += c;
            }
        }
        acc.iter().map(|a| a / CIRCLE_SAMPLES as f64).collect()
    }

    /// `(Q(u) − target_q, J(u) − target_j)`.
    pub fn constraints(&self, u: &DVector<f64>, target_q: f64, target_j: &[f64]) -> DVector<f64> {
        let j = self.momentum.value(u);
        let mut c = DVector::zeros(1 + j.len());
        c[0] = self.q.value(u) - target_q;
        for i in 0..j.len() {
            c[1 + i] = j[i] - target_j[i];
        }
        c
    }

    /// Rows: `∇Q`, `∇J_i`.
    pub fn constraint_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let m = self.momentum.components();
        let mut d = DMatrix::zeros(1 + m, self.dim());
        d.set_row(0, &self.q.gradient(u).transpose());
        if m > 0 {
            d.view_mut((1, 0), (m, self.dim())).copy_from(&self.momentum.jacobian(u));
        }
        d
    }

    /// `Σ μ_i ∇²c_i` for multipliers `(μ_Q, μ_J)`.
    pub fn constraint_hessian(&self, mult: &[f64]) -> DMatrix<f64> {
        let mut h = self.q.coeffs() * (2.0 * mult[0]);
        for (m, &c) in self.momentum.matrices.iter().zip(&mult[1..]) {
            h += m * (2.0 * c);
        }
        h
    }

    /// The symmetry `S¹ × L_λ` acting on `S`.
    pub fn symmetry(&self, lambda: &[f64]) -> ProductAction {
        let mut act = ProductAction::new(vec![Factor::Circle(self.circle.clone())]);
        match self.rule {
            CoadjointRule::So3 if lambda.iter().any(|x| *x != 0.0) => {
                let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut g = DMatrix::zeros(self.dim(), self.dim());
                for (l, x) in self.l_generators.iter().zip(lambda) {
                    g += l * (x / norm);
                }
                act = act.with(Factor::Circle(g));
            }
            CoadjointRule::So3 if self.l_generators.len() == 3 => {
                act = act.with(Factor::So3(self.l_generators.clone()));
            }
            _ => {
                for g in &self.l_generators {
                    act = act.with(Factor::Circle(g.clone()));
                }
            }
        }
        act
    }

    /// Drift directions of `L_λ` in coordinates of the full algebra `g`.
    pub fn drift_basis(&self, lambda: &[f64], group_dim: usize) -> DMatrix<f64> {
        match self.rule {
            CoadjointRule::So3 if lambda.iter().any(|x| *x != 0.0) => {
                let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut b = DMatrix::zeros(group_dim, 1);
                for (&i, x) in self.l_indices.iter().zip(lambda) {
                    b[(i, 0)] = x / norm;
                }
                b
            }
            _ => {
                let mut b = DMatrix::zeros(group_dim, self.l_indices.len());
                for (j, &i) in self.l_indices.iter().enumerate() {
                    b[(i, j)] = 1.0;
                }
                b
            }
        }
    }

    /// The algebra element `Σ Λᵢ ξ_{l_i}` of `J`-multipliers, in coordinates of `g`.
    pub fn drift_velocity(&self, multipliers: &[f64], group_dim: usize) -> Vec<f64> {
        let mut xi = vec![0.0; group_dim];
        for (&i, m) in self.l_indices.iter().zip(multipliers) {
            xi[i] = *m;
        }
        xi
    }

    pub fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.momentum.components() {
            return Err(Error::DimensionMismatch(format!(
                "momentum value has {} components, {} expected for isotropy {}",
                lambda.len(),
                self.momentum.components(),
                self.isotropy
            )));
        }
        Ok(())
    }
}
