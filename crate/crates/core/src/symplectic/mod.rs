//! Linear symplectic algebra: forms, subspaces, quadratic forms, the
//! Jordan–Chevalley splitting of Hamiltonian matrices and resonance spaces.

mod jordan;
mod resonance;

pub use jordan::{
    jordan_chevalley, krein_check, EigenCluster, JordanDiagnostics, JordanOptions, KreinReport,
    LinearHamiltonianMap,
};
pub use resonance::{lowest_frequency, resonance_space, ResonanceOptions, ResonanceSpace};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A finite-dimensional symplectic vector space with form `omega(u, v) = uᵀ Ω v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    omega: DMatrix<f64>,
    omega_inv: DMatrix<f64>,
}

impl SymplecticSpace {
    pub fn canonical(dim: usize) -> Self {
        let omega = linalg::canonical_omega(dim);
        let omega_inv = -&omega;
        Self { omega, omega_inv }
    }

    /// Validates a user-supplied form. Antisymmetry is required to 1e-12
    /// relative; the matrix is never repaired.
    pub fn new(omega: DMatrix<f64>) -> Result<Self> {
        let (r, c) = omega.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::InvalidForm(format!("shape {r}x{c} is not even square")));
        }
        let scale = linalg::max_abs(&omega).max(1.0);
        let asym = linalg::max_abs(&(&omega + omega.transpose()));
        if asym > 1e-12 * scale {
            return Err(Error::InvalidForm(format!("not antisymmetric (residual {asym:.3e})")));
        }
        let (lo, hi) = linalg::singular_extremes(&omega);
        if lo <= 1e-10 * hi {
            return Err(Error::InvalidForm(format!("degenerate (sigma_min {lo:.3e})")));
        }
        let omega_inv = omega
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidForm("not invertible".into()))?;
        Ok(Self { omega, omega_inv })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn omega_inv(&self) -> &DMatrix<f64> {
        &self.omega_inv
    }

    pub fn pairing(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.omega * v))
    }

    /// Vector field `X` with `i_X ω = dh`, from the gradient of `h`.
    /// For the canonical form this is `(∂h/∂p, -∂h/∂q)`.
    pub fn hamiltonian_vector(&self, grad: &DVector<f64>) -> DVector<f64> {
        -(&self.omega_inv * grad)
    }

    /// Linear vector field of the quadratic Hamiltonian `½ vᵀ H v`.
    pub fn hamiltonian_matrix(&self, hessian: &DMatrix<f64>) -> DMatrix<f64> {
        -(&self.omega_inv * hessian)
    }

    /// `‖ΩA + AᵀΩ‖` scaled by `max(1, ‖A‖)`, entrywise max norm.
    pub fn symplectic_defect(&self, a: &DMatrix<f64>) -> f64 {
        let r = &self.omega * a + a.transpose() * &self.omega;
        linalg::max_abs(&r) / linalg::max_abs(a).max(1.0)
    }

    /// Projection of an arbitrary matrix onto the Lie algebra sp(V, ω).
    pub fn project_to_algebra(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (x - &self.omega_inv * x.transpose() * &self.omega) * 0.5
    }

    /// Quadratic Hamiltonian `Q_A(v) = ½ ω(Av, v)` of an infinitesimally symplectic `A`.
    pub fn quadratic_form_of(&self, a: &DMatrix<f64>) -> QuadraticForm {
        QuadraticForm::new(a.transpose() * &self.omega * 0.5)
    }
}

/// Orthonormal basis of a linear subspace of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.transpose() * &basis;
        let defect = linalg::max_abs(&(gram - DMatrix::<f64>::identity(k, k)));
        if defect > 1e-12 {
            return Err(Error::DimensionMismatch(format!(
                "basis columns not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the column span of `columns`.
    pub fn span(columns: &DMatrix<f64>) -> Self {
        Self { basis: linalg::orthonormal_basis(columns, 1e-10) }
    }

    pub fn whole(n: usize) -> Self {
        Self { basis: DMatrix::identity(n, n) }
    }

    pub fn zero(n: usize) -> Self {
        Self { basis: DMatrix::zeros(n, 0) }
    }

    pub fn parent_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn embed(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords
    }

    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * v
    }

    /// Subspace of `self` given by coordinate columns in `self`'s basis.
    pub fn sub(&self, coords: &DMatrix<f64>) -> Self {
        Self::span(&(&self.basis * coords))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    Positive,
    Negative,
    Indefinite,
}

/// `Q(v) = vᵀ C v` with symmetric coefficient matrix `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    coeffs: DMatrix<f64>,
    definiteness: Definiteness,
}

impl QuadraticForm {
    pub fn new(coeffs: DMatrix<f64>) -> Self {
        let coeffs = linalg::symmetric_part(&coeffs);
        let definiteness = classify(&coeffs);
        Self { coeffs, definiteness }
    }

    /// `½ vᵀ H v` from a Hessian.
    pub fn from_hessian(hessian: &DMatrix<f64>) -> Self {
        Self::new(hessian * 0.5)
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn is_definite(&self) -> bool {
        self.definiteness != Definiteness::Indefinite
    }

    pub fn value(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.coeffs * v))
    }

    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.coeffs * v * 2.0
    }
}

fn classify(c: &DMatrix<f64>) -> Definiteness {
    if c.nrows() == 0 {
        return Definiteness::Indefinite;
    }
    let eig = c.clone().symmetric_eigenvalues();
    let scale = eig.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let thr = 1e-10 * scale;
    if scale == 0.0 {
        Definiteness::Indefinite
    } else if eig.iter().all(|&x| x > thr) {
        Definiteness::Positive
    } else if eig.iter().all(|&x| x < -thr) {
        Definiteness::Negative
    } else {
        Definiteness::Indefinite
    }
}

/// Coordinates of an object relative to an orthonormal subspace basis.
pub trait Restrict {
    type Output;
    fn restrict(&self, s: &Subspace) -> Result<Self::Output>;
}

/// Restriction of a linear map to an invariant subspace.
impl Restrict for DMatrix<f64> {
    type Output = DMatrix<f64>;

    fn restrict(&self, s: &Subspace) -> Result<DMatrix<f64>> {
        let b = s.basis();
        let r = b.transpose() * self * b;
        let residual = (self * b - b * &r).norm();
        if residual > 1e-8 * self.norm().max(1.0) {
            return Err(Error::NotInvariant { residual });
        }
        Ok(r)
    }
}

impl Restrict for QuadraticForm {
    type Output = QuadraticForm;

    fn restrict(&self, s: &Subspace) -> Result<QuadraticForm> {
        let b = s.basis();
        Ok(QuadraticForm::new(b.transpose() * &self.coeffs * b))
    }
}

/// Restricting ω must produce a nondegenerate form.
impl Restrict for SymplecticSpace {
    type Output = SymplecticSpace;

    fn restrict(&self, s: &Subspace) -> Result<SymplecticSpace> {
        let w = restricted_omega(self, s);
        if w.nrows() == 0 {
            return Err(Error::DegenerateRestriction { sigma_min: 0.0 });
        }
        let (lo, hi) = linalg::singular_extremes(&w);
        if !w.nrows().is_multiple_of(2) || lo <= 1e-10 * hi.max(1.0) {
            return Err(Error::DegenerateRestriction { sigma_min: lo });
        }
        let w = (&w - w.transpose()) * 0.5;
        SymplecticSpace::new(w).map_err(|_| Error::DegenerateRestriction { sigma_min: lo })
    }
}

/// Matrix of ω in the subspace basis, without nondegeneracy checks.
pub fn restricted_omega(space: &SymplecticSpace, s: &Subspace) -> DMatrix<f64> {
    let b = s.basis();
    b.transpose() * space.omega() * b
}
