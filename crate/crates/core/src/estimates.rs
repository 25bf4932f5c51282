//! Lusternik–Schnirelman lower bounds on the number of relative periodic
//! orbits, from dimensions of fixed-point spaces and group quotients.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremTag {
    Equilibrium,
    Spatiotemporal,
    RelativeEquilibrium,
}

/// Which term of the `max[...]` produced the reported bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundBranch {
    Dimensional,
    /// Point count on a zero-dimensional reduced space.
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpoEstimate {
    pub theorem: TheoremTag,
    pub isotropy: String,
    pub momentum: Vec<f64>,
    pub dimensional_bound: u64,
    pub euler_bound: Option<u64>,
    pub reduced_space_dim: i64,
    /// The half-sum was negative and has been clamped to zero.
    pub clamped: bool,
    pub branch: BoundBranch,
}

impl RpoEstimate {
    pub fn bound(&self) -> u64 {
        self.dimensional_bound.max(self.euler_bound.unwrap_or(0))
    }

    pub fn with_labels(mut self, isotropy: &str, momentum: &[f64]) -> Self {
        self.isotropy = isotropy.to_string();
        self.momentum = momentum.to_vec();
        self
    }
}

fn finish(theorem: TheoremTag, twice: i64) -> Result<RpoEstimate> {
    if twice % 2 != 0 {
        return Err(Error::NonIntegerBound { value: format!("{twice}/2") });
    }
    let half = twice / 2;
    let clamped = half < 0;
    if clamped {
        log::warn!("{theorem:?} estimate {half} is negative; clamped to 0");
    }
    let dimensional_bound = half.max(0) as u64;
    let reduced_space_dim = twice - 2;
    let euler_bound = (reduced_space_dim == 0).then_some(dimensional_bound);
    Ok(RpoEstimate {
        theorem,
        isotropy: String::new(),
        momentum: Vec::new(),
        dimensional_bound,
        euler_bound,
        reduced_space_dim,
        clamped,
        branch: BoundBranch::Dimensional,
    })
}

fn require_even(name: &str, d: usize) -> Result<()> {
    if !d.is_multiple_of(2) {
        return Err(Error::InvalidEstimateInput(format!("{name} = {d} is odd")));
    }
    Ok(())
}

/// `½(dim U^K − dim N(K)/K − dim (N(K)/K)_λ)`.
pub fn ls_estimate_equilibrium(dim_uk: usize, dim_l: usize, dim_l_lambda: usize) -> Result<RpoEstimate> {
    require_even("dim U^K", dim_uk)?;
    if dim_l_lambda > dim_l {
        return Err(Error::InvalidEstimateInput(format!(
            "dim L_lambda = {dim_l_lambda} exceeds dim L = {dim_l}"
        )));
    }
    finish(TheoremTag::Equilibrium, dim_uk as i64 - dim_l as i64 - dim_l_lambda as i64)
}

/// `½(dim U^H − dim N_G(K) − dim (N_G(K)_ρ ∩ N_G(K)_χ) + 2 dim K)`.
pub fn ls_estimate_spatiotemporal(dim_uh: usize, dim_ngk: usize, dim_n_rho_chi: usize, dim_k: usize) -> Result<RpoEstimate> {
    require_even("dim U^H", dim_uh)?;
    if dim_k > dim_ngk {
        return Err(Error::InvalidEstimateInput(format!("dim K = {dim_k} exceeds dim N(K) = {dim_ngk}")));
    }
    finish(
        TheoremTag::Spatiotemporal,
        dim_uh as i64 - dim_ngk as i64 - dim_n_rho_chi as i64 + 2 * dim_k as i64,
    )
}

/// `½(dim U^H − 2 dim N_{G_m}(K) + 2 dim K)` on the symplectic normal space.
pub fn ls_estimate_relative_equilibrium(dim_uh: usize, dim_ngmk: usize, dim_k: usize) -> Result<RpoEstimate> {
    require_even("dim U^H", dim_uh)?;
    if dim_k > dim_ngmk {
        return Err(Error::InvalidEstimateInput(format!("dim K = {dim_k} exceeds dim N(K) = {dim_ngmk}")));
    }
    finish(
        TheoremTag::RelativeEquilibrium,
        dim_uh as i64 - 2 * dim_ngmk as i64 + 2 * dim_k as i64,
    )
}
