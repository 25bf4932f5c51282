use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::problem::RestrictedProblem;
use crate::dynamics::EquivariantHamiltonianModel;
use crate::error::{Error, Result};
use crate::jet::MAX_ORDER;
use crate::polynomial::{monomials, HomogeneousPolynomial};
use crate::symplectic::Definiteness;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadialityOptions {
    pub max_order: usize,
    /// Order `j` is radial when the spread of `ā_j` on the `Q`-sphere is below this.
    pub tol_radial: f64,
    pub seed: u64,
}

impl Default for RadialityOptions {
    fn default() -> Self {
        Self { max_order: 8, tol_radial: 1e-8, seed: 7 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderResidual {
    pub order: usize,
    pub mean: f64,
    pub spread: f64,
    pub radial: bool,
}

/// Taylor data of the circle-averaged Hamiltonian on a fixed-point space.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorAnalysis {
    #[serde(skip)]
    pub problem: RestrictedProblem,
    pub isotropy: String,
    pub dim: usize,
    /// `c_j` for the radial orders `2 ≤ j < k`.
    pub radial_coefficients: Vec<(usize, f64)>,
    pub first_nonradial_order: usize,
    /// `h_k` as a polynomial in the coordinates of `S`.
    #[serde(skip)]
    pub h_k: HomogeneousPolynomial,
    pub max_order: usize,
    pub orders: Vec<OrderResidual>,
    pub fit_residual: f64,
    pub design_points: usize,
    pub warnings: Vec<String>,
}

/// Unit-`Q` points from a seeded Gaussian design.
pub(crate) fn sphere_design(problem: &RestrictedProblem, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let d = problem.dim();
    (0..count)
        .map(|_| {
            let u = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
            let q: f64 = problem.q.value(&u);
            u / q.sqrt()
        })
        .collect()
}

/// First non-radial order of the averaged Hamiltonian on `problem`'s subspace.
pub fn radiality_analysis(
    model: &EquivariantHamiltonianModel,
    problem: &RestrictedProblem,
    opts: &RadialityOptions,
) -> Result<TaylorAnalysis> {
    if opts.max_order < 4 || opts.max_order > MAX_ORDER {
        return Err(Error::Config(format!("max order {} outside 4..={MAX_ORDER}", opts.max_order)));
    }
    let d = problem.dim();
    if d == 0 {
        return Err(Error::DimensionMismatch("empty fixed-point space".into()));
    }
    if problem.q.definiteness() != Definiteness::Positive {
        return Err(Error::IndefiniteQuadraticForm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_design = (4 * d).max(64);
    let design = sphere_design(problem, n_design, &mut rng);
    let rays: Vec<Vec<f64>> = design.iter().map(|u| problem.averaged_ray(model, u, opts.max_order)).collect();

    let mut orders = Vec::new();
    let mut radial_coefficients = Vec::new();
    let mut k = None;
    for j in 2..=opts.max_order {
        let vals: Vec<f64> = rays.iter().map(|r| r[j]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let spread = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        let radial = spread <= opts.tol_radial;
        orders.push(OrderResidual { order: j, mean, spread, radial });
        if radial {
            radial_coefficients.push((j, mean));
        } else {
            k = Some(j);
            break;
        }
    }
    let Some(k) = k else {
        return Err(Error::RadialToMaxOrder { max_order: opts.max_order });
    };

    let mut warnings = Vec::new();
    if k % 2 != 0 {
        warnings.push(format!("first non-radial order {k} is odd on {}", problem.isotropy));
        log::warn!("{}", warnings[0]);
    }

    // fit h_k from a design large enough to determine every coefficient
    let n_fit = 3 * monomials(d, k).len() + n_design;
    let mut points = design;
    points.extend(sphere_design(problem, n_fit - n_design, &mut rng));
    let mut values: Vec<f64> = rays.iter().map(|r| r[k]).collect();
    values.extend(points[n_design..].iter().map(|u| problem.averaged_ray(model, u, k)[k]));
    let (h_k, fit_residual) = HomogeneousPolynomial::fit(d, k, &points, &values);
    if fit_residual > 1e-8 {
        warnings.push(format!("order-{k} fit residual {fit_residual:.3e}"));
    }

    Ok(TaylorAnalysis {
        isotropy: problem.isotropy.clone(),
        dim: d,
        problem: problem.clone(),
        radial_coefficients,
        first_nonradial_order: k,
        h_k,
        max_order: opts.max_order,
        orders,
        fit_residual,
        design_points: points.len(),
        warnings,
    })
}
