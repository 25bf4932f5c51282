use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::problem::RestrictedProblem;
use super::radiality::{sphere_design, TaylorAnalysis};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalSearchOptions {
    /// Multistart count; 0 selects `64·(reduced dimension + 1)`.
    pub n_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for CriticalSearchOptions {
    fn default() -> Self {
        Self { n_starts: 0, seed: 11, max_iter: 60 }
    }
}

/// A critical `S¹ × L_λ`-orbit of `h_k` on `J⁻¹(λ) ∩ Q⁻¹(1)`.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalOrbit {
    pub isotropy: String,
    pub lambda: Vec<f64>,
    /// Representative in coordinates of the fixed-point space.
    pub point: Vec<f64>,
    pub value: f64,
    /// Lagrange multipliers `(μ_Q, μ_J…)` with `∇h_k = μ_Q ∇Q + Σ μ_J ∇J`.
    pub multipliers: Vec<f64>,
    pub constraint_residual: f64,
    pub gradient_residual: f64,
    pub reduced_hessian: Vec<f64>,
    pub morse: bool,
    /// The critical set is not an isolated orbit; reported per component.
    pub degenerate: bool,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseReport {
    /// Smallest `|eigenvalue|` of the Hessian transverse to the orbit; `None`
    /// when the orbit fills the constraint set.
    pub min_abs_eigenvalue: Option<f64>,
    pub spectrum: Vec<f64>,
    pub g_morse: bool,
}

/// Gauss–Newton projection onto `Q = target_q`, `J = target_j`.
pub(crate) fn project(
    problem: &RestrictedProblem,
    mut u: DVector<f64>,
    target_q: f64,
    target_j: &[f64],
) -> Option<DVector<f64>> {
    let tol = 1e-14 * target_q.abs().max(1e-300);
    for _ in 0..80 {
        let c = problem.constraints(&u, target_q, target_j);
        if c.amax() <= tol {
            return Some(u);
        }
        let d = problem.constraint_jacobian(&u);
        let step = linalg::lstsq(&d, &c, 1e-12);
        if !step.iter().all(|x| x.is_finite()) {
            return None;
        }
        u -= step;
    }
    let c = problem.constraints(&u, target_q, target_j);
    (c.amax() <= 1e-12 * target_q.abs()).then_some(u)
}

/// Residual of `∇f − Dᵀμ` with least-squares multipliers.
fn projected_gradient(problem: &RestrictedProblem, grad: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, f64) {
    let d = problem.constraint_jacobian(u);
    let mult = linalg::lstsq(&d.transpose(), grad, 1e-12);
    let r = (grad - d.transpose() * &mult).norm();
    (mult, r)
}

/// Orbit tangent of the symmetry `S¹ × L_λ` at `u`.
pub(crate) fn orbit_tangent(problem: &RestrictedProblem, lambda: &[f64], u: &DVector<f64>) -> DMatrix<f64> {
    let sym = problem.symmetry(lambda);
    linalg::orthonormal_basis(&sym.tangent(u), 1e-9)
}

/// Constraint tangent with the orbit directions removed.
fn transverse_tangent(problem: &RestrictedProblem, lambda: &[f64], u: &DVector<f64>) -> DMatrix<f64> {
    let d = problem.constraint_jacobian(u);
    let tangent = linalg::null_space(&d, 1e-10);
    linalg::complement_within(&tangent, &orbit_tangent(problem, lambda, u), 1e-9)
}

struct Candidate {
    point: DVector<f64>,
    value: f64,
    multipliers: DVector<f64>,
    constraint_residual: f64,
    gradient_residual: f64,
}

fn lagrange_solve(analysis: &TaylorAnalysis, lambda: &[f64], start: DVector<f64>, max_iter: usize) -> Option<Candidate> {
    let problem = &analysis.problem;
    let f = &analysis.h_k;
    let d = problem.dim();
    let m = 1 + lambda.len();
    let mut u = project(problem, start, 1.0, lambda)?;
    let (mut mult, _) = projected_gradient(problem, &f.gradient(&u), &u);
    let residual = |u: &DVector<f64>, mult: &DVector<f64>| {
        let dj = problem.constraint_jacobian(u);
        let mut r = DVector::zeros(d + m);
        r.rows_mut(0, d).copy_from(&(f.gradient(u) - dj.transpose() * mult));
        r.rows_mut(d, m).copy_from(&problem.constraints(u, 1.0, lambda));
        r
    };
    let mut r = residual(&u, &mult);
    for _ in 0..max_iter {
        if r.norm() <= 1e-13 {
            break;
        }
        let dj = problem.constraint_jacobian(&u);
        let mut jac = DMatrix::zeros(d + m, d + m);
        let hl = f.hessian(&u) - problem.constraint_hessian(mult.as_slice());
        jac.view_mut((0, 0), (d, d)).copy_from(&hl);
        jac.view_mut((0, d), (d, m)).copy_from(&(-dj.transpose()));
        jac.view_mut((d, 0), (m, d)).copy_from(&dj);
        let step = linalg::lstsq(&jac, &(-&r), 1e-12);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let un = &u + step.rows(0, d) * t;
            let mn = &mult + step.rows(d, m) * t;
            let rn = residual(&un, &mn);
            if rn.norm() < r.norm() {
                u = un;
                mult = mn;
                r = rn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let u = project(problem, u, 1.0, lambda)?;
    let grad = f.gradient(&u);
    let (mult, gradient_residual) = projected_gradient(problem, &grad, &u);
    let constraint_residual = problem.constraints(&u, 1.0, lambda).amax();
    if gradient_residual > 1e-8 || constraint_residual > 1e-10 {
        return None;
    }
    Some(Candidate { value: f.value(&u), point: u, multipliers: mult, constraint_residual, gradient_residual })
}

/// Whether two critical points are joined by a path of critical points.
fn critically_connected(analysis: &TaylorAnalysis, lambda: &[f64], a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let problem = &analysis.problem;
    let sym = problem.symmetry(lambda);
    let (_, p) = sym.distance(b, a);
    let b = sym.act(&p, b);
    for i in 1..16 {
        let t = i as f64 / 16.0;
        let w = a * (1.0 - t) + &b * t;
        let Some(w) = project(problem, w, 1.0, lambda) else {
            return false;
        };
        let (_, r) = projected_gradient(problem, &analysis.h_k.gradient(&w), &w);
        if r > 1e-7 {
            return false;
        }
    }
    true
}

/// Expected dimension of `J⁻¹(λ) ∩ Q⁻¹(1)` modulo `S¹ × L_λ` at a feasible point.
pub fn reduced_dimension(problem: &RestrictedProblem, lambda: &[f64], u: &DVector<f64>) -> usize {
    transverse_tangent(problem, lambda, u).ncols()
}

/// Critical orbits of `h_k` on `J⁻¹(λ) ∩ Q⁻¹(1)`, modulo `S¹ × L_λ`.
pub fn constrained_critical_orbits(
    analysis: &TaylorAnalysis,
    lambda: &[f64],
    opts: &CriticalSearchOptions,
) -> Result<Vec<CriticalOrbit>> {
    let problem = &analysis.problem;
    problem.check_lambda(lambda)?;
    let m = 1 + lambda.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // feasibility and transversality on a pilot batch
    let pilot = sphere_design(problem, 64, &mut rng);
    let feasible: Vec<DVector<f64>> = pilot.into_iter().filter_map(|u| project(problem, u, 1.0, lambda)).collect();
    if feasible.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    let ranks: Vec<usize> =
        feasible.iter().map(|u| linalg::rank(&problem.constraint_jacobian(u), 1e-8)).collect();
    let full: Vec<&DVector<f64>> = feasible.iter().zip(&ranks).filter(|(_, &r)| r == m).map(|(u, _)| u).collect();
    if full.is_empty() {
        return Err(Error::RankDeficientConstraints { rank: *ranks.iter().max().unwrap_or(&0), expected: m });
    }
    let reduced = reduced_dimension(problem, lambda, full[0]);
    let n_starts = if opts.n_starts == 0 { 64 * (reduced + 1) } else { opts.n_starts };

    let starts = sphere_design(problem, n_starts, &mut rng);
    let candidates: Vec<Option<Candidate>> =
        starts.into_par_iter().map(|u| lagrange_solve(analysis, lambda, u, opts.max_iter)).collect();

    let sym = problem.symmetry(lambda);
    let mut orbits: Vec<(CriticalOrbit, DVector<f64>)> = Vec::new();
    let mut converged = 0;
    for c in candidates.into_iter().flatten() {
        converged += 1;
        let mut known = false;
        for (orbit, rep) in orbits.iter_mut() {
            if (orbit.value - c.value).abs() > 1e-7 * (1.0 + c.value.abs()) && !orbit.degenerate {
                continue;
            }
            let (dist, _) = sym.distance(&c.point, rep);
            if dist <= 1e-6 {
                orbit.multiplicity += 1;
                known = true;
                break;
            }
        }
        if known {
            continue;
        }
        let mut orbit = CriticalOrbit {
            isotropy: problem.isotropy.clone(),
            lambda: lambda.to_vec(),
            point: c.point.iter().cloned().collect(),
            value: c.value,
            multipliers: c.multipliers.iter().cloned().collect(),
            constraint_residual: c.constraint_residual,
            gradient_residual: c.gradient_residual,
            reduced_hessian: Vec::new(),
            morse: false,
            degenerate: false,
            multiplicity: 1,
        };
        let report = morse_nondegeneracy_check(analysis, &orbit);
        orbit.reduced_hessian = report.spectrum;
        orbit.morse = report.g_morse;
        orbit.degenerate = !report.g_morse;
        if orbit.degenerate {
            let merged = orbits
                .iter_mut()
                .find(|(o, rep)| o.degenerate && critically_connected(analysis, lambda, rep, &c.point));
            if let Some((o, _)) = merged {
                o.multiplicity += 1;
                continue;
            }
        }
        orbits.push((orbit, c.point));
    }
    if converged == 0 {
        return Err(Error::NoConvergence(format!("none of {n_starts} starts reached a critical point")));
    }
    let mut out: Vec<CriticalOrbit> = orbits.into_iter().map(|(o, _)| o).collect();
    out.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    Ok(out)
}

/// Hessian of the Lagrangian on the constraint tangent, transverse to the orbit.
pub fn morse_nondegeneracy_check(analysis: &TaylorAnalysis, orbit: &CriticalOrbit) -> MorseReport {
    let problem = &analysis.problem;
    let u = DVector::from_column_slice(&orbit.point);
    let w = transverse_tangent(problem, &orbit.lambda, &u);
    let hl = analysis.h_k.hessian(&u) - problem.constraint_hessian(&orbit.multipliers);
    if w.ncols() == 0 {
        return MorseReport { min_abs_eigenvalue: None, spectrum: Vec::new(), g_morse: true };
    }
    let reduced = w.transpose() * &hl * &w;
    let eig = linalg::symmetric_part(&reduced).symmetric_eigenvalues();
    let mut spectrum: Vec<f64> = eig.iter().cloned().collect();
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_abs = spectrum.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    let scale = linalg::max_abs(&hl).max(1.0);
    MorseReport { min_abs_eigenvalue: Some(min_abs), spectrum, g_morse: min_abs > 1e-6 * scale }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{harmonic, spherical_pendulum, HarmonicParams, PendulumParams};
    use crate::search::fixtures;

    #[test]
    fn pendulum_has_one_orbit_per_momentum() {
        let model = spherical_pendulum(&PendulumParams::default()).unwrap();
        let a = fixtures::analysis(&model, "e");
        for lam in [-0.3, 0.1, 0.6] {
            let orbits = constrained_critical_orbits(&a, &[lam], &CriticalSearchOptions::default()).unwrap();
            assert_eq!(orbits.len(), 1, "lambda {lam}");
            let o = &orbits[0];
            assert!(o.morse && !o.degenerate);
            assert!(o.constraint_residual < 1e-10 && o.gradient_residual < 1e-8);
            let u = DVector::from_column_slice(&o.point);
            assert_eq!(reduced_dimension(&a.problem, &[lam], &u), 0);
            assert!(morse_nondegeneracy_check(&a, o).min_abs_eigenvalue.is_none());
        }
    }

    #[test]
    fn unreachable_momentum_is_an_empty_level_set() {
        let model = spherical_pendulum(&PendulumParams::default()).unwrap();
        let a = fixtures::analysis(&model, "e");
        let err = constrained_critical_orbits(&a, &[1.5], &CriticalSearchOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyLevelSet));
    }

    #[test]
    fn momentum_length_is_checked() {
        let model = spherical_pendulum(&PendulumParams::default()).unwrap();
        let a = fixtures::analysis(&model, "e");
        assert!(matches!(
            constrained_critical_orbits(&a, &[], &CriticalSearchOptions::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn coupled_oscillators_have_a_minimum_and_a_maximum() {
        // Q⁻¹(1)/S¹ is a 2-sphere, so h_4 has at least two critical orbits
        let model = harmonic(&HarmonicParams { frequencies: vec![1.0, 1.0], coupling: 0.3 }).unwrap();
        let a = fixtures::analysis(&model, "e");
        let orbits = constrained_critical_orbits(&a, &[], &CriticalSearchOptions::default()).unwrap();
        assert!(orbits.len() >= 2);
        let values: Vec<f64> = orbits.iter().map(|o| o.value).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        assert!(values[values.len() - 1] > values[0] + 1e-6);
        for o in &orbits {
            let u = DVector::from_column_slice(&o.point);
            assert_eq!(reduced_dimension(&a.problem, &[], &u), 2);
        }
    }
}
