use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{CoadjointRule, GroupDescriptor, GroupKind, LinearAction, SubgroupEntry};
use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::{ResonanceSpace, Subspace, SymplecticSpace};

/// Fixed-point data of one isotropy class on the resonance space.
#[derive(Debug, Clone, Serialize)]
pub struct IsotropyDatum {
    pub name: String,
    pub dim_k: usize,
    /// `U^K` in ambient coordinates.
    #[serde(skip)]
    pub fixed_space: Subspace,
    pub dim_fixed: usize,
    /// `dim N(K)/K`.
    pub dim_l: usize,
    pub dim_normalizer: usize,
    /// Generator indices spanning `l`.
    pub l_generators: Vec<usize>,
    pub rule: CoadjointRule,
    pub spatial: bool,
}

impl IsotropyDatum {
    pub fn dim_l_lambda(&self, lambda: &[f64]) -> usize {
        match self.rule {
            CoadjointRule::Full => self.dim_l,
            CoadjointRule::So3 => {
                if lambda.iter().any(|x| *x != 0.0) {
                    1
                } else {
                    self.dim_l
                }
            }
        }
    }
}

fn kernel_in(basis: &DMatrix<f64>, ops: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = basis.ncols();
    if ops.is_empty() {
        return basis.clone();
    }
    let mut stacked = DMatrix::zeros(d * ops.len(), d);
    for (i, op) in ops.iter().enumerate() {
        stacked.view_mut((i * d, 0), (d, d)).copy_from(op);
    }
    basis * linalg::null_space(&stacked, 1e-9)
}

/// `V^K = ∩ ker ξ` over the generators of `K`.
pub fn fixed_point_space(action: &LinearAction, k: &str) -> Result<Subspace> {
    let entry = action.group.subgroup(k)?;
    let n = action.dim();
    let ops: Vec<DMatrix<f64>> = entry.generators.iter().map(|&i| action.generators[i].clone()).collect();
    Ok(Subspace::span(&kernel_in(&DMatrix::identity(n, n), &ops)))
}

fn restricted_ops(action: &LinearAction, u: &ResonanceSpace, entry: &SubgroupEntry) -> Vec<DMatrix<f64>> {
    let b = u.basis();
    entry.generators.iter().map(|&i| b.transpose() * &action.generators[i] * b).collect()
}

fn check_symplectic(space: &SymplecticSpace, s: &Subspace, what: &str) -> Result<()> {
    let w = crate::symplectic::restricted_omega(space, s);
    let (lo, hi) = linalg::singular_extremes(&w);
    if !s.dim().is_multiple_of(2) || lo <= 1e-10 * hi.max(1.0) {
        return Err(Error::DegenerateForm(format!("{what}: sigma_min {lo:.3e}")));
    }
    Ok(())
}

/// One entry per subgroup class with nonzero fixed space in `U`.
pub fn isotropy_table(action: &LinearAction, u: &ResonanceSpace, space: &SymplecticSpace) -> Result<Vec<IsotropyDatum>> {
    let mut out = Vec::new();
    for entry in &action.group.subgroups {
        let ops = restricted_ops(action, u, entry);
        let fixed = Subspace::span(&kernel_in(u.basis(), &ops));
        if fixed.dim() == 0 {
            continue;
        }
        check_symplectic(space, &fixed, &format!("fixed space of {}", entry.name))?;
        out.push(IsotropyDatum {
            name: entry.name.clone(),
            dim_k: entry.dim,
            dim_fixed: fixed.dim(),
            fixed_space: fixed,
            dim_l: entry.dim_quotient,
            dim_normalizer: entry.dim_normalizer,
            l_generators: entry.quotient_generators.clone(),
            rule: entry.rule,
            spatial: true,
        });
    }
    Ok(out)
}

/// The `S¹`-action on `U` generated by `A_s / ν₀`, in the basis of `U`.
#[derive(Debug, Clone)]
pub struct CircleAction {
    pub action: LinearAction,
    pub space: SymplecticSpace,
}

impl CircleAction {
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.action.generators[0]
    }
}

pub fn circle_action_from_semisimple(u: &ResonanceSpace) -> Result<CircleAction> {
    let generator = &u.restricted_semisimple / u.nu0;
    let residual = linalg::identity_defect(&(&generator * (2.0 * PI)).exp());
    if residual > 1e-8 {
        return Err(Error::NonPeriodicGenerator { residual });
    }
    let w = &u.restricted_omega;
    let space = SymplecticSpace::new((w - w.transpose()) * 0.5)?;
    let action = LinearAction::new(GroupDescriptor::new(GroupKind::Circle), vec![generator], &space)?;
    Ok(CircleAction { action, space })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpatiotemporalSubgroup {
    /// Name of the spatial projection `K`.
    pub spatial: String,
    pub dim_k: usize,
    /// Integer temporal weights, one per generator of `K`.
    pub weights: Vec<i64>,
    /// Temporal velocity `ρ_H ∈ k*`.
    pub rho: Vec<f64>,
    #[serde(skip)]
    pub fixed_space: Subspace,
    pub dim_fixed: usize,
    pub dim_normalizer: usize,
    pub rule: CoadjointRule,
    /// `max ‖ad*_ξ ρ‖` over generators of `K`.
    pub ad_residual: f64,
}

impl SpatiotemporalSubgroup {
    /// `dim (N_G(K)_ρ ∩ N_G(K)_χ)`.
    pub fn dim_n_rho_chi(&self, chi: &[f64]) -> usize {
        match self.rule {
            CoadjointRule::Full => self.dim_normalizer,
            CoadjointRule::So3 => {
                if chi.iter().any(|x| *x != 0.0) || self.rho.iter().any(|x| *x != 0.0) {
                    1
                } else {
                    self.dim_normalizer
                }
            }
        }
    }

    pub fn is_spatial(&self) -> bool {
        self.weights.iter().all(|&w| w == 0)
    }
}

fn weight_vectors(k: usize, window: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-window..=window).map(move |w| {
                    let mut q = p.clone();
                    q.push(w);
                    q
                })
            })
            .collect();
    }
    out
}

/// Twisted fixed spaces `{v : (ξ_K + ⟨ρ, ξ_K⟩ A_s/ν₀) v = 0}` for integer
/// weights in `[-window, window]`.
pub fn spatiotemporal_subgroups(
    action: &LinearAction,
    u: &ResonanceSpace,
    circle: &CircleAction,
    space: &SymplecticSpace,
    window: i64,
) -> Result<Vec<SpatiotemporalSubgroup>> {
    let mut out = Vec::new();
    let c = circle.generator();
    for entry in &action.group.subgroups {
        if entry.dim > 0 && !entry.has_characters {
            continue;
        }
        let ops = restricted_ops(action, u, entry);
        for w in weight_vectors(entry.dim, window) {
            let twisted: Vec<DMatrix<f64>> = ops.iter().zip(&w).map(|(x, &wi)| x + c * wi as f64).collect();
            let fixed = Subspace::span(&kernel_in(u.basis(), &twisted));
            if fixed.dim() == 0 {
                continue;
            }
            check_symplectic(space, &fixed, &format!("twisted fixed space of {} with weights {w:?}", entry.name))?;
            let rho: Vec<f64> = w.iter().map(|&x| x as f64).collect();
            let mut ad_residual = 0.0_f64;
            for &i in &entry.generators {
                let mut ad = DMatrix::zeros(action.dim(), action.dim());
                for (&j, r) in entry.generators.iter().zip(&rho) {
                    ad += linalg::commutator(&action.generators[i], &action.generators[j]) * *r;
                }
                ad_residual = ad_residual.max(ad.norm());
            }
            out.push(SpatiotemporalSubgroup {
                spatial: entry.name.clone(),
                dim_k: entry.dim,
                weights: w,
                rho,
                dim_fixed: fixed.dim(),
                fixed_space: fixed,
                dim_normalizer: entry.dim_normalizer,
                rule: if entry.dim == 0 { entry.rule } else { CoadjointRule::Full },
                ad_residual,
            });
        }
    }
    Ok(out)
}

/// Numerical stand-in for `G`-simplicity of the action on `U`: the commutant
/// must contain a complex structure. Reported, never assumed.
#[derive(Debug, Clone, Serialize)]
pub struct SimplicityReport {
    pub commutant_dim: usize,
    pub complex_structure: bool,
    pub residual: f64,
}

impl SimplicityReport {
    pub fn passes(&self) -> bool {
        self.complex_structure
    }
}

pub fn simplicity_proxy(action: &LinearAction, u: &ResonanceSpace) -> SimplicityReport {
    let b = u.basis();
    let d = b.ncols();
    let gens: Vec<DMatrix<f64>> = action.restrict_generators(b);

    // Polar part of A_s|U: A_s/(kν₀) on each weight-k space.
    let s = &u.restricted_semisimple;
    let neg_sq = -(s * s);
    let nu2 = u.nu0 * u.nu0;
    let mut j = DMatrix::zeros(d, d);
    let ks: Vec<f64> = u.weights.iter().map(|&(k, _)| k as f64).collect();
    for &k in &ks {
        let mut p = DMatrix::<f64>::identity(d, d);
        for &other in &ks {
            if other != k {
                p = p * (&neg_sq - DMatrix::<f64>::identity(d, d) * (other * other * nu2))
                    / ((k * k - other * other) * nu2);
            }
        }
        j += s * p / (k * u.nu0);
    }
    let mut residual = (&j * &j + DMatrix::<f64>::identity(d, d)).norm();
    for g in &gens {
        residual = residual.max(linalg::commutator(&j, g).norm());
    }

    // commutant dimension: kernel of X ↦ ([X, ξ_i])_i on gl(d)
    let commutant_dim = if gens.is_empty() {
        d * d
    } else {
        let mut m = DMatrix::zeros(d * d * gens.len(), d * d);
        for (gi, g) in gens.iter().enumerate() {
            for col in 0..d * d {
                let mut e = DMatrix::zeros(d, d);
                e[(col % d, col / d)] = 1.0;
                let c = linalg::commutator(&e, g);
                for r in 0..d * d {
                    m[(gi * d * d + r, col)] = c[(r % d, r / d)];
                }
            }
        }
        linalg::null_space(&m, 1e-9).ncols()
    };
    SimplicityReport { commutant_dim, complex_structure: residual <= 1e-8, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::{momentum_map, planar_rotation_generator, so3_diagonal_generators};
    use crate::symplectic::{jordan_chevalley, resonance_space, JordanOptions, ResonanceOptions};

    fn oscillators(freqs: &[f64]) -> DMatrix<f64> {
        let n = freqs.len();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for (i, &w) in freqs.iter().enumerate() {
            a[(i, n + i)] = w;
            a[(n + i, i)] = -w;
        }
        a
    }

    fn resonance(freqs: &[f64]) -> (ResonanceSpace, SymplecticSpace) {
        let space = SymplecticSpace::canonical(2 * freqs.len());
        let jc = jordan_chevalley(&oscillators(freqs), &space, JordanOptions::default()).unwrap();
        (resonance_space(&jc, 1.0, ResonanceOptions::default()).unwrap(), space)
    }

    fn circle_on_plane() -> (LinearAction, SymplecticSpace) {
        let space = SymplecticSpace::canonical(4);
        let a = LinearAction::new(GroupDescriptor::new(GroupKind::Circle), vec![planar_rotation_generator(2)], &space)
            .unwrap();
        (a, space)
    }

    #[test]
    fn fixed_spaces() {
        let (a, _) = circle_on_plane();
        assert_eq!(fixed_point_space(&a, "e").unwrap().dim(), 4);
        assert_eq!(fixed_point_space(&a, "S1").unwrap().dim(), 0);

        let space = SymplecticSpace::canonical(6);
        let so3 = LinearAction::new(GroupDescriptor::new(GroupKind::So3), so3_diagonal_generators(), &space).unwrap();
        let f = fixed_point_space(&so3, "SO2").unwrap();
        assert_eq!(f.dim(), 2);
        // spanned by q_z and p_z
        let b = f.basis();
        for r in [0, 1, 3, 4] {
            assert!(b.row(r).norm() < 1e-12);
        }
    }

    #[test]
    fn circle_momentum_is_scaled_quadratic_form() {
        let (u, _) = resonance(&[1.0, 2.0]);
        let circle = circle_action_from_semisimple(&u).unwrap();
        let j = momentum_map(&circle.action, &circle.space).unwrap();
        // in U coordinates the basis is a rotation of the canonical one, so
        // compare against ½ ω(A_s v, v)/ν₀ directly.
        let v = nalgebra::DVector::from_vec(vec![0.3, -0.2, 0.8, 0.1]);
        let direct = 0.5 * circle.space.pairing(&(&u.restricted_semisimple * &v), &v) / u.nu0;
        assert!((j.value(&v)[0] - direct).abs() < 1e-12);
        // weights 1 and 2: ½(q1² + p1²) + (q2² + p2²) in original coordinates
        let x = u.basis() * &v;
        let expect = 0.5 * (x[0] * x[0] + x[2] * x[2]) + (x[1] * x[1] + x[3] * x[3]);
        assert!((direct - expect).abs() < 1e-12);
    }

    #[test]
    fn pendulum_like_isotropy_and_twisted_spaces() {
        let (u, space) = resonance(&[1.0, 1.0]);
        let (a, _) = circle_on_plane();
        let table = isotropy_table(&a, &u, &space).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!((table[0].dim_fixed, table[0].dim_l), (4, 1));

        let circle = circle_action_from_semisimple(&u).unwrap();
        let st = spatiotemporal_subgroups(&a, &u, &circle, &space, 3).unwrap();
        // trivial K, and S¹ twisted with weight ±1
        let twisted: Vec<_> = st.iter().filter(|s| s.dim_k == 1).collect();
        assert_eq!(twisted.len(), 2);
        for s in twisted {
            assert_eq!(s.dim_fixed, 2);
            assert_eq!(s.weights.len(), 1);
            assert_eq!(s.weights[0].abs(), 1);
            assert!(s.ad_residual == 0.0);
        }
        assert!(simplicity_proxy(&a, &u).passes());
    }
}
