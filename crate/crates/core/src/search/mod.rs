//! Search for relative periodic orbits near an elliptic equilibrium.
//!
//! The pipeline restricts to a fixed-point space, averages over the resonant
//! circle, finds the first non-radial Taylor order, locates constrained
//! critical orbits of that term, continues them in the radius and finally
//! certifies each branch point by shooting on the full flow.

mod branch;
mod critical;
mod problem;
mod radiality;
mod shoot;

pub use branch::{branch_continuation, correct, point_at_energy, BranchOptions, BranchSample, RpoBranch};
pub use critical::{
    constrained_critical_orbits, morse_nondegeneracy_check, reduced_dimension, CriticalOrbit, CriticalSearchOptions, MorseReport,
};
pub use problem::{RestrictedProblem, CIRCLE_SAMPLES};
pub use radiality::{radiality_analysis, OrderResidual, RadialityOptions, TaylorAnalysis};
pub use shoot::{distinct_orbits, nontriviality_witness, shoot_rpo, RpoCertificate, ShootOptions};

#[cfg(test)]
pub(crate) mod fixtures {
    use std::sync::Arc;

    use crate::dynamics::{EquivariantHamiltonianModel, Evaluate, Jetted};
    use crate::equivariance::{isotropy_table, GroupDescriptor, GroupKind, LinearAction};
    use crate::jet::Real;
    use crate::symplectic::{jordan_chevalley, lowest_frequency, resonance_space, JordanOptions, ResonanceOptions, SymplecticSpace};

    use super::*;

    pub fn problem(model: &EquivariantHamiltonianModel, k: &str) -> RestrictedProblem {
        let map = jordan_chevalley(&model.linearization(), &model.space, JordanOptions::default()).unwrap();
        let nu0 = lowest_frequency(&map).unwrap();
        let res = resonance_space(&map, nu0, ResonanceOptions::default()).unwrap();
        let table = isotropy_table(&model.action, &res, &model.space).unwrap();
        let datum = table.iter().find(|d| d.name == k).unwrap();
        RestrictedProblem::new(model, &res, datum).unwrap()
    }

    pub fn analysis(model: &EquivariantHamiltonianModel, k: &str) -> TaylorAnalysis {
        radiality_analysis(model, &problem(model, k), &RadialityOptions::default()).unwrap()
    }

    /// `½|v|² + |v|⁴` on `R⁴`.
    struct Radial;

    impl Evaluate for Radial {
        fn dim(&self) -> usize {
            4
        }

        fn eval<T: Real>(&self, v: &[T]) -> T {
            let r2 = v.iter().fold(T::cst(0.0), |a, &x| a + x * x);
            r2 * 0.5 + r2 * r2
        }
    }

    pub fn radial_model() -> EquivariantHamiltonianModel {
        let space = SymplecticSpace::canonical(4);
        let action = LinearAction::new(GroupDescriptor::new(GroupKind::Trivial), vec![], &space).unwrap();
        EquivariantHamiltonianModel::new("radial", serde_json::Value::Null, space, action, Arc::new(Jetted(Radial)), 0.3).unwrap()
    }
}
