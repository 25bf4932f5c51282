use nalgebra::DMatrix;
use proptest::prelude::*;
use relmode::linalg::canonical_omega;
use relmode::symplectic::{jordan_chevalley, JordanOptions, SymplecticSpace};

/// Hamiltonian matrix `Ω Tᵀ H0 T` for a random symplectic `T = exp(ΩS)`
/// and a diagonal `H0` drawn from a small palette, so repeated and
/// defective eigenvalues occur often.
fn structured(half: usize, diag: &[u8], s: &[f64]) -> DMatrix<f64> {
    let n = 2 * half;
    let w = canonical_omega(n);
    let palette = [0.0, 1.0, 1.0, 2.0, 0.5, -1.0];
    let h0 = DMatrix::from_fn(n, n, |i, j| if i == j { palette[diag[i] as usize % palette.len()] } else { 0.0 });
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (s[i * n + j] + s[j * n + i]));
    let t = (&w * sym * 0.4).exp();
    &w * t.transpose() * h0 * t
}

fn generic(n: usize, s: &[f64]) -> DMatrix<f64> {
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (s[i * n + j] + s[j * n + i]));
    canonical_omega(n) * sym
}

fn arb_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=4, any::<bool>()).prop_flat_map(|(half, structured_case)| {
        let n = 2 * half;
        (
            prop::collection::vec(0u8..6, n),
            prop::collection::vec(-1.0f64..1.0, n * n),
        )
            .prop_map(move |(d, s)| if structured_case { structured(half, &d, &s) } else { generic(n, &s) })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn decomposition_invariants(a in arb_matrix()) {
        let n = a.nrows();
        let space = SymplecticSpace::canonical(n);
        let jc = jordan_chevalley(&a, &space, JordanOptions::default()).unwrap();
        let scale = a.norm().max(1.0);
        let d = jc.diagnostics();

        let sum_err = (&jc.semisimple + &jc.nilpotent - &a).norm();
        prop_assert!(sum_err <= 1e-14 * scale, "sum {}", sum_err);
        prop_assert!(d.commutator <= 1e-9 * scale * scale, "commutator {}", d.commutator);
        prop_assert!(d.nilpotency <= 1e-9 * scale.powi(n as i32), "nilpotency {}", d.nilpotency);
        prop_assert!(d.semisimple_defect <= 1e-10, "A_s defect {}", d.semisimple_defect);
        prop_assert!(d.nilpotent_defect <= 1e-10, "A_n defect {}", d.nilpotent_defect);
        let total: usize = jc.clusters.iter().map(|c| c.multiplicity).sum();
        prop_assert_eq!(total, n);
    }
}
