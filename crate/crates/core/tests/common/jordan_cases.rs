//! Hand-built quadratic Hamiltonians with known multiplicity structure,
//! conjugated by rational symplectic maps.

use relmode::symplectic::{jordan_chevalley, JordanOptions, SymplecticSpace};

use super::exact_jordan::*;

pub struct Case {
    pub name: &'static str,
    pub h: QMat,
    pub transform: QMat,
    pub defective: bool,
}

fn sym(n: usize, entries: &[(usize, usize, i64)]) -> QMat {
    let mut h = QMat::zeros(n);
    for &(i, j, v) in entries {
        h.set(i, j, q(v, 1));
        h.set(j, i, q(v, 1));
    }
    h
}

fn t4() -> QMat {
    upper_shear(&[1, 0, 2, -1], 2, 2)
        .mul(&block_transform(&[1, 1, 0, 1], 2))
        .mul(&lower_shear(&[0, 1, 1, 1], 2, 1))
}

fn t6() -> QMat {
    upper_shear(&[1, 0, 1, 0, -1, 0, 1, 0, 2], 3, 2)
        .mul(&block_transform(&[1, 0, 1, 1, 1, 0, 0, 0, 1], 3))
        .mul(&lower_shear(&[0, 1, 0, 1, 1, 0, 0, 0, -1], 3, 2))
}

pub fn cases() -> Vec<Case> {
    // Coordinates (q1..qn, p1..pn); quadratic Hamiltonian ½ vᵀ H v.
    vec![
        Case {
            name: "free particle",
            h: sym(2, &[(1, 1, 1)]),
            transform: upper_shear(&[1], 1, 3).mul(&lower_shear(&[-2], 1, 1)),
            defective: true,
        },
        Case {
            name: "free particle plus oscillator",
            h: sym(4, &[(1, 1, 1), (2, 2, 1), (3, 3, 1)]),
            transform: t4(),
            defective: true,
        },
        Case {
            name: "semisimple 1:1 resonance",
            h: sym(4, &[(0, 0, 1), (1, 1, 1), (2, 2, 1), (3, 3, 1)]),
            transform: t4(),
            defective: false,
        },
        Case {
            name: "Hamiltonian-Hopf block",
            h: sym(4, &[(2, 1, 1), (3, 0, -1), (0, 0, 1), (1, 1, 1)]),
            transform: t4(),
            defective: true,
        },
        Case {
            name: "double saddle",
            h: sym(4, &[(0, 2, 1), (1, 3, 1)]),
            transform: t4(),
            defective: false,
        },
        Case {
            name: "nilpotent block of size four",
            h: sym(4, &[(2, 2, 1), (0, 3, 1)]),
            transform: t4(),
            defective: true,
        },
        Case {
            name: "rotation plus two free particles",
            h: sym(6, &[(0, 0, 1), (3, 3, 1), (4, 4, 1), (5, 5, 1)]),
            transform: t6(),
            defective: true,
        },
        Case {
            name: "Hamiltonian-Hopf plus 2:1 oscillator",
            h: sym(6, &[(3, 1, 1), (4, 0, -1), (0, 0, 1), (1, 1, 1), (2, 2, 2), (5, 5, 2)]),
            transform: t6(),
            defective: true,
        },
        Case {
            name: "isotropic 1:1:1 oscillator",
            h: sym(6, &[(0, 0, 1), (1, 1, 1), (2, 2, 1), (3, 3, 1), (4, 4, 1), (5, 5, 1)]),
            transform: t6(),
            defective: false,
        },
        Case {
            name: "free particle, saddle and 3:1 oscillator",
            h: sym(6, &[(3, 3, 1), (1, 4, 1), (2, 2, 3), (5, 5, 3)]),
            transform: t6(),
            defective: true,
        },
    ]
}

/// Compares the float decomposition with the exact one; returns the relative
/// errors of the semisimple and nilpotent parts.
pub fn check_case(case: &Case) -> Result<(f64, f64), String> {
    let a = conjugate(&hamiltonian_matrix(&case.h), &case.transform);
    let n = a.n;
    let w = omega(n);

    let s = semisimple_part(&a);
    let nil = a.sub(&s);
    // The oracle output itself must be a Jordan–Chevalley pair in sp(V).
    let mut pow = QMat::identity(n);
    for _ in 0..n {
        pow = pow.mul(&nil);
    }
    if !w.mul(&s).add(&s.transpose().mul(&w)).is_zero()
        || !s.mul(&nil).sub(&nil.mul(&s)).is_zero()
        || !pow.is_zero()
        || nil.is_zero() == case.defective
    {
        return Err(format!("{}: exact oracle is inconsistent", case.name));
    }

    let af = a.to_f64();
    let space = SymplecticSpace::canonical(n);
    let jc = jordan_chevalley(&af, &space, JordanOptions::default()).map_err(|e| format!("{}: {e}", case.name))?;
    let scale = af.norm().max(1.0);
    let err_s = (&jc.semisimple - s.to_f64()).norm() / scale;
    let err_n = (&jc.nilpotent - nil.to_f64()).norm() / scale;
    if err_s < 1e-8 && err_n < 1e-8 {
        Ok((err_s, err_n))
    } else {
        Err(format!("{}: semisimple error {err_s:.3e}, nilpotent error {err_n:.3e}", case.name))
    }
}
