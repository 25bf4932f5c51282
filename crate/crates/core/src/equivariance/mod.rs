//! Linear symplectic group actions, their momentum maps, fixed-point spaces
//! and isotropy bookkeeping.

mod isotropy;
mod orbit;

pub use isotropy::{
    circle_action_from_semisimple, fixed_point_space, isotropy_table, simplicity_proxy,
    spatiotemporal_subgroups, CircleAction, IsotropyDatum, SimplicityReport, SpatiotemporalSubgroup,
};
pub use orbit::{Factor, ProductAction};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::SymplecticSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Trivial,
    Circle,
    Torus(usize),
    So3,
}

/// Dimension of the coadjoint isotropy `(N(K)/K)_λ` as a function of `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoadjointRule {
    /// Abelian quotient: every `λ` is fixed.
    Full,
    /// `SO(3)`: a circle for `λ ≠ 0`, everything at `λ = 0`.
    So3,
}

/// One conjugacy class of closed subgroups `K ⊂ G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupEntry {
    pub name: String,
    pub dim: usize,
    /// Indices of the `G` generators spanning `k`.
    pub generators: Vec<usize>,
    pub dim_normalizer: usize,
    /// `dim N(K)/K`.
    pub dim_quotient: usize,
    /// Generators spanning a complement of `k` in `n(K)`, i.e. the Lie algebra `l`.
    pub quotient_generators: Vec<usize>,
    pub rule: CoadjointRule,
    /// Whether `K` admits nontrivial continuous characters `K → S¹`.
    pub has_characters: bool,
}

impl SubgroupEntry {
    pub fn dim_l_lambda(&self, lambda: &[f64]) -> usize {
        match self.rule {
            CoadjointRule::Full => self.dim_quotient,
            CoadjointRule::So3 => {
                if lambda.iter().any(|x| x.abs() > 0.0) {
                    1
                } else {
                    self.dim_quotient
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDescriptor {
    pub kind: GroupKind,
    pub dim: usize,
    pub subgroups: Vec<SubgroupEntry>,
}

impl GroupDescriptor {
    pub fn new(kind: GroupKind) -> Self {
        let (dim, subgroups) = match kind {
            GroupKind::Trivial => (0, vec![entry("e", vec![], 0, vec![], CoadjointRule::Full, false)]),
            GroupKind::Circle => (
                1,
                vec![
                    entry("e", vec![], 1, vec![0], CoadjointRule::Full, false),
                    entry("S1", vec![0], 1, vec![], CoadjointRule::Full, true),
                ],
            ),
            GroupKind::Torus(k) => {
                let all: Vec<usize> = (0..k).collect();
                let mut subs = vec![entry("e", vec![], k, all.clone(), CoadjointRule::Full, false)];
                if k > 1 {
                    for i in 0..k {
                        let rest: Vec<usize> = (0..k).filter(|&j| j != i).collect();
                        subs.push(entry(&format!("T{}", i + 1), vec![i], k, rest, CoadjointRule::Full, true));
                    }
                }
                subs.push(entry(&format!("T^{k}"), all, k, vec![], CoadjointRule::Full, true));
                (k, subs)
            }
            GroupKind::So3 => (
                3,
                vec![
                    entry("e", vec![], 3, vec![0, 1, 2], CoadjointRule::So3, false),
                    // N(SO(2)) = O(2), so N(K)/K is finite.
                    entry("SO2", vec![2], 1, vec![], CoadjointRule::Full, true),
                    entry("SO3", vec![0, 1, 2], 3, vec![], CoadjointRule::Full, false),
                ],
            ),
        };
        Self { kind, dim, subgroups }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self.kind, GroupKind::So3)
    }

    pub fn subgroup(&self, name: &str) -> Result<&SubgroupEntry> {
        self.subgroups
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSubgroup(name.to_string()))
    }

    pub fn name(&self) -> String {
        match self.kind {
            GroupKind::Trivial => "trivial".into(),
            GroupKind::Circle => "S1".into(),
            GroupKind::Torus(k) => format!("T^{k}"),
            GroupKind::So3 => "SO3".into(),
        }
    }
}

fn entry(
    name: &str,
    generators: Vec<usize>,
    dim_normalizer: usize,
    quotient_generators: Vec<usize>,
    rule: CoadjointRule,
    has_characters: bool,
) -> SubgroupEntry {
    SubgroupEntry {
        name: name.to_string(),
        dim: generators.len(),
        dim_quotient: quotient_generators.len(),
        generators,
        dim_normalizer,
        quotient_generators,
        rule,
        has_characters,
    }
}

/// Infinitesimal generators of a linear symplectic representation.
#[derive(Debug, Clone)]
pub struct LinearAction {
    pub group: GroupDescriptor,
    pub generators: Vec<DMatrix<f64>>,
    dim: usize,
}

impl LinearAction {
    pub fn new(group: GroupDescriptor, generators: Vec<DMatrix<f64>>, space: &SymplecticSpace) -> Result<Self> {
        if generators.len() != group.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} generators for a group of dimension {}",
                generators.len(),
                group.dim
            )));
        }
        for (index, g) in generators.iter().enumerate() {
            if g.shape() != (space.dim(), space.dim()) {
                return Err(Error::DimensionMismatch(format!("generator {index} has shape {:?}", g.shape())));
            }
            let residual = space.symplectic_defect(g);
            if residual > 1e-10 {
                return Err(Error::NotCanonicalAction { index, residual });
            }
        }
        let residual = bracket_residual(&group, &generators);
        if residual > 1e-10 {
            return Err(Error::BracketViolation { group: group.name(), residual });
        }
        Ok(Self { group, generators, dim: space.dim() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Generator of the algebra element with coefficients `xi`.
    pub fn algebra_element(&self, xi: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for (g, &c) in self.generators.iter().zip(xi) {
            m += g * c;
        }
        m
    }

    /// `exp(Σ θᵢ ξᵢ)`.
    pub fn element(&self, theta: &[f64]) -> DMatrix<f64> {
        self.algebra_element(theta).exp()
    }

    /// Columns `ξᵢ · v`.
    pub fn tangent(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(v.len(), self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            t.set_column(i, &(g * v));
        }
        t
    }

    /// Restriction to an invariant subspace, in its basis.
    pub fn restrict_generators(&self, basis: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.generators.iter().map(|g| basis.transpose() * g * basis).collect()
    }

    /// Acting group as a product of compact factors, for orbit distances.
    pub fn as_product(&self) -> ProductAction {
        match self.group.kind {
            GroupKind::So3 => ProductAction::new(vec![Factor::So3(self.generators.clone())]),
            _ => ProductAction::new(self.generators.iter().cloned().map(Factor::Circle).collect()),
        }
    }
}

fn bracket_residual(group: &GroupDescriptor, gens: &[DMatrix<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    match group.kind {
        GroupKind::So3 => {
            for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let r = linalg::commutator(&gens[i], &gens[j]) - &gens[k];
                worst = worst.max(linalg::max_abs(&r));
            }
        }
        _ => {
            for i in 0..gens.len() {
                for j in i + 1..gens.len() {
                    worst = worst.max(linalg::max_abs(&linalg::commutator(&gens[i], &gens[j])));
                }
            }
        }
    }
    worst
}

/// `J^{ξᵢ}(v) = vᵀ Mᵢ v = ½ ω(ξᵢ v, v)`.
#[derive(Debug, Clone)]
pub struct MomentumMapQuadratic {
    pub matrices: Vec<DMatrix<f64>>,
}

impl MomentumMapQuadratic {
    pub fn components(&self) -> usize {
        self.matrices.len()
    }

    pub fn value(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.matrices.len(), self.matrices.iter().map(|m| v.dot(&(m * v))))
    }

    /// Rows are the gradients `2 Mᵢ v`.
    pub fn jacobian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.matrices.len(), v.len());
        for (i, m) in self.matrices.iter().enumerate() {
            j.set_row(i, &(m * v * 2.0).transpose());
        }
        j
    }

    pub fn restrict(&self, basis: &DMatrix<f64>) -> Self {
        Self { matrices: self.matrices.iter().map(|m| basis.transpose() * m * basis).collect() }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { matrices: indices.iter().map(|&i| self.matrices[i].clone()).collect() }
    }

    /// Momentum component along the algebra element with coefficients `xi`.
    pub fn along(&self, xi: &[f64]) -> DMatrix<f64> {
        let n = self.matrices.first().map_or(0, |m| m.nrows());
        let mut out = DMatrix::zeros(n, n);
        for (m, &c) in self.matrices.iter().zip(xi) {
            out += m * c;
        }
        out
    }
}

/// Momentum map of a linear canonical action.
pub fn momentum_map(action: &LinearAction, space: &SymplecticSpace) -> Result<MomentumMapQuadratic> {
    let mut matrices = Vec::with_capacity(action.generators.len());
    for (index, g) in action.generators.iter().enumerate() {
        let residual = space.symplectic_defect(g);
        if residual > 1e-10 {
            return Err(Error::NotCanonicalAction { index, residual });
        }
        matrices.push(linalg::symmetric_part(&(g.transpose() * space.omega())) * 0.5);
    }
    Ok(MomentumMapQuadratic { matrices })
}

/// Generators of `SO(3)` acting diagonally on `(q, p) ∈ R³ × R³`.
pub fn so3_diagonal_generators() -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for axis in 0..3 {
        let mut l = DMatrix::<f64>::zeros(3, 3);
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        l[(b, a)] = 1.0;
        l[(a, b)] = -1.0;
        let mut g = DMatrix::zeros(6, 6);
        g.view_mut((0, 0), (3, 3)).copy_from(&l);
        g.view_mut((3, 3), (3, 3)).copy_from(&l);
        out.push(g);
    }
    out
}

/// Rotation of the `(q1, q2)` and `(p1, p2)` planes in `2n` canonical coordinates.
pub fn planar_rotation_generator(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    g[(0, 1)] = -1.0;
    g[(1, 0)] = 1.0;
    g[(n, n + 1)] = -1.0;
    g[(n + 1, n)] = 1.0;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pendulum_action() -> (LinearAction, SymplecticSpace) {
        let space = SymplecticSpace::canonical(4);
        let a = LinearAction::new(GroupDescriptor::new(GroupKind::Circle), vec![planar_rotation_generator(2)], &space)
            .unwrap();
        (a, space)
    }

    #[test]
    fn planar_momentum_is_angular_momentum() {
        let (a, space) = pendulum_action();
        let j = momentum_map(&a, &space).unwrap();
        // (x, y, px, py)
        let v = DVector::from_vec(vec![0.3, -0.7, 1.1, 0.4]);
        let expect = 0.3 * 0.4 - (-0.7) * 1.1;
        assert!((j.value(&v)[0] - expect).abs() < 1e-14);
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]);
        assert!((j.value(&v)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn so3_momentum_is_cross_product() {
        let space = SymplecticSpace::canonical(6);
        let a = LinearAction::new(GroupDescriptor::new(GroupKind::So3), so3_diagonal_generators(), &space).unwrap();
        let j = momentum_map(&a, &space).unwrap();
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let jv = j.value(&v);
        assert!((jv - DVector::from_vec(vec![0.0, 0.0, 1.0])).norm() < 1e-15);
        let (q, p) = ([0.2, -0.5, 0.9], [1.3, 0.4, -0.6]);
        let v = DVector::from_vec(vec![q[0], q[1], q[2], p[0], p[1], p[2]]);
        let cross = [q[1] * p[2] - q[2] * p[1], q[2] * p[0] - q[0] * p[2], q[0] * p[1] - q[1] * p[0]];
        let jv = j.value(&v);
        for i in 0..3 {
            assert!((jv[i] - cross[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn momentum_generates_action_and_is_equivariant() {
        let space = SymplecticSpace::canonical(6);
        let a = LinearAction::new(GroupDescriptor::new(GroupKind::So3), so3_diagonal_generators(), &space).unwrap();
        let j = momentum_map(&a, &space).unwrap();
        let v = DVector::from_vec(vec![0.2, -0.5, 0.9, 1.3, 0.4, -0.6]);
        for (i, g) in a.generators.iter().enumerate() {
            // X_{J^ξ} = ξ v
            let grad = &j.matrices[i] * &v * 2.0;
            let x = space.hamiltonian_vector(&grad);
            assert!((x - g * &v).norm() < 1e-14);
        }
        // {J^ξ, J^η} = dJ^ξ(X_{J^η}) = J^{[ξ,η]}
        for (i, jx, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let xe = &a.generators[jx] * &v;
            let bracket = (&j.matrices[i] * &v * 2.0).dot(&xe);
            assert!((bracket - j.value(&v)[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_symplectic_generator() {
        let space = SymplecticSpace::canonical(2);
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let err = LinearAction::new(GroupDescriptor::new(GroupKind::Circle), vec![g], &space).unwrap_err();
        assert!(matches!(err, Error::NotCanonicalAction { index: 0, .. }));
    }

    #[test]
    fn subgroup_tables_are_consistent() {
        for kind in [GroupKind::Trivial, GroupKind::Circle, GroupKind::Torus(2), GroupKind::Torus(3), GroupKind::So3] {
            let g = GroupDescriptor::new(kind);
            for s in &g.subgroups {
                assert!(s.dim <= s.dim_normalizer && s.dim_normalizer <= g.dim, "{:?} {}", kind, s.name);
                assert!(s.dim_quotient <= s.dim_normalizer - s.dim);
            }
        }
        let so3 = GroupDescriptor::new(GroupKind::So3);
        let e = so3.subgroup("e").unwrap();
        assert_eq!(e.dim_l_lambda(&[0.0, 0.0, 0.1]), 1);
        assert_eq!(e.dim_l_lambda(&[0.0, 0.0, 0.0]), 3);
        assert!(matches!(so3.subgroup("A5"), Err(Error::UnknownSubgroup(_))));
    }
}
