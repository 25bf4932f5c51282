//! Built-in equivariant Hamiltonian systems. Every model is written in
//! coordinates centred at its equilibrium and shifted so that `h(0) = 0`.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{EquivariantHamiltonianModel, Evaluate, Jetted};
use crate::equivariance::{planar_rotation_generator, so3_diagonal_generators, GroupDescriptor, GroupKind, LinearAction};
use crate::error::{Error, Result};
use crate::jet::Real;
use crate::symplectic::SymplecticSpace;

/// `coeff · Π sᵢ^{powers[i]}` in a model's invariant variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Term {
    pub fn new(coeff: f64, powers: &[u32]) -> Self {
        Self { coeff, powers: powers.to_vec() }
    }

    fn eval<T: Real>(&self, vars: &[T]) -> T {
        let mut acc = T::cst(self.coeff);
        for (v, &p) in vars.iter().zip(&self.powers) {
            acc = acc * v.powi(p);
        }
        acc
    }
}

fn sum_terms<T: Real>(terms: &[Term], vars: &[T]) -> T {
    terms.iter().fold(T::cst(0.0), |acc, t| acc + t.eval(vars))
}

/// Checks arity and the weighted order `Σ wᵢ pᵢ ≥ min_order` of every term.
fn check_terms(terms: &[Term], weights: &[u32], min_order: u32, names: &str) -> Result<()> {
    for t in terms {
        if t.powers.len() != weights.len() {
            return Err(Error::InvalidPerturbation(format!(
                "term {:?} needs {} exponents for ({names})",
                t.powers,
                weights.len()
            )));
        }
        if !t.coeff.is_finite() {
            return Err(Error::InvalidPerturbation(format!("term {:?} has a non-finite coefficient", t.powers)));
        }
        let order: u32 = t.powers.iter().zip(weights).map(|(p, w)| p * w).sum();
        if order < min_order {
            return Err(Error::InvalidPerturbation(format!(
                "term {:?} in ({names}) has order {order} < {min_order}",
                t.powers
            )));
        }
    }
    Ok(())
}

fn require_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameters(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn parse<P: for<'de> Deserialize<'de>>(params: &Value) -> Result<P> {
    let params = if params.is_null() { json!({}) } else { params.clone() };
    serde_json::from_value(params).map_err(|e| Error::InvalidParameters(e.to_string()))
}

fn circle_action(n: usize, space: &SymplecticSpace) -> Result<LinearAction> {
    LinearAction::new(GroupDescriptor::new(GroupKind::Circle), vec![planar_rotation_generator(n)], space)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    pub m: f64,
    pub l: f64,
    pub g: f64,
    /// Terms of `φ` in `(x²+y², p_x²+p_y², x p_x + y p_y)`.
    pub pert: Vec<Term>,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self { m: 1.0, l: 1.0, g: 1.0, pert: vec![Term::new(0.1, &[0, 0, 2])] }
    }
}

#[derive(Debug, Clone)]
struct Pendulum(PendulumParams);

impl Evaluate for Pendulum {
    fn dim(&self) -> usize {
        4
    }

    fn eval<T: Real>(&self, v: &[T]) -> T {
        let PendulumParams { m, l, g, ref pert } = self.0;
        let (x, y, px, py) = (v[0], v[1], v[2], v[3]);
        let s = x * x + y * y;
        let pp = px * px + py * py;
        let w = x * px + y * py;
        let root = (s * -1.0 + l * l).sqrt();
        pp * (0.5 / m) + w * w * (-0.5 / (m * l * l)) + root * (-m * g) + m * g * l + sum_terms(pert, &[s, pp, w])
    }

    fn in_domain(&self, v: &[f64]) -> bool {
        v[0] * v[0] + v[1] * v[1] < 0.98 * self.0.l * self.0.l
    }
}

/// Spherical pendulum near its lowest point with an `S¹`-invariant perturbation.
pub fn spherical_pendulum(params: &PendulumParams) -> Result<EquivariantHamiltonianModel> {
    let p = params;
    require_positive(&[("m", p.m), ("l", p.l), ("g", p.g)])?;
    check_terms(&p.pert, &[1, 1, 1], 2, "x²+y², p², x·p")?;
    let space = SymplecticSpace::canonical(4);
    let action = circle_action(2, &space)?;
    let params = serde_json::to_value(p).expect("parameters serialize");
    EquivariantHamiltonianModel::new(
        "spherical_pendulum",
        params,
        space,
        action,
        Arc::new(Jetted(Pendulum(p.clone()))),
        0.3 * p.l,
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpringParams {
    pub m: f64,
    pub l: f64,
    pub g: f64,
    pub k: f64,
    /// Terms of `σ` in `(x²+y², p_x²+p_y², z−z*, p_z)` with `z* = l + gm/k`.
    pub sigma: Vec<Term>,
}

impl Default for SpringParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            l: 1.0,
            g: 1.0,
            k: 1.0,
            sigma: vec![Term::new(0.1, &[2, 0, 0, 0]), Term::new(0.05, &[1, 0, 2, 0]), Term::new(0.02, &[0, 0, 4, 0])],
        }
    }
}

impl SpringParams {
    pub fn rest_height(&self) -> f64 {
        self.l + self.g * self.m / self.k
    }
}

#[derive(Debug, Clone)]
struct Spring {
    p: SpringParams,
    offset: f64,
}

impl Spring {
    fn raw<T: Real>(&self, v: &[T]) -> T {
        let SpringParams { m, l, g, k, ref sigma } = self.p;
        let zs = self.p.rest_height();
        let (x, y, w) = (v[0], v[1], v[2]);
        let (px, py, pz) = (v[3], v[4], v[5]);
        let z = w + zs;
        let rho = x * x + y * y;
        let pp = px * px + py * py;
        let stretch = z + (-l);
        (pp + pz * pz) * 0.5 + z * (-m * g) + (rho + stretch * stretch) * (0.5 * k) + sum_terms(sigma, &[rho, pp, w, pz])
    }
}

impl Evaluate for Spring {
    fn dim(&self) -> usize {
        6
    }

    fn eval<T: Real>(&self, v: &[T]) -> T {
        self.raw(v) + (-self.offset)
    }
}

/// Spring pendulum in space, in coordinates `(x, y, z − z*, p)` about its
/// hanging equilibrium, with rotations about the vertical.
pub fn spring_pendulum(params: &SpringParams) -> Result<EquivariantHamiltonianModel> {
    let p = params;
    require_positive(&[("m", p.m), ("l", p.l), ("g", p.g), ("k", p.k)])?;
    check_terms(&p.sigma, &[2, 2, 1, 1], 3, "x²+y², p_x²+p_y², z−z*, p_z")?;
    let mut spring = Spring { p: p.clone(), offset: 0.0 };
    spring.offset = spring.raw(&[0.0; 6]);
    let space = SymplecticSpace::canonical(6);
    let action = circle_action(3, &space)?;
    let params = serde_json::to_value(p).expect("parameters serialize");
    EquivariantHamiltonianModel::new("spring_pendulum", params, space, action, Arc::new(Jetted(spring)), 0.3)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsotropicParams {
    pub a: f64,
    pub b: f64,
    /// Terms of `f` in `(‖p‖², ‖q‖², q·p)`.
    pub f: Vec<Term>,
}

impl Default for IsotropicParams {
    fn default() -> Self {
        Self { a: 0.5, b: 0.5, f: vec![Term::new(0.05, &[0, 0, 2])] }
    }
}

#[derive(Debug, Clone)]
struct Isotropic(IsotropicParams);

impl Evaluate for Isotropic {
    fn dim(&self) -> usize {
        6
    }

    fn eval<T: Real>(&self, v: &[T]) -> T {
        let (q, p) = (&v[..3], &v[3..]);
        let dot = |a: &[T], b: &[T]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let (pp, qq, qp) = (dot(p, p), dot(q, q), dot(q, p));
        pp * self.0.a + qq * self.0.b + sum_terms(&self.0.f, &[pp, qq, qp])
    }
}

/// `a‖p‖² + b‖q‖² + f(‖p‖², ‖q‖², q·p)` with the diagonal `SO(3)` action.
pub fn so3_isotropic(params: &IsotropicParams) -> Result<EquivariantHamiltonianModel> {
    let p = params;
    require_positive(&[("a", p.a), ("b", p.b)])?;
    check_terms(&p.f, &[1, 1, 1], 2, "‖p‖², ‖q‖², q·p")?;
    let space = SymplecticSpace::canonical(6);
    let action = LinearAction::new(GroupDescriptor::new(GroupKind::So3), so3_diagonal_generators(), &space)?;
    let params = serde_json::to_value(p).expect("parameters serialize");
    EquivariantHamiltonianModel::new("so3_isotropic", params, space, action, Arc::new(Jetted(Isotropic(p.clone()))), 0.3)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicParams {
    pub frequencies: Vec<f64>,
    /// Coefficient of `(Σ qᵢ²)²`.
    pub coupling: f64,
}

impl Default for HarmonicParams {
    fn default() -> Self {
        Self { frequencies: vec![1.0, 2.0], coupling: 0.0 }
    }
}

#[derive(Debug, Clone)]
struct Harmonic(HarmonicParams);

impl Evaluate for Harmonic {
    fn dim(&self) -> usize {
        2 * self.0.frequencies.len()
    }

    fn eval<T: Real>(&self, v: &[T]) -> T {
        let n = self.0.frequencies.len();
        let mut h = T::cst(0.0);
        let mut qq = T::cst(0.0);
        for (i, &w) in self.0.frequencies.iter().enumerate() {
            h = h + (v[i] * v[i] + v[n + i] * v[n + i]) * (0.5 * w);
            qq = qq + v[i] * v[i];
        }
        h + qq * qq * self.0.coupling
    }
}

/// Uncoupled oscillators with an optional quartic coupling and no symmetry.
pub fn harmonic(params: &HarmonicParams) -> Result<EquivariantHamiltonianModel> {
    let p = params;
    if p.frequencies.is_empty() {
        return Err(Error::InvalidParameters("at least one frequency is required".into()));
    }
    for (i, &w) in p.frequencies.iter().enumerate() {
        require_positive(&[(&format!("frequencies[{i}]"), w)])?;
    }
    if !p.coupling.is_finite() {
        return Err(Error::InvalidParameters("coupling must be finite".into()));
    }
    let space = SymplecticSpace::canonical(2 * p.frequencies.len());
    let action = LinearAction::new(GroupDescriptor::new(GroupKind::Trivial), vec![], &space)?;
    let params = serde_json::to_value(p).expect("parameters serialize");
    EquivariantHamiltonianModel::new("harmonic", params, space, action, Arc::new(Jetted(Harmonic(p.clone()))), 0.5)
}

// ---------------------------------------------------------------------------

/// Registry entry for a built-in model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: Value,
    pub notes: Vec<&'static str>,
}

pub fn registry() -> Vec<ModelSpec> {
    vec![
        ModelSpec {
            name: "spherical_pendulum",
            description: "spherical pendulum near the lowest point, perturbed by an S1-invariant phi",
            defaults: serde_json::to_value(PendulumParams::default()).expect("serialize"),
            notes: vec![
                "coordinates (x, y, px, py); pert powers are exponents of (x²+y², px²+py², x px + y py)",
                "states are restricted to x²+y² < 0.98 l²",
            ],
        },
        ModelSpec {
            name: "spring_pendulum",
            description: "elastic pendulum in space with rotations about the vertical axis",
            defaults: serde_json::to_value(SpringParams::default()).expect("serialize"),
            notes: vec![
                "coordinates (x, y, z - z*, px, py, pz) with z* = l + g m / k",
                "sigma powers are exponents of (x²+y², px²+py², z - z*, pz), each term of order at least 3",
                "the kinetic term carries no mass, so every normal frequency equals sqrt(k)",
            ],
        },
        ModelSpec {
            name: "so3_isotropic",
            description: "isotropic oscillator on R3 x R3 with the diagonal SO(3) action",
            defaults: serde_json::to_value(IsotropicParams::default()).expect("serialize"),
            notes: vec!["f powers are exponents of (|p|², |q|², q·p)", "normal frequency 2 sqrt(ab), triple"],
        },
        ModelSpec {
            name: "harmonic",
            description: "uncoupled oscillators with an optional quartic coupling, no symmetry",
            defaults: serde_json::to_value(HarmonicParams::default()).expect("serialize"),
            notes: vec!["h = sum w_i (q_i² + p_i²)/2 + coupling (sum q_i²)²"],
        },
    ]
}

/// Builds a registered model from a JSON parameter object; missing fields take defaults.
pub fn build(name: &str, params: &Value) -> Result<EquivariantHamiltonianModel> {
    match name {
        "spherical_pendulum" => spherical_pendulum(&parse(params)?),
        "spring_pendulum" => spring_pendulum(&parse(params)?),
        "so3_isotropic" => so3_isotropic(&parse(params)?),
        "harmonic" => harmonic(&parse(params)?),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

/// Sampled `max |{h, J^ξᵢ}|` relative to `‖∇h‖ ‖∇J‖`.
pub fn poisson_commutation(model: &EquivariantHamiltonianModel, samples: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    let mut worst = 0.0_f64;
    let mut taken = 0;
    while taken < samples {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)) * (model.sample_radius / (n as f64).sqrt());
        if !model.in_domain(&v) {
            continue;
        }
        taken += 1;
        let xh = crate::dynamics::vector_field(model, &v);
        let grad = model.gradient(&v);
        for m in &model.momentum.matrices {
            let dj: DVector<f64> = (m + m.transpose()) * &v;
            let bracket = dj.dot(&xh);
            worst = worst.max(bracket.abs() / (grad.norm() * dj.norm()).max(1e-300));
        }
    }
    worst
}
