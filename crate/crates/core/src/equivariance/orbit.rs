use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::linalg;

/// A compact factor of the acting group. Circle generators have period 2π.
#[derive(Debug, Clone)]
pub enum Factor {
    Circle(DMatrix<f64>),
    So3(Vec<DMatrix<f64>>),
}

impl Factor {
    fn nparams(&self) -> usize {
        match self {
            Factor::Circle(_) => 1,
            Factor::So3(_) => 3,
        }
    }

    fn element(&self, p: &[f64]) -> DMatrix<f64> {
        match self {
            Factor::Circle(g) => (g * p[0]).exp(),
            Factor::So3(gs) => (&gs[0] * p[0] + &gs[1] * p[1] + &gs[2] * p[2]).exp(),
        }
    }

    fn samples(&self, per_circle: usize) -> Vec<Vec<f64>> {
        match self {
            Factor::Circle(_) => (0..per_circle)
                .map(|k| vec![2.0 * PI * k as f64 / per_circle as f64])
                .collect(),
            Factor::So3(_) => {
                // rotation vectors: Fibonacci axes times a few angles
                let mut out = vec![vec![0.0, 0.0, 0.0]];
                let axes = 24;
                let golden = PI * (3.0 - 5f64.sqrt());
                for i in 0..axes {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / axes as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    let axis = [r * phi.cos(), r * phi.sin(), z];
                    for k in 1..=6 {
                        let ang = PI * k as f64 / 6.0;
                        out.push(axis.iter().map(|a| a * ang).collect());
                    }
                }
                out
            }
        }
    }

    fn restrict(&self, basis: &DMatrix<f64>) -> Factor {
        let r = |g: &DMatrix<f64>| basis.transpose() * g * basis;
        match self {
            Factor::Circle(g) => Factor::Circle(r(g)),
            Factor::So3(gs) => Factor::So3(gs.iter().map(r).collect()),
        }
    }
}

/// Direct product of commuting compact factors acting linearly.
#[derive(Debug, Clone)]
pub struct ProductAction {
    pub factors: Vec<Factor>,
}

impl ProductAction {
    pub fn new(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    pub fn trivial() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn nparams(&self) -> usize {
        self.factors.iter().map(Factor::nparams).sum()
    }

    pub fn generators(&self) -> Vec<DMatrix<f64>> {
        let mut out = Vec::new();
        for f in &self.factors {
            match f {
                Factor::Circle(g) => out.push(g.clone()),
                Factor::So3(gs) => out.extend(gs.iter().cloned()),
            }
        }
        out
    }

    pub fn element(&self, params: &[f64], dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::identity(dim, dim);
        let mut off = 0;
        for f in &self.factors {
            let k = f.nparams();
            m = f.element(&params[off..off + k]) * m;
            off += k;
        }
        m
    }

    pub fn act(&self, params: &[f64], v: &DVector<f64>) -> DVector<f64> {
        self.element(params, v.len()) * v
    }

    /// Orbit tangent at `v`: columns `ξ v` for every generator.
    pub fn tangent(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let gens = self.generators();
        let mut t = DMatrix::zeros(v.len(), gens.len());
        for (i, g) in gens.iter().enumerate() {
            t.set_column(i, &(g * v));
        }
        t
    }

    pub fn restrict(&self, basis: &DMatrix<f64>) -> Self {
        Self { factors: self.factors.iter().map(|f| f.restrict(basis)).collect() }
    }

    pub fn with(mut self, f: Factor) -> Self {
        self.factors.push(f);
        self
    }

    fn per_circle(&self) -> usize {
        match self.factors.iter().filter(|f| matches!(f, Factor::Circle(_))).count() {
            0..=2 => 64,
            3 => 24,
            _ => 12,
        }
    }

    /// `min_g ‖g·a − b‖` and a minimizing parameter vector.
    pub fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> (f64, Vec<f64>) {
        if self.factors.is_empty() {
            return ((a - b).norm(), Vec::new());
        }
        let n = a.len();
        let best = self.grid_candidates(a, b);
        let mut result = best[0].clone();
        for (_, seed) in best {
            let (d, p) = self.refine(a, b, seed, n);
            if d < result.0 {
                result = (d, p);
            }
        }
        result
    }

    /// Best grid point only, without local refinement.
    pub fn coarse_distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> (f64, Vec<f64>) {
        if self.factors.is_empty() {
            return ((a - b).norm(), Vec::new());
        }
        self.grid_candidates(a, b).swap_remove(0)
    }

    fn grid_candidates(&self, a: &DVector<f64>, b: &DVector<f64>) -> Vec<(f64, Vec<f64>)> {
        // coarse search, keeping a few best seeds for refinement
        let per_circle = self.per_circle();
        let factor_mats: Vec<Vec<(Vec<f64>, DMatrix<f64>)>> = self
            .factors
            .iter()
            .map(|f| {
                f.samples(per_circle)
                    .into_iter()
                    .map(|p| {
                        let m = f.element(&p);
                        (p, m)
                    })
                    .collect()
            })
            .collect();
        let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut stack: Vec<(usize, Vec<f64>, DVector<f64>)> = vec![(0, Vec::new(), a.clone())];
        while let Some((depth, params, v)) = stack.pop() {
            if depth == factor_mats.len() {
                let d = (&v - b).norm();
                best.push((d, params));
                if best.len() > 64 {
                    best.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                    best.truncate(4);
                }
                continue;
            }
            for (p, m) in &factor_mats[depth] {
                let mut np = params.clone();
                np.extend(p.iter().cloned());
                stack.push((depth + 1, np, m * &v));
            }
        }
        best.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        best.truncate(4);
        best
    }

    /// Local Levenberg–Marquardt polish of a parameter guess.
    pub fn refine(&self, a: &DVector<f64>, b: &DVector<f64>, mut p: Vec<f64>, n: usize) -> (f64, Vec<f64>) {
        let k = p.len();
        let res = |p: &[f64]| self.element(p, n) * a - b;
        let mut r = res(&p);
        let mut mu = 1e-6;
        for _ in 0..30 {
            let mut jac = DMatrix::zeros(n, k);
            let h = 1e-6;
            for j in 0..k {
                let mut pp = p.clone();
                pp[j] += h;
                let mut pm = p.clone();
                pm[j] -= h;
                jac.set_column(j, &((res(&pp) - res(&pm)) / (2.0 * h)));
            }
            let jtj = jac.transpose() * &jac + DMatrix::identity(k, k) * mu;
            let step = linalg::lstsq(&jtj, &(jac.transpose() * &r), 1e-14);
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x - s).collect();
            let rt = res(&trial);
            if rt.norm() < r.norm() {
                let gain = r.norm() - rt.norm();
                p = trial;
                r = rt;
                mu = (mu * 0.3).max(1e-12);
                if gain < 1e-15 * (1.0 + b.norm()) {
                    break;
                }
            } else {
                mu *= 10.0;
                if mu > 1e6 {
                    break;
                }
            }
        }
        (r.norm(), p)
    }
}
