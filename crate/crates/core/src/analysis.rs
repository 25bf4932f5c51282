//! The end-to-end pipeline: linear analysis at the equilibrium, orbit-count
//! estimates per isotropy class and momentum value, and the certified search.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{symplectic_normal_space, EquivariantHamiltonianModel, ModelChecks};
use crate::equivariance::{
    circle_action_from_semisimple, isotropy_table, simplicity_proxy, spatiotemporal_subgroups, IsotropyDatum,
    SimplicityReport, SpatiotemporalSubgroup,
};
use crate::error::{Error, Result};
use crate::estimates::{
    ls_estimate_equilibrium, ls_estimate_relative_equilibrium, ls_estimate_spatiotemporal, RpoEstimate,
};
use crate::models;
use crate::search::{
    branch_continuation, constrained_critical_orbits, distinct_orbits, point_at_energy, radiality_analysis,
    shoot_rpo, BranchOptions, CriticalOrbit, CriticalSearchOptions, RadialityOptions, RestrictedProblem,
    RpoBranch, RpoCertificate, ShootOptions, TaylorAnalysis,
};
use crate::symplectic::{
    jordan_chevalley, krein_check, lowest_frequency, resonance_space, JordanDiagnostics, JordanOptions, KreinReport,
    QuadraticForm, ResonanceOptions, ResonanceSpace, SymplecticSpace,
};

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Largest relative deviation of a certified period from `T_ν₀`.
pub const PERIOD_WINDOW: f64 = 0.25;

/// First momentum coordinate used when no grid is configured.
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// `"auto"` or an explicit base frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Nu0 {
    Value(f64),
    Named(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl Default for Nu0 {
    fn default() -> Self {
        Nu0::Named(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Shooting residual relative to the state scale.
    pub residual: f64,
    /// Spread below which a Taylor order counts as radial.
    pub radial: f64,
    /// Distance of `λ/(iν₀)` from an integer.
    pub integer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { residual: 1e-8, radial: 1e-8, integer: 1e-6 }
    }
}

/// A relative equilibrium `m` with velocity `ξ` to analyze instead of the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeEquilibriumInput {
    pub state: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub model: String,
    pub params: Value,
    pub nu0: Nu0,
    /// Isotropy classes to analyze; all when absent.
    pub isotropy: Option<Vec<String>>,
    pub energy: f64,
    /// Normalized momentum values `λ`; the certified orbits carry momentum `≈ ε λ`.
    /// When absent, each isotropy class uses `λ = (DEFAULT_MOMENTUM, 0, …, 0)`.
    pub momentum_grid: Option<Vec<Vec<f64>>>,
    /// Range `|w| ≤ window` of temporal weights for spatiotemporal subgroups.
    pub weight_window: i64,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub max_order: usize,
    /// Run the critical-orbit search and shooting, not only the estimates.
    pub search: bool,
    pub relative_equilibrium: Option<RelativeEquilibriumInput>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            model: "spherical_pendulum".into(),
            params: Value::Null,
            nu0: Nu0::default(),
            isotropy: None,
            energy: 1e-3,
            momentum_grid: None,
            weight_window: 1,
            tolerances: Tolerances::default(),
            seed: 11,
            max_order: 8,
            search: true,
            relative_equilibrium: None,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.energy > 0.0) || !self.energy.is_finite() {
            return bad(format!("energy must be positive, got {}", self.energy));
        }
        let grid = self.momentum_grid.as_deref().unwrap_or_default();
        if self.momentum_grid.is_some() && grid.is_empty() {
            return bad("momentum_grid must not be empty".into());
        }
        if grid.iter().flatten().any(|x| !x.is_finite()) {
            return bad("momentum_grid entries must be finite".into());
        }
        let t = &self.tolerances;
        for (name, v) in [("residual", t.residual), ("radial", t.radial), ("integer", t.integer)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if let Nu0::Value(v) = self.nu0 {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("nu0 must be positive, got {v}"));
            }
        }
        if self.weight_window < 0 {
            return bad("weight_window must be non-negative".into());
        }
        if !(4..=crate::jet::MAX_ORDER).contains(&self.max_order) {
            return bad(format!("max_order must lie in 4..={}", crate::jet::MAX_ORDER));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ModelEcho {
    pub name: String,
    pub params: Value,
    pub dim: usize,
    pub group: String,
    pub checks: ModelChecks,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub gradient_norm: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenRow {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearReport {
    pub eigenvalues: Vec<EigenRow>,
    pub jordan: JordanDiagnostics,
    pub krein: KreinReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceReport {
    pub nu0: f64,
    pub auto: bool,
    pub period: f64,
    pub dim: usize,
    /// `(integer multiple, real dimension)` of each resonant block.
    pub weights: Vec<(i64, usize)>,
    pub period_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    /// `h|U^K` is not radial through the probed order.
    pub h1: bool,
    /// `k ≥ 4` and every critical orbit found is Morse; `None` before the search.
    pub h2: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorRow {
    pub isotropy: String,
    /// `non_radial`, `radial_to_max_order` or `failed`.
    pub status: String,
    pub first_nonradial_order: Option<usize>,
    pub analysis: Option<TaylorAnalysis>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSummary {
    pub orbit: usize,
    pub samples: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub max_q_residual: f64,
    pub max_j_residual: f64,
    /// `max |c − 1| / r²` over the samples.
    pub max_c_ratio: f64,
    /// `max ‖Λ‖ / r²` over the samples.
    pub max_multiplier_ratio: f64,
    pub c_coefficient: f64,
    pub c_fit_residual: f64,
    pub multiplier_coefficient: f64,
    pub fold_at: Option<f64>,
    pub degenerate: bool,
}

impl BranchSummary {
    fn new(orbit: usize, b: &RpoBranch) -> Self {
        let (q, j) = b.max_constraint_residual();
        let ratio = |f: &dyn Fn(&crate::search::BranchSample) -> f64| {
            b.samples.iter().map(|s| f(s) / (s.r * s.r)).fold(0.0, f64::max)
        };
        Self {
            orbit,
            samples: b.samples.len(),
            r_min: b.samples.first().map_or(0.0, |s| s.r),
            r_max: b.samples.last().map_or(0.0, |s| s.r),
            max_q_residual: q,
            max_j_residual: j,
            max_c_ratio: ratio(&|s| (s.c - 1.0).abs()),
            max_multiplier_ratio: ratio(&|s| s.multipliers.iter().map(|x| x * x).sum::<f64>().sqrt()),
            c_coefficient: b.c_coefficient,
            c_fit_residual: b.c_fit_residual,
            multiplier_coefficient: b.multiplier_coefficient,
            fold_at: b.fold_at,
            degenerate: b.degenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistinctOrbit {
    pub certificate: RpoCertificate,
    pub multiplicity: usize,
}

/// Everything computed for one `(K, λ)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub isotropy: String,
    pub lambda: Vec<f64>,
    pub estimate: RpoEstimate,
    pub searched: bool,
    pub hypotheses: Hypotheses,
    pub critical_orbits: Vec<CriticalOrbit>,
    pub branches: Vec<BranchSummary>,
    pub distinct: Vec<DistinctOrbit>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpatiotemporalRow {
    pub subgroup: SpatiotemporalSubgroup,
    pub chi: Vec<f64>,
    pub estimate: RpoEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub isotropy: String,
    pub lambda: Vec<f64>,
    pub bound: u64,
    pub found: usize,
    pub met: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelativeEquilibriumReport {
    pub re_residual: f64,
    pub normal_space_dim: usize,
    /// `(dim g_m, dim m, dim q)`.
    pub algebra_split: (usize, usize, usize),
    pub averaging_error: f64,
    pub nu0: Option<f64>,
    pub resonance_dim: Option<usize>,
    pub estimate: Option<RpoEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    /// Seconds since the Unix epoch; the only field that varies between identical runs.
    pub generated_at: u64,
    pub config: AnalysisConfig,
    pub model: ModelEcho,
    pub equilibrium: EquilibriumReport,
    pub linearization: LinearReport,
    pub resonance: ResonanceReport,
    pub simplicity: SimplicityReport,
    pub isotropy: Vec<IsotropyDatum>,
    pub spatiotemporal: Vec<SpatiotemporalRow>,
    pub taylor: Vec<TaylorRow>,
    pub cells: Vec<CellReport>,
    pub bound_checks: Vec<BoundCheck>,
    pub relative_equilibrium: Option<RelativeEquilibriumReport>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    /// JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn certificates(&self) -> impl Iterator<Item = &RpoCertificate> {
        self.cells.iter().flat_map(|c| c.distinct.iter().map(|d| &d.certificate))
    }

    /// Whether some searched cell found fewer orbits than its estimate.
    pub fn bound_violated(&self) -> bool {
        self.bound_checks.iter().any(|b| !b.met)
    }

    pub fn estimates(&self) -> Vec<&RpoEstimate> {
        self.cells
            .iter()
            .map(|c| &c.estimate)
            .chain(self.spatiotemporal.iter().map(|s| &s.estimate))
            .chain(self.relative_equilibrium.iter().filter_map(|r| r.estimate.as_ref()))
            .collect()
    }
}

// ---------------------------------------------------------------------------

struct Linear {
    map: crate::symplectic::LinearHamiltonianMap,
    report: LinearReport,
}

fn linear_analysis(a: &DMatrix<f64>, hessian: &DMatrix<f64>, space: &SymplecticSpace) -> Result<Linear> {
    let map = jordan_chevalley(a, space, JordanOptions::default())?;
    let krein = krein_check(&QuadraticForm::from_hessian(hessian), &map)?;
    let mut eigenvalues: Vec<EigenRow> =
        map.eigenvalues().into_iter().map(|(z, m)| EigenRow { re: z.re, im: z.im, multiplicity: m }).collect();
    eigenvalues.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap().then(x.re.partial_cmp(&y.re).unwrap()));
    let report = LinearReport { eigenvalues, jordan: map.diagnostics(), krein };
    Ok(Linear { map, report })
}

fn resonance(linear: &Linear, nu0: Nu0, tol: f64) -> Result<(ResonanceSpace, ResonanceReport)> {
    let (nu0, auto) = match nu0 {
        Nu0::Value(v) => (v, false),
        Nu0::Named(AutoTag::Auto) => (lowest_frequency(&linear.map).ok_or(Error::FrequencyNotInSpectrum { nu0: 0.0 })?, true),
    };
    let res = resonance_space(&linear.map, nu0, ResonanceOptions { integer_tol: tol })?;
    let report = ResonanceReport {
        nu0: res.nu0,
        auto,
        period: res.period,
        dim: res.dim(),
        weights: res.weights.clone(),
        period_defect: res.period_defect(),
    };
    Ok((res, report))
}

/// Search one `(K, λ)` cell: critical orbits, branches, shooting, deduplication.
fn search_cell(
    model: &EquivariantHamiltonianModel,
    analysis: &TaylorAnalysis,
    cell: &mut CellReport,
    config: &AnalysisConfig,
) {
    let problem = &analysis.problem;
    let lambda = cell.lambda.clone();
    let opts = CriticalSearchOptions { seed: config.seed, ..Default::default() };
    let orbits = match constrained_critical_orbits(analysis, &lambda, &opts) {
        Ok(o) => o,
        Err(e) => {
            cell.failures.push(format!("critical orbits: {e}"));
            cell.hypotheses.h2 = Some(false);
            return;
        }
    };
    cell.hypotheses.h2 = Some(analysis.first_nonradial_order >= 4 && orbits.iter().all(|o| o.morse));
    cell.critical_orbits = orbits.clone();
    let r_max = 1.05 * config.energy.sqrt();
    let gdim = model.action.generators.len();
    let mut certs = Vec::new();
    for (i, orbit) in orbits.iter().enumerate() {
        let branch = match branch_continuation(model, analysis, orbit, &BranchOptions { r_max, ..Default::default() }) {
            Ok(b) => b,
            Err(e) => {
                cell.failures.push(format!("orbit {i}: branch: {e}"));
                continue;
            }
        };
        cell.branches.push(BranchSummary::new(i, &branch));
        match certify(model, problem, &branch, &lambda, gdim, config) {
            Ok(mut c) => {
                c.isotropy = problem.isotropy.clone();
                c.lambda = lambda.clone();
                c.provenance = format!("branch {i} of {} at lambda {:?}", problem.isotropy, lambda);
                certs.push(c);
            }
            Err(e) => cell.failures.push(format!("orbit {i}: {e}")),
        }
    }
    match distinct_orbits(model, &certs) {
        Ok(d) => {
            cell.distinct =
                d.into_iter().map(|(certificate, multiplicity)| DistinctOrbit { certificate, multiplicity }).collect()
        }
        Err(e) => cell.failures.push(format!("deduplication: {e}")),
    }
}

fn certify(
    model: &EquivariantHamiltonianModel,
    problem: &RestrictedProblem,
    branch: &RpoBranch,
    lambda: &[f64],
    gdim: usize,
    config: &AnalysisConfig,
) -> Result<RpoCertificate> {
    let sample = point_at_energy(model, problem, branch, config.energy, 40)?;
    let m0 = problem.embed(&DVector::from_column_slice(&sample.point));
    let tau0 = problem.period / sample.c;
    let xi0 = problem.drift_velocity(&sample.multipliers, gdim);
    let basis = problem.drift_basis(lambda, gdim);
    let opts = ShootOptions { tol: config.tolerances.residual, ..Default::default() };
    let cert = shoot_rpo(model, &m0, tau0, &xi0, &basis, &opts)?;
    if cert.residual > config.tolerances.residual * cert.scale {
        return Err(Error::NoConvergence(format!("residual {:.3e} above tolerance", cert.residual)));
    }
    let drift = (cert.tau - problem.period).abs() / problem.period;
    if drift > PERIOD_WINDOW {
        return Err(Error::NoConvergence(format!("relative period {:.6} is {:.0}% away from T", cert.tau, drift * 100.0)));
    }
    Ok(cert)
}

fn relative_equilibrium_report(
    model: &EquivariantHamiltonianModel,
    input: &RelativeEquilibriumInput,
    tol: f64,
    warnings: &mut Vec<String>,
) -> Result<RelativeEquilibriumReport> {
    let m = DVector::from_column_slice(&input.state);
    let data = symplectic_normal_space(model, &m, &input.xi)?;
    let mut report = RelativeEquilibriumReport {
        re_residual: data.re_residual,
        normal_space_dim: data.dim,
        algebra_split: data.dims(),
        averaging_error: data.averaging_error,
        nu0: None,
        resonance_dim: None,
        estimate: None,
    };
    if data.dim == 0 {
        warnings.push("relative equilibrium has a trivial symplectic normal space".into());
        return Ok(report);
    }
    // Linearization of the reduced Hamiltonian h − J^ξ on V_m.
    let mut hess = model.hessian(&m);
    for (mat, x) in model.momentum.matrices.iter().zip(&input.xi) {
        hess -= mat * (2.0 * x);
    }
    let hn = data.basis.transpose() * hess * &data.basis;
    let space = SymplecticSpace::new(data.omega.clone())?;
    let a = space.hamiltonian_matrix(&hn);
    let linear = linear_analysis(&a, &hn, &space)?;
    let (res, _) = resonance(&linear, Nu0::default(), tol)?;
    report.nu0 = Some(res.nu0);
    report.resonance_dim = Some(res.dim());
    report.estimate = Some(ls_estimate_relative_equilibrium(res.dim(), data.g_m.ncols(), 0)?.with_labels("e", &[]));
    Ok(report)
}

/// Runs the pipeline described by `config`.
pub fn analyze(config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let model = models::build(&config.model, &config.params)?;
    let mut warnings = Vec::new();
    let n = model.dim();
    let zero = DVector::zeros(n);

    let checks = model.checks(config.seed);
    if checks.invariance_residual > 1e-8 {
        warnings.push(format!("Hamiltonian invariance residual {:.3e}", checks.invariance_residual));
    }
    let gradient_norm = model.gradient(&zero).norm();
    if gradient_norm > 1e-10 {
        return Err(Error::NotRelativeEquilibrium { residual: gradient_norm });
    }
    let equilibrium = EquilibriumReport { gradient_norm, energy: model.value(&zero) };

    let hessian = model.hessian(&zero);
    let linear = linear_analysis(&model.linearization(), &hessian, &model.space)?;
    if !linear.report.krein.definite {
        warnings.push("quadratic part is not definite; stability is not guaranteed".into());
    }
    let (res, resonance_report) = resonance(&linear, config.nu0, config.tolerances.integer)?;
    let simplicity = simplicity_proxy(&model.action, &res);
    if !simplicity.passes() {
        warnings.push("the group action on the resonance space may not be simple".into());
    }

    let mut table = isotropy_table(&model.action, &res, &model.space)?;
    if let Some(names) = &config.isotropy {
        for name in names {
            model.action.group.subgroup(name)?;
        }
        table.retain(|d| names.contains(&d.name));
    }

    let circle = circle_action_from_semisimple(&res)?;
    let mut spatiotemporal = Vec::new();
    for sub in spatiotemporal_subgroups(&model.action, &res, &circle, &model.space, config.weight_window)? {
        if sub.is_spatial() || config.isotropy.as_ref().is_some_and(|v| !v.contains(&sub.spatial)) {
            continue;
        }
        let gdim = model.action.generators.len();
        let mut chis: Vec<Vec<f64>> = config.momentum_grid.iter().flatten().filter(|c| c.len() == gdim).cloned().collect();
        if chis.is_empty() {
            chis.push(vec![0.0; gdim]);
        }
        for chi in chis {
            let est = ls_estimate_spatiotemporal(sub.dim_fixed, sub.dim_normalizer, sub.dim_n_rho_chi(&chi), sub.dim_k)?
                .with_labels(&format!("{}{:?}", sub.spatial, sub.weights), &chi);
            spatiotemporal.push(SpatiotemporalRow { subgroup: sub.clone(), chi, estimate: est });
        }
    }

    let radiality = RadialityOptions { max_order: config.max_order, tol_radial: config.tolerances.radial, seed: config.seed };
    let mut taylor = Vec::new();
    let mut cells = Vec::new();
    for datum in &table {
        let lambdas: Vec<Vec<f64>> = if datum.dim_l == 0 {
            vec![Vec::new()]
        } else if config.momentum_grid.is_none() {
            let mut l = vec![0.0; datum.dim_l];
            l[0] = DEFAULT_MOMENTUM;
            vec![l]
        } else {
            let (ok, skipped): (Vec<_>, Vec<_>) =
                config.momentum_grid.iter().flatten().partition(|l| l.len() == datum.dim_l);
            if !skipped.is_empty() {
                warnings.push(format!(
                    "{} momentum values skipped on {}: expected {} components",
                    skipped.len(),
                    datum.name,
                    datum.dim_l
                ));
            }
            ok.into_iter().cloned().collect()
        };

        let analysis = RestrictedProblem::new(&model, &res, datum).and_then(|p| radiality_analysis(&model, &p, &radiality));
        let row = match &analysis {
            Ok(a) => {
                warnings.extend(a.warnings.iter().cloned());
                TaylorRow {
                    isotropy: datum.name.clone(),
                    status: "non_radial".into(),
                    first_nonradial_order: Some(a.first_nonradial_order),
                    analysis: Some(a.clone()),
                    error: None,
                }
            }
            Err(e @ Error::RadialToMaxOrder { .. }) => {
                warnings.push(format!(
                    "H1 fails on {}: {e}; there is no first non-radial term, so H2 fails as well and no search is run",
                    datum.name
                ));
                TaylorRow {
                    isotropy: datum.name.clone(),
                    status: "radial_to_max_order".into(),
                    first_nonradial_order: None,
                    analysis: None,
                    error: Some(e.to_string()),
                }
            }
            Err(e) => {
                warnings.push(format!("Taylor analysis on {} failed: {e}", datum.name));
                TaylorRow {
                    isotropy: datum.name.clone(),
                    status: "failed".into(),
                    first_nonradial_order: None,
                    analysis: None,
                    error: Some(e.to_string()),
                }
            }
        };
        taylor.push(row);

        let h1 = analysis.is_ok();
        let mut datum_cells: Vec<CellReport> = Vec::new();
        for lambda in lambdas {
            let estimate = ls_estimate_equilibrium(datum.dim_fixed, datum.dim_l, datum.dim_l_lambda(&lambda))?
                .with_labels(&datum.name, &lambda);
            let radial_fail = matches!(analysis, Err(Error::RadialToMaxOrder { .. }));
            datum_cells.push(CellReport {
                isotropy: datum.name.clone(),
                lambda,
                estimate,
                searched: false,
                hypotheses: Hypotheses { h1, h2: radial_fail.then_some(false) },
                critical_orbits: Vec::new(),
                branches: Vec::new(),
                distinct: Vec::new(),
                failures: Vec::new(),
            });
        }
        if let (Ok(a), true) = (&analysis, config.search) {
            datum_cells.par_iter_mut().for_each(|cell| {
                cell.searched = true;
                search_cell(&model, a, cell, config);
            });
        }
        cells.extend(datum_cells);
    }

    let bound_checks: Vec<BoundCheck> = cells
        .iter()
        .filter(|c| c.searched)
        .map(|c| BoundCheck {
            isotropy: c.isotropy.clone(),
            lambda: c.lambda.clone(),
            bound: c.estimate.bound(),
            found: c.distinct.len(),
            met: c.distinct.len() as u64 >= c.estimate.bound(),
        })
        .collect();
    for b in bound_checks.iter().filter(|b| !b.met) {
        warnings.push(format!(
            "found {} distinct orbits on {} at lambda {:?}, below the bound {}",
            b.found, b.isotropy, b.lambda, b.bound
        ));
    }
    for c in &cells {
        for f in &c.failures {
            warnings.push(format!("{} at lambda {:?}: {f}", c.isotropy, c.lambda));
        }
    }

    let relative_equilibrium = match &config.relative_equilibrium {
        Some(input) => Some(relative_equilibrium_report(&model, input, config.tolerances.integer, &mut warnings)?),
        None => None,
    };

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION.into(),
        generated_at: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        config: config.clone(),
        model: ModelEcho {
            name: model.name.clone(),
            params: model.params.clone(),
            dim: n,
            group: model.action.group.name(),
            checks,
        },
        equilibrium,
        linearization: linear.report,
        resonance: resonance_report,
        simplicity,
        isotropy: table,
        spatiotemporal,
        taylor,
        cells,
        bound_checks,
        relative_equilibrium,
        warnings,
    })
}

/// Certifies a single candidate `(m, τ, ξ)` with drift allowed in the whole algebra.
pub fn verify(model: &EquivariantHamiltonianModel, state: &[f64], tau: f64, xi: &[f64], tol: f64) -> Result<RpoCertificate> {
    let k = model.action.generators.len();
    if xi.len() != k {
        return Err(Error::DimensionMismatch(format!("xi has {} components, the group has dimension {k}", xi.len())));
    }
    let m0 = DVector::from_column_slice(state);
    let opts = ShootOptions { tol, ..Default::default() };
    let mut cert = shoot_rpo(model, &m0, tau, xi, &DMatrix::identity(k, k), &opts)?;
    cert.provenance = "verify".into();
    Ok(cert)
}

/// One row per certificate: model, isotropy, energy, λ…, τ, ξ…, residual, energy drift.
pub fn certificate_table(report: &AnalysisReport) -> (Vec<String>, Vec<Vec<String>>) {
    let nl = report.cells.iter().map(|c| c.lambda.len()).max().unwrap_or(0);
    let nx = report.certificates().map(|c| c.xi.len()).max().unwrap_or(0);
    let mut header = vec!["model".to_string(), "isotropy".into(), "energy".into()];
    header.extend((0..nl).map(|i| format!("lambda_{i}")));
    header.push("tau".into());
    header.extend((0..nx).map(|i| format!("xi_{i}")));
    header.extend(["residual".into(), "energy_drift".into()]);
    let fmt = |x: f64| format!("{x:.17e}");
    let rows = report
        .certificates()
        .map(|c| {
            let mut row = vec![report.model.name.clone(), c.isotropy.clone(), fmt(c.energy)];
            row.extend((0..nl).map(|i| c.lambda.get(i).map_or(String::new(), |&x| fmt(x))));
            row.push(fmt(c.tau));
            row.extend((0..nx).map(|i| c.xi.get(i).map_or(String::new(), |&x| fmt(x))));
            row.push(fmt(c.residual));
            row.push(fmt(c.energy_drift));
            row
        })
        .collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn config(v: Value) -> std::result::Result<AnalysisConfig, serde_json::Error> {
        serde_json::from_value(v)
    }

    #[test]
    fn nu0_accepts_auto_or_a_number() {
        assert_eq!(config(json!({"nu0": "auto"})).unwrap().nu0, Nu0::Named(AutoTag::Auto));
        assert_eq!(config(json!({"nu0": 2.5})).unwrap().nu0, Nu0::Value(2.5));
        assert!(config(json!({"nu0": "fast"})).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(config(json!({"energyy": 1.0})).is_err());
        assert!(config(json!({"tolerances": {"residuals": 1e-8}})).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let ok = AnalysisConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            AnalysisConfig { energy: 0.0, ..ok.clone() },
            AnalysisConfig { energy: f64::NAN, ..ok.clone() },
            AnalysisConfig { momentum_grid: Some(vec![]), ..ok.clone() },
            AnalysisConfig { momentum_grid: Some(vec![vec![f64::INFINITY]]), ..ok.clone() },
            AnalysisConfig { nu0: Nu0::Value(-1.0), ..ok.clone() },
            AnalysisConfig { weight_window: -1, ..ok.clone() },
            AnalysisConfig { max_order: 3, ..ok.clone() },
            AnalysisConfig { tolerances: Tolerances { residual: 0.0, ..Tolerances::default() }, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn default_grid_uses_one_momentum_per_class() {
        let cfg = AnalysisConfig { model: "so3_isotropic".into(), search: false, ..Default::default() };
        let report = analyze(&cfg).unwrap();
        let e = report.cells.iter().find(|c| c.isotropy == "e").unwrap();
        assert_eq!(e.lambda, vec![DEFAULT_MOMENTUM, 0.0, 0.0]);
        assert_eq!(e.estimate.bound(), 1);
        assert!(!e.searched && report.bound_checks.is_empty());
    }

    #[test]
    fn mismatched_momentum_values_are_skipped_with_a_warning() {
        let cfg = AnalysisConfig {
            model: "so3_isotropic".into(),
            momentum_grid: Some(vec![vec![0.1]]),
            search: false,
            ..Default::default()
        };
        let report = analyze(&cfg).unwrap();
        assert!(report.cells.iter().all(|c| c.isotropy != "e"));
        assert!(report.warnings.iter().any(|w| w.contains("skipped on e")));
    }

    #[test]
    fn pendulum_cell_is_certified() {
        let cfg = AnalysisConfig { momentum_grid: Some(vec![vec![0.1]]), ..Default::default() };
        let report = analyze(&cfg).unwrap();
        let cell = &report.cells[0];
        assert!(cell.searched && cell.failures.is_empty());
        assert_eq!(cell.hypotheses, Hypotheses { h1: true, h2: Some(true) });
        assert_eq!(cell.distinct.len(), 1);
        let c = &cell.distinct[0].certificate;
        assert!(c.residual <= 1e-8 * c.scale);
        assert!((c.energy - 1e-3).abs() < 1e-9);
        assert!(!report.bound_violated());

        let (header, rows) = certificate_table(&report);
        assert_eq!(header.len(), rows[0].len());
        assert_eq!(rows[0][0], "spherical_pendulum");
    }

    #[test]
    fn unknown_isotropy_is_an_error() {
        let cfg = AnalysisConfig { isotropy: Some(vec!["Z7".into()]), search: false, ..Default::default() };
        assert!(analyze(&cfg).is_err());
    }

    #[test]
    fn verify_checks_drift_length() {
        let model = models::build("harmonic", &Value::Null).unwrap();
        assert!(matches!(
            verify(&model, &[0.01, 0.0, 0.0, 0.0], std::f64::consts::TAU, &[1.0], 1e-8),
            Err(Error::DimensionMismatch(_))
        ));
        let cert = verify(&model, &[0.01, 0.0, 0.0, 0.0], std::f64::consts::TAU, &[], 1e-8).unwrap();
        assert!(cert.residual < 1e-12);
    }
}
