//! Acceptance suite: one pass/fail line per criterion. Runs without the test
//! harness so the summary is always printed.

mod common;

use std::f64::consts::{PI, SQRT_2, TAU};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use common::jordan_cases::{cases, check_case};
use relmode::analysis::{analyze, AnalysisConfig, AnalysisReport};
use relmode::dynamics::{flow, EquivariantHamiltonianModel, IntegratorConfig};
use relmode::equivariance::isotropy_table;
use relmode::linalg::canonical_omega;
use relmode::models;
use relmode::search::{
    branch_continuation, constrained_critical_orbits, radiality_analysis, BranchOptions, CriticalSearchOptions,
    RadialityOptions, RestrictedProblem, TaylorAnalysis,
};
use relmode::symplectic::{
    jordan_chevalley, lowest_frequency, resonance_space, JordanOptions, ResonanceOptions, ResonanceSpace,
    SymplecticSpace,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run(config: AnalysisConfig) -> Result<(AnalysisReport, Duration), String> {
    let start = Instant::now();
    let report = analyze(&config).map_err(|e| e.to_string())?;
    Ok((report, start.elapsed()))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn resonance_of(model: &EquivariantHamiltonianModel, nu0: Option<f64>) -> Result<ResonanceSpace, String> {
    let map = jordan_chevalley(&model.linearization(), &model.space, JordanOptions::default()).map_err(|e| e.to_string())?;
    let nu0 = match nu0 {
        Some(v) => v,
        None => lowest_frequency(&map).ok_or("no elliptic frequency")?,
    };
    resonance_space(&map, nu0, ResonanceOptions::default()).map_err(|e| e.to_string())
}

fn taylor(model: &EquivariantHamiltonianModel, isotropy: &str) -> Result<TaylorAnalysis, String> {
    let res = resonance_of(model, None)?;
    let table = isotropy_table(&model.action, &res, &model.space).map_err(|e| e.to_string())?;
    let datum = table.iter().find(|d| d.name == isotropy).ok_or("isotropy class missing")?;
    let problem = RestrictedProblem::new(model, &res, datum).map_err(|e| e.to_string())?;
    radiality_analysis(model, &problem, &RadialityOptions::default()).map_err(|e| e.to_string())
}

fn pendulum_example() -> Outcome {
    let lambdas = [-0.1, -0.05, 0.05, 0.1, 0.15];
    let config = AnalysisConfig {
        model: "spherical_pendulum".into(),
        params: json!({"m": 1.0, "l": 1.0, "g": 1.0}),
        energy: 1e-3,
        momentum_grid: Some(lambdas.iter().map(|&l| vec![l]).collect()),
        isotropy: Some(vec!["e".into()]),
        ..Default::default()
    };
    let (report, elapsed) = run(config)?;
    ensure(report.cells.len() == lambdas.len(), format!("{} cells", report.cells.len()))?;
    let mut worst = 0.0_f64;
    let mut worst_tau = 0.0_f64;
    for cell in &report.cells {
        ensure(cell.estimate.bound() == 1, format!("bound {} at {:?}", cell.estimate.bound(), cell.lambda))?;
        let good: Vec<_> = cell
            .distinct
            .iter()
            .map(|d| &d.certificate)
            .filter(|c| c.residual <= 1e-8 && ((c.tau - TAU) / TAU).abs() <= 0.25)
            .collect();
        ensure(!good.is_empty(), format!("no certificate at lambda {:?}", cell.lambda))?;
        for c in good {
            worst = worst.max(c.residual);
            worst_tau = worst_tau.max(((c.tau - TAU) / TAU).abs());
        }
    }
    ensure(elapsed <= Duration::from_secs(120), format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "bound 1 and a certificate at each of 5 momenta; max residual {worst:.1e}, max period shift {:.2}%, {:.1}s",
        100.0 * worst_tau,
        elapsed.as_secs_f64()
    ))
}

fn spring_example() -> Outcome {
    let config = AnalysisConfig {
        model: "spring_pendulum".into(),
        momentum_grid: Some(vec![vec![0.1]]),
        isotropy: Some(vec!["e".into()]),
        ..Default::default()
    };
    let (report, elapsed) = run(config)?;
    let cell = report.cells.first().ok_or("no cell")?;
    ensure(cell.estimate.bound() == 2, format!("bound {}", cell.estimate.bound()))?;
    let certified = cell.distinct.iter().filter(|d| d.certificate.residual <= 1e-8).count();
    ensure(certified >= 2, format!("{certified} distinct certified orbits"))?;

    let linear = AnalysisConfig {
        model: "spring_pendulum".into(),
        params: json!({"sigma": []}),
        momentum_grid: Some(vec![vec![0.1]]),
        ..Default::default()
    };
    let (lin, lin_elapsed) = run(linear)?;
    let flagged = lin.taylor.iter().any(|t| t.isotropy == "e" && t.status == "radial_to_max_order")
        && lin.cells.iter().all(|c| c.hypotheses.h2 == Some(false) && !c.searched)
        && lin.warnings.iter().any(|w| w.contains("H2 fails"));
    ensure(flagged, "linear spring not flagged as failing H2")?;
    let total = elapsed + lin_elapsed;
    ensure(total <= Duration::from_secs(300), format!("runtime {total:?}"))?;
    Ok(format!(
        "bound 2, {certified} distinct certified orbits; linear spring flagged H2 failure; {:.1}s",
        total.as_secs_f64()
    ))
}

fn so3_example() -> Outcome {
    let config = AnalysisConfig {
        model: "so3_isotropic".into(),
        params: json!({"f": [{"coeff": 0.05, "powers": [0, 0, 2]}]}),
        momentum_grid: Some(vec![vec![0.0, 0.0, 0.1]]),
        isotropy: Some(vec!["e".into()]),
        ..Default::default()
    };
    let model = models::build("so3_isotropic", &config.params).map_err(|e| e.to_string())?;
    let (report, elapsed) = run(config)?;
    let cell = report.cells.first().ok_or("no cell")?;
    ensure(cell.estimate.bound() == 1, format!("bound {}", cell.estimate.bound()))?;
    let mut best = None;
    for d in &cell.distinct {
        let c = &d.certificate;
        let j = model.momentum_value(&DVector::from_column_slice(&c.state));
        if c.residual <= 1e-8 && j.norm() > 0.0 {
            best = Some((c.residual, j));
        }
    }
    let (res, j) = best.ok_or("no certificate with nonzero momentum")?;
    ensure(elapsed <= Duration::from_secs(300), format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "bound 1; certificate with residual {res:.1e} and J = ({:.2e}, {:.2e}, {:.2e}); {:.1}s",
        j[0],
        j[1],
        j[2],
        elapsed.as_secs_f64()
    ))
}

fn random_hamiltonian_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let w = canonical_omega(n);
    let s = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let sym = (&s + s.transpose()) * 0.5;
    if rng.gen_bool(0.5) {
        return &w * sym;
    }
    // repeated and defective spectra from a small diagonal palette
    let palette = [0.0, 1.0, 1.0, 2.0, 0.5, -1.0];
    let h0 = DMatrix::from_fn(n, n, |i, j| if i == j { palette[rng.gen_range(0..palette.len())] } else { 0.0 });
    let t = (&w * sym * 0.4).exp();
    &w * t.transpose() * h0 * t
}

fn jordan_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let n = 2 * (1 + i % 4);
        let a = random_hamiltonian_matrix(&mut rng, n);
        let space = SymplecticSpace::canonical(n);
        let jc = jordan_chevalley(&a, &space, JordanOptions::default()).map_err(|e| format!("matrix {i}: {e}"))?;
        let scale = a.norm().max(1.0);
        let d = jc.diagnostics();
        let sum = (&jc.semisimple + &jc.nilpotent - &a).norm();
        ensure(sum <= 1e-14 * scale, format!("matrix {i}: sum defect {sum:.1e}"))?;
        ensure(d.commutator <= 1e-9 * scale * scale, format!("matrix {i}: commutator {:.1e}", d.commutator))?;
        ensure(d.nilpotency <= 1e-9 * scale.powi(n as i32), format!("matrix {i}: nilpotency {:.1e}", d.nilpotency))?;
        ensure(
            d.semisimple_defect <= 1e-10 && d.nilpotent_defect <= 1e-10,
            format!("matrix {i}: symplectic defects {:.1e} {:.1e}", d.semisimple_defect, d.nilpotent_defect),
        )?;
    }
    let oracle = cases();
    let mut worst = 0.0_f64;
    for case in &oracle {
        let (es, en) = check_case(case)?;
        worst = worst.max(es).max(en);
    }
    Ok(format!("100 random matrices pass; {} exact oracle cases agree to {worst:.1e}", oracle.len()))
}

fn resonance_suite() -> Outcome {
    let mut parts = Vec::new();
    for (freqs, expected) in [([1.0, 2.0], 4), ([1.0, SQRT_2], 2), ([1.0, 1.0], 4)] {
        let model = models::build("harmonic", &json!({"frequencies": freqs})).map_err(|e| e.to_string())?;
        let res = resonance_of(&model, Some(1.0))?;
        ensure(res.dim() == expected, format!("{freqs:?}: dim {} instead of {expected}", res.dim()))?;
        let d = res.dim();
        let periodic = ((&res.restricted_semisimple * res.period).exp() - DMatrix::<f64>::identity(d, d)).amax();
        ensure(periodic <= 1e-8, format!("{freqs:?}: exp(A_s T) - I = {periodic:.1e}"))?;
        let sv = res.restricted_omega.clone().svd(false, false).singular_values;
        ensure(sv.min() > 1e-10 * sv.max(), format!("{freqs:?}: omega degenerate on U"))?;
        parts.push(format!("{freqs:?} -> {d}"));
    }
    Ok(format!("dimensions {}; periodic and symplectic", parts.join(", ")))
}

fn conservation_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = (0.0_f64, 0.0_f64);
    for name in ["spherical_pendulum", "spring_pendulum", "so3_isotropic", "harmonic"] {
        let model = models::build(name, &Value::Null).map_err(|e| e.to_string())?;
        let period = resonance_of(&model, None)?.period;
        let cfg = IntegratorConfig::symplectic(period / 200.0);
        // states at the working energy of the examples, ε ≈ 1e-3
        for _ in 0..3 {
            let dir = DVector::from_fn(model.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let v0 = &dir * ((2e-3 / dir.dot(&(model.hessian(&DVector::zeros(model.dim())) * &dir))).sqrt());
            let f = flow(&model, &v0, 10.0 * period, &cfg).map_err(|e| format!("{name}: {e}"))?;
            let (dh, dj) = (f.energy_drift(), f.momentum_drift());
            ensure(dh <= 1e-8 && dj <= 1e-9, format!("{name}: |dh| {dh:.1e}, |dJ| {dj:.1e}"))?;
            worst = (worst.0.max(dh), worst.1.max(dj));
        }
    }
    Ok(format!("all built-ins over 10 periods at T/200: max |dh| {:.1e}, max |dJ| {:.1e}", worst.0, worst.1))
}

fn branch_suite() -> Outcome {
    let model = models::build("spherical_pendulum", &Value::Null).map_err(|e| e.to_string())?;
    let analysis = taylor(&model, "e")?;
    let mut worst = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for lambda in [-0.1, 0.05, 0.2] {
        let orbits = constrained_critical_orbits(&analysis, &[lambda], &CriticalSearchOptions::default())
            .map_err(|e| e.to_string())?;
        for orbit in &orbits {
            let opts = BranchOptions { r_max: 0.2, ..Default::default() };
            let branch = branch_continuation(&model, &analysis, orbit, &opts).map_err(|e| e.to_string())?;
            ensure(branch.fold_at.is_none(), format!("fold at r = {:?}", branch.fold_at))?;
            ensure(branch.last().r >= 0.2 - 1e-12, "branch does not reach r = 0.2")?;
            for s in &branch.samples {
                let r2 = s.r * s.r;
                let c_ratio = (s.c - 1.0).abs() / r2;
                let l_ratio = norm(&s.multipliers) / r2;
                ensure(
                    s.q_residual <= 1e-9 && s.j_residual <= 1e-9,
                    format!("constraint residuals {:.1e} {:.1e} at r = {}", s.q_residual, s.j_residual, s.r),
                )?;
                ensure(c_ratio <= 0.5 && l_ratio <= 0.5, format!("|c-1|/r² {c_ratio:.3}, |Λ|/r² {l_ratio:.3} at r = {}", s.r))?;
                worst = (worst.0.max(s.q_residual), worst.1.max(s.j_residual), worst.2.max(c_ratio), worst.3.max(l_ratio));
            }
        }
    }
    Ok(format!(
        "constraint residuals {:.1e}/{:.1e}; max |c-1|/r² {:.3}, max |Λ|/r² {:.3} on (0, 0.2]",
        worst.0, worst.1, worst.2, worst.3
    ))
}

/// Gauss–Newton onto `Q = 1, J = λ` from `u`, with minimum-norm steps.
fn onto_constraints(problem: &RestrictedProblem, mut u: DVector<f64>, lambda: &[f64]) -> Option<DVector<f64>> {
    for _ in 0..50 {
        let c = problem.constraints(&u, 1.0, lambda);
        if c.amax() < 1e-12 {
            return Some(u);
        }
        let jac = problem.constraint_jacobian(&u);
        let step = jac.clone().pseudo_inverse(1e-12).ok()? * c;
        u -= step;
    }
    None
}

/// Number of torus orbits met by a grid of constraint points, found by
/// sweeping each new representative's orbit on a fine torus grid.
fn grid_orbit_count(problem: &RestrictedProblem, lambda: f64) -> Result<(usize, usize), String> {
    let d = problem.dim();
    ensure(d == 4 && problem.l_generators.len() == 1, "expected a 4-dimensional space with one momentum")?;
    let per_axis = 24;
    let mut points = Vec::new();
    for i in 0..per_axis {
        for j in 0..per_axis {
            for k in 0..per_axis {
                let a = PI * (i as f64 + 0.5) / per_axis as f64;
                let b = PI * (j as f64 + 0.5) / per_axis as f64;
                let c = TAU * k as f64 / per_axis as f64;
                let u = DVector::from_vec(vec![
                    a.cos(),
                    a.sin() * b.cos(),
                    a.sin() * b.sin() * c.cos(),
                    a.sin() * b.sin() * c.sin(),
                ]);
                if let Some(p) = onto_constraints(problem, u, &[lambda]) {
                    points.push(p);
                }
            }
        }
    }
    ensure(points.len() >= 10_000, format!("only {} grid points reached the constraint set", points.len()))?;

    let steps = 256;
    let rot: Vec<DMatrix<f64>> =
        (0..steps).map(|i| (&problem.circle * (TAU * i as f64 / steps as f64)).exp()).collect();
    let l = &problem.l_generators[0];
    let sweep: Vec<DMatrix<f64>> = (0..steps).map(|i| (l * (TAU * i as f64 / steps as f64)).exp()).collect();
    let tol = 0.05;
    let mut unassigned: Vec<usize> = (0..points.len()).collect();
    let mut orbits = 0;
    while let Some(&rep) = unassigned.first() {
        orbits += 1;
        let start = &points[rep];
        let orbit: Vec<DVector<f64>> = rot.iter().flat_map(|r| sweep.iter().map(move |s| r * (s * start))).collect();
        unassigned.retain(|&i| !orbit.iter().any(|o| (o - &points[i]).norm() < tol));
        ensure(orbits <= 50, "orbit sweep does not terminate")?;
    }
    Ok((orbits, points.len()))
}

fn oracle_suite() -> Outcome {
    let model = models::build("spherical_pendulum", &Value::Null).map_err(|e| e.to_string())?;
    let analysis = taylor(&model, "e")?;
    let mut parts = Vec::new();
    for lambda in [-0.3, 0.1, 0.6] {
        let solver = constrained_critical_orbits(&analysis, &[lambda], &CriticalSearchOptions::default())
            .map_err(|e| e.to_string())?
            .len();
        let (grid, points) = grid_orbit_count(&analysis.problem, lambda)?;
        ensure(solver == grid, format!("lambda {lambda}: solver {solver}, grid {grid}"))?;
        parts.push(format!("λ={lambda}: {solver}={grid} ({points} points)"));
    }
    Ok(parts.join("; "))
}

fn nontriviality_gate() -> Outcome {
    let config = AnalysisConfig {
        model: "harmonic".into(),
        params: json!({"frequencies": [1.0, 1.0], "coupling": 0.0}),
        ..Default::default()
    };
    let (report, _) = run(config)?;
    let certs = report.certificates().count();
    ensure(certs == 0, format!("{certs} certificates on a quadratic Hamiltonian"))?;
    ensure(report.cells.iter().all(|c| !c.searched), "a cell was searched")?;
    ensure(
        !report.taylor.is_empty() && report.taylor.iter().all(|t| t.status == "radial_to_max_order"),
        "radial flag missing",
    )?;
    Ok(format!("0 certificates; radial flag raised on {} isotropy classes", report.taylor.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("spherical pendulum example", pendulum_example),
        ("spring pendulum example", spring_example),
        ("SO(3) example", so3_example),
        ("Jordan-Chevalley suite", jordan_suite),
        ("resonance-space suite", resonance_suite),
        ("conservation suite", conservation_suite),
        ("branch-law suite", branch_suite),
        ("oracle equivalence", oracle_suite),
        ("nontriviality gate", nontriviality_gate),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {} PASS {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
