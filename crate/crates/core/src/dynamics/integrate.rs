//! Two integrators: two-stage Gauss–Legendre (order 4, symplectic) for
//! conservation, and Dormand–Prince 5(4), adaptive or at fixed step, for
//! shooting.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SymplecticGauss4,
    AdaptiveDp5,
    FixedDp5,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Step for the fixed-step schemes; initial step for the adaptive one.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Keep every n-th accepted step (0: endpoints only).
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn symplectic(step: f64) -> Self {
        Self { scheme: Scheme::SymplecticGauss4, step, rtol: 0.0, atol: 0.0, max_steps: 10_000_000, record_every: 1 }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        Self { scheme: Scheme::AdaptiveDp5, step: 1e-2, rtol, atol, max_steps: 1_000_000, record_every: 1 }
    }

    pub fn fixed_dp5(step: f64) -> Self {
        Self { scheme: Scheme::FixedDp5, step, rtol: 0.0, atol: 0.0, max_steps: 10_000_000, record_every: 1 }
    }

    pub fn endpoints_only(mut self) -> Self {
        self.record_every = 0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidIntegratorConfig(m.to_string()));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step must be positive");
        }
        if self.scheme == Scheme::AdaptiveDp5 && !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DVector<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

pub type Field<'a> = dyn Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + 'a;

/// Integrates `y' = f(t, y)` from `t = 0` to `t = t_end` (either sign).
pub fn integrate(f: &Field, y0: &DVector<f64>, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !t_end.is_finite() {
        return Err(Error::InvalidIntegratorConfig("non-finite final time".into()));
    }
    match cfg.scheme {
        Scheme::SymplecticGauss4 => fixed(f, y0, t_end, cfg, gauss4_step),
        Scheme::FixedDp5 => fixed(f, y0, t_end, cfg, |f, t, y, h| dp5_step(f, t, y, h).map(|(y, _)| y)),
        Scheme::AdaptiveDp5 => adaptive(f, y0, t_end, cfg),
    }
}

fn finite(y: &DVector<f64>, t: f64) -> Result<()> {
    if y.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { t })
    }
}

type Stepper = fn(&Field, f64, &DVector<f64>, f64) -> Result<DVector<f64>>;

fn fixed(f: &Field, y0: &DVector<f64>, t_end: f64, cfg: &IntegratorConfig, step: Stepper) -> Result<Trajectory> {
    let n = ((t_end.abs() / cfg.step).ceil() as usize).max(1);
    if n > cfg.max_steps {
        return Err(Error::StepLimitExceeded { t: 0.0 });
    }
    let h = t_end / n as f64;
    let mut out = Trajectory { times: vec![0.0], states: vec![y0.clone()], ..Default::default() };
    let mut y = y0.clone();
    for i in 0..n {
        let t = h * i as f64;
        y = step(f, t, &y, h)?;
        finite(&y, t + h)?;
        out.steps += 1;
        let last = i + 1 == n;
        if last || (cfg.record_every > 0 && (i + 1) % cfg.record_every == 0) {
            out.times.push(if last { t_end } else { t + h });
            out.states.push(y.clone());
        }
    }
    Ok(out)
}

const SQ3: f64 = 1.732_050_807_568_877_2;

/// Implicit midpoint-type Gauss–Legendre step, stages by fixed-point iteration.
fn gauss4_step(f: &Field, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let c = [0.5 - SQ3 / 6.0, 0.5 + SQ3 / 6.0];
    let a = [[0.25, 0.25 - SQ3 / 6.0], [0.25 + SQ3 / 6.0, 0.25]];
    let f0 = f(t, y)?;
    let mut k1 = f0.clone();
    let mut k2 = f0;
    for _ in 0..100 {
        let y1 = y + (&k1 * a[0][0] + &k2 * a[0][1]) * h;
        let y2 = y + (&k1 * a[1][0] + &k2 * a[1][1]) * h;
        let n1 = f(t + c[0] * h, &y1)?;
        let n2 = f(t + c[1] * h, &y2)?;
        let delta = (&n1 - &k1).amax().max((&n2 - &k2).amax());
        let scale = n1.amax().max(n2.amax()).max(f64::MIN_POSITIVE);
        k1 = n1;
        k2 = n2;
        if delta <= 1e-15 * scale || delta == 0.0 {
            break;
        }
    }
    Ok(y + (k1 + k2) * (0.5 * h))
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step: fifth-order solution and error estimate.
fn dp5_step(f: &Field, t: f64, y: &DVector<f64>, h: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if DP_A[s][j] != 0.0 {
                ys += kj * (h * DP_A[s][j]);
            }
        }
        k.push(f(t + DP_C[s] * h, &ys)?);
    }
    let mut y5 = y.clone();
    let mut err = DVector::zeros(y.len());
    for s in 0..7 {
        if DP_B[s] != 0.0 {
            y5 += &k[s] * (h * DP_B[s]);
        }
        if DP_E[s] != 0.0 {
            err += &k[s] * (h * DP_E[s]);
        }
    }
    Ok((y5, err))
}

fn adaptive(f: &Field, y0: &DVector<f64>, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let dir = t_end.signum();
    let mut out = Trajectory { times: vec![0.0], states: vec![y0.clone()], ..Default::default() };
    if t_end == 0.0 {
        return Ok(out);
    }
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut h = cfg.step.min(t_end.abs()) * dir;
    let mut accepted = 0usize;
    while (t_end - t) * dir > 0.0 {
        if out.steps + out.rejected >= cfg.max_steps {
            return Err(Error::StepLimitExceeded { t });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let (y_new, e) = dp5_step(f, t, &y, h)?;
        let mut norm = 0.0;
        for i in 0..y.len() {
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
            norm += (e[i] / sc).powi(2);
        }
        let norm = (norm / y.len() as f64).sqrt();
        if norm <= 1.0 {
            finite(&y_new, t + h)?;
            t += h;
            y = y_new;
            out.steps += 1;
            accepted += 1;
            let last = (t_end - t) * dir <= 0.0;
            if last || (cfg.record_every > 0 && accepted.is_multiple_of(cfg.record_every)) {
                out.times.push(if last { t_end } else { t });
                out.states.push(y.clone());
            }
            let fac = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            out.rejected += 1;
            let fac = if norm.is_finite() { (0.9 * norm.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= fac;
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::StepLimitExceeded { t });
            }
        }
    }
    Ok(out)
}
