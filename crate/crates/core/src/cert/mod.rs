//! Sampled checks of barrier and Lyapunov sufficient conditions.
//!
//! Every check evaluates its inequalities on a finite set of sampled states.
//! A passing report means "no violation among the samples", never a proof.

mod checks;
mod report;
mod sampler;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Env, Expr};
use crate::hybrid::HybridSystem;

pub use checks::{
    certify_always, certify_eventually_always, certify_eventually_combined,
    certify_eventually_flow, certify_eventually_jump, certify_next, certify_until_strong,
    check_barrier_candidate, check_weak_until_cover, EventuallyAlwaysMode,
};
pub use report::{CertificateReport, ConditionReport, ConditionStatus, Verdict};
pub use sampler::{Sampler, SamplerMode};

/// Absolute part of the inequality tolerance.
pub const ABS_TOL: f64 = 1e-9;
/// Relative part of the inequality tolerance, applied to the scale of the
/// compared quantities.
pub const REL_TOL: f64 = 1e-6;

/// `true` when `margin` (positive means violated) exceeds the tolerance.
/// Non-finite margins count as violations.
pub fn exceeds_tolerance(margin: f64, scale: f64) -> bool {
    !(margin <= ABS_TOL + REL_TOL * scale.abs())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("gradient is not available at {0:?}")]
    GradientUnavailable(Vec<f64>),
    #[error(
        "supplied gradient of `{name}` disagrees with finite differences at {point:?}: \
         supplied {supplied:?}, estimated {estimated:?}"
    )]
    GradientMismatch {
        name: String,
        point: Vec<f64>,
        supplied: Vec<f64>,
        estimated: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Barrier,
    Lyapunov,
}

/// A scalar function `V` or `B` of the state, with an optional gradient.
/// Expressions must already have their constants substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCertificate {
    pub name: String,
    pub expr: Expr,
    pub gradient: Option<Vec<Expr>>,
    pub role: Role,
    /// Marks `V` as nonsmooth: `u_C` then also uses one-sided directional
    /// difference quotients.
    pub nonsmooth: bool,
}

fn relative_step(v: f64) -> f64 {
    1e-6 * (1.0 + v.abs())
}

impl ScalarCertificate {
    pub fn new(name: impl Into<String>, expr: Expr, role: Role) -> Self {
        Self {
            name: name.into(),
            expr,
            gradient: None,
            role,
            nonsmooth: false,
        }
    }

    pub fn with_gradient(mut self, gradient: Vec<Expr>) -> Self {
        self.gradient = Some(gradient);
        self
    }

    pub fn nonsmooth(mut self, nonsmooth: bool) -> Self {
        self.nonsmooth = nonsmooth;
        self
    }

    /// Value at `x`; NaN when evaluation fails.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval_num(&Env::state(x)).unwrap_or(f64::NAN)
    }

    fn supplied_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let g = self.gradient.as_ref()?;
        let v: Vec<f64> = g
            .iter()
            .map(|e| e.eval_num(&Env::state(x)).unwrap_or(f64::NAN))
            .collect();
        v.iter().all(|c| c.is_finite()).then_some(v)
    }

    /// Central finite differences with step `1e-6 * (1 + |x_i|)` per coordinate.
    pub fn finite_difference_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut y = x.to_vec();
        let mut out = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let h = relative_step(x[i]);
            y[i] = x[i] + h;
            let up = self.value(&y);
            y[i] = x[i] - h;
            let down = self.value(&y);
            y[i] = x[i];
            let d = (up - down) / (2.0 * h);
            if !d.is_finite() {
                return None;
            }
            out.push(d);
        }
        Some(out)
    }

    /// Supplied gradient when it evaluates to finite values, finite
    /// differences otherwise.
    pub fn gradient_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.supplied_gradient(x)
            .or_else(|| self.finite_difference_gradient(x))
    }

    /// Compares the supplied gradient with finite differences at `count`
    /// seeded random points of `bounds`. Points where either side is not
    /// finite are skipped.
    pub fn check_gradient(
        &self,
        bounds: &[[f64; 2]],
        count: usize,
        seed: u64,
    ) -> Result<(), CertError> {
        if self.gradient.is_none() {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let x: Vec<f64> = bounds
                .iter()
                .map(|[lo, hi]| if hi > lo { rng.gen_range(*lo..*hi) } else { *lo })
                .collect();
            let (Some(s), Some(fd)) = (self.supplied_gradient(&x), self.finite_difference_gradient(&x))
            else {
                continue;
            };
            if s.iter().zip(&fd).any(|(a, b)| (a - b).abs() > 1e-5 * b.abs().max(1.0)) {
                return Err(CertError::GradientMismatch {
                    name: self.name.clone(),
                    point: x,
                    supplied: s,
                    estimated: fd,
                });
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper bound on the growth of `V` along flows at `x`: the largest
/// `<grad V(x), eta>` over the flow selections `eta`, or `-inf` off `C`.
/// For nonsmooth certificates a one-sided difference quotient of `V` along
/// `eta` also enters the maximum.
pub fn u_c(system: &HybridSystem, cert: &ScalarCertificate, x: &[f64]) -> Result<f64, CertError> {
    u_c_scaled(system, cert, x).map(|(u, _)| u)
}

/// `u_c` together with the size of the terms it sums, `max_eta sum_i
/// |d_i V eta_i|`, which is the scale its rounding error is relative to.
pub(crate) fn u_c_scaled(
    system: &HybridSystem,
    cert: &ScalarCertificate,
    x: &[f64],
) -> Result<(f64, f64), CertError> {
    if !system.in_flow_set(x) {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let grad = cert
        .gradient_at(x)
        .ok_or_else(|| CertError::GradientUnavailable(x.to_vec()))?;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = relative_step(scale);
    let v0 = cert.value(x);
    let mut best = f64::NEG_INFINITY;
    let mut size = 0.0f64;
    for eta in system.flow_directions(x) {
        let mut u = dot(&grad, &eta);
        size = size.max(grad.iter().zip(&eta).map(|(g, e)| (g * e).abs()).sum());
        if cert.nonsmooth {
            let along = |s: f64| -> Vec<f64> { x.iter().zip(&eta).map(|(xi, e)| xi + s * e).collect() };
            // Second-order one-sided quotient: exact for quadratics along the
            // ray, and still sees the slope on the chosen side of a kink.
            let q = (4.0 * cert.value(&along(h)) - cert.value(&along(2.0 * h)) - 3.0 * v0) / (2.0 * h);
            if q.is_finite() {
                u = u.max(q);
            }
        }
        if !u.is_finite() {
            return Err(CertError::GradientUnavailable(x.to_vec()));
        }
        best = best.max(u);
    }
    Ok((best, size))
}

/// Largest change of `V` across a jump from `x`, or `-inf` off `D`.
pub fn u_d(system: &HybridSystem, cert: &ScalarCertificate, x: &[f64]) -> f64 {
    if !system.in_jump_set(x) {
        return f64::NEG_INFINITY;
    }
    let v = cert.value(x);
    system
        .jump_successors(x)
        .iter()
        .map(|z| cert.value(z) - v)
        .fold(f64::NEG_INFINITY, |m, d| if d.is_nan() || m.is_nan() { f64::NAN } else { m.max(d) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
/// Decrease rates of a finite-time attractivity certificate: along flows
/// (`c1 V^c2`) or across jumps (`min(c, V)`).
pub enum FtaMode {
    Flow { c1: f64, c2: f64 },
    Jump { c: f64 },
}

/// Settling bound from `V0 = V(x0)`: `V0^(1-c2) / (c1 (1-c2))` units of flow
/// time, or `ceil(V0 / c)` jumps.
pub fn settling_bound(v0: f64, mode: FtaMode) -> Result<f64, CertError> {
    if !(v0 >= 0.0) || !v0.is_finite() {
        return Err(CertError::BadParameters(format!("V0 must be finite and >= 0, got {v0}")));
    }
    match mode {
        FtaMode::Flow { c1, c2 } => {
            checks::flow_params(c1, c2)?;
            Ok(v0.powf(1.0 - c2) / (c1 * (1.0 - c2)))
        }
        FtaMode::Jump { c } => {
            checks::positive("c", c)?;
            Ok((v0 / c).ceil())
        }
    }
}
