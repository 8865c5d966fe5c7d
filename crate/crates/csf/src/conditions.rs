//! Initial data construction (f, g and the pressure profile s solving the
//! initial ODE), boundary traces for u, eta and P, compatibility residuals,
//! and the global-existence admissibility check on the initial velocity.

use thiserror::Error;

use crate::grid::{self, Grid};
use crate::model::Model;

#[derive(Debug, Error, PartialEq)]
pub enum ConditionsError {
    #[error("field lengths differ: f has {0} samples, g has {1}")]
    GridMismatch(usize, usize),
    #[error("initial-pressure right-hand side is not finite at node {0}")]
    NonFiniteRhs(usize),
    #[error("derivative order k_max = {0} exceeds the supported maximum of 5")]
    KMaxTooLarge(usize),
}

/// Sampled initial fields on a grid: velocity f, displacement g, pressure s.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub s: Vec<f64>,
    pub grid: Grid,
}

impl InitialData {
    /// Build f and g from callables and solve the pressure ODE for s.
    pub fn build(
        model: &Model,
        grid: Grid,
        f: impl Fn(f64) -> f64,
        g: impl Fn(f64) -> f64,
    ) -> Result<Self, ConditionsError> {
        let f = grid.sample(f);
        let g = grid.sample(g);
        let s = build_initial_pressure(model, &f, &g, &grid)?;
        Ok(InitialData { f, g, s, grid })
    }
}

/// Right-hand side h(z) of the initial-pressure ODE s' - (A rho / alpha) s = h.
pub fn ic_rhs(model: &Model, f: &[f64], g: &[f64], dz: f64) -> Result<Vec<f64>, ConditionsError> {
    if f.len() != g.len() {
        return Err(ConditionsError::GridMismatch(f.len(), g.len()));
    }
    let p = &model.params;
    let c = &model.coeffs;
    let fp = grid::deriv(f, dz);
    let (rho, w, abar) = (p.rho, p.omega, p.alpha_bar);
    Ok((0..f.len())
        .map(|j| {
            rho * abar * w * w
                - rho * f[j] * fp[j]
                - c.beta * f[j]
                - rho / c.alpha
                    * (abar * c.k_tilde * w + c.k_tilde * c.q_tilde - c.k_tilde * f[j]
                        + c.kappa * g[j]
                        + p.area * p.p_tissue)
        })
        .collect())
}

/// Corner value s(0) fixed by the displacement equation at (t,z) = (0,0).
pub fn initial_pressure_at_origin(model: &Model, g0: f64) -> f64 {
    let p = &model.params;
    let c = &model.coeffs;
    let (w, abar, a) = (p.omega, p.alpha_bar, p.area);
    p.p_tissue - abar * c.alpha * w * w / a
        + c.k_tilde * abar * w / a
        + c.k_tilde * c.q_tilde / a
        + c.kappa / a * g0
}

/// Closed-form corner value s(L) as stated in the compatibility set. It is
/// inconsistent with the integral profile in general; reported, never gated.
pub fn initial_pressure_at_end_closed(model: &Model, g_l: f64) -> f64 {
    let p = &model.params;
    let c = &model.coeffs;
    let (w, abar, a) = (p.omega, p.alpha_bar, p.area);
    p.p_tissue - (c.alpha * abar * w * w + abar * c.k_tilde * w + c.kappa * g_l) / a
}

/// Solve the initial-pressure ODE by the exponential-kernel integral,
/// composite trapezoid on the grid:
///   s(z) = int_0^z e^{c (z - zeta)} h(zeta) dzeta + s(0) e^{c z},
/// with c = A rho / alpha. The kernel is evaluated exactly per cell.
pub fn build_initial_pressure(
    model: &Model,
    f: &[f64],
    g: &[f64],
    grid: &Grid,
) -> Result<Vec<f64>, ConditionsError> {
    let h = ic_rhs(model, f, g, grid.dz)?;
    if let Some(j) = h.iter().position(|v| !v.is_finite()) {
        return Err(ConditionsError::NonFiniteRhs(j));
    }
    let c = model.params.area * model.params.rho / model.coeffs.alpha;
    let growth = (c * grid.dz).exp();
    let mut s = Vec::with_capacity(f.len());
    s.push(initial_pressure_at_origin(model, g[0]));
    for j in 1..f.len() {
        let cell = 0.5 * grid.dz * (growth * h[j - 1] + h[j]);
        s.push(growth * s[j - 1] + cell);
    }
    Ok(s)
}

/// Algebraic initial pressure from the displacement equation alone, using
/// the boundary-consistent second derivative of eta at t = 0:
///   P0 = P~ + (-alpha abar w^2 + k~ (abar w + Q~ - f) + kappa g) / A.
/// Coincides with the ODE profile wherever the transport correction is
/// negligible and matches the pressure trace exactly at both ends (f = 0
/// there). Preferred for time-marching starts when A rho / alpha is large,
/// where the exponential-kernel profile is too stiff to be meaningful.
pub fn membrane_initial_pressure(
    model: &Model,
    f: &[f64],
    g: &[f64],
) -> Result<Vec<f64>, ConditionsError> {
    if f.len() != g.len() {
        return Err(ConditionsError::GridMismatch(f.len(), g.len()));
    }
    let p = &model.params;
    let c = &model.coeffs;
    let (w, abar, a) = (p.omega, p.alpha_bar, p.area);
    Ok((0..f.len())
        .map(|j| {
            p.p_tissue
                + (-c.alpha * abar * w * w
                    + c.k_tilde * (abar * w + c.q_tilde - f[j])
                    + c.kappa * g[j])
                    / a
        })
        .collect())
}

/// Time traces for eta and P at both ends; u is identically zero there.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryTraces {
    model: Model,
    g_left: f64,
    g_right: f64,
}

pub fn boundary_traces(model: &Model, g_left: f64, g_right: f64) -> BoundaryTraces {
    BoundaryTraces { model: *model, g_left, g_right }
}

impl BoundaryTraces {
    fn eta_trace(&self, t: f64, g_val: f64) -> f64 {
        let m = &self.model;
        g_val - m.forcing(t) + 0.3 * m.params.alpha_bar + m.coeffs.q_tilde * t
    }

    /// The long trigonometric pressure trace, implemented term by term.
    fn p_trace(&self, t: f64, g_val: f64) -> f64 {
        use std::f64::consts::PI;
        let p = &self.model.params;
        let c = &self.model.coeffs;
        let (w, abar, a) = (p.omega, p.alpha_bar, p.area);
        let s1 = (w * t - PI / 2.0).sin();
        let c1 = (w * t - PI / 2.0).cos();
        let s2 = (2.0 * w * t - PI / 2.0).sin();
        let c2 = (2.0 * w * t - PI / 2.0).cos();
        (abar * c.alpha * w * w - c.kappa * abar) / a * s1
            + (c.kappa * abar - 4.0 * abar * c.alpha * w * w) / (2.0 * a) * c2
            - abar * c.k_tilde * w / a * (c1 + s2)
            + c.kappa / a * g_val
            + (c.k_tilde + c.kappa * t) / a * c.q_tilde
            - c.kappa * abar / a
            + p.p_tissue
    }

    pub fn eta_left(&self, t: f64) -> f64 {
        self.eta_trace(t, self.g_left)
    }

    pub fn eta_right(&self, t: f64) -> f64 {
        self.eta_trace(t, self.g_right)
    }

    pub fn p_left(&self, t: f64) -> f64 {
        self.p_trace(t, self.g_left)
    }

    pub fn p_right(&self, t: f64) -> f64 {
        self.p_trace(t, self.g_right)
    }
}

/// Per-condition corner residuals. Only formula identities gate the verdict;
/// the s(L) mismatch between the integral profile and the closed form is
/// informational.
#[derive(Debug, Clone, Copy)]
pub struct CompatibilityReport {
    pub u_left: f64,
    pub u_right: f64,
    pub eta_left: f64,
    pub eta_right: f64,
    pub p_left: f64,
    pub s_end_mismatch: f64,
    pub pass: bool,
}

const COMPAT_REL_TOL: f64 = 1e-9;

pub fn check_compatibility(
    ic: &InitialData,
    bt: &BoundaryTraces,
    model: &Model,
) -> CompatibilityReport {
    let last = ic.f.len() - 1;
    let u_left = ic.f[0].abs();
    let u_right = ic.f[last].abs();
    let eta_left = (bt.eta_left(0.0) - ic.g[0]).abs();
    let eta_right = (bt.eta_right(0.0) - ic.g[last]).abs();
    let p_left = (bt.p_left(0.0) - ic.s[0]).abs();
    let s_closed = initial_pressure_at_end_closed(model, ic.g[last]);
    let s_end_mismatch = (ic.s[last] - s_closed).abs();

    let ok = |residual: f64, scale: f64| residual <= COMPAT_REL_TOL * scale.abs().max(1.0);
    let pass = ok(u_left, grid::sup_norm(&ic.f))
        && ok(u_right, grid::sup_norm(&ic.f))
        && ok(eta_left, ic.g[0])
        && ok(eta_right, ic.g[last])
        && ok(p_left, ic.s[0]);
    CompatibilityReport { u_left, u_right, eta_left, eta_right, p_left, s_end_mismatch, pass }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    GlobalExpected,
    BlowupExpected,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::GlobalExpected => write!(f, "global-expected"),
            Verdict::BlowupExpected => write!(f, "blowup-expected"),
            Verdict::Indeterminate => write!(f, "indeterminate"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityVerdict {
    pub sup_norm_ok: bool,
    /// min f' >= -beta/rho on the grid.
    pub slope_ok: bool,
    /// Discrete derivative-norm proxy: max_{j<=k_max} ||D^j f||_L2.
    pub h_k_norm: f64,
    pub min_slope: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Classify the initial velocity against the global-existence criterion.
/// The slope test is the operative dichotomy; the derivative-norm proxy
/// stands in for the smallness condition on ||f||.
pub fn admissibility(
    ic: &InitialData,
    model: &Model,
    k_max: usize,
) -> Result<AdmissibilityVerdict, ConditionsError> {
    if k_max > 5 {
        return Err(ConditionsError::KMaxTooLarge(k_max));
    }
    let threshold = model.beta_over_rho();
    let dz = ic.grid.dz;

    let mut h_k_norm = grid::l2_norm(&ic.f, dz);
    let mut d = ic.f.clone();
    for _ in 0..k_max {
        d = grid::deriv(&d, dz);
        h_k_norm = h_k_norm.max(grid::l2_norm(&d, dz));
    }

    let fp = grid::deriv(&ic.f, dz);
    let min_slope = fp.iter().cloned().fold(f64::INFINITY, f64::min);
    let slope_ok = min_slope >= -threshold;
    let sup_norm_ok = h_k_norm <= threshold;
    let verdict = if slope_ok && sup_norm_ok {
        Verdict::GlobalExpected
    } else if !slope_ok {
        Verdict::BlowupExpected
    } else {
        Verdict::Indeterminate
    };
    Ok(AdmissibilityVerdict { sup_norm_ok, slope_ok, h_k_norm, min_slope, threshold, verdict })
}
