//! Fixed-point iteration for the coupled system: closed-form displacement
//! and pressure updates from a frozen velocity iterate, then a linear upwind
//! transport solve for the next velocity, repeated until the velocity stops
//! moving. Reports empirical contraction ratios.

use thiserror::Error;

use crate::grid::{self, Grid};
use crate::model::Model;
use crate::parallel;

#[derive(Debug, Error, PartialEq)]
pub enum PicardError {
    #[error("field shape ({0}, {1}) does not match the grid ({2}, {3})")]
    GridMismatch(usize, usize, usize, usize),
    #[error("time grid needs at least 3 levels, got {0}")]
    TooFewTimeLevels(usize),
    #[error("CFL number {0} of the frozen velocity reaches 1; shrink dt")]
    CflViolation(f64),
    #[error("iteration diverging: contraction ratio exceeded 1 for 3 consecutive steps (last ratio {0})")]
    NotContracting(f64),
}

/// Dense scalar field on the (time x space) lattice, row i = time level i.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeField {
    pub n_t: usize,
    pub n_z: usize,
    data: Vec<f64>,
}

impl TimeField {
    pub fn zeros(n_t: usize, n_z: usize) -> Self {
        TimeField { n_t, n_z, data: vec![0.0; n_t * n_z] }
    }

    /// Replicate a spatial profile across every time level (the customary
    /// zeroth iterate).
    pub fn from_profile(profile: &[f64], n_t: usize) -> Self {
        let mut data = Vec::with_capacity(n_t * profile.len());
        for _ in 0..n_t {
            data.extend_from_slice(profile);
        }
        TimeField { n_t, n_z: profile.len(), data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_t = rows.len();
        let n_z = rows[0].len();
        let mut data = Vec::with_capacity(n_t * n_z);
        for r in rows {
            assert_eq!(r.len(), n_z);
            data.extend_from_slice(&r);
        }
        TimeField { n_t, n_z, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_z + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_z + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_z..(i + 1) * self.n_z]
    }

    /// Column as an owned vector (time series at one node).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_t).map(|i| self.at(i, j)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        grid::sup_norm(&self.data)
    }

    pub fn sup_diff(&self, other: &TimeField) -> f64 {
        assert_eq!((self.n_t, self.n_z), (other.n_t, other.n_z));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn check_shape(field: &TimeField, grid: &Grid) -> Result<(), PicardError> {
    let n_t = grid.n_t();
    if field.n_t != n_t || field.n_z != grid.n_z {
        return Err(PicardError::GridMismatch(field.n_t, field.n_z, n_t, grid.n_z));
    }
    if n_t < 3 {
        return Err(PicardError::TooFewTimeLevels(n_t));
    }
    Ok(())
}

/// Cumulative trapezoid of one column in time.
fn cumulative_time_integral(u_col: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(u_col.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..u_col.len() {
        acc += 0.5 * dt * (u_col[i - 1] + u_col[i]);
        out.push(acc);
    }
    out
}

/// Time derivative of one column: centered interior, second-order one-sided
/// at both ends.
fn time_deriv(u_col: &[f64], dt: f64) -> Vec<f64> {
    grid::deriv(u_col, dt)
}

/// Displacement update: integrate the mass-balance equation in time with the
/// velocity frozen,
///   eta(t,z) = g(z) - int_0^t u(s,z) ds - a(t) + 0.3 abar + Q~ t.
pub fn eta_update(
    u_n: &TimeField,
    g: &[f64],
    model: &Model,
    grid: &Grid,
) -> Result<TimeField, PicardError> {
    check_shape(u_n, grid)?;
    if g.len() != u_n.n_z {
        return Err(PicardError::GridMismatch(u_n.n_t, g.len(), u_n.n_t, u_n.n_z));
    }
    let dt = grid.dt;
    let drift: Vec<f64> = (0..u_n.n_t)
        .map(|i| {
            let t = i as f64 * dt;
            -model.forcing(t) + 0.3 * model.params.alpha_bar + model.coeffs.q_tilde * t
        })
        .collect();
    let js: Vec<usize> = (0..u_n.n_z).collect();
    let cols = parallel::map_collect(&js, |&j| {
        let integral = cumulative_time_integral(&u_n.column(j), dt);
        (0..u_n.n_t).map(|i| g[j] - integral[i] + drift[i]).collect::<Vec<f64>>()
    });
    let mut out = TimeField::zeros(u_n.n_t, u_n.n_z);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..u_n.n_t {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}

/// Pressure update: the displacement equation solved for P with the frozen
/// velocity substituted,
///   P = (1/A) [ -alpha d_t u - alpha a'' + k~ Q~ - k~ u - k~ a' + kappa g
///               - kappa int_0^t u - kappa a + 0.3 abar kappa
///               + Q~ kappa t + A P~ ].
/// The time derivative of the frozen velocity is discrete: centered in the
/// interior, second-order one-sided at the first and last levels.
pub fn pressure_update(
    u_n: &TimeField,
    g: &[f64],
    model: &Model,
    grid: &Grid,
) -> Result<TimeField, PicardError> {
    check_shape(u_n, grid)?;
    if g.len() != u_n.n_z {
        return Err(PicardError::GridMismatch(u_n.n_t, g.len(), u_n.n_t, u_n.n_z));
    }
    let dt = grid.dt;
    let p = &model.params;
    let c = &model.coeffs;
    let a_big = p.area;
    let forcing: Vec<(f64, f64, f64)> = (0..u_n.n_t)
        .map(|i| {
            let t = i as f64 * dt;
            (model.forcing(t), model.forcing_dt(t), model.forcing_dtt(t))
        })
        .collect();
    let js: Vec<usize> = (0..u_n.n_z).collect();
    let cols = parallel::map_collect(&js, |&j| {
        let col = u_n.column(j);
        let integral = cumulative_time_integral(&col, dt);
        let dtu = time_deriv(&col, dt);
        (0..u_n.n_t)
            .map(|i| {
                let t = i as f64 * dt;
                let (a, a1, a2) = forcing[i];
                (-c.alpha * dtu[i] - c.alpha * a2 + c.k_tilde * c.q_tilde
                    - c.k_tilde * col[i]
                    - c.k_tilde * a1
                    + c.kappa * g[j]
                    - c.kappa * integral[i]
                    - c.kappa * a
                    + 0.3 * p.alpha_bar * c.kappa
                    + c.q_tilde * c.kappa * t
                    + a_big * p.p_tissue)
                    / a_big
            })
            .collect::<Vec<f64>>()
    });
    let mut out = TimeField::zeros(u_n.n_t, u_n.n_z);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..u_n.n_t {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}

/// First-order upwind spatial derivative against a frozen coefficient.
#[inline]
fn upwind(row: &[f64], j: usize, coeff: f64, dz: f64) -> f64 {
    if coeff >= 0.0 {
        if j == 0 {
            (row[1] - row[0]) / dz
        } else {
            (row[j] - row[j - 1]) / dz
        }
    } else if j == row.len() - 1 {
        (row[j] - row[j - 1]) / dz
    } else {
        (row[j + 1] - row[j]) / dz
    }
}

/// Linear transport solve for the next velocity iterate:
///   rho d_t u + rho u_frozen d_z u + beta u = -d_z p,
/// forward Euler in time, upwind in space on the sign of the frozen
/// coefficient, with u pinned to zero at both ends.
pub fn velocity_update(
    u_n: &TimeField,
    p_next: &TimeField,
    f: &[f64],
    model: &Model,
    grid: &Grid,
) -> Result<TimeField, PicardError> {
    check_shape(u_n, grid)?;
    check_shape(p_next, grid)?;
    if f.len() != u_n.n_z {
        return Err(PicardError::GridMismatch(u_n.n_t, f.len(), u_n.n_t, u_n.n_z));
    }
    let cfl = u_n.sup_norm() * grid.dt / grid.dz;
    if cfl >= 1.0 {
        return Err(PicardError::CflViolation(cfl));
    }
    let (dt, dz) = (grid.dt, grid.dz);
    let (rho, beta) = (model.params.rho, model.coeffs.beta);
    let n_z = u_n.n_z;
    let mut out = TimeField::zeros(u_n.n_t, n_z);
    for j in 0..n_z {
        out.set(0, j, f[j]);
    }
    let mut row: Vec<f64> = f.to_vec();
    let mut next = vec![0.0; n_z];
    for i in 0..u_n.n_t - 1 {
        let dp = grid::deriv(p_next.row(i), dz);
        for j in 1..n_z - 1 {
            let coeff = u_n.at(i, j);
            let adv = coeff * upwind(&row, j, coeff, dz);
            next[j] = row[j] + dt * (-adv - dp[j] / rho - beta / rho * row[j]);
        }
        next[0] = 0.0;
        next[n_z - 1] = 0.0;
        for j in 0..n_z {
            out.set(i + 1, j, next[j]);
        }
        std::mem::swap(&mut row, &mut next);
    }
    Ok(out)
}

/// Outcome of the full iteration.
#[derive(Debug, Clone)]
pub struct PicardRun {
    /// Converged (or last) velocity iterate.
    pub u: TimeField,
    /// Displacement and pressure the last velocity was marched against.
    pub eta: TimeField,
    pub p: TimeField,
    pub iterations: usize,
    /// Sup-norm change of u per iteration.
    pub diff_history: Vec<f64>,
    /// diff_{k+1} / diff_k.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

/// Repeat the three updates until the velocity stops moving in sup norm.
pub fn iterate(
    f: &[f64],
    g: &[f64],
    model: &Model,
    grid: &Grid,
    tol: f64,
    n_max: usize,
) -> Result<PicardRun, PicardError> {
    assert!(tol > 0.0);
    let n_t = grid.n_t();
    let mut u_n = TimeField::from_profile(f, n_t);
    let mut diff_history = Vec::new();
    let mut ratios = Vec::new();
    let mut consecutive_over = 0;
    for iteration in 1..=n_max {
        let eta = eta_update(&u_n, g, model, grid)?;
        let p = pressure_update(&u_n, g, model, grid)?;
        let u_next = velocity_update(&u_n, &p, f, model, grid)?;
        let diff = u_next.sup_diff(&u_n);
        if let Some(&prev) = diff_history.last() {
            if prev > 0.0 {
                let ratio = diff / prev;
                ratios.push(ratio);
                if ratio > 1.0 {
                    consecutive_over += 1;
                    if consecutive_over >= 3 {
                        return Err(PicardError::NotContracting(ratio));
                    }
                } else {
                    consecutive_over = 0;
                }
            }
        }
        diff_history.push(diff);
        let converged = diff < tol;
        u_n = u_next;
        if converged {
            return Ok(PicardRun {
                u: u_n,
                eta,
                p,
                iterations: iteration,
                diff_history,
                ratios,
                converged: true,
            });
        }
        if iteration == n_max {
            return Ok(PicardRun {
                u: u_n,
                eta,
                p,
                iterations: iteration,
                diff_history,
                ratios,
                converged: false,
            });
        }
    }
    unreachable!("loop returns on every path")
}

/// Sup norms of the three coupled-equation residuals, evaluated with the
/// same discrete operators the updates use (trapezoid-consistent time
/// derivative of eta, discrete d_t u, forward-Euler upwind momentum).
#[derive(Debug, Clone, Copy)]
pub struct SystemResidual {
    pub mass: f64,
    pub membrane: f64,
    pub momentum: f64,
}

pub fn system_residual(
    u: &TimeField,
    eta: &TimeField,
    p: &TimeField,
    model: &Model,
    grid: &Grid,
) -> SystemResidual {
    let (dt, dz) = (grid.dt, grid.dz);
    let mp = &model.params;
    let c = &model.coeffs;
    let n_t = u.n_t;
    let n_z = u.n_z;

    let mut mass = 0.0_f64;
    for i in 1..n_t {
        let (t0, t1) = ((i - 1) as f64 * dt, i as f64 * dt);
        let da = (model.forcing(t1) - model.forcing(t0)) / dt;
        for j in 0..n_z {
            let r = (eta.at(i, j) - eta.at(i - 1, j)) / dt
                + da
                + 0.5 * (u.at(i - 1, j) + u.at(i, j))
                - c.q_tilde;
            mass = mass.max(r.abs());
        }
    }

    let mut membrane = 0.0_f64;
    for j in 0..n_z {
        let col = u.column(j);
        let dtu = time_deriv(&col, dt);
        for i in 0..n_t {
            let t = i as f64 * dt;
            let eta_t = -col[i] - model.forcing_dt(t) + c.q_tilde;
            let eta_tt = -dtu[i] - model.forcing_dtt(t);
            let r = c.alpha * eta_tt + c.k_tilde * eta_t + c.kappa * eta.at(i, j)
                - mp.area * p.at(i, j)
                + mp.area * mp.p_tissue;
            membrane = membrane.max(r.abs());
        }
    }

    let mut momentum = 0.0_f64;
    for i in 0..n_t - 1 {
        let dp = grid::deriv(p.row(i), dz);
        let row = u.row(i);
        for j in 1..n_z - 1 {
            let r = mp.rho * (u.at(i + 1, j) - row[j]) / dt
                + mp.rho * row[j] * upwind(row, j, row[j], dz)
                + dp[j]
                + c.beta * row[j];
            momentum = momentum.max(r.abs());
        }
    }
    SystemResidual { mass, membrane, momentum }
}
