//! Uniform space-time mesh and the shared finite-difference stencils.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid step `{0}` must be finite and positive, got {1}")]
    BadStep(&'static str, f64),
}

/// Uniform spatial mesh with explicit time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Node count (including both boundary nodes).
    pub n_z: usize,
    /// Spacing L / (n_z - 1).
    pub dz: f64,
    /// Time step.
    pub dt: f64,
    /// Final time.
    pub t_end: f64,
}

impl Grid {
    pub fn new(n_z: usize, length: f64, dt: f64, t_end: f64) -> Result<Self, GridError> {
        if n_z < 3 {
            return Err(GridError::TooFewNodes(n_z));
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(GridError::BadStep("length", length));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(GridError::BadStep("dt", dt));
        }
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(GridError::BadStep("t_end", t_end));
        }
        Ok(Grid { n_z, dz: length / (n_z - 1) as f64, dt, t_end })
    }

    pub fn length(&self) -> f64 {
        self.dz * (self.n_z - 1) as f64
    }

    /// Node coordinates 0, dz, ..., L.
    pub fn zs(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| j as f64 * self.dz).collect()
    }

    /// Sample a function of z on every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.zs().into_iter().map(f).collect()
    }

    /// Number of time levels 0, dt, ..., up to and including t_end
    /// (t_end is rounded to the nearest multiple of dt).
    pub fn n_t(&self) -> usize {
        (self.t_end / self.dt).round() as usize + 1
    }
}

/// Spatial derivative: centered in the interior, second-order one-sided at
/// the two boundary nodes.
pub fn deriv(v: &[f64], dz: f64) -> Vec<f64> {
    let n = v.len();
    assert!(n >= 3, "stencil needs at least 3 samples");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dz);
    for j in 1..n - 1 {
        d[j] = (v[j + 1] - v[j - 1]) / (2.0 * dz);
    }
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dz);
    d
}

/// Discrete L2 norm with uniform weight dz.
pub fn l2_norm(v: &[f64], dz: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * dz).sqrt()
}

/// Sup norm.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Composite trapezoid of the samples over a uniform step.
pub fn trapz(v: &[f64], h: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let interior: f64 = v[1..v.len() - 1].iter().sum();
    h * (0.5 * (v[0] + v[v.len() - 1]) + interior)
}
