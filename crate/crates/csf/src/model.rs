//! Physical parameters, the collected model coefficients and the analytic
//! time-dependent driving terms: the choroid forcing `a(t)` with its first
//! two derivatives, and the periodic production antiderivative `F(t)`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter `{0}` must be finite and positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("parameter `{0}` must be finite and nonnegative, got {1}")]
    Negative(&'static str, f64),
}

/// Raw physiological constants plus geometry. All values in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Fluid density (kg/m^3).
    pub rho: f64,
    /// Fluid viscosity (Pa s).
    pub mu: f64,
    /// Radius of the foramina and aqueduct (m).
    pub r_lumen: f64,
    /// Tissue width (m).
    pub delta_tissue: f64,
    /// Cross section A (m^2).
    pub area: f64,
    /// Spring elasticity k_e (N/m).
    pub k_e: f64,
    /// Brain dampening k_d (N s/m).
    pub k_d: f64,
    /// CSF production rate Q_p (m^3/s).
    pub q_p: f64,
    /// Parenchyma pressure (Pa).
    pub p_tissue: f64,
    /// Amplitude of the choroid expansion (m).
    pub alpha_bar: f64,
    /// Angular frequency of the cardiac forcing (rad/s).
    pub omega: f64,
    /// Compartment length L (m).
    pub length: f64,
}

impl PhysicalParams {
    /// Physiological values in SI units. The lumen radius is not pinned by
    /// measurement; 1e-3 m is a documented assumption.
    pub fn clinical() -> Self {
        PhysicalParams {
            rho: 1004.0,
            mu: 1e-3,
            r_lumen: 1e-3,
            delta_tissue: 5e-4,
            area: 3.5e-6,
            k_e: 8.0,
            k_d: 0.35e-3,
            q_p: 0.32e-6 / 60.0,
            p_tissue: 10.0 * 133.322,
            alpha_bar: 4e-4,
            omega: 2.0 * PI,
            length: 0.07,
        }
    }

    /// Nondimensional desk-scale preset: unit density and section, with the
    /// viscosity back-solved so that beta/rho comes out exactly as requested.
    /// The tissue width is kept thin (2e-3) so the pressure feedback on the
    /// momentum equation is a weak perturbation and the velocity stays close
    /// to the damped Burgers picture the analysis modules reason about; it
    /// also keeps the explicit scheme's lagged pressure coupling stable for
    /// spatial steps down to about twice that width.
    pub fn desk(beta_over_rho: f64) -> Self {
        PhysicalParams {
            rho: 1.0,
            mu: beta_over_rho / 8.0,
            r_lumen: 1.0,
            delta_tissue: 2e-3,
            area: 1.0,
            k_e: 0.1,
            k_d: 0.05,
            q_p: 0.0,
            p_tissue: 0.0,
            alpha_bar: 0.01,
            omega: 2.0 * PI,
            length: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("rho", self.rho),
            ("mu", self.mu),
            ("r_lumen", self.r_lumen),
            ("area", self.area),
            ("length", self.length),
            ("omega", self.omega),
            ("delta_tissue", self.delta_tissue),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ModelError::NonPositive(name, v));
            }
        }
        let nonnegative = [("k_e", self.k_e), ("k_d", self.k_d)];
        for (name, v) in nonnegative {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::Negative(name, v));
            }
        }
        Ok(())
    }
}

/// Coefficients of the coupled system, collected from the raw parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    /// Inertial coefficient alpha = rho * A * delta.
    pub alpha: f64,
    /// Dampening k~ = k_d.
    pub k_tilde: f64,
    /// Elasticity kappa = k_e.
    pub kappa: f64,
    /// Friction beta = 8 mu / r^2 (Pa s / m^2).
    pub beta: f64,
    /// Specific production Q~_p = Q_p / A (m/s).
    pub q_tilde: f64,
}

/// Collect the derived coefficients from validated raw parameters.
pub fn derive(params: &PhysicalParams) -> Result<DerivedCoefficients, ModelError> {
    params.validate()?;
    Ok(DerivedCoefficients {
        alpha: params.rho * params.area * params.delta_tissue,
        k_tilde: params.k_d,
        kappa: params.k_e,
        beta: 8.0 * params.mu / (params.r_lumen * params.r_lumen),
        q_tilde: params.q_p / params.area,
    })
}

/// Raw parameters bundled with their derived coefficients. Immutable after
/// construction; all solvers take this by shared reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub params: PhysicalParams,
    pub coeffs: DerivedCoefficients,
}

impl Model {
    pub fn new(params: PhysicalParams) -> Result<Self, ModelError> {
        let coeffs = derive(&params)?;
        Ok(Model { params, coeffs })
    }

    pub fn desk(beta_over_rho: f64) -> Self {
        Model::new(PhysicalParams::desk(beta_over_rho)).expect("desk preset is valid")
    }

    pub fn beta_over_rho(&self) -> f64 {
        self.coeffs.beta / self.params.rho
    }

    /// Forcing period 2 pi / omega.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.params.omega
    }

    /// Choroid forcing a(t) = abar (1.3 + sin(wt - pi/2) - cos(2wt - pi/2)/2).
    pub fn forcing(&self, t: f64) -> f64 {
        let w = self.params.omega;
        self.params.alpha_bar
            * (1.3 + (w * t - PI / 2.0).sin() - 0.5 * (2.0 * w * t - PI / 2.0).cos())
    }

    /// Analytic a'(t).
    pub fn forcing_dt(&self, t: f64) -> f64 {
        let w = self.params.omega;
        self.params.alpha_bar * (w * (w * t - PI / 2.0).cos() + w * (2.0 * w * t - PI / 2.0).sin())
    }

    /// Analytic a''(t).
    pub fn forcing_dtt(&self, t: f64) -> f64 {
        let w = self.params.omega;
        self.params.alpha_bar
            * (-w * w * (w * t - PI / 2.0).sin() + 2.0 * w * w * (2.0 * w * t - PI / 2.0).cos())
    }

    /// Periodic production antiderivative, default form F(t) = (Q~_p/w) sin(wt).
    /// F(0) = 0 and F has the cardiac period by construction.
    pub fn production_f(&self, t: f64) -> f64 {
        let w = self.params.omega;
        self.coeffs.q_tilde / w * (w * t).sin()
    }

    /// F'(t); the time-varying production rate of the periodic regime.
    pub fn production_f_dt(&self, t: f64) -> f64 {
        let w = self.params.omega;
        self.coeffs.q_tilde * (w * t).cos()
    }

    /// F''(t).
    pub fn production_f_dtt(&self, t: f64) -> f64 {
        let w = self.params.omega;
        -self.coeffs.q_tilde * w * (w * t).sin()
    }
}
