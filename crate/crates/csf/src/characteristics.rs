//! Method-of-characteristics machinery for the damped Burgers core of the
//! momentum equation: exact homogeneous solution via foot-point inversion,
//! the slope Riccati equation in closed form and by explicit integration,
//! per-foot blow-up classification, and the nonhomogeneous particular /
//! general solutions driven by a constant pressure curvature coefficient.

use thiserror::Error;

use crate::parallel;

#[derive(Debug, Error, PartialEq)]
pub enum CharacteristicsError {
    #[error("no characteristic foot point found for (t, z) = ({0}, {1})")]
    NoRoot(f64, f64),
    #[error("multiple characteristic foot points at (t, z) = ({0}, {1}): characteristics have crossed")]
    MultipleRoots(f64, f64),
    #[error("slope denominator vanishes before t = {0}: gradient blow-up reached")]
    BlowupReached(f64),
    #[error("pressure curvature {p_zz} violates the realness constraint (discriminant {discriminant} < 0)")]
    ComplexEigenvalues { p_zz: f64, discriminant: f64 },
    #[error("particular-solution denominator b(t) vanishes at t = {0}")]
    ZeroDenominator(f64),
    #[error("initial slope is zero at the foot point; the general solution divides by f'(lambda)")]
    SlopeZeroAtFoot,
}

/// Blow-up classification of a single characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lifespan {
    Global,
    FiniteTime(f64),
}

/// Sampled foot points of the characteristic fan with the data they carry.
#[derive(Debug, Clone)]
pub struct CharacteristicFan {
    pub lambdas: Vec<f64>,
    pub f_vals: Vec<f64>,
    pub fprime_vals: Vec<f64>,
    pub beta_over_rho: f64,
}

impl CharacteristicFan {
    /// Sample `n` foot points uniformly over [0, length] from callables.
    pub fn from_fns(
        f: impl Fn(f64) -> f64,
        fprime: impl Fn(f64) -> f64,
        length: f64,
        n: usize,
        beta_over_rho: f64,
    ) -> Self {
        assert!(n >= 2);
        let lambdas: Vec<f64> =
            (0..n).map(|i| i as f64 / (n - 1) as f64 * length).collect();
        let f_vals = lambdas.iter().map(|&l| f(l)).collect();
        let fprime_vals = lambdas.iter().map(|&l| fprime(l)).collect();
        CharacteristicFan { lambdas, f_vals, fprime_vals, beta_over_rho }
    }
}

/// Per-fan blow-up summary.
#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub classifications: Vec<Lifespan>,
    /// Earliest finite blow-up time over the fan, +inf when all global.
    pub min_blowup_time: f64,
    /// min f' + beta/rho; negative means the dichotomy predicts blow-up.
    pub criterion_margin: f64,
}

impl BlowupReport {
    pub fn any_finite(&self) -> bool {
        self.min_blowup_time.is_finite()
    }
}

/// Elapsed-time kernel (rho/beta)(1 - e^{-(beta/rho) t}) that stretches the
/// foot point along the decaying characteristic.
fn stretch(beta_over_rho: f64, t: f64) -> f64 {
    (1.0 - (-beta_over_rho * t).exp()) / beta_over_rho
}

/// Exact solution of the homogeneous equation u_t + u u_z + (beta/rho) u = 0:
/// invert z = lambda + f(lambda) * stretch(t) for the foot point by a
/// bracketed scan, then decay the carried value.
pub fn homogeneous_solution(
    f: impl Fn(f64) -> f64,
    beta_over_rho: f64,
    length: f64,
    t: f64,
    z: f64,
) -> Result<f64, CharacteristicsError> {
    let s = stretch(beta_over_rho, t);
    let residual = |lambda: f64| lambda + f(lambda) * s - z;

    // Monotone scan for sign changes of the foot-point residual.
    const SCAN: usize = 2048;
    let mut brackets = Vec::new();
    let mut prev_l = 0.0;
    let mut prev_r = residual(0.0);
    if prev_r == 0.0 {
        brackets.push((0.0, 0.0));
    }
    for i in 1..=SCAN {
        let l = i as f64 / SCAN as f64 * length;
        let r = residual(l);
        if r == 0.0 {
            brackets.push((l, l));
        } else if prev_r.signum() != r.signum() && prev_r != 0.0 {
            brackets.push((prev_l, l));
        }
        prev_l = l;
        prev_r = r;
    }
    match brackets.len() {
        0 => Err(CharacteristicsError::NoRoot(t, z)),
        1 => {
            let (mut lo, mut hi) = brackets[0];
            // bisection/secant hybrid to machine tolerance
            for _ in 0..200 {
                if hi - lo < 1e-15 * length.max(1.0) {
                    break;
                }
                let (rl, rh) = (residual(lo), residual(hi));
                let mid = if (rh - rl).abs() > 0.0 {
                    let sec = lo - rl * (hi - lo) / (rh - rl);
                    if sec > lo && sec < hi { sec } else { 0.5 * (lo + hi) }
                } else {
                    0.5 * (lo + hi)
                };
                if residual(mid).signum() == rl.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lambda = 0.5 * (lo + hi);
            Ok(f(lambda) * (-beta_over_rho * t).exp())
        }
        _ => Err(CharacteristicsError::MultipleRoots(t, z)),
    }
}

/// Evaluate the homogeneous solution on a (t, z) lattice. Points are
/// independent, so the work is fanned out when the `parallel` feature is on.
pub fn homogeneous_field(
    f: impl Fn(f64) -> f64 + Sync,
    beta_over_rho: f64,
    length: f64,
    ts: &[f64],
    zs: &[f64],
) -> Vec<Result<f64, CharacteristicsError>> {
    let points: Vec<(f64, f64)> =
        ts.iter().flat_map(|&t| zs.iter().map(move |&z| (t, z))).collect();
    parallel::map_collect(&points, |&(t, z)| {
        homogeneous_solution(&f, beta_over_rho, length, t, z)
    })
}

#[doc(hidden)]
pub fn homogeneous_field_seq(
    f: impl Fn(f64) -> f64,
    beta_over_rho: f64,
    length: f64,
    ts: &[f64],
    zs: &[f64],
) -> Vec<Result<f64, CharacteristicsError>> {
    let points: Vec<(f64, f64)> =
        ts.iter().flat_map(|&t| zs.iter().map(move |&z| (t, z))).collect();
    parallel::map_collect_seq(&points, |&(t, z)| {
        homogeneous_solution(&f, beta_over_rho, length, t, z)
    })
}

/// Closed-form slope along a characteristic:
///   u_z(t) = f' e^{-bt} / (1 + f' (1 - e^{-bt}) / b),  b = beta/rho.
pub fn slope_closed_form(
    fprime0: f64,
    beta_over_rho: f64,
    t: f64,
) -> Result<f64, CharacteristicsError> {
    if let Lifespan::FiniteTime(t_blow) = blowup_time(fprime0, beta_over_rho) {
        if t >= t_blow {
            return Err(CharacteristicsError::BlowupReached(t));
        }
    }
    let decay = (-beta_over_rho * t).exp();
    Ok(fprime0 * decay / (1.0 + fprime0 * stretch(beta_over_rho, t)))
}

/// Blow-up dichotomy for one characteristic: global iff f' >= -beta/rho,
/// otherwise the denominator root T = (rho/beta) ln(f' / (f' + beta/rho)).
pub fn blowup_time(fprime0: f64, beta_over_rho: f64) -> Lifespan {
    if fprime0 >= -beta_over_rho {
        Lifespan::Global
    } else {
        Lifespan::FiniteTime((fprime0 / (fprime0 + beta_over_rho)).ln() / beta_over_rho)
    }
}

/// Classify every foot point of the fan; data-parallel per foot.
pub fn scan_fan(fan: &CharacteristicFan) -> BlowupReport {
    let b = fan.beta_over_rho;
    let classifications = parallel::map_collect(&fan.fprime_vals, |&fp| blowup_time(fp, b));
    summarize(fan, classifications)
}

#[doc(hidden)]
pub fn scan_fan_seq(fan: &CharacteristicFan) -> BlowupReport {
    let b = fan.beta_over_rho;
    let classifications = parallel::map_collect_seq(&fan.fprime_vals, |&fp| blowup_time(fp, b));
    summarize(fan, classifications)
}

fn summarize(fan: &CharacteristicFan, classifications: Vec<Lifespan>) -> BlowupReport {
    let min_blowup_time = classifications
        .iter()
        .filter_map(|c| match c {
            Lifespan::FiniteTime(t) => Some(*t),
            Lifespan::Global => None,
        })
        .fold(f64::INFINITY, f64::min);
    let min_slope = fan.fprime_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    BlowupReport {
        classifications,
        min_blowup_time,
        criterion_margin: min_slope + fan.beta_over_rho,
    }
}

/// Coefficients of the nonhomogeneous slope Riccati equation
///   w' + w^2 + b w + b p_zz = 0,  b = beta/rho,
/// with the pressure curvature frozen to a constant and the eigenvalues of
/// the order-reduction linear system precomputed.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiSetup {
    pub beta_over_rho: f64,
    pub p_zz: f64,
    pub omega0: f64,
    pub eig1: f64,
    pub eig2: f64,
}

pub fn riccati_setup(
    beta_over_rho: f64,
    p_zz: f64,
    omega0: f64,
) -> Result<RiccatiSetup, CharacteristicsError> {
    let b = beta_over_rho;
    let discriminant = b * b - 4.0 * b * p_zz;
    if discriminant < 0.0 {
        return Err(CharacteristicsError::ComplexEigenvalues { p_zz, discriminant });
    }
    let root = discriminant.sqrt();
    Ok(RiccatiSetup {
        beta_over_rho,
        p_zz,
        omega0,
        eig1: 0.5 * (b + root),
        eig2: 0.5 * (b - root),
    })
}

impl RiccatiSetup {
    /// Numerator/denominator pair (a, b) of the particular solution: the
    /// exact solution of a' = -b_c p_zz b, b' = a + b_c b with a(0) = w0,
    /// b(0) = 2, written out per eigenstructure.
    fn linear_pair(&self, t: f64) -> (f64, f64) {
        let bc = self.beta_over_rho;
        let w0 = self.omega0;
        if self.p_zz == 0.0 {
            // a is constant; b solves b' = a + b_c b directly.
            let a = w0;
            let b = (2.0 + w0 / bc) * (bc * t).exp() - w0 / bc;
            return (a, b);
        }
        let (l1, l2) = (self.eig1, self.eig2);
        if (l1 - l2).abs() > 1e-12 * l1.abs().max(l2.abs()).max(1.0) {
            // distinct eigenvalues
            let a1 = (-2.0 * bc * self.p_zz - w0 * l2) / (l1 - l2);
            let a2 = w0 - a1;
            let b1 = -a1 * l1 / (bc * self.p_zz);
            let b2 = -a2 * l2 / (bc * self.p_zz);
            let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
            (a1 * e1 + a2 * e2, b1 * e1 + b2 * e2)
        } else {
            // repeated eigenvalue l = b_c / 2
            let l = 0.5 * bc;
            let a2 = -2.0 * l * l - l * w0;
            let b2 = 2.0 * l + w0;
            let e = (l * t).exp();
            ((w0 + a2 * t) * e, (2.0 + b2 * t) * e)
        }
    }

    /// Particular solution w_bar(t) = a(t)/b(t).
    pub fn particular(&self, t: f64) -> Result<f64, CharacteristicsError> {
        let (a, b) = self.linear_pair(t);
        if b == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(CharacteristicsError::ZeroDenominator(t));
        }
        Ok(a / b)
    }

    /// General solution w(t) = w_bar(t) + 1/y(t), where y solves the linear
    /// equation y' = (2 w_bar + b_c) y + 1 with y(0) = 2 / w0. The integrating
    /// factor collapses to (b(t)/2)^2 e^{-b_c t} through the linear pair, and
    /// the remaining quadrature is done adaptively.
    pub fn general(&self, t: f64) -> Result<f64, CharacteristicsError> {
        if self.omega0 == 0.0 {
            return Err(CharacteristicsError::SlopeZeroAtFoot);
        }
        let bc = self.beta_over_rho;
        let w_bar = self.particular(t)?;
        let b_at = |tau: f64| self.linear_pair(tau).1;
        let b0 = b_at(0.0); // = 2 by construction
        let factor = |tau: f64| {
            let r = b_at(tau) / b0;
            r * r * (-bc * tau).exp()
        };
        let integrand = |tau: f64| 1.0 / factor(tau);
        let integral = adaptive_simpson(&integrand, 0.0, t, 1e-12, 40);
        let y = factor(t) * (2.0 / self.omega0 + integral);
        if y == 0.0 || !y.is_finite() {
            return Err(CharacteristicsError::ZeroDenominator(t));
        }
        Ok(w_bar + 1.0 / y)
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, simpson(f, a, b), tol, depth)
}

/// Outcome of explicit integration of the slope equation.
#[derive(Debug, Clone)]
pub struct RiccatiTrace {
    /// (t, w) samples up to divergence or t_max.
    pub samples: Vec<(f64, f64)>,
    /// Divergence timestamp when |w| crossed the threshold, if any.
    pub diverged_at: Option<f64>,
}

const DIVERGENCE_THRESHOLD: f64 = 1e9;

/// Classic explicit fourth-order integration of
///   w' = -w^2 - b w - b p_zz(t),
/// with sub-stepping that shrinks near the singularity and a refinement of
/// the threshold crossing to ~1e-6 in time. Divergence is a valid result.
pub fn riccati_integrate(
    beta_over_rho: f64,
    p_zz: impl Fn(f64) -> f64,
    omega0: f64,
    t_max: f64,
    dt: f64,
) -> RiccatiTrace {
    assert!(dt > 0.0);
    let rhs = |t: f64, w: f64| -w * w - beta_over_rho * w - beta_over_rho * p_zz(t);
    let rk4 = |t: f64, w: f64, h: f64| -> f64 {
        let k1 = rhs(t, w);
        let k2 = rhs(t + 0.5 * h, w + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, w + 0.5 * h * k2);
        let k4 = rhs(t + h, w + h * k3);
        w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let exceeded = |w: f64| !w.is_finite() || w.abs() > DIVERGENCE_THRESHOLD;

    let mut samples = vec![(0.0, omega0)];
    let mut t = 0.0;
    let mut w = omega0;
    while t < t_max {
        // keep |w| * h small so the step resolves the approach to the pole
        let h = dt.min(0.05 / w.abs().max(1.0)).min(t_max - t);
        let w_next = rk4(t, w, h);
        if exceeded(w_next) {
            // bisect inside [t, t + h] for the threshold crossing
            let (mut lo, mut hi) = (t, t + h);
            let mut w_lo = w;
            while hi - lo > 1e-6 * t_max.max(1.0) {
                let mid = 0.5 * (lo + hi);
                let w_mid = rk4(lo, w_lo, mid - lo);
                if exceeded(w_mid) {
                    hi = mid;
                } else {
                    lo = mid;
                    w_lo = w_mid;
                }
            }
            let t_cross = 0.5 * (lo + hi);
            samples.push((t_cross, w_lo));
            return RiccatiTrace { samples, diverged_at: Some(t_cross) };
        }
        t += h;
        w = w_next;
        samples.push((t, w));
    }
    RiccatiTrace { samples, diverged_at: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn homogeneous_identity_at_t0() {
        let f = |z: f64| 0.3 * (2.0 * std::f64::consts::PI * z).sin();
        for &z in &[0.0, 0.25, 0.6, 1.0] {
            let u = homogeneous_solution(f, 1.0, 1.0, 0.0, z).unwrap();
            assert_relative_eq!(u, f(z), epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneous_uniform_state_decays() {
        let c = 0.4;
        for &t in &[0.1, 0.5, 2.0] {
            let u = homogeneous_solution(|_| c, 1.0, 1.0, t, 0.7).unwrap();
            assert_relative_eq!(u, c * (-t).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn homogeneous_linear_profile_hand_solution() {
        // f(l) = l, b = 1: foot point l = z / (2 - e^{-t}), u = l e^{-t}
        let (t, z) = (0.8, 0.5);
        let lambda = z / (2.0 - (-t as f64).exp());
        let u = homogeneous_solution(|l| l, 1.0, 1.0, t, z).unwrap();
        assert_relative_eq!(u, lambda * (-t as f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn homogeneous_reports_crossing() {
        // min slope -2 pi at the midpoint blows up at t ~ 0.17; well beyond
        // it the foot-point equation folds and loses single-valuedness
        let f = |z: f64| (2.0 * std::f64::consts::PI * z).sin();
        let res = homogeneous_solution(f, 1.0, 1.0, 1.0, 0.5);
        assert!(matches!(
            res,
            Err(CharacteristicsError::MultipleRoots(..)) | Err(CharacteristicsError::NoRoot(..))
        ));
    }

    #[test]
    fn slope_zero_stays_zero() {
        for &t in &[0.0, 1.0, 10.0] {
            assert_eq!(slope_closed_form(0.0, 1.0, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn slope_boundary_case_is_constant() {
        let b = 0.7;
        for &t in &[0.0, 0.5, 3.0] {
            assert_relative_eq!(slope_closed_form(-b, b, t).unwrap(), -b, max_relative = 1e-12);
        }
    }

    #[test]
    fn slope_diverges_at_log2() {
        let t_blow = std::f64::consts::LN_2;
        let w = slope_closed_form(-2.0, 1.0, t_blow - 1e-9).unwrap();
        assert!(w.abs() > 1e8);
        assert!(matches!(
            slope_closed_form(-2.0, 1.0, t_blow + 1e-9),
            Err(CharacteristicsError::BlowupReached(_))
        ));
    }

    #[test]
    fn blowup_time_values() {
        assert_eq!(blowup_time(0.5, 1.0), Lifespan::Global);
        assert_eq!(blowup_time(-1.0, 1.0), Lifespan::Global);
        match blowup_time(-2.0, 1.0) {
            Lifespan::FiniteTime(t) => assert_relative_eq!(t, std::f64::consts::LN_2, max_relative = 1e-12),
            _ => panic!("expected finite-time blow-up"),
        }
    }

    #[test]
    fn rk4_matches_closed_form_blowup_time() {
        let trace = riccati_integrate(1.0, |_| 0.0, -2.0, 5.0, 1e-3);
        let t = trace.diverged_at.expect("should diverge");
        assert!((t - std::f64::consts::LN_2).abs() < 1e-4, "got {t}");
    }

    #[test]
    fn rk4_damped_positive_slope_converges() {
        let trace = riccati_integrate(1.0, |_| 0.0, 1.0, 20.0, 1e-2);
        assert!(trace.diverged_at.is_none());
        let (_, w_end) = *trace.samples.last().unwrap();
        assert!(w_end.abs() < 1e-6);
    }

    #[test]
    fn rk4_equilibrium_stays_put() {
        // roots of w^2 + b w + b p = 0 are -eig1, -eig2
        let setup = riccati_setup(1.0, 0.125, 0.0).unwrap();
        let w_eq = -setup.eig2;
        assert_relative_eq!(w_eq * w_eq + w_eq + 0.125, 0.0, epsilon = 1e-12);
        let trace = riccati_integrate(1.0, |_| 0.125, w_eq, 10.0, 1e-2);
        assert!(trace.diverged_at.is_none());
        for &(_, w) in &trace.samples {
            assert_relative_eq!(w, w_eq, epsilon = 1e-9);
        }
    }

    #[test]
    fn scan_fan_classifications() {
        let fan = CharacteristicFan::from_fns(|_| 0.0, |_| 0.0, 1.0, 64, 1.0);
        let report = scan_fan(&fan);
        assert!(!report.any_finite());
        assert!(report.classifications.iter().all(|c| *c == Lifespan::Global));

        // f = -e^l, b = 0.5: blow-up everywhere, earliest at l = 1
        let fan =
            CharacteristicFan::from_fns(|l| -l.exp(), |l| -l.exp(), 1.0, 128, 0.5);
        let report = scan_fan(&fan);
        assert!(report
            .classifications
            .iter()
            .all(|c| matches!(c, Lifespan::FiniteTime(_))));
        let e = std::f64::consts::E;
        let t_expected = 2.0 * (e / (e - 0.5)).ln();
        assert_relative_eq!(report.min_blowup_time, t_expected, max_relative = 1e-10);

        // f = 4 sin(pi l), b = 4 pi + 1: all global
        let pi = std::f64::consts::PI;
        let fan = CharacteristicFan::from_fns(
            |l| 4.0 * (pi * l).sin(),
            |l| 4.0 * pi * (pi * l).cos(),
            1.0,
            128,
            4.0 * pi + 1.0,
        );
        assert!(!scan_fan(&fan).any_finite());
    }

    #[test]
    fn scan_fan_parallel_matches_sequential() {
        let fan =
            CharacteristicFan::from_fns(|l| -l.exp(), |l| -l.exp(), 1.0, 257, 0.5);
        let a = scan_fan(&fan);
        let b = scan_fan_seq(&fan);
        assert_eq!(a.classifications, b.classifications);
        assert_eq!(a.min_blowup_time, b.min_blowup_time);
    }

    #[test]
    fn riccati_setup_eigenvalues() {
        let s = riccati_setup(1.0, 0.0, 0.3).unwrap();
        assert_relative_eq!(s.eig1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.eig2, 0.0, epsilon = 1e-14);

        let s = riccati_setup(1.0, 0.125, 0.3).unwrap();
        assert_relative_eq!(s.eig1, 0.5 * (1.0 + 0.5_f64.sqrt()), epsilon = 1e-14);
        assert_relative_eq!(s.eig2, 0.5 * (1.0 - 0.5_f64.sqrt()), epsilon = 1e-14);

        assert!(matches!(
            riccati_setup(1.0, 0.3, 0.3),
            Err(CharacteristicsError::ComplexEigenvalues { .. })
        ));
    }

    #[test]
    fn particular_zero_case() {
        let s = riccati_setup(1.0, 0.0, 0.0).unwrap();
        for &t in &[0.0, 0.5, 3.0] {
            assert_eq!(s.particular(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn particular_repeated_eigenvalue_initial_value() {
        // p_zz = b/4 forces a repeated eigenvalue; w_bar(0) = w0 / 2
        let w0 = -0.8;
        let s = riccati_setup(2.0, 0.5, w0).unwrap();
        assert_relative_eq!(s.eig1, s.eig2, epsilon = 1e-14);
        assert_relative_eq!(s.particular(0.0).unwrap(), w0 / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn particular_satisfies_riccati_ode() {
        for &(b, p_zz, w0) in &[(1.0, 0.1, 0.4), (2.0, 0.5, -0.3), (1.5, -0.4, 0.2)] {
            let s = riccati_setup(b, p_zz, w0).unwrap();
            let h = 1e-6;
            for i in 1..20 {
                let t = i as f64 * 0.05;
                let w = s.particular(t).unwrap();
                let wp = (s.particular(t + h).unwrap() - s.particular(t - h).unwrap())
                    / (2.0 * h);
                let residual = wp + w * w + b * w + b * p_zz;
                assert!(residual.abs() < 1e-8, "residual {residual} at t = {t}");
            }
        }
    }

    #[test]
    fn general_reduces_to_closed_form_without_curvature() {
        let (b, w0) = (1.0, -0.6);
        let s = riccati_setup(b, 0.0, w0).unwrap();
        for i in 0..20 {
            let t = i as f64 * 0.25;
            let expected = slope_closed_form(w0, b, t).unwrap();
            let got = s.general(t).unwrap();
            assert!((got - expected).abs() < 1e-8, "diff at t = {t}");
        }
    }

    #[test]
    fn general_initial_value_is_consistent() {
        for &(b, p_zz, w0) in &[(1.0, 0.1, 0.4), (2.0, 0.5, -0.3)] {
            let s = riccati_setup(b, p_zz, w0).unwrap();
            assert_relative_eq!(s.general(0.0).unwrap(), w0, epsilon = 1e-12);
        }
    }

    #[test]
    fn general_matches_rk4() {
        let (b, p_zz, w0) = (1.0, 0.2, 0.5);
        let s = riccati_setup(b, p_zz, w0).unwrap();
        let trace = riccati_integrate(b, |_| p_zz, w0, 2.0, 1e-4);
        assert!(trace.diverged_at.is_none());
        for &(t, w_ref) in trace.samples.iter().step_by(200) {
            let w = s.general(t).unwrap();
            assert!((w - w_ref).abs() < 1e-6, "t = {t}: {w} vs {w_ref}");
        }
    }

    #[test]
    fn general_rejects_zero_initial_slope() {
        let s = riccati_setup(1.0, 0.1, 0.0).unwrap();
        assert!(matches!(s.general(0.5), Err(CharacteristicsError::SlopeZeroAtFoot)));
    }

    proptest! {
        #[test]
        fn blowup_time_monotone_in_slope(
            b in 0.1_f64..5.0,
            f1 in -20.0_f64..-0.11,
            shift in 0.01_f64..5.0,
        ) {
            // only compare genuinely super-critical slopes
            prop_assume!(f1 < -b - 0.05);
            let f2 = f1 - shift;
            match (blowup_time(f1, b), blowup_time(f2, b)) {
                (Lifespan::FiniteTime(t1), Lifespan::FiniteTime(t2)) => {
                    prop_assert!(t2 < t1, "t1 = {t1}, t2 = {t2}");
                }
                other => prop_assert!(false, "unexpected classification {other:?}"),
            }
        }

        #[test]
        fn blowup_scaling_invariance(
            b in 0.1_f64..4.0,
            fp in -10.0_f64..5.0,
            c in 0.1_f64..10.0,
        ) {
            let base = blowup_time(fp, b);
            let scaled = blowup_time(c * fp, c * b);
            match (base, scaled) {
                (Lifespan::Global, Lifespan::Global) => {}
                (Lifespan::FiniteTime(t1), Lifespan::FiniteTime(t2)) => {
                    prop_assert!((t2 - t1 / c).abs() < 1e-9 * t1.max(1.0));
                }
                other => prop_assert!(false, "classification changed under scaling: {other:?}"),
            }
        }
    }

    #[test]
    fn homogeneous_solution_satisfies_pde() {
        // discrete PDE residual from the exact solution shrinks under
        // stencil refinement, sampled away from any crossing
        let f = |z: f64| 0.2 * (2.0 * std::f64::consts::PI * z).sin();
        let b = 1.0;
        let residual = |h: f64| -> f64 {
            let mut worst = 0.0_f64;
            for &(t, z) in &[(0.2, 0.3), (0.4, 0.6), (0.1, 0.8)] {
                let u = |tt: f64, zz: f64| homogeneous_solution(f, b, 1.0, tt, zz).unwrap();
                let u0 = u(t, z);
                let ut = (u(t + h, z) - u(t - h, z)) / (2.0 * h);
                let uz = (u(t, z + h) - u(t, z - h)) / (2.0 * h);
                worst = worst.max((ut + u0 * uz + b * u0).abs());
            }
            worst
        };
        let r1 = residual(1e-3);
        let r2 = residual(5e-4);
        assert!(r2 < r1.max(1e-10) * 1.05, "r1 = {r1}, r2 = {r2}");
        assert!(r1 < 1e-4);
    }
}
