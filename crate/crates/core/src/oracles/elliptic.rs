//! Analytic pendulum reference: complete elliptic integral, Jacobi elliptic
//! sine, and the closed-form swing of a physical pendulum released from the
//! horizontal.

#[derive(Debug, Clone, PartialEq)]
pub enum EllipticError {
    OutOfDomain { kappa: f64 },
}

impl std::fmt::Display for EllipticError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EllipticError::OutOfDomain { kappa } => {
                write!(f, "modulus κ = {kappa} outside [0, 1)")
            }
        }
    }
}

impl std::error::Error for EllipticError {}

/// Complete elliptic integral of the first kind `K(κ)` by the
/// arithmetic-geometric mean: `K = π / (2 agm(1, √(1−κ²)))`.
pub fn elliptic_k(kappa: f64) -> Result<f64, EllipticError> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(EllipticError::OutOfDomain { kappa });
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - kappa * kappa).sqrt();
    // quadratic convergence: a handful of iterations reaches roundoff
    for _ in 0..40 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(std::f64::consts::PI / (2.0 * a))
}

/// Jacobi elliptic sine `sn(u, κ)` by the descending-Landen / AGM scheme
/// (Abramowitz & Stegun 16.4), with argument reduction modulo the full
/// period `4K(κ)`.
pub fn jacobi_sn(u: f64, kappa: f64) -> Result<f64, EllipticError> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(EllipticError::OutOfDomain { kappa });
    }
    if kappa < 1e-12 {
        return Ok(u.sin());
    }
    let k_quarter = elliptic_k(kappa)?;
    let period = 4.0 * k_quarter;
    let u = u - (u / period).round() * period;

    let mut a = vec![1.0_f64];
    let mut c = vec![kappa];
    let mut b = (1.0 - kappa * kappa).sqrt();
    while c.last().copied().unwrap_or(0.0).abs() > 1e-16 {
        let an = 0.5 * (a.last().unwrap() + b);
        let cn = 0.5 * (a.last().unwrap() - b);
        b = (a.last().unwrap() * b).sqrt();
        a.push(an);
        c.push(cn);
        if a.len() > 60 {
            break;
        }
    }
    let n = a.len() - 1;
    let mut phi = (1 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    Ok(phi.sin())
}

/// Physical-pendulum parameters for the horizontal-release swing.
#[derive(Debug, Clone, Copy)]
pub struct PendulumParams {
    /// Elliptic modulus `κ = sin(φ₀/2)`; horizontal release → `√2/2`.
    pub kappa: f64,
    /// Small-oscillation frequency `ω_lin = √(m g d / I_pivot)`, rad/s.
    pub omega_lin: f64,
}

impl PendulumParams {
    /// Compound pendulum released from the horizontal: `d` is the
    /// pivot-to-center-of-mass distance, `i_pivot` the inertia about the
    /// pivot axis.
    pub fn horizontal_release(mass: f64, gravity: f64, d: f64, i_pivot: f64) -> PendulumParams {
        PendulumParams {
            kappa: (std::f64::consts::FRAC_PI_4).sin(),
            omega_lin: (mass * gravity * d / i_pivot).sqrt(),
        }
    }

    /// Full swing period `4K(κ)/ω_lin`, s.
    pub fn period(&self) -> f64 {
        4.0 * elliptic_k(self.kappa).expect("κ < 1") / self.omega_lin
    }
}

/// Swing angle below the horizontal:
/// `θ(t) = π/2 − 2 arcsin(κ sn(K(κ) − ω_lin t, κ))`.
///
/// `θ(0) = π/2 − 2 arcsin(κ)` (zero for the horizontal release); the angle
/// from the downward vertical is `π/2 − θ(t)`.
pub fn pendulum_theta(t: f64, params: &PendulumParams) -> f64 {
    let k = elliptic_k(params.kappa).expect("κ < 1");
    let sn = jacobi_sn(k - params.omega_lin * t, params.kappa).expect("κ < 1");
    std::f64::consts::FRAC_PI_2 - 2.0 * (params.kappa * sn).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn k_at_zero_is_half_pi() {
        assert_relative_eq!(
            elliptic_k(0.0).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn k_monotone_and_finite_near_one() {
        let mut prev = 0.0;
        for kappa in [0.0, 0.3, 0.6, 0.9, 0.99, 1.0 - 1e-9] {
            let k = elliptic_k(kappa).unwrap();
            assert!(k.is_finite());
            assert!(k > prev);
            prev = k;
        }
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
    }

    /// Composite-Simpson quadrature of the defining integral
    /// `K(κ) = ∫₀^{π/2} dθ/√(1 − κ² sin²θ)` — independent of the AGM.
    fn k_by_quadrature(kappa: f64, intervals: usize) -> f64 {
        let h = std::f64::consts::FRAC_PI_2 / intervals as f64;
        let f = |theta: f64| 1.0 / (1.0 - kappa * kappa * theta.sin().powi(2)).sqrt();
        let mut sum = f(0.0) + f(std::f64::consts::FRAC_PI_2);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn k_matches_quadrature() {
        let k = elliptic_k(0.5).unwrap();
        let oracle = k_by_quadrature(0.5, 1_000_000);
        assert_relative_eq!(k, oracle, max_relative = 1e-9);
    }

    #[test]
    fn sn_degenerate_modulus_is_sine() {
        for u in [-2.0, -0.5, 0.0, 0.7, 3.1] {
            assert_relative_eq!(jacobi_sn(u, 0.0).unwrap(), u.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn sn_quarter_period_is_one() {
        for kappa in [0.2, 0.5, 0.7071, 0.9] {
            let k = elliptic_k(kappa).unwrap();
            assert_relative_eq!(jacobi_sn(k, kappa).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    /// Independent sn oracle: numerically invert the incomplete elliptic
    /// integral `u = F(φ, κ)` (adaptive Simpson + bisection), `sn = sin φ`.
    fn sn_by_inversion(u: f64, kappa: f64) -> f64 {
        let f_of = |phi: f64| {
            // fine fixed Simpson; integrand smooth for κ < 1
            let n = 20_000;
            let h = phi / n as f64;
            let g = |t: f64| 1.0 / (1.0 - (kappa * t.sin()).powi(2)).sqrt();
            let mut s = g(0.0) + g(phi);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            s * h / 3.0
        };
        let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f_of(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).sin()
    }

    #[test]
    fn sn_matches_inversion_oracle() {
        let sn = jacobi_sn(0.7, 0.6).unwrap();
        assert_relative_eq!(sn, sn_by_inversion(0.7, 0.6), max_relative = 1e-9);
    }

    #[test]
    fn sn_bounded_and_periodic() {
        let kappa = 0.65;
        let k = elliptic_k(kappa).unwrap();
        for i in 0..200 {
            let u = -30.0 + 0.3 * i as f64;
            let s = jacobi_sn(u, kappa).unwrap();
            assert!(s.abs() <= 1.0 + 1e-12);
            let sp = jacobi_sn(u + 4.0 * k, kappa).unwrap();
            assert_relative_eq!(s, sp, epsilon = 1e-9);
        }
    }

    #[test]
    fn theta_starts_at_zero_and_is_periodic() {
        let params = PendulumParams::horizontal_release(1.0, 9.81, 0.25, 1.0 / 12.0 + 0.0625);
        let theta0 = pendulum_theta(0.0, &params);
        // horizontal release: κ = sin(π/4), so θ(0) = π/2 − 2·(π/4) = 0
        assert_relative_eq!(theta0, 0.0, epsilon = 1e-12);
        let period = params.period();
        for t in [0.13, 0.5, 1.7] {
            assert_relative_eq!(
                pendulum_theta(t, &params),
                pendulum_theta(t + period, &params),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn energy_constant_along_analytic_swing() {
        // φ = π/2 − θ is the angle from the downward vertical;
        // E = ½ I φ̇² − m g d cos φ must be constant
        let (m, g, d) = (2.0, 9.81, 0.3);
        let i_pivot = 0.4;
        let params = PendulumParams::horizontal_release(m, g, d, i_pivot);
        let phi = |t: f64| std::f64::consts::FRAC_PI_2 - pendulum_theta(t, &params);
        let dt = 1e-5;
        // horizontal release has zero total energy; scale by m g d
        let e_ref = -m * g * d * phi(0.0).cos();
        let scale = m * g * d;
        for i in 1..50 {
            let t = 0.05 * i as f64;
            let phidot = (phi(t + dt) - phi(t - dt)) / (2.0 * dt);
            let e = 0.5 * i_pivot * phidot * phidot - m * g * d * phi(t).cos();
            assert!(
                (e - e_ref).abs() <= 1e-8 * scale,
                "energy drift {:.3e} at t = {t}",
                (e - e_ref).abs() / scale
            );
        }
    }
}
