//! Special functions behind the ANOVA F test.

use thiserror::Error;

/// Iteration cap for the incomplete-beta continued fraction.
pub const BETA_CF_MAX_ITER: usize = 300;
/// Relative convergence threshold for the continued fraction.
pub const BETA_CF_EPS: f64 = 1e-14;
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("continued fraction did not converge in {BETA_CF_MAX_ITER} iterations (a={a}, b={b}, x={x})")]
    NoConvergence { a: f64, b: f64, x: f64 },
}

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Continued fraction evaluated by the modified Lentz method; for
/// `x > (a + 1) / (a + b + 2)` the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)`
/// is used so the fraction converges quickly.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(StatsError::InvalidArgument(format!("shape parameters must be positive, got a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(StatsError::InvalidArgument(format!("x must lie in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - beta_cf(b, a, 1.0 - x)?)
    } else {
        beta_cf(a, b, x)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + even * d);
        c = clamp(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + odd * d);
        c = clamp(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_CF_EPS {
            return Ok(front * h);
        }
    }
    Err(StatsError::NoConvergence { a, b, x })
}

/// Upper-tail probability `P(F > f)` of the F distribution with `(df1, df2)`
/// degrees of freedom: `I_x(df2/2, df1/2)` with `x = df2 / (df2 + df1 f)`.
pub fn f_p_value(f: f64, df1: u64, df2: u64) -> Result<f64, StatsError> {
    if df1 == 0 || df2 == 0 {
        return Err(StatsError::InvalidArgument(format!("degrees of freedom must be >= 1, got ({df1}, {df2})")));
    }
    if f.is_nan() || f < 0.0 {
        return Err(StatsError::InvalidArgument(format!("F statistic must be >= 0, got {f}")));
    }
    if f == f64::INFINITY {
        return Ok(0.0);
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let x = d2 / (d2 + d1 * f);
    Ok(regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x)?.clamp(0.0, 1.0))
}

/// `ss_term / (ss_term + ss_residual)`.
pub fn partial_eta_squared(ss_term: f64, ss_residual: f64) -> Result<f64, StatsError> {
    if !(ss_term >= 0.0 && ss_residual >= 0.0) {
        return Err(StatsError::InvalidArgument(format!(
            "sums of squares must be non-negative, got ({ss_term}, {ss_residual})"
        )));
    }
    if ss_term == 0.0 && ss_residual == 0.0 {
        return Err(StatsError::InvalidArgument("partial eta squared undefined when both sums are zero".into()));
    }
    Ok(ss_term / (ss_term + ss_residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.1) - 2.252_712_651_734_206).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_edges() {
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0).unwrap(), 1.0);
        assert!((regularized_incomplete_beta(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-14);
        // I_x(a, 1) = x^a
        assert!((regularized_incomplete_beta(2.5, 1.0, 0.4).unwrap() - 0.4f64.powf(2.5)).abs() < 1e-13);
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn f_p_value_examples() {
        assert_eq!(f_p_value(0.0, 3, 7).unwrap(), 1.0);
        assert!((f_p_value(1.0, 1, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!((f_p_value(1.0, 2, 2).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(f_p_value(f64::INFINITY, 2, 9).unwrap(), 0.0);
        assert!(f_p_value(1.0, 0, 3).is_err());
        assert!(f_p_value(-1.0, 1, 3).is_err());
    }

    #[test]
    fn f_p_value_large_df() {
        let p = f_p_value(1.0, 7, 2989).unwrap();
        assert!(p > 0.3 && p < 0.6, "{p}");
        assert!(f_p_value(50.0, 7, 2989).unwrap() < 1e-40);
    }

    #[test]
    fn eta_squared() {
        assert!((partial_eta_squared(2.0, 98.0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(partial_eta_squared(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(partial_eta_squared(5.0, 0.0).unwrap(), 1.0);
        assert!(partial_eta_squared(0.0, 0.0).is_err());
    }
}
