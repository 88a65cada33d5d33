//! The Fejér-type energy mollifier `δ_t(E) = t δ₁(tE)` and its sharp limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `|E|` the series form of `δ₁` is used.
pub const TAYLOR_SWITCH: f64 = 1e-4;

/// `δ₁(E) = (2/π) sin²(E/2) / E²`, with the removable singularity filled in.
#[inline]
pub fn delta1(e: f64) -> f64 {
    if e.abs() < TAYLOR_SWITCH {
        let e2 = e * e;
        (2.0 / PI) * 0.25 * (1.0 - e2 / 12.0 + e2 * e2 / 360.0)
    } else {
        let s = (0.5 * e).sin();
        (2.0 / PI) * s * s / (e * e)
    }
}

pub fn delta_t(t: f64, e: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(delta_t_unchecked(t, e))
}

#[inline]
pub(crate) fn delta_t_unchecked(t: f64, e: f64) -> f64 {
    t * delta1(t * e)
}

/// Coefficient `κ` that replaces `δ_t(ΔE) / t` on an exact energy resonance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KroneckerConvention {
    /// `κ = δ₁(0) = 1/(2π)`, the limit of the mollifier as written.
    #[default]
    Consistent,
    /// `κ = 2/π`.
    Paper,
}

impl KroneckerConvention {
    pub fn coeff(self) -> f64 {
        match self {
            KroneckerConvention::Consistent => delta1(0.0),
            KroneckerConvention::Paper => 2.0 / PI,
        }
    }
}

impl std::str::FromStr for KroneckerConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(KroneckerConvention::Consistent),
            "paper" => Ok(KroneckerConvention::Paper),
            other => Err(Error::Config(format!("unknown kronecker convention {other:?}"))),
        }
    }
}

/// One evaluation of the sharp-limit deviation of `δ_t(x + λ y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpLimitSample {
    pub x: i64,
    pub y: f64,
    pub lambda: f64,
    pub t: f64,
    /// `|δ_t(x + λy) - κ t δ_{x,0}|`.
    pub deviation: f64,
    /// `1/(x² t)` off resonance, zero on it.
    pub off_resonance: f64,
    /// `λ² t³ y²` on resonance, zero off it.
    pub on_resonance: f64,
}

impl SharpLimitSample {
    /// Deviation divided by the active structural term (`None` if that term is zero).
    pub fn ratio(&self) -> Option<f64> {
        let b = self.off_resonance + self.on_resonance;
        (b > 0.0).then(|| self.deviation / b)
    }
}

pub fn sharp_limit_error(
    x: i64,
    y: f64,
    lambda: f64,
    t: f64,
    convention: KroneckerConvention,
) -> Result<SharpLimitSample> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if lambda * y.abs() > 0.5 {
        return Err(Error::Hypothesis(format!("λ|y| = {} exceeds 1/2", lambda * y.abs())));
    }
    let value = delta_t_unchecked(t, x as f64 + lambda * y);
    let kron = if x == 0 { convention.coeff() * t } else { 0.0 };
    let (off, on) = if x == 0 {
        (0.0, lambda * lambda * t * t * t * y * y)
    } else {
        (1.0 / ((x * x) as f64 * t), 0.0)
    };
    Ok(SharpLimitSample {
        x,
        y,
        lambda,
        t,
        deviation: (value - kron).abs(),
        off_resonance: off,
        on_resonance: on,
    })
}

/// `2 Re ∫₀ᵗ ∫₀^{t₁} e^{iωt₂} dt₂ dt₁ = 4 sin²(ωt/2)/ω²`.
pub fn double_time_integral(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < 1e-8 {
        return t * t * (1.0 - x * x / 12.0);
    }
    let s = (0.5 * x).sin();
    4.0 * s * s / (omega * omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta1_examples() {
        assert!((delta1(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert!((delta1(PI) - 2.0 / PI.powi(3)).abs() < 1e-16);
        assert!(delta1(2.0 * PI) < 1e-30);
    }

    #[test]
    fn taylor_branch_is_continuous() {
        let below = delta1(TAYLOR_SWITCH * (1.0 - 1e-9));
        let above = delta1(TAYLOR_SWITCH * (1.0 + 1e-9));
        assert!((below - above).abs() / above < 1e-12);
    }

    #[test]
    fn delta_t_examples() {
        assert!((delta_t(10.0, 0.0).unwrap() - 10.0 / (2.0 * PI)).abs() < 1e-14);
        assert!(delta_t(1.0, 2.0 * PI).unwrap() < 1e-30);
        assert_eq!(delta_t(3.0, 0.7).unwrap(), delta_t(3.0, -0.7).unwrap());
        assert!(matches!(delta_t(0.0, 1.0), Err(Error::NonPositiveTime(_))));
        assert!(delta_t(-1.0, 1.0).is_err());
    }

    #[test]
    fn unit_mass() {
        // Simpson on [0, A] plus the tail ∫_A^∞ (1/π) E^-2 dE averaged over sin².
        let a = 4000.0 * PI;
        let n = 400_000;
        let h = a / n as f64;
        let mut s = delta1(0.0) + delta1(a);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * delta1(i as f64 * h);
        }
        let half = s * h / 3.0;
        let tail = 1.0 / (PI * a);
        assert!((2.0 * (half + tail) - 1.0).abs() < 1e-6, "mass {}", 2.0 * (half + tail));
    }

    #[test]
    fn sharp_limit_examples() {
        for t in [0.5, 3.0, 100.0] {
            let s = sharp_limit_error(0, 0.0, 0.1, t, KroneckerConvention::Consistent).unwrap();
            assert_eq!(s.deviation, 0.0);
        }
        let s = sharp_limit_error(3, 0.0, 0.0, 100.0, KroneckerConvention::Consistent).unwrap();
        assert!(s.deviation <= (2.0 / PI) / (100.0 * 9.0));
        assert!((s.off_resonance - 1.0 / 900.0).abs() < 1e-18);
        assert!(sharp_limit_error(1, 1.0, 0.6, 1.0, KroneckerConvention::Consistent).is_err());
    }

    #[test]
    fn sharp_limit_constant_is_finite_on_grid() {
        let mut c: f64 = 0.0;
        for x in 1..=5 {
            for &t in &[10.0, 30.0, 100.0, 300.0] {
                for &y in &[-1.0_f64, 0.5, 1.0] {
                    let lambda = 0.1 / (t * y.abs());
                    let s = sharp_limit_error(x, y, lambda, t, KroneckerConvention::Consistent).unwrap();
                    c = c.max(s.ratio().unwrap());
                }
            }
        }
        assert!(c.is_finite() && c <= 2.0 / PI * 4.0);
    }

    #[test]
    fn double_integral_examples() {
        assert_eq!(double_time_integral(0.0, 3.0), 9.0);
        assert!(double_time_integral(2.0 * PI, 1.0).abs() < 1e-28);
    }
}
