//! Rational approximation by continued fractions.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: u64,
}

impl Rational {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// First continued-fraction convergent `p/q` of `x` with `q <= max_den`
/// and `|x - p/q| <= tol`, if any.
pub fn best_rational(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p_prev, mut p) = (1i128, x.floor() as i128);
    let (mut q_prev, mut q) = (0i128, 1i128);
    let mut frac = x - x.floor();
    loop {
        if q as u64 > max_den {
            return None;
        }
        let approx = p as f64 / q as f64;
        if (x - approx).abs() <= tol {
            return Some(Rational {
                num: p as i64,
                den: q as u64,
            });
        }
        if frac.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i128;
        let p_next = a * p + p_prev;
        let q_next = a * q + q_prev;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_fractions() {
        assert_eq!(
            best_rational(-1.0 / 3.0, 64, 1e-9),
            Some(Rational { num: -1, den: 3 })
        );
        assert_eq!(
            best_rational(0.75, 64, 1e-9),
            Some(Rational { num: 3, den: 4 })
        );
        assert_eq!(best_rational(2.0, 64, 1e-9), Some(Rational { num: 2, den: 1 }));
        assert_eq!(
            best_rational(17.0 / 63.0, 64, 1e-12),
            Some(Rational { num: 17, den: 63 })
        );
    }

    #[test]
    fn irrational_within_bounds() {
        assert_eq!(best_rational(2f64.sqrt(), 64, 1e-9), None);
        assert_eq!(best_rational(std::f64::consts::PI, 64, 1e-9), None);
        // 355/113 is within 3e-7 but its denominator is too large
        assert_eq!(best_rational(std::f64::consts::PI, 200, 1e-6).map(|r| r.den), Some(113));
    }

    #[test]
    fn non_finite() {
        assert_eq!(best_rational(f64::NAN, 64, 1e-9), None);
    }
}
