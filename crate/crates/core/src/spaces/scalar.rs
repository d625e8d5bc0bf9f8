use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Complex scalars are plain double-precision complex numbers.
pub type ComplexScalar = Complex64;

pub fn is_finite(z: ComplexScalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// A complex number stored as `exp(ln_abs) * exp(i * arg)`.
///
/// Witness scalars reach moduli like `2^(k^2/2)` and their inverses, far
/// outside the double range; products and quotients stay exact in this form.
/// Zero is `ln_abs = -inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogScalar {
    pub const ONE: LogScalar = LogScalar { ln_abs: 0.0, arg: 0.0 };
    pub const ZERO: LogScalar = LogScalar {
        ln_abs: f64::NEG_INFINITY,
        arg: 0.0,
    };

    pub fn new(ln_abs: f64, arg: f64) -> Self {
        Self {
            ln_abs,
            arg: wrap_angle(arg),
        }
    }

    pub fn from_complex(z: ComplexScalar) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn modulus(&self) -> f64 {
        self.ln_abs.exp()
    }

    pub fn log2_abs(&self) -> f64 {
        self.ln_abs / LN_2
    }

    /// Materializes the value; overflows to infinity or underflows to zero
    /// outside the double range.
    pub fn to_complex(&self) -> ComplexScalar {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    /// Whether `to_complex` is representable without overflow or denormals.
    pub fn fits_f64(&self) -> bool {
        self.is_zero() || self.ln_abs.abs() < 700.0
    }

    pub fn mul(self, other: LogScalar) -> LogScalar {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.ln_abs + other.ln_abs, self.arg + other.arg)
    }

    pub fn div(self, other: LogScalar) -> LogScalar {
        self.mul(other.inv())
    }

    pub fn inv(self) -> LogScalar {
        LogScalar {
            ln_abs: -self.ln_abs,
            arg: wrap_angle(-self.arg),
        }
    }

    pub fn scale_ln(self, delta: f64) -> LogScalar {
        LogScalar {
            ln_abs: self.ln_abs + delta,
            arg: self.arg,
        }
    }

    /// Splits the value as `2^k * c` with `1 <= |c| < 2`.
    pub fn split_pow2(&self) -> (i64, ComplexScalar) {
        if self.is_zero() {
            return (0, Complex64::new(0.0, 0.0));
        }
        let k = self.log2_abs().floor();
        let rest = self.ln_abs - k * LN_2;
        (k as i64, Complex64::from_polar(rest.exp(), self.arg))
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    if !theta.is_finite() {
        return 0.0;
    }
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_log_form() {
        let z = Complex64::new(-3.0, 4.0);
        let back = LogScalar::from_complex(z).to_complex();
        assert!((back - z).norm() < 1e-14);
    }

    #[test]
    fn products_far_outside_double_range() {
        let big = LogScalar::new(5000.0 * LN_2, 0.3);
        let small = LogScalar::new(-4999.0 * LN_2, -0.3);
        let z = big.mul(small).to_complex();
        assert!((z - Complex64::new(2.0, 0.0)).norm() < 1e-9);
        assert!(!big.fits_f64());
    }

    #[test]
    fn split_pow2_normalizes_modulus() {
        let s = LogScalar::new(1234.5, 1.0);
        let (k, c) = s.split_pow2();
        assert!(c.norm() >= 1.0 && c.norm() < 2.0);
        assert!(((k as f64) * LN_2 + c.norm().ln() - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn zero_absorbs_products() {
        assert!(LogScalar::ZERO.mul(LogScalar::ONE).is_zero());
        assert_eq!(LogScalar::ZERO.to_complex(), Complex64::new(0.0, 0.0));
    }
}
