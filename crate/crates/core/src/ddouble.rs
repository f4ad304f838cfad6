//! Double-double arithmetic (about 31 significant decimal digits).
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
//! Only the operations needed by the large-`beta` cancellation path are
//! provided: add, sub, mul, div, sqrt and exp.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DDouble {
    pub hi: f64,
    pub lo: f64,
}

/// Unit roundoff of the format, 2^-104.
pub const DD_EPSILON: f64 = 4.930380657631324e-32;

const LN2: DDouble = DDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.3190468138462996e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DDouble {
    pub const ZERO: DDouble = DDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DDouble = DDouble { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        DDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Exact multiplication by a power of two.
    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        DDouble {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn recip(self) -> Self {
        DDouble::ONE / self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                DDouble::ZERO
            } else {
                DDouble::from_f64(f64::NAN)
            };
        }
        // One Newton step on top of the hardware root doubles the precision.
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let r = (self - DDouble { hi: p, lo: e }).to_f64();
        let (hi, lo) = quick_two_sum(s, r / (2.0 * s));
        DDouble { hi, lo }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.78 {
            return DDouble::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DDouble::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return DDouble::ONE;
        }
        // x = k ln2 + r, then r is scaled down by 2^9 so the Taylor series
        // of expm1 converges after a dozen terms.
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * k).ldexp(-9);

        let mut term = r;
        let mut s = r;
        let mut i = 2.0;
        while i < 30.0 {
            term = term * r / i;
            s = s + term;
            if term.hi.abs() <= 1e-35 * s.hi.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            i += 1.0;
        }
        // (1 + s)^2 - 1 = 2s + s^2, nine times undoes the 2^-9 scaling.
        for _ in 0..9 {
            s = s.ldexp(1) + s * s;
        }
        (s + DDouble::ONE).ldexp(k as i32)
    }
}

impl From<f64> for DDouble {
    fn from(x: f64) -> Self {
        DDouble::from_f64(x)
    }
}

impl Neg for DDouble {
    type Output = DDouble;
    fn neg(self) -> DDouble {
        DDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DDouble {
    type Output = DDouble;
    fn add(self, b: DDouble) -> DDouble {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        DDouble { hi, lo }
    }
}

impl Add<f64> for DDouble {
    type Output = DDouble;
    fn add(self, b: f64) -> DDouble {
        self + DDouble::from_f64(b)
    }
}

impl Sub for DDouble {
    type Output = DDouble;
    fn sub(self, b: DDouble) -> DDouble {
        self + (-b)
    }
}

impl Sub<f64> for DDouble {
    type Output = DDouble;
    fn sub(self, b: f64) -> DDouble {
        self + DDouble::from_f64(-b)
    }
}

impl Mul for DDouble {
    type Output = DDouble;
    fn mul(self, b: DDouble) -> DDouble {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        DDouble { hi, lo }
    }
}

impl Mul<f64> for DDouble {
    type Output = DDouble;
    fn mul(self, b: f64) -> DDouble {
        let (p1, p2) = two_prod(self.hi, b);
        let p2 = p2 + self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        DDouble { hi, lo }
    }
}

impl Div for DDouble {
    type Output = DDouble;
    fn div(self, b: DDouble) -> DDouble {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DDouble { hi: q1, lo: q2 } + q3
    }
}

impl Div<f64> for DDouble {
    type Output = DDouble;
    fn div(self, b: f64) -> DDouble {
        self / DDouble::from_f64(b)
    }
}

/// Sum of double-double values (the format itself carries the compensation).
pub fn dd_sum<I: IntoIterator<Item = DDouble>>(iter: I) -> DDouble {
    iter.into_iter().fold(DDouble::ZERO, |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference pairs (hi, lo) from a 50-digit evaluation.
    fn close(got: DDouble, hi: f64, lo: f64) -> bool {
        let want = DDouble { hi, lo };
        let d = (got - want).to_f64().abs();
        d <= 4.0 * DD_EPSILON * hi.abs()
    }

    #[test]
    fn exp_matches_reference() {
        assert!(close(DDouble::from(0.1).exp(), 1.1051709180756477, -8.149523913327619e-17));
        assert!(close(DDouble::from(-3.7).exp(), 0.024723526470339388, -1.294857794723138e-18));
        assert!(close(DDouble::from(25.5).exp(), 118716009132.16965, 3.7484041480402334e-06));
        assert_eq!(DDouble::ZERO.exp(), DDouble::ONE);
    }

    #[test]
    fn sqrt_and_division() {
        assert!(close(DDouble::from(2.0).sqrt(), std::f64::consts::SQRT_2, -9.667293313452913e-17));
        assert!(close(DDouble::ONE / DDouble::from(3.0), 0.3333333333333333, 1.850371707708594e-17));
        let x = DDouble::from(7.0).sqrt();
        assert!(((x * x) - 7.0).to_f64().abs() < 1e-30);
    }

    #[test]
    fn cancellation_is_resolved() {
        // (1 + 1e-20) - 1 is invisible in f64.
        let a = DDouble::ONE + DDouble::from(1e-20);
        let d = (a - 1.0).to_f64();
        assert!((d - 1e-20).abs() < 1e-34);
    }
}
