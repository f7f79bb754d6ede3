//! Certified enclosures with exact rational endpoints.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// A closed interval `[lo, hi]` with exact rational endpoints that is
/// guaranteed to contain some real quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: BigRational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::point(BigRational::from_integer(n.into()))
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// `self ⊆ other`
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn add_integer(&self, m: &BigInt) -> Interval {
        let m = BigRational::from_integer(m.clone());
        Interval {
            lo: &self.lo + &m,
            hi: &self.hi + &m,
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn scale(&self, k: &BigInt) -> Interval {
        let k = BigRational::from_integer(k.clone());
        let a = &self.lo * &k;
        let b = &self.hi * &k;
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let m = std::cmp::max(self.lo.abs(), self.hi.clone());
            Interval {
                lo: BigRational::zero(),
                hi: m,
            }
        }
    }

    /// Enclosure of `⟨x⟩ = min_m |x − m|` over the interval.
    ///
    /// The distance function is piecewise linear with zeros at the integers
    /// and peaks at the half-integers, so its range over `[lo, hi]` is decided
    /// by the endpoints and by which critical points the interval contains.
    pub fn nearest_distance(&self) -> Interval {
        let d_lo = nearest_distance_exact(&self.lo);
        let d_hi = nearest_distance_exact(&self.hi);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let contains_integer = self.lo.ceil() <= self.hi;
        let contains_half = (&self.lo - &half).ceil() <= &self.hi - &half;
        let lo = if contains_integer {
            BigRational::zero()
        } else {
            std::cmp::min(d_lo.clone(), d_hi.clone())
        };
        let hi = if contains_half {
            half
        } else {
            std::cmp::max(d_lo, d_hi)
        };
        Interval { lo, hi }
    }

    /// The nearest integer, when it is the same for every point of the
    /// interval and no point is a half-integer.
    pub fn nearest_integer(&self) -> Option<BigInt> {
        let a = round_half_up(&self.lo);
        let b = round_half_up(&self.hi);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let contains_half = (&self.lo - &half).ceil() <= &self.hi - &half;
        if a == b && !contains_half {
            Some(a)
        } else {
            None
        }
    }

    /// Decides the order of the enclosed value against `q`, if possible.
    /// `Equal` is only returned when the interval is the single point `q`.
    pub fn cmp_rational(&self, q: &BigRational) -> Option<Ordering> {
        if &self.hi < q {
            Some(Ordering::Less)
        } else if &self.lo > q {
            Some(Ordering::Greater)
        } else if self.is_point() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Outward-rounded `f64` enclosure.
    pub fn to_f64_bounds(&self) -> FloatInterval {
        FloatInterval {
            lo: rational_to_f64_down(&self.lo),
            hi: rational_to_f64_up(&self.hi),
        }
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2)))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.to_f64_bounds();
        write!(f, "[{:e}, {:e}]", b.lo, b.hi)
    }
}

pub(crate) fn round_half_up(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (x + half).floor().to_integer()
}

pub fn nearest_distance_exact(x: &BigRational) -> BigRational {
    let m = round_half_up(x);
    (x - BigRational::from_integer(m)).abs()
}

pub(crate) fn rational_to_f64_down(x: &BigRational) -> f64 {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if x.is_zero() {
        0.0
    } else {
        v.next_down()
    }
}

pub(crate) fn rational_to_f64_up(x: &BigRational) -> f64 {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if x.is_zero() {
        0.0
    } else {
        v.next_up()
    }
}

/// `floor(x · 2^bits)`
pub(crate) fn floor_scaled(x: &BigRational, bits: u32) -> BigInt {
    let num = x.numer() << bits as usize;
    num.div_floor(x.denom())
}

/// A plain `f64` enclosure, used where the enclosed quantity has already
/// been certified to far better than double precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FloatInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FloatInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        FloatInterval { lo, hi }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn nearest_distance_critical_points() {
        let iv = Interval::new(r(9, 10), r(11, 10));
        let d = iv.nearest_distance();
        assert_eq!(d.lo(), &r(0, 1));
        assert_eq!(d.hi(), &r(1, 10));

        let iv = Interval::new(r(4, 10), r(6, 10));
        let d = iv.nearest_distance();
        assert_eq!(d.lo(), &r(4, 10));
        assert_eq!(d.hi(), &r(1, 2));

        let iv = Interval::new(r(-13, 10), r(-12, 10));
        let d = iv.nearest_distance();
        assert_eq!(d.lo(), &r(2, 10));
        assert_eq!(d.hi(), &r(3, 10));
    }

    #[test]
    fn nearest_integer_requires_separation() {
        assert_eq!(
            Interval::new(r(26, 10), r(27, 10)).nearest_integer(),
            Some(BigInt::from(3))
        );
        assert_eq!(Interval::new(r(24, 10), r(26, 10)).nearest_integer(), None);
        assert_eq!(Interval::point(r(5, 2)).nearest_integer(), None);
    }

    #[test]
    fn comparison_against_rational() {
        let iv = Interval::new(r(1, 10), r(2, 10));
        assert_eq!(iv.cmp_rational(&r(3, 10)), Some(Ordering::Less));
        assert_eq!(iv.cmp_rational(&r(1, 20)), Some(Ordering::Greater));
        assert_eq!(iv.cmp_rational(&r(15, 100)), None);
        assert_eq!(
            Interval::point(r(1, 3)).cmp_rational(&r(1, 3)),
            Some(Ordering::Equal)
        );
    }

    #[test]
    fn outward_f64_bounds_enclose() {
        let iv = Interval::point(r(1, 3));
        let b = iv.to_f64_bounds();
        assert!(b.lo < 1.0 / 3.0 + 1e-17 && b.hi > 1.0 / 3.0 - 1e-17);
        assert!(b.lo < b.hi);
    }
}
