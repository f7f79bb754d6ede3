//! Streaming fractional parts `frac(n·α)` in 96-bit fixed point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{floor_scaled, RealSpec};

/// Fractional bits of the fixed-point state.
pub const FRAC_BITS: u32 = 96;
const ONE: u128 = 1u128 << FRAC_BITS;
const MASK: u128 = ONE - 1;
/// Extra bits carried when seeding, so that the seed rounding stays below
/// one unit even for `n` up to 2^48.
const SEED_GUARD_BITS: u32 = 64;
const UNIT: f64 = 1.0 / (ONE as f64);

/// `frac(n·α)` tracked by one fixed-point addition per step.
///
/// The state `s` satisfies `|s·2^-96 − frac(n·α)| ≤ err·2^-96` (modulo 1),
/// with `err ≤ n`.
#[derive(Clone, Debug)]
pub struct FracStream {
    n: u64,
    state: u128,
    step: u128,
    err_units: u64,
}

impl FracStream {
    /// A stream positioned at index `start`, seeded by a direct
    /// multiprecision evaluation of `frac(start·α)`.
    pub fn new(alpha: &RealSpec, start: u64) -> FracStream {
        let bits = FRAC_BITS + SEED_GUARD_BITS;
        let iv = alpha.eval(bits + 2);
        // floor(α·2^bits), within one unit of the true value at that scale
        let a = floor_scaled(iv.lo(), bits);
        let step = frac_fixed(&a, 1, SEED_GUARD_BITS);
        let state = frac_fixed(&a, start, SEED_GUARD_BITS);
        FracStream {
            n: start,
            state,
            step,
            // seed error: (start + 1)·2^-64 units + rounding, < 2 units
            err_units: if start == 0 { 0 } else { 2 },
        }
    }

    #[inline]
    pub fn index(&self) -> u64 {
        self.n
    }

    /// Raw fixed-point state in `[0, 2^96)`.
    #[inline]
    pub fn state(&self) -> u128 {
        self.state
    }

    /// Accumulated error bound in units of `2^-96`.
    #[inline]
    pub fn error_units(&self) -> u64 {
        self.err_units
    }

    #[inline]
    pub fn error_bound(&self) -> f64 {
        self.err_units as f64 * UNIT
    }

    #[inline]
    pub fn advance(&mut self) {
        self.state = (self.state + self.step) & MASK;
        self.n += 1;
        self.err_units += 1;
    }

    #[inline]
    pub fn frac(&self) -> f64 {
        self.state as f64 * UNIT
    }

    /// Distance to the nearest integer, `min(s, 1 − s)`, as an `f64`.
    #[inline]
    pub fn nearest_distance(&self) -> f64 {
        let r = if self.state > ONE / 2 { ONE - self.state } else { self.state };
        r as f64 * UNIT
    }
}

/// Rounds `frac(n·a·2^-(96+guard))` to 96 fractional bits.
fn frac_fixed(a: &BigInt, n: u64, guard: u32) -> u128 {
    let prod = a * BigInt::from(n);
    let modulus = BigInt::from(1u8) << (FRAC_BITS + guard) as usize;
    let frac = prod.mod_floor(&modulus);
    let half = BigInt::from(1u8) << (guard - 1) as usize;
    let rounded: BigInt = (frac + half) >> guard as usize;
    (rounded.to_u128().expect("fits in 97 bits")) & MASK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realnum::working_precision;
    use num_rational::BigRational;

    fn direct_frac(alpha: &RealSpec, n: u64) -> BigRational {
        let iv = alpha.eval(working_precision() + 64).scale(&BigInt::from(n));
        let x = iv.lo().clone();
        &x - BigRational::from_integer(x.floor().to_integer())
    }

    fn within_bound(stream: &FracStream, alpha: &RealSpec) -> bool {
        let exact = direct_frac(alpha, stream.index());
        let approx = BigRational::new(BigInt::from(stream.state()), BigInt::from(ONE));
        let diff = crate::realnum::nearest_distance_exact(&(approx - exact));
        diff <= BigRational::new(BigInt::from(stream.error_units() + 1), BigInt::from(ONE))
    }

    #[test]
    fn stream_tracks_direct_evaluation() {
        let alpha = RealSpec::sqrt(2).unwrap();
        let mut s = FracStream::new(&alpha, 0);
        for _ in 0..10_000 {
            s.advance();
        }
        assert_eq!(s.index(), 10_000);
        assert!(within_bound(&s, &alpha));
        assert!(s.error_units() <= s.index());
    }

    #[test]
    fn seeded_stream_matches_from_start() {
        let alpha: RealSpec = "cf:[0;1,100,10000]|periodic:[1]".parse().unwrap();
        let mut a = FracStream::new(&alpha, 0);
        for _ in 0..5000 {
            a.advance();
        }
        let b = FracStream::new(&alpha, 5000);
        let d = a.state().abs_diff(b.state());
        assert!(d <= (a.error_units() + b.error_units()) as u128);
    }

    #[test]
    fn nearest_distance_of_rational_stream() {
        let half = RealSpec::rational(1, 2).unwrap();
        let mut s = FracStream::new(&half, 0);
        s.advance();
        assert_eq!(s.nearest_distance(), 0.5);
        s.advance();
        assert_eq!(s.nearest_distance(), 0.0);
    }
}
