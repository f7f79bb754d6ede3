//! Exact and high-precision real inputs.
//!
//! A [`RealSpec`] is one of four exact descriptions of a real number. Every
//! variant evaluates to a certified rational enclosure of any requested width,
//! so comparisons against rational thresholds are decided by refinement rather
//! than by trusting binary floating point.

mod dd;
mod interval;
mod stream;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use regex::Regex;

pub use dd::{Dd, DD_TRANSCENDENTAL_REL_ERR};
pub use interval::{nearest_distance_exact, FloatInterval, Interval};
pub(crate) use interval::floor_scaled;
pub use stream::{FracStream, FRAC_BITS};

use crate::error::{input, Result};

/// Default working precision in bits; `LLAB_PRECISION_BITS` overrides it.
pub const DEFAULT_PRECISION_BITS: u32 = 128;
/// Refinement stops here; comparisons still open are boundary cases.
pub const MAX_PRECISION_BITS: u32 = 4096;

/// Working precision, read once from `LLAB_PRECISION_BITS`.
pub fn working_precision() -> u32 {
    static BITS: OnceLock<u32> = OnceLock::new();
    *BITS.get_or_init(|| {
        std::env::var("LLAB_PRECISION_BITS")
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .map(|b| b.clamp(64, MAX_PRECISION_BITS))
            .unwrap_or(DEFAULT_PRECISION_BITS)
    })
}

/// Decimal inputs with fewer bits than this are treated as the rationals they
/// literally are; longer ones stand in for irrational numbers.
pub const DECIMAL_IRRATIONAL_PROXY_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: u64,
}

impl Surd {
    /// `(a + b√d)/c`, normalized so that `c > 0`, `gcd(a, b, c) = 1` and `d`
    /// is squarefree.
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: u64) -> Result<Surd> {
        if c.is_zero() {
            return input("surd denominator is zero");
        }
        if d == 0 {
            return input("surd radicand must be positive");
        }
        if is_perfect_square(d) {
            return input(format!("surd radicand {d} is a perfect square"));
        }
        let (core, square) = squarefree_split(d)?;
        let mut a = a;
        let mut b = b * BigInt::from(square);
        let mut c = c;
        if c.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        let g = a.gcd(&b).gcd(&c);
        if !g.is_zero() && !g.is_one() {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        Ok(Surd { a, b, c, d: core })
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> u64 {
        self.d
    }

    fn eval(&self, bits: u32) -> Interval {
        let scale = BigInt::one() << bits as usize;
        let radicand = &self.b * &self.b * BigInt::from(self.d) * &scale * &scale;
        let m = radicand.sqrt();
        // |b|√d·2^bits ∈ (m, m+1) since the radicand is never a square
        let (lo_m, hi_m) = if self.b.is_negative() {
            (-(&m + BigInt::one()), -m.clone())
        } else if self.b.is_zero() {
            (BigInt::zero(), BigInt::zero())
        } else {
            (m.clone(), m + BigInt::one())
        };
        let den = &self.c * &scale;
        let a_scaled = &self.a * &scale;
        Interval::new(
            BigRational::new(&a_scaled + lo_m, den.clone()),
            BigRational::new(a_scaled + hi_m, den),
        )
    }

    /// Partial quotients of the (eventually periodic) continued fraction,
    /// computed exactly with integer square roots.
    fn partial_quotients(&self) -> SurdQuotients {
        // Write x = (P + √D)/Q with Q | D − P².
        let sign = if self.b.is_negative() { -1 } else { 1 };
        let mut p = &self.a * sign;
        let mut q = &self.c * sign;
        let mut dd = &self.b * &self.b * BigInt::from(self.d);
        let disc: BigInt = &dd - &p * &p;
        if !disc.is_multiple_of(&q) {
            let qa = q.abs();
            p *= &qa;
            dd *= &qa * &qa;
            q *= &qa;
        }
        let s = dd.sqrt();
        SurdQuotients { p, q, d: dd, s }
    }
}

struct SurdQuotients {
    p: BigInt,
    q: BigInt,
    d: BigInt,
    s: BigInt,
}

impl Iterator for SurdQuotients {
    type Item = BigInt;

    fn next(&mut self) -> Option<BigInt> {
        let a = if self.q.is_positive() {
            (&self.p + &self.s).div_floor(&self.q)
        } else {
            let num: BigInt = -&self.p - &self.s - BigInt::one();
            num.div_floor(&-&self.q)
        };
        let p_next = &a * &self.q - &self.p;
        let q_next = (&self.d - &p_next * &p_next) / &self.q;
        self.p = p_next;
        self.q = q_next;
        Some(a)
    }
}

/// Continued fraction `[a0; a1, …, ak]` followed by an optional periodic tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    head: Vec<BigInt>,
    period: Vec<BigInt>,
}

impl ContinuedFraction {
    pub fn new(head: Vec<BigInt>, period: Vec<BigInt>) -> Result<Self> {
        if head.is_empty() {
            return input("continued fraction needs a leading term a0");
        }
        if head.iter().skip(1).chain(period.iter()).any(|a| a < &BigInt::one()) {
            return input("continued fraction partial quotients after a0 must be >= 1");
        }
        Ok(ContinuedFraction { head, period })
    }

    pub fn head(&self) -> &[BigInt] {
        &self.head
    }

    pub fn period(&self) -> &[BigInt] {
        &self.period
    }

    pub fn is_finite(&self) -> bool {
        self.period.is_empty()
    }

    pub fn partial_quotients(&self) -> impl Iterator<Item = BigInt> + '_ {
        let tail = (!self.period.is_empty())
            .then(|| self.period.iter().cycle())
            .into_iter()
            .flatten();
        self.head.iter().chain(tail).cloned()
    }

    fn eval(&self, bits: u32) -> Interval {
        let target = BigRational::new(BigInt::one(), BigInt::one() << bits as usize);
        let mut conv = Convergents::new(self.partial_quotients());
        let mut prev = conv.next().expect("nonempty continued fraction");
        loop {
            match conv.next() {
                None => return Interval::point(BigRational::new(prev.0, prev.1)),
                Some(cur) => {
                    // x lies between consecutive convergents, at distance
                    // < 1/(k_n k_{n+1}) from either
                    let width = BigRational::new(BigInt::one(), &prev.1 * &cur.1);
                    if width <= target {
                        let a = BigRational::new(prev.0, prev.1);
                        let b = BigRational::new(cur.0.clone(), cur.1.clone());
                        return if a <= b { Interval::new(a, b) } else { Interval::new(b, a) };
                    }
                    prev = cur;
                }
            }
        }
    }
}

/// Convergents `p_n/q_n` of a stream of partial quotients.
pub struct Convergents<I> {
    quotients: I,
    p: (BigInt, BigInt),
    q: (BigInt, BigInt),
}

impl<I: Iterator<Item = BigInt>> Convergents<I> {
    pub fn new(quotients: I) -> Self {
        Convergents {
            quotients,
            p: (BigInt::zero(), BigInt::one()),
            q: (BigInt::one(), BigInt::zero()),
        }
    }
}

impl<I: Iterator<Item = BigInt>> Iterator for Convergents<I> {
    type Item = (BigInt, BigInt);

    fn next(&mut self) -> Option<(BigInt, BigInt)> {
        let a = self.quotients.next()?;
        let p = &a * &self.p.1 + &self.p.0;
        let q = &a * &self.q.1 + &self.q.0;
        self.p = (std::mem::take(&mut self.p.1), p.clone());
        self.q = (std::mem::take(&mut self.q.1), q.clone());
        Some((p, q))
    }
}

/// Euclid's algorithm on an exact rational.
struct RationalQuotients {
    num: BigInt,
    den: BigInt,
}

impl Iterator for RationalQuotients {
    type Item = BigInt;

    fn next(&mut self) -> Option<BigInt> {
        if self.den.is_zero() {
            return None;
        }
        let (a, r) = self.num.div_mod_floor(&self.den);
        self.num = std::mem::replace(&mut self.den, r);
        Some(a)
    }
}

/// An exact description of a real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealSpec {
    Rational(BigRational),
    Surd(Surd),
    /// A decimal string taken at face value; `bits` records its accuracy as
    /// an approximation of the real it stands for.
    Decimal {
        text: String,
        value: BigRational,
        bits: u32,
    },
    Cf(ContinuedFraction),
}

/// Result of `convergents`: the list and whether the expansion ran out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentList {
    pub convergents: Vec<(BigInt, BigInt)>,
    pub exhausted: bool,
}

impl RealSpec {
    pub fn rational(p: i64, q: i64) -> Result<RealSpec> {
        if q == 0 {
            return input("rational with zero denominator");
        }
        Ok(RealSpec::Rational(BigRational::new(p.into(), q.into())))
    }

    pub fn integer(n: i64) -> RealSpec {
        RealSpec::Rational(BigRational::from_integer(n.into()))
    }

    /// `(a + b√d)/c`
    pub fn surd(a: i64, b: i64, d: u64, c: i64) -> Result<RealSpec> {
        Ok(RealSpec::Surd(Surd::new(a.into(), b.into(), c.into(), d)?))
    }

    pub fn sqrt(d: u64) -> Result<RealSpec> {
        Self::surd(0, 1, d, 1)
    }

    pub fn golden_ratio() -> RealSpec {
        Self::surd(1, 1, 5, 2).expect("valid surd")
    }

    pub fn decimal(text: &str) -> Result<RealSpec> {
        let value = parse_decimal(text)?;
        let frac_digits = text
            .trim()
            .split(['e', 'E'])
            .next()
            .and_then(|m| m.split('.').nth(1))
            .map(|f| f.len())
            .unwrap_or(0);
        let bits = (frac_digits as f64 * std::f64::consts::LOG2_10).floor() as u32;
        Ok(RealSpec::Decimal {
            text: text.trim().to_string(),
            value,
            bits,
        })
    }

    pub fn cf(head: &[i64], period: &[i64]) -> Result<RealSpec> {
        Ok(RealSpec::Cf(ContinuedFraction::new(
            head.iter().map(|&a| BigInt::from(a)).collect(),
            period.iter().map(|&a| BigInt::from(a)).collect(),
        )?))
    }

    /// Whether the input is (treated as) a rational number.
    pub fn is_rational(&self) -> bool {
        match self {
            RealSpec::Rational(_) => true,
            RealSpec::Surd(s) => s.b.is_zero(),
            RealSpec::Decimal { bits, .. } => *bits < DECIMAL_IRRATIONAL_PROXY_BITS,
            RealSpec::Cf(cf) => cf.is_finite(),
        }
    }

    /// The value as an exact rational, when it is one.
    pub fn exact_value(&self) -> Option<BigRational> {
        match self {
            RealSpec::Rational(r) => Some(r.clone()),
            RealSpec::Decimal { value, .. } => Some(value.clone()),
            RealSpec::Surd(s) if s.b.is_zero() => Some(BigRational::new(s.a.clone(), s.c.clone())),
            RealSpec::Cf(cf) if cf.is_finite() => {
                let (p, q) = Convergents::new(cf.partial_quotients()).last()?;
                Some(BigRational::new(p, q))
            }
            _ => None,
        }
    }

    /// Certified enclosure of width at most `2^-bits`.
    pub fn eval(&self, bits: u32) -> Interval {
        match self {
            RealSpec::Rational(r) => Interval::point(r.clone()),
            RealSpec::Decimal { value, .. } => Interval::point(value.clone()),
            RealSpec::Surd(s) => s.eval(bits.max(1)),
            RealSpec::Cf(cf) => cf.eval(bits.max(1)),
        }
    }

    /// `f64` approximation (round to nearest of a 96-bit enclosure).
    pub fn to_f64(&self) -> f64 {
        self.eval(96).midpoint_f64()
    }

    pub fn to_dd(&self) -> Dd {
        let iv = self.eval(128);
        let mid = (iv.lo() + iv.hi()) / BigRational::from_integer(BigInt::from(2));
        let hi = mid.to_f64().unwrap_or(f64::NAN);
        let rest = mid - BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
        Dd::new(hi, rest.to_f64().unwrap_or(0.0))
    }

    /// Negation as a spec of the same kind.
    pub fn neg(&self) -> RealSpec {
        match self {
            RealSpec::Rational(r) => RealSpec::Rational(-r),
            RealSpec::Decimal { text, value, bits } => RealSpec::Decimal {
                text: match text.strip_prefix('-') {
                    Some(t) => t.to_string(),
                    None => format!("-{text}"),
                },
                value: -value,
                bits: *bits,
            },
            RealSpec::Surd(s) => RealSpec::Surd(
                Surd::new(-s.a.clone(), -s.b.clone(), s.c.clone(), s.d).expect("normalized"),
            ),
            RealSpec::Cf(cf) => {
                // −[a0; a1, a2, …] = [−a0−1; 1, a1−1, a2, …], collapsing a1−1 = 0
                let mut q: Vec<BigInt> = cf.head.clone();
                let mut period = cf.period.clone();
                if q.len() == 1 && period.is_empty() {
                    return RealSpec::Cf(ContinuedFraction { head: vec![-&q[0]], period });
                }
                if q.len() == 1 {
                    // unroll one period so that a1 sits in the head
                    q.extend(period.iter().cloned());
                }
                let a0: BigInt = -&q[0] - BigInt::one();
                let a1: BigInt = &q[1] - BigInt::one();
                let mut head = vec![a0];
                if a1.is_zero() {
                    // [.., 1, 0, a2, ..] = [.., 1 + a2, ..]
                    if q.len() > 2 {
                        head.push(BigInt::one() + &q[2]);
                        head.extend(q[3..].iter().cloned());
                    } else if period.is_empty() {
                        // [a0; 1] is the integer a0 + 1
                    } else {
                        let mut tail = period.iter().cloned();
                        let a2 = tail.next().expect("periodic tail");
                        head.push(BigInt::one() + a2);
                        period.rotate_left(1);
                    }
                } else {
                    head.push(BigInt::one());
                    head.push(a1);
                    head.extend(q[2..].iter().cloned());
                }
                RealSpec::Cf(ContinuedFraction { head, period })
            }
        }
    }

    /// Adds an integer, preserving the variant.
    pub fn add_integer(&self, m: i64) -> RealSpec {
        let mb = BigInt::from(m);
        match self {
            RealSpec::Rational(r) => RealSpec::Rational(r + BigRational::from_integer(mb)),
            RealSpec::Decimal { value, bits, .. } => {
                let v = value + BigRational::from_integer(mb);
                RealSpec::Decimal {
                    text: format_rational_decimal(&v, *bits),
                    value: v,
                    bits: *bits,
                }
            }
            RealSpec::Surd(s) => RealSpec::Surd(
                Surd::new(&s.a + &mb * &s.c, s.b.clone(), s.c.clone(), s.d).expect("normalized"),
            ),
            RealSpec::Cf(cf) => {
                let mut head = cf.head.clone();
                head[0] += mb;
                RealSpec::Cf(ContinuedFraction { head, period: cf.period.clone() })
            }
        }
    }

    pub fn partial_quotients(&self) -> Box<dyn Iterator<Item = BigInt> + '_> {
        match self {
            RealSpec::Rational(r) => Box::new(RationalQuotients {
                num: r.numer().clone(),
                den: r.denom().clone(),
            }),
            RealSpec::Decimal { value, .. } => Box::new(RationalQuotients {
                num: value.numer().clone(),
                den: value.denom().clone(),
            }),
            RealSpec::Surd(s) if s.b.is_zero() => Box::new(RationalQuotients {
                num: s.a.clone(),
                den: s.c.clone(),
            }),
            RealSpec::Surd(s) => Box::new(s.partial_quotients()),
            RealSpec::Cf(cf) => Box::new(cf.partial_quotients()),
        }
    }

    /// The first `k` continued-fraction convergents `(p_i, q_i)`.
    pub fn convergents(&self, k: usize) -> ConvergentList {
        let convergents: Vec<_> = Convergents::new(self.partial_quotients()).take(k).collect();
        ConvergentList {
            exhausted: convergents.len() < k,
            convergents,
        }
    }

    /// Certified enclosure of `⟨n·x⟩`.
    pub fn nearest_distance(&self, n: &BigInt, bits: u32) -> Interval {
        let extra = n.bits() as u32 + 2;
        self.eval(bits + extra).scale(n).nearest_distance()
    }

    /// Nearest integer to `n·x`, decided exactly by refinement. `None` only
    /// when `n·x` is (numerically indistinguishable from) a half-integer.
    pub fn nearest_integer_of_multiple(&self, n: &BigInt) -> Option<BigInt> {
        let mut bits = working_precision();
        loop {
            let iv = self.eval(bits + n.bits() as u32 + 2).scale(n);
            if let Some(m) = iv.nearest_integer() {
                return Some(m);
            }
            if iv.is_point() || bits >= MAX_PRECISION_BITS {
                return None;
            }
            bits *= 2;
        }
    }
}

/// `⟨x⟩ = min_m |x − m|` for a binary float.
pub fn nearest_distance_f64(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Certified enclosure of `n⟨nα⟩⟨nβ⟩` at the given precision.
pub fn littlewood_value(n: u64, alpha: &RealSpec, beta: &RealSpec, bits: u32) -> Interval {
    let nb = BigInt::from(n);
    let r1 = alpha.nearest_distance(&nb, bits);
    let r2 = beta.nearest_distance(&nb, bits);
    r1.mul(&r2).scale(&nb)
}

/// Outcome of comparing a certified value against a rational threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Less,
    Equal,
    Greater,
    /// Still straddling the threshold at [`MAX_PRECISION_BITS`].
    Undecided,
}

impl From<Ordering> for Decision {
    fn from(o: Ordering) -> Decision {
        match o {
            Ordering::Less => Decision::Less,
            Ordering::Equal => Decision::Equal,
            Ordering::Greater => Decision::Greater,
        }
    }
}

/// Compares `n⟨nα⟩⟨nβ⟩` against `threshold`, refining precision as needed.
pub fn littlewood_cmp(
    n: u64,
    alpha: &RealSpec,
    beta: &RealSpec,
    threshold: &BigRational,
) -> (Decision, Interval) {
    let mut bits = working_precision();
    loop {
        let v = littlewood_value(n, alpha, beta, bits);
        if let Some(o) = v.cmp_rational(threshold) {
            return (o.into(), v);
        }
        if bits >= MAX_PRECISION_BITS {
            return (Decision::Undecided, v);
        }
        bits = (bits * 2).min(MAX_PRECISION_BITS);
    }
}

/// Orders `n⟨nα⟩⟨nβ⟩` and `m⟨mα⟩⟨mβ⟩`; `None` if indistinguishable.
pub fn littlewood_order(n: u64, m: u64, alpha: &RealSpec, beta: &RealSpec) -> Option<Ordering> {
    let mut bits = working_precision();
    loop {
        let a = littlewood_value(n, alpha, beta, bits);
        let b = littlewood_value(m, alpha, beta, bits);
        if a.hi() < b.lo() {
            return Some(Ordering::Less);
        }
        if b.hi() < a.lo() {
            return Some(Ordering::Greater);
        }
        if a.is_point() && b.is_point() {
            return Some(Ordering::Equal);
        }
        if bits >= MAX_PRECISION_BITS {
            return None;
        }
        bits = (bits * 2).min(MAX_PRECISION_BITS);
    }
}

fn is_perfect_square(d: u64) -> bool {
    let r = d.sqrt();
    r * r == d
}

/// Splits `d = core · square²` with `core` squarefree.
fn squarefree_split(mut d: u64) -> Result<(u64, u64)> {
    if d > 1_000_000_000_000 {
        return input("surd radicand too large (limit 10^12)");
    }
    let mut square = 1u64;
    let mut k = 2u64;
    while k * k <= d {
        while d % (k * k) == 0 {
            d /= k * k;
            square *= k;
        }
        k += 1;
    }
    Ok((d, square))
}

/// Parses a decimal such as `-1.25`, `3`, `.5` or `1.5e-3` as an exact rational.
pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..]
                .parse()
                .map_err(|_| crate::error::LabError::Input(format!("bad exponent in '{t}'")))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return input(format!("not a decimal number: '{t}'"));
    }
    if exponent.abs() > 10_000 {
        return input("decimal exponent out of range");
    }
    let all = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).expect("digits");
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Parses a threshold: a decimal, `p/q`, or `rat:p/q`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let t = t.strip_prefix("rat:").unwrap_or(t);
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad(text))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad(text))?;
        if q.is_zero() {
            return input("rational with zero denominator");
        }
        return Ok(BigRational::new(p, q));
    }
    parse_decimal(t)
}

fn bad(text: &str) -> crate::error::LabError {
    crate::error::LabError::Input(format!("cannot parse number '{text}'"))
}

fn surd_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)\s*/\s*([+-]?\d+)$")
            .expect("valid regex")
    })
}

fn parse_int_list(body: &str) -> Result<Vec<i64>> {
    body.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<i64>().map_err(|_| bad(body)))
        .collect()
}

fn bracketed<'a>(s: &'a str, whole: &str) -> Result<&'a str> {
    s.trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| bad(whole))
}

impl FromStr for RealSpec {
    type Err = crate::error::LabError;

    /// Grammar: `dec:<decimal>`, `rat:<p>/<q>`, `surd:(<a>+<b>*sqrt(<d>))/<c>`,
    /// `cf:[a0;a1,a2,...]` with an optional `|periodic:[...]` tail.
    fn from_str(s: &str) -> Result<RealSpec> {
        let s = s.trim();
        let (kind, body) = s.split_once(':').ok_or_else(|| bad(s))?;
        match kind {
            "dec" => RealSpec::decimal(body),
            "rat" => Ok(RealSpec::Rational(parse_rational(body)?)),
            "surd" => {
                let caps = surd_regex().captures(body.trim()).ok_or_else(|| bad(s))?;
                let a = BigInt::from_str(&caps[1]).map_err(|_| bad(s))?;
                let mut b = BigInt::from_str(&caps[3]).map_err(|_| bad(s))?;
                if &caps[2] == "-" {
                    b = -b;
                }
                let d: u64 = caps[4].parse().map_err(|_| bad(s))?;
                let c = BigInt::from_str(&caps[5]).map_err(|_| bad(s))?;
                Ok(RealSpec::Surd(Surd::new(a, b, c, d)?))
            }
            "cf" => {
                let (main, tail) = match body.split_once('|') {
                    Some((m, t)) => (m, Some(t)),
                    None => (body, None),
                };
                let head_body = bracketed(main, s)?;
                let head = parse_int_list(head_body)?;
                let period = match tail {
                    Some(t) => {
                        let t = t.trim().strip_prefix("periodic:").ok_or_else(|| bad(s))?;
                        let p = parse_int_list(bracketed(t, s)?)?;
                        if p.is_empty() {
                            return input("empty periodic tail");
                        }
                        p
                    }
                    None => Vec::new(),
                };
                RealSpec::cf(&head, &period)
            }
            _ => Err(bad(s)),
        }
    }
}

fn format_rational_decimal(v: &BigRational, bits: u32) -> String {
    let digits = ((bits as f64) / std::f64::consts::LOG2_10).ceil() as usize;
    let scaled = (v * BigRational::from_integer(num_traits::pow(BigInt::from(10), digits)))
        .round()
        .to_integer();
    let (sign, mag) = match scaled.sign() {
        Sign::Minus => ("-", -scaled),
        _ => ("", scaled),
    };
    let s = format!("{:0>width$}", mag.to_string(), width = digits + 1);
    let (i, f) = s.split_at(s.len() - digits);
    if f.is_empty() {
        format!("{sign}{i}")
    } else {
        format!("{sign}{i}.{f}")
    }
}

impl fmt::Display for RealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealSpec::Rational(r) => write!(f, "rat:{}/{}", r.numer(), r.denom()),
            RealSpec::Decimal { text, .. } => write!(f, "dec:{text}"),
            RealSpec::Surd(s) => {
                let (op, b) = if s.b.is_negative() { ('-', -s.b.clone()) } else { ('+', s.b.clone()) };
                write!(f, "surd:({}{}{}*sqrt({}))/{}", s.a, op, b, s.d, s.c)
            }
            RealSpec::Cf(cf) => {
                write!(f, "cf:[{}", cf.head[0])?;
                if cf.head.len() > 1 {
                    let rest: Vec<String> = cf.head[1..].iter().map(|a| a.to_string()).collect();
                    write!(f, ";{}", rest.join(","))?;
                }
                write!(f, "]")?;
                if !cf.period.is_empty() {
                    let p: Vec<String> = cf.period.iter().map(|a| a.to_string()).collect();
                    write!(f, "|periodic:[{}]", p.join(","))?;
                }
                Ok(())
            }
        }
    }
}
