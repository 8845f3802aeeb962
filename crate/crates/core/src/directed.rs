//! Outward-rounded enclosures of real numbers.
//!
//! A [`DirectedReal`] is a pair `lo <= hi` of binary floats that brackets a
//! real value. Every operation rounds `lo` toward −∞ and `hi` toward +∞, so
//! the true result of any expression built from these operations lies inside
//! the final enclosure. Lower bounds read off `lo`, upper bounds read off `hi`.
//!
//! The floats are MPFR numbers; MPFR rounds `exp`, `ln` and `ln_1p`
//! correctly in the requested direction, which is what makes the endpoints
//! certified rather than merely accurate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::{AddAssignRound, MulAssignRound, Pow};
use rug::{Float, Integer};

/// Default mantissa precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct DirectedReal {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, val: T) -> Float
where
    Float: rug::Assign<T> + rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Down).0
}

fn up<T>(prec: u32, val: T) -> Float
where
    Float: rug::Assign<T> + rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Up).0
}

impl DirectedReal {
    /// The degenerate enclosure of an integer (exact when it fits `prec` bits).
    pub fn from_integer(prec: u32, value: &Integer) -> Self {
        DirectedReal {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    pub fn from_u64(prec: u32, value: u64) -> Self {
        DirectedReal {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    pub fn from_i64(prec: u32, value: i64) -> Self {
        DirectedReal {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    /// Enclosure of `num / den` for `den > 0`.
    pub fn from_ratio(prec: u32, num: &Integer, den: &Integer) -> Self {
        assert!(*den > 0, "ratio denominator must be positive");
        let n = Self::from_integer(prec, num);
        let d = Self::from_integer(prec, den);
        n.div(&d)
    }

    /// Builds an enclosure from explicit endpoints. Panics if `lo > hi`.
    pub fn from_endpoints(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "enclosure endpoints out of order");
        DirectedReal { lo, hi }
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_u64(prec, 0)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_u64(prec, 1)
    }

    /// Euler's number.
    pub fn e(prec: u32) -> Self {
        Self::one(prec).exp()
    }

    pub fn ln2(prec: u32) -> Self {
        Self::from_u64(prec, 2).ln()
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    pub fn contains(&self, x: &Float) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_u64(&self, x: u64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Whether `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &DirectedReal) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &DirectedReal) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Certainly greater than `x`.
    pub fn gt_f64(&self, x: f64) -> bool {
        self.lo > x
    }

    /// Certainly less than `x`.
    pub fn lt_f64(&self, x: f64) -> bool {
        self.hi < x
    }

    /// Midpoint rounded to the nearest `f64`; for display and statistics only.
    pub fn mid_f64(&self) -> f64 {
        let p = self.prec() + 1;
        (Float::with_val(p, &self.lo + &self.hi) / 2u32).to_f64()
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        DirectedReal {
            lo: down(p, self.lo.exp_ref()),
            hi: up(p, self.hi.exp_ref()),
        }
    }

    /// Natural logarithm. Panics unless the enclosure is strictly positive.
    pub fn ln(&self) -> Self {
        assert!(self.lo > 0, "logarithm of an enclosure that is not strictly positive");
        let p = self.prec();
        DirectedReal {
            lo: down(p, self.lo.ln_ref()),
            hi: up(p, self.hi.ln_ref()),
        }
    }

    /// `ln(1 + x)`, accurate for tiny `x`. Panics unless `x > -1`.
    pub fn ln_1p(&self) -> Self {
        assert!(self.lo > -1, "ln_1p of an enclosure reaching -1");
        let p = self.prec();
        DirectedReal {
            lo: down(p, self.lo.ln_1p_ref()),
            hi: up(p, self.hi.ln_1p_ref()),
        }
    }

    /// `self ^ exponent` for a strictly positive base, as `exp(exponent · ln self)`.
    pub fn pow(&self, exponent: &DirectedReal) -> Self {
        (exponent * &self.ln()).exp()
    }

    /// Division. Panics if the divisor encloses zero.
    pub fn div(&self, rhs: &DirectedReal) -> Self {
        assert!(rhs.lo > 0 || rhs.hi < 0, "division by an enclosure containing zero");
        let p = self.prec().max(rhs.prec());
        let cands_lo = [
            down(p, &self.lo / &rhs.lo),
            down(p, &self.lo / &rhs.hi),
            down(p, &self.hi / &rhs.lo),
            down(p, &self.hi / &rhs.hi),
        ];
        let cands_hi = [
            up(p, &self.lo / &rhs.lo),
            up(p, &self.lo / &rhs.hi),
            up(p, &self.hi / &rhs.lo),
            up(p, &self.hi / &rhs.hi),
        ];
        DirectedReal {
            lo: min_of(cands_lo),
            hi: max_of(cands_hi),
        }
    }

    /// Multiplies by an exact integer.
    pub fn mul_integer(&self, k: &Integer) -> Self {
        self * &DirectedReal::from_integer(self.prec(), k)
    }

    /// In-place `self += rhs`; the hot path of the long sums.
    pub fn add_assign(&mut self, rhs: &DirectedReal) {
        self.lo.add_assign_round(&rhs.lo, Round::Down);
        self.hi.add_assign_round(&rhs.hi, Round::Up);
    }

    /// In-place multiplication for enclosures known to be non-negative.
    pub fn mul_assign_nonneg(&mut self, rhs: &DirectedReal) {
        debug_assert!(self.lo >= 0 && rhs.lo >= 0);
        self.lo.mul_assign_round(&rhs.lo, Round::Down);
        self.hi.mul_assign_round(&rhs.hi, Round::Up);
    }

    /// Largest multiple of `10^-decimals` not above `lo`, as a decimal string.
    pub fn format_down(&self, decimals: u32) -> String {
        format_scaled(&self.lo, decimals, Round::Down)
    }

    /// Smallest multiple of `10^-decimals` not below `hi`, as a decimal string.
    pub fn format_up(&self, decimals: u32) -> String {
        format_scaled(&self.hi, decimals, Round::Up)
    }

    /// The exact decimal `floor(lo · 10^decimals) / 10^decimals`, a value not
    /// above anything in the enclosure.
    pub fn floor_to_decimals(&self, decimals: u32) -> DirectedReal {
        let scale = Integer::from(10).pow(decimals);
        let scaled = Float::with_val_round(self.lo.prec() + 64, &self.lo * &scale, Round::Down).0;
        let (floor, _) = scaled.to_integer_round(Round::Down).expect("finite enclosure");
        DirectedReal::from_ratio(self.prec(), &floor, &scale)
    }

    /// `hi` truncated to `decimals` places. For quantities that are reported
    /// rather than bounded; an enclosure around an exact grid value prints it.
    pub fn format_truncated(&self, decimals: u32) -> String {
        format_scaled(&self.hi, decimals, Round::Down)
    }

    /// Whether some value in the enclosure truncates to `printed` at
    /// `decimals` places, i.e. the enclosure meets `[printed, printed + 10^-decimals)`.
    /// This is how a table printed by truncation is compared against.
    pub fn truncates_to(&self, printed: &str, decimals: u32) -> bool {
        let scale = Integer::from(10).pow(decimals);
        let Some(p) = parse_scaled(printed, decimals) else {
            return false;
        };
        let prec = self.prec() + 64;
        let lo_scaled = up(prec, &self.lo * &scale);
        let hi_scaled = down(prec, &self.hi * &scale);
        // enclosure ∩ [p, p+1) ≠ ∅  ⇔  hi·s >= p  and  lo·s < p + 1
        hi_scaled >= p && lo_scaled < Integer::from(&p + 1)
    }
}

fn min_of(c: [Float; 4]) -> Float {
    c.into_iter().reduce(|a, b| if b < a { b } else { a }).unwrap()
}

fn max_of(c: [Float; 4]) -> Float {
    c.into_iter().reduce(|a, b| if b > a { b } else { a }).unwrap()
}

fn format_scaled(x: &Float, decimals: u32, round: Round) -> String {
    let scale = Integer::from(10).pow(decimals);
    let scaled = Float::with_val_round(x.prec() + 64, x * &scale, round).0;
    let (int, _) = scaled.to_integer_round(round).expect("finite enclosure");
    let negative = int < 0;
    let digits = int.abs().to_string();
    let d = decimals as usize;
    let padded = format!("{digits:0>width$}", width = d + 1);
    let (whole, frac) = padded.split_at(padded.len() - d);
    let sign = if negative { "-" } else { "" };
    if d == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac}")
    }
}

fn parse_scaled(s: &str, decimals: u32) -> Option<Integer> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if frac.len() > decimals as usize || whole.is_empty() {
        return None;
    }
    let digits = format!("{whole}{frac:0<width$}", width = decimals as usize);
    let v: Integer = digits.parse().ok()?;
    Some(if neg { -v } else { v })
}

impl fmt::Display for DirectedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(12);
        write!(
            f,
            "[{}, {}]",
            self.lo.to_string_radix(10, Some(digits)),
            self.hi.to_string_radix(10, Some(digits))
        )
    }
}

impl Neg for &DirectedReal {
    type Output = DirectedReal;
    fn neg(self) -> DirectedReal {
        DirectedReal {
            lo: Float::with_val(self.hi.prec(), -&self.hi),
            hi: Float::with_val(self.lo.prec(), -&self.lo),
        }
    }
}

impl Add for &DirectedReal {
    type Output = DirectedReal;
    fn add(self, rhs: &DirectedReal) -> DirectedReal {
        let p = self.prec().max(rhs.prec());
        DirectedReal {
            lo: down(p, &self.lo + &rhs.lo),
            hi: up(p, &self.hi + &rhs.hi),
        }
    }
}

impl Sub for &DirectedReal {
    type Output = DirectedReal;
    fn sub(self, rhs: &DirectedReal) -> DirectedReal {
        let p = self.prec().max(rhs.prec());
        DirectedReal {
            lo: down(p, &self.lo - &rhs.hi),
            hi: up(p, &self.hi - &rhs.lo),
        }
    }
}

impl Mul for &DirectedReal {
    type Output = DirectedReal;
    fn mul(self, rhs: &DirectedReal) -> DirectedReal {
        let p = self.prec().max(rhs.prec());
        if self.lo >= 0 && rhs.lo >= 0 {
            return DirectedReal {
                lo: down(p, &self.lo * &rhs.lo),
                hi: up(p, &self.hi * &rhs.hi),
            };
        }
        let cands_lo = [
            down(p, &self.lo * &rhs.lo),
            down(p, &self.lo * &rhs.hi),
            down(p, &self.hi * &rhs.lo),
            down(p, &self.hi * &rhs.hi),
        ];
        let cands_hi = [
            up(p, &self.lo * &rhs.lo),
            up(p, &self.lo * &rhs.hi),
            up(p, &self.hi * &rhs.lo),
            up(p, &self.hi * &rhs.hi),
        ];
        DirectedReal {
            lo: min_of(cands_lo),
            hi: max_of(cands_hi),
        }
    }
}

impl std::iter::Sum<DirectedReal> for Option<DirectedReal> {
    fn sum<I: Iterator<Item = DirectedReal>>(iter: I) -> Self {
        iter.reduce(|mut acc, x| {
            acc.add_assign(&x);
            acc
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(x: &DirectedReal, v: f64, tol: f64) -> bool {
        (x.mid_f64() - v).abs() <= tol
    }

    #[test]
    fn constants_bracket_known_values() {
        let e = DirectedReal::e(128);
        assert!(approx(&e, std::f64::consts::E, 1e-15));
        assert!(e.lo() < e.hi());
        let ln2 = DirectedReal::ln2(128);
        assert!(approx(&ln2, std::f64::consts::LN_2, 1e-15));
        assert!(Float::with_val(128, ln2.width()) < 1e-37);
    }

    #[test]
    fn exact_integers_are_degenerate() {
        let x = DirectedReal::from_u64(64, 12345);
        assert_eq!(x.lo(), x.hi());
        let big = Integer::from(3).pow(200);
        let y = DirectedReal::from_integer(64, &big);
        assert!(y.lo() < y.hi());
        assert!(y.contains(&Float::with_val(400, &big)));
    }

    #[test]
    fn subtraction_is_outward() {
        let third = DirectedReal::from_ratio(64, &Integer::from(1), &Integer::from(3));
        let zero = &third - &third;
        assert!(zero.lo() < &0 && zero.hi() > &0);
    }

    #[test]
    fn mixed_sign_product() {
        let a = DirectedReal::from_endpoints(Float::with_val(53, -2), Float::with_val(53, 3));
        let b = DirectedReal::from_endpoints(Float::with_val(53, -5), Float::with_val(53, 4));
        let c = &a * &b;
        assert_eq!(c.lo().to_f64(), -15.0);
        assert_eq!(c.hi().to_f64(), 12.0);
    }

    #[test]
    fn refining_precision_stays_inside() {
        let coarse = DirectedReal::from_u64(64, 7).ln().exp().pow(&DirectedReal::e(64));
        let fine = DirectedReal::from_u64(256, 7).ln().exp().pow(&DirectedReal::e(256));
        assert!(coarse.encloses(&fine));
        assert!(fine.width() < coarse.width());
    }

    #[test]
    fn directed_formatting() {
        let x = DirectedReal::from_ratio(128, &Integer::from(2), &Integer::from(3));
        assert_eq!(x.format_down(8), "0.66666666");
        assert_eq!(x.format_up(8), "0.66666667");
        let two = DirectedReal::from_u64(64, 2);
        assert_eq!(two.format_down(8), "2.00000000");
        assert_eq!(two.format_up(8), "2.00000000");
        let neg = -&x;
        assert_eq!(neg.format_down(3), "-0.667");
        assert_eq!(neg.format_up(3), "-0.666");
    }

    #[test]
    fn floor_to_decimals_is_exact_grid_value() {
        let x = DirectedReal::from_ratio(128, &Integer::from(2), &Integer::from(3));
        let f = x.floor_to_decimals(4);
        assert!(f.hi() <= x.lo());
        assert!(f.truncates_to("0.6666", 4));
        assert!(f.width() < 1e-35);
    }

    #[test]
    fn truncation_comparison() {
        let x = DirectedReal::from_ratio(128, &Integer::from(2), &Integer::from(3));
        assert!(x.truncates_to("0.66666666", 8));
        assert!(!x.truncates_to("0.66666667", 8));
        assert!(!x.truncates_to("0.66666665", 8));
        let two = DirectedReal::from_u64(64, 2);
        assert!(two.truncates_to("2.00000000", 8));
        assert!(!two.truncates_to("1.99999999", 8));
        assert!(!two.truncates_to("garbage", 8));
    }
}
