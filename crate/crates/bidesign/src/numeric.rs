//! Exact rational arithmetic helpers and compensated floating-point sums.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

/// Exact probability. Every design query returns one of these; conversion to
/// `f64` happens only at the outermost numerical layer.
pub type Prob = BigRational;

/// Binomial coefficient `C(n, k)` as a big integer; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// `p` as a ratio of machine integers, for literals in tests and configs.
pub fn ratio(num: i64, den: i64) -> Prob {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational value of a probability written as text.
///
/// Accepts a fraction `"25/52"`, a decimal `"0.48"` (optionally with an
/// exponent, `"4.8e-1"`), or a bare integer. Decimals convert exactly, so
/// `"0.95"` becomes 19/20 rather than the nearest binary double.
pub fn parse_ratio(text: &str) -> Result<Prob> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::InvalidInput("empty numeric literal".into()));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad numerator in '{t}'")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad denominator in '{t}'")))?;
        if d.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in '{t}'")));
        }
        return Ok(BigRational::new(n, d));
    }
    parse_decimal(t)
}

fn parse_decimal(t: &str) -> Result<Prob> {
    let bad = || Error::InvalidInput(format!("bad numeric literal '{t}'"));
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(bad());
    }
    if frac_part.contains(['-', '+']) {
        return Err(bad());
    }
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = frac_part.len() as i64 - exp as i64;
    let ten = BigInt::from(10);
    if scale >= 0 {
        Ok(BigRational::new(n, ten.pow(scale as u32)))
    } else {
        Ok(BigRational::from_integer(n * ten.pow((-scale) as u32)))
    }
}

/// Exact rational value of a double, read back through its shortest decimal
/// representation. `0.95f64` becomes 19/20, matching what the user typed,
/// not the double's full binary expansion.
pub fn ratio_from_f64(x: f64) -> Result<Prob> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite value {x}")));
    }
    parse_decimal(&format!("{x}"))
}

/// Nearest double to an exact rational.
pub fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// True when `p` lies in the closed unit interval.
pub fn in_unit_interval(p: &Prob) -> bool {
    !p.is_negative() && *p <= Prob::one()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of doubles.
pub fn ksum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// `x` rounded to `digits` significant digits, in plain decimal notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let dec = (digits as i32 - 1 - mag).clamp(0, 17) as usize;
    format!("{x:.dec$}")
}

/// Bit `i` of `mask` as a treatment indicator.
pub fn bit(mask: usize, i: usize) -> u8 {
    ((mask >> i) & 1) as u8
}

/// Indicator vector of the low `len` bits of `mask`.
pub fn bits_of_mask(mask: usize, len: usize) -> Vec<u8> {
    (0..len).map(|i| bit(mask, i)).collect()
}

/// Mask with bit `i` set for each `bits[i] == 1`.
pub fn mask_of_bits(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0usize, |m, (i, &b)| m | ((b as usize) << i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(10, 0), BigInt::one());
        assert_eq!(binomial(10, 10), BigInt::one());
        assert_eq!(binomial(3, 5), BigInt::zero());
        assert_eq!(binomial(52, 25), "477551179875952".parse().unwrap());
    }

    #[test]
    fn parse_fraction_and_decimal() {
        assert_eq!(parse_ratio("25/52").unwrap(), ratio(25, 52));
        assert_eq!(parse_ratio("0.95").unwrap(), ratio(19, 20));
        assert_eq!(parse_ratio("1").unwrap(), ratio(1, 1));
        assert_eq!(parse_ratio(" 2.5e-1 ").unwrap(), ratio(1, 4));
        assert_eq!(parse_ratio("-0.5").unwrap(), ratio(-1, 2));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
        assert!(parse_ratio("").is_err());
        assert!(parse_ratio("1.2.3").is_err());
    }

    #[test]
    fn f64_round_trip_uses_shortest_decimal() {
        assert_eq!(ratio_from_f64(0.95).unwrap(), ratio(19, 20));
        assert_eq!(ratio_from_f64(0.5).unwrap(), ratio(1, 2));
        assert_eq!(ratio_from_f64(3.0).unwrap(), ratio(3, 1));
        assert!(ratio_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(ksum(xs.iter().copied()), 2.0);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_sig(-2.0, 6), "-2.00000");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(1234567.0, 6), "1234567");
        assert_eq!(format_sig(0.000012345678, 6), "0.0000123457");
    }

    #[test]
    fn mask_round_trip() {
        let bits = vec![1, 0, 1, 1, 0];
        assert_eq!(mask_of_bits(&bits), 0b01101);
        assert_eq!(bits_of_mask(0b01101, 5), bits);
    }
}
