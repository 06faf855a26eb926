//! Exact rationals, decimal parsing and the truncated logarithms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_u128(v: u128) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn q_frac(num: u128, den: u128) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // very large numerators/denominators: scale down first
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact rational equal to the binary value of `x`.
pub fn f64_to_q(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::domain(format!("non-finite value {x}")))
}

/// Parses `12`, `0.25`, `-1.5e-3`, `3/8` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let q = if scale >= 0 {
        Q::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(q)
}

/// Decimal rendering; exact when the expansion terminates, otherwise `num/den`.
pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let mut d = q.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut k2 = 0usize;
    let mut k5 = 0usize;
    while (&d % &two).is_zero() {
        d /= &two;
        k2 += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        k5 += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let k = k2.max(k5);
    let scaled = (q * Q::from_integer(num_traits::pow(BigInt::from(10u32), k))).to_integer();
    let neg = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    if digits.len() <= k {
        digits = format!("{}{}", "0".repeat(k + 1 - digits.len()), digits);
    }
    let split = digits.len() - k;
    format!("{}{}.{}", if neg { "-" } else { "" }, &digits[..split], &digits[split..])
}

/// `ln(max(x, e))`.
pub fn log_e(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= std::f64::consts::E {
        1.0
    } else {
        x.ln()
    }
}

/// `log2(max(x, 2))`.
pub fn log_2(x: f64) -> f64 {
    if x <= 2.0 {
        1.0
    } else {
        x.log2()
    }
}

/// `a * b` with `0 * inf = 0`.
pub fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// `a / b` with `x / 0 = inf` for `x > 0` and `0 / 0 = 0`.
pub fn div0(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals() {
        assert_eq!(parse_rational("0.25").unwrap(), q_frac(1, 4));
        assert_eq!(parse_rational("1e-2").unwrap(), q_frac(1, 100));
        assert_eq!(parse_rational("3/9").unwrap(), q_frac(1, 3));
        assert_eq!(parse_rational("-1.5").unwrap(), Q::new(BigInt::from(-3), BigInt::from(2)));
        assert_eq!(parse_rational(".5").unwrap(), q_frac(1, 2));
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn formats_round_trip() {
        for s in ["0.25", "1", "0.0625", "1/3", "0.001", "12.5"] {
            let q = parse_rational(s).unwrap();
            assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
        }
        assert_eq!(format_rational(&q_frac(1, 4)), "0.25");
        assert_eq!(format_rational(&q_frac(1, 3)), "1/3");
    }

    #[test]
    fn truncated_logs() {
        assert_eq!(log_e(0.5), 1.0);
        assert_eq!(log_e(f64::INFINITY), f64::INFINITY);
        assert_eq!(log_2(1.0), 1.0);
        assert_eq!(log_2(8.0), 3.0);
        assert_eq!(mul0(0.0, f64::INFINITY), 0.0);
        assert_eq!(div0(1.0, 0.0), f64::INFINITY);
    }
}
