//! Frequency expressions accepted by `--alpha`.
//!
//! ```text
//! 0.4142          decimal, taken as the exact binary value of the f64
//! 3/7             exact rational
//! golden          (sqrt 5 - 1) / 2
//! silver          sqrt 2 - 1
//! liouville:B:D   sum_{k <= D} B^{-k!}
//! rapid:B:D       [0; 2, B^(2 q_1), ...] with D quotients
//! ```

use mathieu_core::arithmetic::{
    expand_continued_fraction, expand_rational, ratio_to_f64, rapid_fraction, reciprocal_factorial_rational,
    ContinuedFraction,
};
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::CliError;

/// Depth used when a continued fraction is expanded from a float.
pub const FLOAT_DEPTH: usize = 40;

#[derive(Clone, Debug)]
pub struct Alpha {
    pub expr: String,
    pub value: f64,
    pub exact: BigRational,
    /// `liouville:` and `rapid:` expressions, classified by their expansion.
    pub series: bool,
    pub cf: ContinuedFraction,
}

impl Alpha {
    fn from_float(expr: &str, value: f64) -> Result<Self, CliError> {
        let exact = BigRational::from_float(value)
            .ok_or_else(|| CliError::Usage(format!("alpha `{expr}` is not finite")))?;
        let cf = expand_continued_fraction(value, FLOAT_DEPTH)?;
        Ok(Alpha {
            expr: expr.to_string(),
            value,
            exact,
            series: false,
            cf,
        })
    }

    fn from_exact(expr: &str, exact: BigRational) -> Self {
        let cf = expand_rational(&exact, 64);
        Alpha {
            expr: expr.to_string(),
            value: ratio_to_f64(&exact),
            exact,
            series: false,
            cf,
        }
    }
}

fn two_ints(rest: &str, expr: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Usage(format!("expected NAME:BASE:DEPTH, got `{expr}`"));
    let (b, d) = rest.split_once(':').ok_or_else(bad)?;
    Ok((b.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?))
}

pub fn parse_alpha(expr: &str) -> Result<Alpha, CliError> {
    let s = expr.trim();
    match s {
        "golden" => return Alpha::from_float(s, (5f64.sqrt() - 1.0) / 2.0),
        "silver" => return Alpha::from_float(s, 2f64.sqrt() - 1.0),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("liouville:") {
        let (b, d) = two_ints(rest, s)?;
        let mut a = Alpha::from_exact(s, reciprocal_factorial_rational(b, d)?);
        a.series = true;
        return Ok(a);
    }
    if let Some(rest) = s.strip_prefix("rapid:") {
        let (b, d) = two_ints(rest, s)?;
        let cf = rapid_fraction(b, d as usize)?;
        let mut a = Alpha::from_exact(s, cf.value.clone());
        a.cf = cf;
        a.series = true;
        return Ok(a);
    }
    if let Some((p, q)) = s.split_once('/') {
        let bad = || CliError::Usage(format!("bad rational `{s}`"));
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(Alpha::from_exact(s, BigRational::new(p, q)));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("unrecognized alpha expression `{s}`")))?;
    Alpha::from_float(s, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_constants() {
        assert!((parse_alpha("golden").unwrap().value - 0.618_033_988_749_895).abs() < 1e-15);
        assert!((parse_alpha("silver").unwrap().value - 0.414_213_562_373_095).abs() < 1e-15);
    }

    #[test]
    fn rational_is_exact() {
        let a = parse_alpha("3/7").unwrap();
        assert_eq!(a.exact, BigRational::new(3.into(), 7.into()));
        assert!(a.cf.terminated);
    }

    #[test]
    fn liouville_and_rapid() {
        let a = parse_alpha("liouville:10:3").unwrap();
        assert!((a.value - 0.110_001).abs() < 1e-12);
        assert!(a.series);
        assert!(parse_alpha("rapid:10:3").unwrap().series);
        assert!(!parse_alpha("3/7").unwrap().series);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_alpha("pi-ish").is_err());
        assert!(parse_alpha("1/0").is_err());
        assert!(parse_alpha("liouville:10").is_err());
    }
}
