//! Exact rational arithmetic helpers.
//!
//! All quantitative invariants in this crate (Følner defects, coverage
//! fractions, measures, equivariance defects) are exact rationals; nothing
//! is ever hashed or compared through floats.

use num::rational::Ratio;
use num::{BigInt, BigRational, One, Signed};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The working rational type. Desk-scale instances keep numerators small;
/// the quasitiling planner, which takes genuine powers, uses `BigRational`.
pub type Rat = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(num, den)
}

pub fn to_big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Parse "p/q", an integer, or a plain decimal such as "0.1" (exactly, as
/// 1/10). Used by the CLI so command lines stay readable.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
        let q: i64 = q.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
        if q == 0 {
            return Err("zero denominator".into());
        }
        return Ok(Ratio::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|e| format!("bad integer part: {e}"))?
        };
        if frac.is_empty() {
            return Ok(Ratio::from_integer(int_part));
        }
        let scale = 10i64
            .checked_pow(frac.len() as u32)
            .ok_or("too many decimal digits")?;
        let frac_part: i64 = frac.parse().map_err(|e| format!("bad fractional part: {e}"))?;
        let abs = Ratio::from_integer(int_part.abs()) + Ratio::new(frac_part, scale);
        return Ok(if neg || int_part < 0 { -abs } else { abs });
    }
    let n: i64 = s.parse().map_err(|e| format!("bad rational: {e}"))?;
    Ok(Ratio::from_integer(n))
}

pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde wrapper serializing rationals as exact "p/q" strings so JSON
/// artifacts are byte-stable and lossless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JsonRat(pub Rat);

impl Serialize for JsonRat {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rat(&self.0))
    }
}

impl<'de> Deserialize<'de> for JsonRat {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        parse_rat(&s).map(JsonRat).map_err(serde::de::Error::custom)
    }
}

impl From<Rat> for JsonRat {
    fn from(r: Rat) -> Self {
        JsonRat(r)
    }
}

pub fn is_nonneg(r: &Rat) -> bool {
    !r.is_negative()
}
