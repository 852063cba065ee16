use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul};

/// Numeric type that partition sums and median weights can be evaluated in.
pub trait Scalar:
    Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Mul<Output = Self> + Send + Sync
{
    fn from_count(v: &BigUint) -> Self;
    /// `None` when the value is not representable (a fraction in an integer type).
    fn from_exact(v: &BigRational) -> Option<Self>;
}

impl Scalar for BigUint {
    fn from_count(v: &BigUint) -> Self {
        v.clone()
    }
    fn from_exact(v: &BigRational) -> Option<Self> {
        if v.is_integer() {
            v.to_integer().to_biguint()
        } else {
            None
        }
    }
}

impl Scalar for BigRational {
    fn from_count(v: &BigUint) -> Self {
        BigRational::from_integer(v.clone().into())
    }
    fn from_exact(v: &BigRational) -> Option<Self> {
        Some(v.clone())
    }
}

impl Scalar for f64 {
    fn from_count(v: &BigUint) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }
    fn from_exact(v: &BigRational) -> Option<Self> {
        v.to_f64()
    }
}

impl Scalar for f32 {
    fn from_count(v: &BigUint) -> Self {
        v.to_f32().unwrap_or(f32::INFINITY)
    }
    fn from_exact(v: &BigRational) -> Option<Self> {
        v.to_f32()
    }
}

/// Natural log of a big integer, accurate to f64 precision even past f64 range.
pub fn ln_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_exact(v: &BigRational) -> f64 {
    let num = v.numer().magnitude();
    let den = v.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// Serializes a big integer as its decimal string.
pub fn serialize_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_of_large_values_tracks_bit_length() {
        let v = BigUint::one() << 5000u32;
        let got = ln_biguint(&v);
        assert!((got - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn fractions_do_not_fit_integers() {
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(BigUint::from_exact(&half), None);
        assert_eq!(f64::from_exact(&half), Some(0.5));
    }
}
