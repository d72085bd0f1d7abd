//! Numeric modes: exact rationals and binary64 floats behind one trait.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric representation carried by boxes, tables and certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Rational => f.write_str("rational"),
            Mode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" | "exact" => Ok(Mode::Rational),
            "float" => Ok(Mode::Float),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Field operations shared by both numeric modes.
///
/// Tolerance arguments are ignored by exact implementations.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn from_rational(r: &BigRational) -> Self;
    fn from_int(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn to_number(&self) -> Number;

    /// Refuses a number of the other mode.
    fn from_number(n: &Number) -> Result<Self>;

    fn near_zero(&self, tol: f64) -> bool;

    fn is_positive_beyond(&self, tol: f64) -> bool {
        !self.near_zero(tol) && *self > Self::zero()
    }

    fn is_negative_beyond(&self, tol: f64) -> bool {
        !self.near_zero(tol) && *self < Self::zero()
    }

    fn add_ref(&mut self, other: &Self);

    /// `self -= a * b`
    fn sub_mul(&mut self, a: &Self, b: &Self);

    fn mul_ref(&self, other: &Self) -> Self;

    fn div_ref(&self, other: &Self) -> Self;

    fn abs_val(&self) -> Self;

    fn into_table(values: Vec<Self>) -> Table;

    fn slice_of(table: &Table) -> Option<&[Self]>;
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_number(&self) -> Number {
        Number::Float(*self)
    }

    fn from_number(n: &Number) -> Result<Self> {
        match n {
            Number::Float(v) => Ok(*v),
            Number::Rational(r) => Err(Error::ModeMismatch(format!("rational {r} in float mode"))),
        }
    }

    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }

    fn add_ref(&mut self, other: &Self) {
        *self += *other;
    }

    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn into_table(values: Vec<Self>) -> Table {
        Table::Float(values)
    }

    fn slice_of(table: &Table) -> Option<&[Self]> {
        match table {
            Table::Float(v) => Some(v),
            Table::Rational(_) => None,
        }
    }
}

impl Scalar for BigRational {
    const MODE: Mode = Mode::Rational;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_number(&self) -> Number {
        Number::Rational(self.clone())
    }

    fn from_number(n: &Number) -> Result<Self> {
        match n {
            Number::Rational(r) => Ok(r.clone()),
            Number::Float(v) => Err(Error::ModeMismatch(format!("float {v} in rational mode"))),
        }
    }

    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }

    fn sub_mul(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self -= a * b;
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn into_table(values: Vec<Self>) -> Table {
        Table::Rational(values)
    }

    fn slice_of(table: &Table) -> Option<&[Self]> {
        match table {
            Table::Rational(v) => Some(v),
            Table::Float(_) => None,
        }
    }
}

/// A scalar tagged with its numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Rational(BigRational),
    Float(f64),
}

impl Number {
    pub fn mode(&self) -> Mode {
        match self {
            Number::Rational(_) => Mode::Rational,
            Number::Float(_) => Mode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(r) => Scalar::to_f64(r),
            Number::Float(v) => *v,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn rational(numer: i64, denom: i64) -> Self {
        Number::Rational(ratio(numer, denom))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) => write!(f, "{}", format_rational(r)),
            Number::Float(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Number::Rational(r) => serializer.serialize_str(&format_rational(r)),
            Number::Float(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct NumberVisitor;

        impl Visitor<'_> for NumberVisitor {
            type Value = Number;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a \"p/q\" rational string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Number, E> {
                parse_rational(v).map(Number::Rational).map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Number, E> {
                Ok(Number::Float(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Number, E> {
                Ok(Number::Float(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Number, E> {
                Ok(Number::Float(v as f64))
            }
        }

        deserializer.deserialize_any(NumberVisitor)
    }
}

/// Dense table in one numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Rational(Vec<BigRational>),
    Float(Vec<f64>),
}

/// Run a generic expression on the inner vector of a [`Table`].
#[macro_export]
macro_rules! with_table {
    ($table:expr, $v:ident => $body:expr) => {
        match $table {
            $crate::scalar::Table::Rational($v) => $body,
            $crate::scalar::Table::Float($v) => $body,
        }
    };
}

impl Table {
    pub fn mode(&self) -> Mode {
        match self {
            Table::Rational(_) => Mode::Rational,
            Table::Float(_) => Mode::Float,
        }
    }

    pub fn len(&self) -> usize {
        with_table!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Table::Rational(v) => Scalar::to_f64(&v[i]),
            Table::Float(v) => v[i],
        }
    }

    pub fn get(&self, i: usize) -> Number {
        match self {
            Table::Rational(v) => Number::Rational(v[i].clone()),
            Table::Float(v) => Number::Float(v[i]),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            Table::Rational(v) => v.iter().map(Scalar::to_f64).collect(),
            Table::Float(v) => v.clone(),
        }
    }

    pub fn to_float(&self) -> Table {
        Table::Float(self.to_f64_vec())
    }

    pub fn to_numbers(&self) -> Vec<Number> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Rebuild a table from tagged numbers; every number must carry `mode`.
    pub fn from_numbers(mode: Mode, values: &[Number]) -> Result<Table> {
        match mode {
            Mode::Rational => values
                .iter()
                .map(|n| match n {
                    Number::Rational(r) => Ok(r.clone()),
                    Number::Float(v) => Err(Error::ModeMismatch(format!(
                        "float entry {v} in a rational table"
                    ))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Table::Rational),
            Mode::Float => Ok(Table::Float(values.iter().map(Number::to_f64).collect())),
        }
    }
}

/// Serialized as a list of numbers; the mode is inferred from the entries.
impl Serialize for Table {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.to_numbers().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Table {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<Number>::deserialize(deserializer)?;
        let mode = values.first().map_or(Mode::Float, Number::mode);
        Table::from_numbers(mode, &values).map_err(serde::de::Error::custom)
    }
}

pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `p/q` in lowest terms; integers print without a denominator.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
            let q = BigInt::from_str(q.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
            if q.is_zero() {
                return Err(Error::Parse(format!("{s:?}: zero denominator")));
            }
            BigRational::new(p, q)
        }
        None => BigRational::from_integer(
            BigInt::from_str(s).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?,
        ),
    };
    Ok(parsed)
}

/// First continued-fraction convergent of `x` within `tol`.
pub fn approximate_rational(x: f64, tol: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("cannot rationalize {x}")));
    }
    let exact = BigRational::from_float(x).expect("finite float");
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact.clone();
    loop {
        let a = rest.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        let candidate = BigRational::new(p2.clone(), q2.clone());
        let err = Scalar::to_f64(&(&candidate - &exact).abs());
        if err <= tol || candidate == exact {
            return Ok(candidate);
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return Ok(candidate);
        }
        rest = frac.recip();
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
}
