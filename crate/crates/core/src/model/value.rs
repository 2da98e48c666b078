use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact non-negative model time.
///
/// Backed by a reduced big rational so that queue ordering and state hashing
/// never depend on floating point rounding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeVal(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeError {
    #[error("time value must be non-negative, got {0}")]
    Negative(String),
    #[error("time denominator must be positive")]
    ZeroDenominator,
    #[error("malformed time literal `{0}`")]
    Malformed(String),
}

impl TimeVal {
    pub fn zero() -> Self {
        TimeVal(BigRational::zero())
    }

    pub fn from_integer(n: u64) -> Self {
        TimeVal(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn new(numerator: u64, denominator: u64) -> Result<Self, TimeError> {
        if denominator == 0 {
            return Err(TimeError::ZeroDenominator);
        }
        Ok(TimeVal(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        )))
    }

    pub fn from_rational(r: BigRational) -> Result<Self, TimeError> {
        if r.is_negative() {
            return Err(TimeError::Negative(r.to_string()));
        }
        Ok(TimeVal(r))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numerator(&self) -> BigUint {
        self.0.numer().magnitude().clone()
    }

    pub fn denominator(&self) -> BigUint {
        self.0.denom().magnitude().clone()
    }

    /// `self - other`, or `None` when the result would be negative.
    pub fn checked_sub(&self, other: &TimeVal) -> Option<TimeVal> {
        if other.0 > self.0 {
            None
        } else {
            Some(TimeVal(&self.0 - &other.0))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for &TimeVal {
    type Output = TimeVal;
    fn add(self, rhs: &TimeVal) -> TimeVal {
        TimeVal(&self.0 + &rhs.0)
    }
}

impl Add for TimeVal {
    type Output = TimeVal;
    fn add(self, rhs: TimeVal) -> TimeVal {
        TimeVal(self.0 + rhs.0)
    }
}

/// Rendered as `p/q`, or as a bare integer when `q = 1`.
impl fmt::Display for TimeVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for TimeVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeVal({self})")
    }
}

/// Accepts `7`, `3/4` and exact decimals such as `1.0` or `0.25`.
impl FromStr for TimeVal {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || TimeError::Malformed(s.to_string());
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: BigInt = num.trim().parse().map_err(|_| malformed())?;
            let d: BigInt = den.trim().parse().map_err(|_| malformed())?;
            if d.is_zero() {
                return Err(TimeError::ZeroDenominator);
            }
            return TimeVal::from_rational(BigRational::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if int.is_empty() || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| malformed())?;
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            return TimeVal::from_rational(BigRational::new(digits, scale));
        }
        let n: BigInt = s.parse().map_err(|_| malformed())?;
        TimeVal::from_rational(BigRational::from_integer(n))
    }
}

/// Data carried by ports, variables and parameters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Time(TimeVal),
    Str(String),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Int(BigInt::from(n))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Time(_) => "time",
            Value::Str(_) => "string",
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::int(n)
    }
}

impl From<TimeVal> for Value {
    fn from(t: TimeVal) -> Self {
        Value::Time(t)
    }
}

/// Literal syntax accepted by the model and formula parsers.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Time(t) => {
                // time literals always carry a fraction so they re-parse as time
                let r = t.as_rational();
                if r.is_integer() {
                    write!(f, "{}.0", r.numer())
                } else {
                    write!(f, "time({t})")
                }
            }
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
