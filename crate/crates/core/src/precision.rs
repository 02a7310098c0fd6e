//! Extended-precision scalars.
//!
//! [`XFloat`] is a software binary floating-point number with a configurable
//! significand width, backed by `astro-float`. Every value carries its own
//! precision; binary operations run at the wider of the two operands.
//! [`Real`] abstracts over `f64` and `XFloat` so the dense linear algebra can
//! run in either.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Default significand width for extended-precision work.
pub const DEFAULT_BITS: usize = 256;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Working precision for extended-precision computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub bits: usize,
    /// When set and `bits == 53`, solvers run in native `f64` instead of a
    /// 64-bit software float.
    #[serde(default)]
    pub fallback_to_native: bool,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            bits: DEFAULT_BITS,
            fallback_to_native: false,
        }
    }
}

impl PrecisionConfig {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < 53 {
            return Err(Error::InvalidInput(format!(
                "precision must be at least 53 bits, got {bits}"
            )));
        }
        Ok(PrecisionConfig {
            bits,
            fallback_to_native: false,
        })
    }

    pub fn native() -> Self {
        PrecisionConfig {
            bits: 53,
            fallback_to_native: true,
        }
    }

    pub fn uses_native(&self) -> bool {
        self.fallback_to_native && self.bits <= 53
    }

    /// Smallest root-mean-square error resolvable for a process with
    /// variance `r0`. Reserves 64 bits for conditioning loss.
    pub fn rmse_floor(&self, r0: f64) -> f64 {
        let usable = self.bits.saturating_sub(64).max(40) as i32;
        (r0 * 2f64.powi(-usable)).sqrt()
    }
}

/// Extended-precision binary float.
#[derive(Clone)]
pub struct XFloat {
    v: BigFloat,
    p: usize,
}

impl XFloat {
    fn wrap(v: BigFloat, p: usize) -> Self {
        XFloat { v, p }
    }

    pub fn from_f64(x: f64, bits: usize) -> Self {
        Self::wrap(BigFloat::from_f64(x, bits), bits)
    }

    pub fn from_i64(x: i64, bits: usize) -> Self {
        Self::wrap(BigFloat::from_i64(x, bits), bits)
    }

    pub fn zero(bits: usize) -> Self {
        Self::from_f64(0.0, bits)
    }

    pub fn one(bits: usize) -> Self {
        Self::from_f64(1.0, bits)
    }

    pub fn pi(bits: usize) -> Self {
        Self::wrap(with_consts(|cc| cc.pi(bits, RM)), bits)
    }

    pub fn e(bits: usize) -> Self {
        Self::wrap(with_consts(|cc| cc.e(bits, RM)), bits)
    }

    /// Parse a decimal literal at the given precision.
    pub fn parse(s: &str, bits: usize) -> Self {
        Self::wrap(
            with_consts(|cc| BigFloat::parse(s, Radix::Dec, bits, RM, cc)),
            bits,
        )
    }

    pub fn bits(&self) -> usize {
        self.p
    }

    /// Round to a different precision.
    pub fn with_bits(&self, bits: usize) -> Self {
        let mut v = self.v.clone();
        let _ = v.set_precision(bits, RM);
        Self::wrap(v, bits)
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    pub fn is_sign_negative(&self) -> bool {
        !self.v.is_zero() && self.v.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.v.abs(), self.p)
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(self.v.sqrt(self.p, RM), self.p)
    }

    pub fn sin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.sin(self.p, RM, cc)), self.p)
    }

    pub fn cos(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.cos(self.p, RM, cc)), self.p)
    }

    pub fn exp(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.exp(self.p, RM, cc)), self.p)
    }

    pub fn ln(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.ln(self.p, RM, cc)), self.p)
    }

    pub fn powi(&self, n: usize) -> Self {
        Self::wrap(self.v.powi(n, self.p, RM), self.p)
    }

    pub fn recip(&self) -> Self {
        Self::wrap(self.v.reciprocal(self.p, RM), self.p)
    }

    pub fn mul_f64(&self, x: f64) -> Self {
        self.clone() * XFloat::from_f64(x, self.p)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64` (truncated to the two leading mantissa words).
    pub fn to_f64(&self) -> f64 {
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf() {
            return if self.v.is_inf_pos() {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        if self.v.is_zero() {
            return 0.0;
        }
        let Some((words, _, sign, exp, _)) = self.v.as_raw_parts() else {
            return f64::NAN;
        };
        let top = *words.last().unwrap_or(&0);
        let next = if words.len() >= 2 {
            words[words.len() - 2]
        } else {
            0
        };
        // value = 0.[top next ...] * 2^exp
        let frac = top as f64 + (next as f64) * 2f64.powi(-64);
        let mag = scale_pow2(frac, exp as i64 - 64);
        match sign {
            Sign::Neg => -mag,
            Sign::Pos => mag,
        }
    }

    /// Decimal rendering in scientific notation with every retained digit.
    pub fn to_decimal_string(&self) -> String {
        with_consts(|cc| self.v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".to_string())
    }
}

fn scale_pow2(mut x: f64, mut k: i64) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k as i32)
}

impl fmt::Debug for XFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "XFloat({}, {} bits)", self.to_decimal_string(), self.p)
    }
}

impl fmt::Display for XFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl PartialEq for XFloat {
    fn eq(&self, other: &Self) -> bool {
        self.v.cmp(&other.v) == Some(0)
    }
}

impl PartialOrd for XFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.cmp(&other.v).map(|c| c.cmp(&0))
    }
}

macro_rules! xfloat_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait<&XFloat> for &XFloat {
            type Output = XFloat;
            fn $method(self, rhs: &XFloat) -> XFloat {
                let p = self.p.max(rhs.p);
                XFloat::wrap(self.v.$inner(&rhs.v, p, RM), p)
            }
        }
        impl $trait<XFloat> for XFloat {
            type Output = XFloat;
            fn $method(self, rhs: XFloat) -> XFloat {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&XFloat> for XFloat {
            type Output = XFloat;
            fn $method(self, rhs: &XFloat) -> XFloat {
                (&self).$method(rhs)
            }
        }
        impl $trait<XFloat> for &XFloat {
            type Output = XFloat;
            fn $method(self, rhs: XFloat) -> XFloat {
                self.$method(&rhs)
            }
        }
    };
}

xfloat_binop!(Add, add, add);
xfloat_binop!(Sub, sub, sub);
xfloat_binop!(Mul, mul, mul);
xfloat_binop!(Div, div, div);

impl Neg for XFloat {
    type Output = XFloat;
    fn neg(self) -> XFloat {
        XFloat::wrap(self.v.neg(), self.p)
    }
}

impl Neg for &XFloat {
    type Output = XFloat;
    fn neg(self) -> XFloat {
        XFloat::wrap(self.v.clone().neg(), self.p)
    }
}

impl AddAssign<&XFloat> for XFloat {
    fn add_assign(&mut self, rhs: &XFloat) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&XFloat> for XFloat {
    fn sub_assign(&mut self, rhs: &XFloat) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&XFloat> for XFloat {
    fn mul_assign(&mut self, rhs: &XFloat) {
        *self = &*self * rhs;
    }
}

/// Scalar field used by the generic dense linear algebra.
pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Convert an `f64` to a value at the same precision as `self`.
    fn lift(&self, x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    /// Unit roundoff of this value's precision.
    fn unit_roundoff(&self) -> f64;
}

impl Real for f64 {
    fn lift(&self, x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn unit_roundoff(&self) -> f64 {
        f64::EPSILON / 2.0
    }
}

impl Real for XFloat {
    fn lift(&self, x: f64) -> Self {
        XFloat::from_f64(x, self.p)
    }
    fn to_f64(&self) -> f64 {
        XFloat::to_f64(self)
    }
    fn sqrt(&self) -> Self {
        XFloat::sqrt(self)
    }
    fn abs(&self) -> Self {
        XFloat::abs(self)
    }
    fn unit_roundoff(&self) -> f64 {
        // astro-float rounds precision up to whole 64-bit words
        let p = self.p.div_ceil(64) * 64;
        2f64.powi(-(p as i32))
    }
}
