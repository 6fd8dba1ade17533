//! Floating-point scalar abstraction shared by every vector and matrix type.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::LinalgScalar;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for weights, embeddings and similarity scores: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to any float scalar")
    }

    /// Widening conversion to `f64`.
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("float scalar converts to f64")
    }

    /// Lossless for every count a corpus can hold.
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count converts to float scalar")
    }

    /// Clamp into `[-1, 1]`.
    fn clamp_unit(self) -> Self {
        self.max(-Self::one()).min(Self::one())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Formats `v` with six significant digits, `%g` style: fixed notation for
/// decimal exponents in `[-4, 6)`, scientific otherwise, trailing zeros trimmed.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // Rounding to 6 significant digits can bump the exponent (999999.5 -> 1e6),
    // so read the exponent back from the rounded scientific form.
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_fraction(&format!("{v:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
