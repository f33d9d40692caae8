//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for matrices, gates and networks.
///
/// Besides the arithmetic supplied by [`Float`], a scalar knows how to
/// write itself as an exact hexadecimal bit pattern so that checkpoints
/// reload bit-for-bit.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Short type name stored in checkpoints ("f32" / "f64").
    const NAME: &'static str;

    /// IEEE-754 bit pattern as a `0x`-prefixed, zero-padded hex string.
    fn to_hex(self) -> String;

    /// Inverse of [`Scalar::to_hex`].
    fn from_hex(s: &str) -> Option<Self>;

    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in the supported types, so this never fails.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $bits:ty, $name:literal, $width:literal) => {
        impl Scalar for $t {
            const NAME: &'static str = $name;

            fn to_hex(self) -> String {
                format!("0x{:0width$x}", self.to_bits(), width = $width)
            }

            fn from_hex(s: &str) -> Option<Self> {
                let digits = s.strip_prefix("0x")?;
                if digits.len() != $width {
                    return None;
                }
                <$bits>::from_str_radix(digits, 16).ok().map(<$t>::from_bits)
            }
        }
    };
}

impl_scalar!(f32, u32, "f32", 8);
impl_scalar!(f64, u64, "f64", 16);
