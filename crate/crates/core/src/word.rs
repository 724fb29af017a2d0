//! Storage words for keys and buckets.
//!
//! A sketch over `w`-bit keys stores each bucket in the narrowest machine word
//! that holds `w` bits. The sketch math only ever XORs words and compares them
//! with zero, so the same code serves every unsigned width.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_traits::{AsPrimitive, PrimInt, Unsigned};

/// Unsigned machine word that can hold a key.
pub trait Word:
    PrimInt + Unsigned + AsPrimitive<u64> + Hash + Debug + Display + Default + Send + Sync + 'static
{
    /// Width of the word in bits.
    const BITS: u32;

    /// Keeps the low `Self::BITS` bits of `value`.
    fn truncate_from(value: u64) -> Self;

    #[inline]
    fn to_wide(self) -> u64 {
        self.as_()
    }
}

macro_rules! impl_word {
    ($($t:ty),*) => {$(
        impl Word for $t {
            const BITS: u32 = <$t>::BITS;

            #[inline]
            fn truncate_from(value: u64) -> Self {
                value as $t
            }
        }
    )*};
}

impl_word!(u8, u16, u32, u64);

/// All-ones mask of the low `bits` bits (`bits` in `0..=64`).
#[inline]
pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}
