use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

/// Integer coefficient type the domains are generic over.
///
/// Any signed integer with exact division helpers works; the crate root picks
/// arbitrary precision (`BigInt`) so Fourier-Motzkin combinations cannot
/// overflow. Fixed-width types are fine for small hand-built states.
pub trait Scalar:
    Integer + Signed + Clone + Ord + Hash + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("i64 always representable")
    }

    /// `floor(self / d)` for `d > 0`.
    fn floor_div(&self, d: &Self) -> Self {
        self.div_floor(d)
    }

    /// `ceil(self / d)` for `d > 0`.
    fn ceil_div(&self, d: &Self) -> Self {
        -((-self.clone()).div_floor(d))
    }
}

impl<T> Scalar for T where
    T: Integer + Signed + Clone + Ord + Hash + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// One end of an interval: a finite integer or an infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Ext<T> {
    NegInf,
    Fin(T),
    PosInf,
}

impl<T: Scalar> Ext<T> {
    pub(crate) fn mul(&self, other: &Ext<T>) -> Ext<T> {
        use Ext::*;
        let sign = |e: &Ext<T>| match e {
            NegInf => -1,
            PosInf => 1,
            Fin(v) if v.is_zero() => 0,
            Fin(v) if v.is_negative() => -1,
            Fin(_) => 1,
        };
        match (self, other) {
            (Fin(a), Fin(b)) => Fin(a.clone() * b.clone()),
            _ => match sign(self) * sign(other) {
                0 => Fin(T::zero()),
                s if s > 0 => PosInf,
                _ => NegInf,
            },
        }
    }

    fn rank(&self) -> (i8, Option<&T>) {
        match self {
            Ext::NegInf => (0, None),
            Ext::Fin(v) => (1, Some(v)),
            Ext::PosInf => (2, None),
        }
    }
}

impl<T: Scalar> PartialOrd for Ext<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Ext<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}
