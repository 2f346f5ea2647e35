use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::scalar::Scalar;

/// Recommendation threshold on the signal, including the two boundary
/// strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff<T> {
    /// Recommend the risky action at every signal.
    AlwaysRisky,
    /// Recommend the risky action iff the signal is at least this value.
    Interior(T),
    /// Never recommend the risky action.
    AlwaysSafe,
}

impl<T: Scalar> Cutoff<T> {
    /// Maps a float onto a cutoff; infinities become the boundary variants.
    pub fn from_value(c: T) -> Self {
        if c == T::infinity() {
            Cutoff::AlwaysSafe
        } else if c == T::neg_infinity() {
            Cutoff::AlwaysRisky
        } else {
            Cutoff::Interior(c)
        }
    }

    /// Threshold as a float, with the boundaries mapped to `-inf` / `+inf`.
    #[inline]
    pub fn value(self) -> T {
        match self {
            Cutoff::AlwaysRisky => T::neg_infinity(),
            Cutoff::Interior(c) => c,
            Cutoff::AlwaysSafe => T::infinity(),
        }
    }

    #[inline]
    pub fn interior(self) -> Option<T> {
        match self {
            Cutoff::Interior(c) => Some(c),
            _ => None,
        }
    }

    #[inline]
    pub fn is_interior(self) -> bool {
        matches!(self, Cutoff::Interior(_))
    }

    /// Same boundary variant, or interior values within `tol`.
    pub fn close_to(self, other: Self, tol: T) -> bool {
        match (self, other) {
            (Cutoff::Interior(a), Cutoff::Interior(b)) => (a - b).abs() <= tol,
            (a, b) => std::mem::discriminant(&a) == std::mem::discriminant(&b),
        }
    }

    /// Distance between two cutoffs; zero for equal boundaries, infinite
    /// when exactly one side is a boundary.
    pub fn distance(self, other: Self) -> T {
        match (self, other) {
            (Cutoff::Interior(a), Cutoff::Interior(b)) => (a - b).abs(),
            (a, b) if std::mem::discriminant(&a) == std::mem::discriminant(&b) => T::zero(),
            _ => T::infinity(),
        }
    }
}

impl<T: Scalar> PartialOrd for Cutoff<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl<T: Scalar> fmt::Display for Cutoff<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::AlwaysRisky => f.write_str("-inf"),
            Cutoff::Interior(c) => write!(f, "{c}"),
            Cutoff::AlwaysSafe => f.write_str("inf"),
        }
    }
}

/// Interior cutoffs serialize as numbers, boundaries as `"-inf"` / `"inf"`,
/// so JSON and CSV carry the same content.
impl<T: Scalar> Serialize for Cutoff<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cutoff::AlwaysRisky => s.serialize_str("-inf"),
            Cutoff::Interior(c) => s.serialize_f64(c.as_f64()),
            Cutoff::AlwaysSafe => s.serialize_str("inf"),
        }
    }
}
