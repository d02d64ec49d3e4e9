use std::fmt;
use std::ops::Not;

/// A propositional variable, numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn new(index: u32) -> Var {
        assert!(index >= 1, "variables are numbered from 1");
        Var(index)
    }

    #[inline]
    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based index, handy for table lookups.
    #[inline]
    pub(crate) fn slot(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// A literal: a variable or its negation.
///
/// Encoded as `var << 1 | negated` so a literal and its negation differ in
/// the low bit only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn positive(var: Var) -> Lit {
        Lit(var.0 << 1)
    }

    #[inline]
    pub fn negative(var: Var) -> Lit {
        Lit(var.0 << 1 | 1)
    }

    #[inline]
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 << 1 | negated as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Dense code usable as an index into watch lists.
    #[inline]
    pub(crate) fn code(self) -> usize {
        // var 1 -> codes 2,3; shift down so var 1 occupies slots 0,1.
        (self.0 - 2) as usize
    }

    /// Parse a DIMACS-style signed integer (non-zero).
    pub fn from_dimacs(value: i64) -> Lit {
        assert!(value != 0, "DIMACS literal must be non-zero");
        let var = Var::new(value.unsigned_abs() as u32);
        Lit::new(var, value < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().index() as i64;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "-x{}", self.var().index())
        } else {
            write!(f, "x{}", self.var().index())
        }
    }
}
