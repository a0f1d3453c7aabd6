//! Bidegrees and tri-degrees.
//!
//! Variables carry a `(r, q)` bidegree (R-charge, flavour charge); module
//! generators carry a tri-degree with an additional Z/2 parity. Grade shifts
//! add tri-degrees to generator degrees, with parity taken mod 2.

use crate::rat::{display, int, Rat};
use num::traits::Zero;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// `(R-charge, flavour charge)` of a variable or homogeneous polynomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bidegree {
    pub r: Rat,
    pub q: Rat,
}

impl Bidegree {
    pub fn new(r: Rat, q: Rat) -> Self {
        Bidegree { r, q }
    }

    pub fn of_ints(r: i64, q: i64) -> Self {
        Bidegree { r: int(r), q: int(q) }
    }

    /// Bidegree `(1, -1)` of a bulk variable.
    pub fn bulk() -> Self {
        Bidegree::of_ints(1, -1)
    }

    /// Bidegree `(1, 1)` of a Lagrange-multiplier defect variable.
    pub fn multiplier() -> Self {
        Bidegree::of_ints(1, 1)
    }

    /// Bidegree `(2, 0)` of every superpotential.
    pub fn potential() -> Self {
        Bidegree::of_ints(2, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.r.is_zero() && self.q.is_zero()
    }
}

impl Add for Bidegree {
    type Output = Bidegree;
    fn add(self, o: Bidegree) -> Bidegree {
        Bidegree { r: self.r + o.r, q: self.q + o.q }
    }
}

impl Sub for Bidegree {
    type Output = Bidegree;
    fn sub(self, o: Bidegree) -> Bidegree {
        Bidegree { r: self.r - o.r, q: self.q - o.q }
    }
}

impl Neg for Bidegree {
    type Output = Bidegree;
    fn neg(self) -> Bidegree {
        Bidegree { r: -self.r, q: -self.q }
    }
}

impl fmt::Debug for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", display(&self.r), display(&self.q))
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", display(&self.r), display(&self.q))
    }
}

/// `(parity, r, q)` grading of a module generator or a grade shift.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriDegree {
    /// Z/2 parity, stored as 0 or 1.
    pub parity: u8,
    pub r: Rat,
    pub q: Rat,
}

impl TriDegree {
    pub fn new(parity: i64, r: Rat, q: Rat) -> Self {
        TriDegree { parity: (parity.rem_euclid(2)) as u8, r, q }
    }

    pub fn of_ints(parity: i64, r: i64, q: i64) -> Self {
        TriDegree::new(parity, int(r), int(q))
    }

    pub fn zero() -> Self {
        TriDegree::of_ints(0, 0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.parity == 0 && self.r.is_zero() && self.q.is_zero()
    }

    pub fn odd(bi: Bidegree) -> Self {
        TriDegree { parity: 1, r: bi.r, q: bi.q }
    }

    pub fn bidegree(&self) -> Bidegree {
        Bidegree { r: self.r.clone(), q: self.q.clone() }
    }

    /// The shift `Phi` attached to a list of variable bidegrees:
    /// `(n, sum(r_i - 1), sum(q_i))` for a list of length `n`.
    pub fn phi<'a, I: IntoIterator<Item = &'a Bidegree>>(degs: I) -> Self {
        let mut n: i64 = 0;
        let mut r = Rat::zero();
        let mut q = Rat::zero();
        for d in degs {
            n += 1;
            r += d.r.clone() - int(1);
            q += d.q.clone();
        }
        TriDegree::new(n, r, q)
    }

    /// `Phi` of `n` bulk variables: `(n, 0, -n)`.
    pub fn phi_bulk(n: usize) -> Self {
        TriDegree::of_ints(n as i64, 0, -(n as i64))
    }

    pub fn scaled(&self, k: i64) -> Self {
        TriDegree::new(
            k * self.parity as i64,
            Rat::from_integer(k.into()) * self.r.clone(),
            Rat::from_integer(k.into()) * self.q.clone(),
        )
    }
}

impl Add for TriDegree {
    type Output = TriDegree;
    fn add(self, o: TriDegree) -> TriDegree {
        TriDegree {
            parity: (self.parity + o.parity) % 2,
            r: self.r + o.r,
            q: self.q + o.q,
        }
    }
}

impl Sub for TriDegree {
    type Output = TriDegree;
    fn sub(self, o: TriDegree) -> TriDegree {
        TriDegree {
            parity: (2 + self.parity - o.parity) % 2,
            r: self.r - o.r,
            q: self.q - o.q,
        }
    }
}

impl Neg for TriDegree {
    type Output = TriDegree;
    fn neg(self) -> TriDegree {
        TriDegree { parity: self.parity % 2, r: -self.r, q: -self.q }
    }
}

impl fmt::Debug for TriDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.parity, display(&self.r), display(&self.q))
    }
}

impl fmt::Display for TriDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.parity, display(&self.r), display(&self.q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_of_bulk_list() {
        let degs = vec![Bidegree::bulk(), Bidegree::bulk()];
        assert_eq!(TriDegree::phi(&degs), TriDegree::of_ints(2, 0, -2));
        assert_eq!(TriDegree::phi(&degs), TriDegree::phi_bulk(2));
    }

    #[test]
    fn phi_of_multiplier_is_minus_phi_bulk() {
        let a = TriDegree::phi(&[Bidegree::multiplier()]);
        let x = TriDegree::phi(&[Bidegree::bulk()]);
        assert_eq!(a + x, TriDegree::of_ints(2, 0, 0));
        assert!((TriDegree::phi(&[Bidegree::multiplier()]) + TriDegree::phi_bulk(1)).parity == 0);
    }

    #[test]
    fn parity_arithmetic_wraps() {
        let a = TriDegree::of_ints(1, 1, -1);
        assert_eq!((a.clone() + a.clone()).parity, 0);
        assert_eq!((-a.clone()).parity, 1);
        assert_eq!(a.scaled(-2), TriDegree::of_ints(0, -2, 2));
    }
}
