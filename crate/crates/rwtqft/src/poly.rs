//! Sparse multivariate polynomials with exact rational coefficients over
//! bigraded variables.

use crate::grade::Bidegree;
use crate::rat::{self, int, Rat};
use crate::var::Var;
use num::traits::{One, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// An exponent vector, canonically sorted by variable name.
///
/// Monomials are ordered lexicographically: exponent vectors are compared
/// variable by variable in ascending name order, and the first variable with
/// a higher exponent wins.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub BTreeMap<Var, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(v: Var) -> Self {
        let mut m = BTreeMap::new();
        m.insert(v, 1);
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }

    pub fn bidegree(&self) -> Bidegree {
        let mut r = Rat::zero();
        let mut q = Rat::zero();
        for (v, e) in &self.0 {
            let e = int(*e as i64);
            r += v.deg.r.clone() * e.clone();
            q += v.deg.q.clone() * e;
        }
        Bidegree::new(r, q)
    }

    pub fn exponent(&self, v: &Var) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().peekable();
        let mut b = other.0.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    // The variable present only on one side has exponent 0 on
                    // the other; a positive exponent at an earlier name wins.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        a.next();
                        b.next();
                    }
                },
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{}", v.name)?;
            } else {
                write!(f, "{}^{}", v.name, e)?;
            }
        }
        Ok(())
    }
}

/// Result of a homogeneity query.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Homogeneity {
    Zero,
    Homogeneous(Bidegree),
    Inhomogeneous,
}

/// A polynomial: a map from monomials to nonzero rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(v: &Var) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(v.clone()), Rat::one());
        Poly { terms }
    }

    pub fn monomial(m: Monomial, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    /// `sum_i coeffs_i * vars_i`.
    pub fn linear_form(pairs: &[(Rat, Var)]) -> Self {
        let mut p = Poly::zero();
        for (c, v) in pairs {
            p = p + Poly::monomial(Monomial::var(v.clone()), c.clone());
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_one())
    }

    /// The constant value if this polynomial is constant.
    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_one() {
                return Some(c.clone());
            }
        }
        None
    }

    fn insert_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for v in m.0.keys() {
                s.insert(v.clone());
            }
        }
        s
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Leading monomial and coefficient in the canonical order.
    pub fn leading(&self) -> Option<(&Monomial, &Rat)> {
        self.terms.iter().next_back()
    }

    /// Shared bidegree of all monomials, `Zero`, or `Inhomogeneous`.
    pub fn homogeneity(&self) -> Homogeneity {
        let mut it = self.terms.keys();
        let first = match it.next() {
            None => return Homogeneity::Zero,
            Some(m) => m.bidegree(),
        };
        for m in it {
            if m.bidegree() != first {
                return Homogeneity::Inhomogeneous;
            }
        }
        Homogeneity::Homogeneous(first)
    }

    pub fn is_homogeneous_of(&self, deg: &Bidegree) -> bool {
        match self.homogeneity() {
            Homogeneity::Zero => true,
            Homogeneity::Homogeneous(d) => d == *deg,
            Homogeneity::Inhomogeneous => false,
        }
    }

    /// Simultaneous substitution of variables by polynomials.
    pub fn substitute(&self, map: &BTreeMap<Var, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (v, e) in &m.0 {
                match map.get(v) {
                    Some(p) => term = term * p.pow(*e),
                    None => {
                        term = term * Poly::monomial(Monomial::var(v.clone()), Rat::one()).pow(*e)
                    }
                }
            }
            out = out + term;
        }
        out
    }

    pub fn substitute_one(&self, v: &Var, p: &Poly) -> Poly {
        let mut map = BTreeMap::new();
        map.insert(v.clone(), p.clone());
        self.substitute(&map)
    }

    /// Renames variables; the map must be injective on the support.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut nm = BTreeMap::new();
            for (v, e) in &m.0 {
                let w = map.get(v).cloned().unwrap_or_else(|| v.clone());
                *nm.entry(w).or_insert(0) += e;
            }
            out.insert_term(Monomial(nm), c.clone());
        }
        out
    }

    pub fn partial(&self, v: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let mut nm = m.0.clone();
            if e == 1 {
                nm.remove(v);
            } else {
                nm.insert(v.clone(), e - 1);
            }
            out.insert_term(Monomial(nm), c.clone() * int(e as i64));
        }
        out
    }

    /// Writes `self = a*v + b` with `a`, `b` free of `v`; `None` if `v`
    /// appears with exponent greater than one.
    pub fn split_linear(&self, v: &Var) -> Option<(Poly, Poly)> {
        let mut a = Poly::zero();
        let mut b = Poly::zero();
        for (m, c) in &self.terms {
            match m.exponent(v) {
                0 => b.insert_term(m.clone(), c.clone()),
                1 => {
                    let mut nm = m.0.clone();
                    nm.remove(v);
                    a.insert_term(Monomial(nm), c.clone());
                }
                _ => return None,
            }
        }
        Some((a, b))
    }

    /// Exact division by `v - e` where `e` is free of `v`. Returns the
    /// quotient if the remainder vanishes.
    pub fn div_by_linear(&self, v: &Var, e: &Poly) -> Option<Poly> {
        debug_assert!(!e.contains_var(v));
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        loop {
            let d = rem.degree_in(v);
            if d == 0 {
                return if rem.is_zero() { Some(quot) } else { None };
            }
            // Top coefficient in v: terms with exponent d, with v^d removed.
            let mut top = Poly::zero();
            for (m, c) in &rem.terms {
                if m.exponent(v) == d {
                    let mut nm = m.0.clone();
                    nm.remove(v);
                    top.insert_term(Monomial(nm), c.clone());
                }
            }
            let vpow = Poly::var(v).pow(d - 1);
            let piece = vpow.clone() * top.clone();
            quot = quot + piece.clone();
            let divisor = Poly::var(v) - e.clone();
            rem = rem - divisor * piece;
        }
    }

    /// The list of difference quotients for a pairing `(x_i, y_i)`:
    /// entry `i` is
    /// `(f(y_1..y_{i-1}, x_i, x_{i+1}..) - f(y_1..y_i, x_{i+1}..)) / (x_i - y_i)`,
    /// so that `sum_i (x_i - y_i) * Delta_i f = f(x) - f(y)` exactly.
    pub fn delta_quotients(&self, pairs: &[(Var, Var)]) -> Vec<Poly> {
        let mut out = Vec::with_capacity(pairs.len());
        for i in 0..pairs.len() {
            let mut hi = self.clone();
            for (x, y) in &pairs[..i] {
                hi = hi.substitute_one(x, &Poly::var(y));
            }
            let (xi, yi) = &pairs[i];
            let lo = hi.substitute_one(xi, &Poly::var(yi));
            let num = hi - lo;
            let q = num
                .div_by_linear(xi, &Poly::var(yi))
                .expect("difference quotient divides exactly");
            out.push(q);
        }
        out
    }

    /// Scalar product `vars . polys`.
    pub fn dot(vars: &[Var], polys: &[Poly]) -> Poly {
        assert_eq!(vars.len(), polys.len());
        let mut s = Poly::zero();
        for (v, p) in vars.iter().zip(polys) {
            s = s + Poly::var(v) * p.clone();
        }
        s
    }

    /// `sum_i a_i * (b_i - c_i)` for equal-length variable lists.
    pub fn dot_diff(a: &[Var], b: &[Var], c: &[Var]) -> Poly {
        assert_eq!(a.len(), b.len());
        assert_eq!(a.len(), c.len());
        let mut s = Poly::zero();
        for i in 0..a.len() {
            s = s + Poly::var(&a[i]) * (Poly::var(&b[i]) - Poly::var(&c[i]));
        }
        s
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, o: Poly) -> Poly {
        let mut out = self;
        for (m, c) in o.terms {
            out.insert_term(m, c);
        }
        out
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        let mut out = self;
        for (m, c) in o.terms {
            out.insert_term(m, -c);
        }
        out
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect(),
        }
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.insert_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Descending canonical order.
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = rat::is_negative(c);
            let abs = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", rat::display(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", rat::display(&abs), m)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn x() -> Var {
        Var::bulk("x")
    }
    fn y() -> Var {
        Var::bulk("y")
    }
    fn a() -> Var {
        Var::multiplier("a")
    }

    #[test]
    fn cancellation() {
        let p = Poly::var(&x()) - Poly::var(&x());
        assert!(p.is_zero());
    }

    #[test]
    fn product_bidegree_adds() {
        let p = Poly::var(&a()) * Poly::var(&x());
        assert_eq!(p.homogeneity(), Homogeneity::Homogeneous(Bidegree::of_ints(2, 0)));
    }

    #[test]
    fn binomial_product_expands() {
        let b = Var::multiplier("b");
        let p = (Poly::var(&x()) - Poly::var(&y())) * (Poly::var(&a()) - Poly::var(&b));
        assert_eq!(p.terms.len(), 4);
        assert_eq!(p.to_string(), "a*x - a*y - b*x + b*y");
    }

    #[test]
    fn inhomogeneous_detected() {
        let p = Poly::var(&x()) + Poly::var(&a());
        assert_eq!(p.homogeneity(), Homogeneity::Inhomogeneous);
    }

    #[test]
    fn substitution_collapses_difference() {
        let x1 = Var::bulk("x1");
        let x2 = Var::bulk("x2");
        let d = Var::multiplier("d");
        let p = Poly::var(&d) * (Poly::var(&x1) - Poly::var(&x2));
        let mut map = BTreeMap::new();
        map.insert(x1, Poly::var(&x()));
        map.insert(x2, Poly::var(&x()));
        assert!(p.substitute(&map).is_zero());
    }

    #[test]
    fn identity_substitution() {
        let p = Poly::var(&x());
        assert_eq!(p.substitute_one(&x(), &Poly::var(&x())), p);
    }

    #[test]
    fn twist_substitution() {
        // a*(x - 2y), x -> 3x  gives  a*(3x - 2y)
        let p = Poly::var(&a()) * (Poly::var(&x()) - Poly::var(&y()).scale(&int(2)));
        let q = p.substitute_one(&x(), &Poly::var(&x()).scale(&int(3)));
        let want = Poly::var(&a()) * (Poly::var(&x()).scale(&int(3)) - Poly::var(&y()).scale(&int(2)));
        assert_eq!(q, want);
    }

    #[test]
    fn delta_linear() {
        // f = a*x, pair (x, y): [a]
        let f = Poly::var(&a()) * Poly::var(&x());
        let d = f.delta_quotients(&[(x(), y())]);
        assert_eq!(d, vec![Poly::var(&a())]);
    }

    #[test]
    fn delta_telescoping_product() {
        // f = x1*x2, pairs ((x1,y1),(x2,y2)): [x2, y1]
        let x1 = Var::bulk("x1");
        let x2 = Var::bulk("x2");
        let y1 = Var::bulk("y1");
        let y2 = Var::bulk("y2");
        let f = Poly::var(&x1) * Poly::var(&x2);
        let d = f.delta_quotients(&[(x1.clone(), y1.clone()), (x2.clone(), y2.clone())]);
        assert_eq!(d, vec![Poly::var(&x2), Poly::var(&y1)]);
    }

    #[test]
    fn delta_of_zero() {
        let d = Poly::zero().delta_quotients(&[(x(), y())]);
        assert_eq!(d, vec![Poly::zero()]);
    }

    #[test]
    fn telescoping_identity_cubic() {
        let x1 = Var::bulk("x1");
        let x2 = Var::bulk("x2");
        let y1 = Var::bulk("y1");
        let y2 = Var::bulk("y2");
        let f = Poly::var(&x1).pow(2) * Poly::var(&x2) + Poly::var(&x2).pow(3);
        let pairs = [(x1.clone(), y1.clone()), (x2.clone(), y2.clone())];
        let d = f.delta_quotients(&pairs);
        let mut lhs = Poly::zero();
        for (i, (xi, yi)) in pairs.iter().enumerate() {
            lhs = lhs + (Poly::var(xi) - Poly::var(yi)) * d[i].clone();
        }
        let mut map = BTreeMap::new();
        map.insert(x1, Poly::var(&y1));
        map.insert(x2, Poly::var(&y2));
        let rhs = f.clone() - f.substitute(&map);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn display_rationals() {
        let p = Poly::var(&x()).pow(2).scale(&rat(3, 2)) - Poly::var(&y());
        assert_eq!(p.to_string(), "3/2*x^2 - y");
    }
}
