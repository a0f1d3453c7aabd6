//! Graded variables and fresh-name generation.
//!
//! A ring is an implicit context (the set of variables in play), not a
//! first-class object; constructions constantly adjoin fresh primed copies
//! of existing variable lists.

use crate::grade::Bidegree;
use std::collections::BTreeSet;
use std::fmt;

/// A named variable with its `(r, q)` bidegree.
///
/// Ordering is by name first; a context must never hold two variables with
/// the same name and different bidegrees.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub deg: Bidegree,
}

impl Var {
    pub fn new(name: impl Into<String>, deg: Bidegree) -> Self {
        Var { name: name.into(), deg }
    }

    /// A bulk variable of bidegree `(1, -1)`.
    pub fn bulk(name: impl Into<String>) -> Self {
        Var::new(name, Bidegree::bulk())
    }

    /// A defect variable of bidegree `(1, 1)`.
    pub fn multiplier(name: impl Into<String>) -> Self {
        Var::new(name, Bidegree::multiplier())
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Mints fresh variable names by priming (`x` to `x'`, `x''`, ...) or, when
/// primes pile up, by numeric suffixes (`x_4`, `x_5`, ...).
#[derive(Clone, Default)]
pub struct NameGen {
    used: BTreeSet<String>,
}

impl NameGen {
    pub fn new() -> Self {
        NameGen::default()
    }

    /// Seeds the generator with every name that is already taken.
    pub fn reserve<'a, I: IntoIterator<Item = &'a Var>>(&mut self, vars: I) {
        for v in vars {
            self.used.insert(v.name.clone());
        }
    }

    pub fn reserve_name(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn is_used(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    /// A fresh name derived from `base`: first `base'`, then `base''`,
    /// `base'''`, then `base_4`, `base_5`, ...
    pub fn fresh_name(&mut self, base: &str) -> String {
        let stem = base.trim_end_matches('\'');
        let stem = match stem.rfind('_') {
            Some(i) if stem[i + 1..].chars().all(|c| c.is_ascii_digit()) && !stem[i + 1..].is_empty() => {
                &stem[..i]
            }
            _ => stem,
        };
        for primes in 1..=3 {
            let cand = format!("{}{}", stem, "'".repeat(primes));
            if !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                return cand;
            }
        }
        let mut k = 4usize;
        loop {
            let cand = format!("{}_{}", stem, k);
            if !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                return cand;
            }
            k += 1;
        }
    }

    /// A fresh copy of `v` with the same bidegree.
    pub fn fresh(&mut self, v: &Var) -> Var {
        Var::new(self.fresh_name(&v.name), v.deg.clone())
    }

    /// A fresh copy of a whole list, preserving order and bidegrees.
    pub fn fresh_list(&mut self, vars: &[Var]) -> Vec<Var> {
        vars.iter().map(|v| self.fresh(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priming_then_numbering() {
        let mut g = NameGen::new();
        g.reserve_name("x");
        assert_eq!(g.fresh_name("x"), "x'");
        assert_eq!(g.fresh_name("x"), "x''");
        assert_eq!(g.fresh_name("x"), "x'''");
        assert_eq!(g.fresh_name("x"), "x_4");
        assert_eq!(g.fresh_name("x'"), "x_5");
    }

    #[test]
    fn fresh_list_keeps_degrees() {
        let mut g = NameGen::new();
        let xs = vec![Var::bulk("x1"), Var::bulk("x2")];
        g.reserve(&xs);
        let ys = g.fresh_list(&xs);
        assert_eq!(ys[0].name, "x1'");
        assert_eq!(ys[1].deg, Bidegree::bulk());
    }
}
