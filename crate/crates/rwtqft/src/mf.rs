//! Graded Koszul matrix factorisations and the rewrite calculus.
//!
//! A factorisation is stored as a list of Koszul factors `[p, q]` together
//! with an accumulated tri-degree shift and the set of variables marked as
//! internal (eliminable). Each factor is a rank-2 block on generators
//! `{1, theta}` with `d(theta) = p` and `d(1) = q * theta`; the first entry
//! is the one used for variable elimination.
//!
//! Grading conventions, fixed once and used everywhere:
//!
//! * the wedge-degree-0 generator of a factor sits in degree `(0, 0, 0)`;
//! * `theta` is odd with bidegree `deg(p) - (1, 0)` (equivalently
//!   `(1, 0) - deg(q)`), so the differential is homogeneous of degree `(1,0)`;
//! * a shift `{Phi}` adds `Phi` to every generator degree, so the module
//!   written `C{Phi}` has its generator in degree `Phi`;
//! * swapping a factor `[p, q] -> [q, p]` records the old theta degree as an
//!   extra shift, which reproduces `[q, p] = [p, q]{-Phi_p}`.

use crate::grade::{Bidegree, TriDegree};
use crate::poly::{Homogeneity, Poly};
use crate::rat::{self, Rat};
use crate::var::Var;
use num::traits::Zero;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum MfError {
    #[error("potential is not homogeneous of bidegree (2,0): {0}")]
    InhomogeneousPotential(String),
    #[error("factor entry is not homogeneous: {0}")]
    InhomogeneousEntry(String),
    #[error("a [0,0] factor needs an explicit theta degree")]
    MissingTheta,
    #[error("scale factor must be a nonzero rational")]
    ZeroScale,
    #[error("row operation changed the potential")]
    PotentialChanged,
    #[error("row operation breaks homogeneity")]
    BadRowOp,
    #[error("elimination blocked: {0}")]
    EliminationBlocked(String),
    #[error("cohomology needs a reduced zero-potential factorisation, found {0}")]
    NonzeroPotential(String),
    #[error("potential mismatch between the two factorisations")]
    PotentialMismatch,
    #[error("index out of range")]
    BadIndex,
}

pub type Result<T> = std::result::Result<T, MfError>;

/// One Koszul factor `[p, q]` with the tri-degree of its odd generator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KoszulFactor {
    pub p: Poly,
    pub q: Poly,
    pub theta: TriDegree,
}

impl KoszulFactor {
    /// Derives the theta degree from the entries; `None` if both vanish.
    pub fn derive_theta(p: &Poly, q: &Poly) -> Result<Option<TriDegree>> {
        let pot = Bidegree::potential();
        let one0 = Bidegree::of_ints(1, 0);
        match (p.homogeneity(), q.homogeneity()) {
            (Homogeneity::Inhomogeneous, _) | (_, Homogeneity::Inhomogeneous) => {
                Err(MfError::InhomogeneousEntry(format!("[{}, {}]", p, q)))
            }
            (Homogeneity::Zero, Homogeneity::Zero) => Ok(None),
            (Homogeneity::Homogeneous(dp), Homogeneity::Zero) => {
                Ok(Some(TriDegree::odd(dp - one0)))
            }
            (Homogeneity::Zero, Homogeneity::Homogeneous(dq)) => {
                Ok(Some(TriDegree::odd(one0 - dq)))
            }
            (Homogeneity::Homogeneous(dp), Homogeneity::Homogeneous(dq)) => {
                if dp.clone() + dq.clone() != pot {
                    return Err(MfError::InhomogeneousPotential(format!(
                        "[{}, {}] has entry degrees {} + {}",
                        p, q, dp, dq
                    )));
                }
                Ok(Some(TriDegree::odd(dp - one0)))
            }
        }
    }

    pub fn new(p: Poly, q: Poly) -> Result<Self> {
        match Self::derive_theta(&p, &q)? {
            Some(theta) => Ok(KoszulFactor { p, q, theta }),
            None => Err(MfError::MissingTheta),
        }
    }

    pub fn with_theta(p: Poly, q: Poly, theta: TriDegree) -> Result<Self> {
        if theta.parity != 1 {
            return Err(MfError::InhomogeneousEntry("theta must be odd".into()));
        }
        if let Some(derived) = Self::derive_theta(&p, &q)? {
            if derived != theta {
                return Err(MfError::InhomogeneousEntry(format!(
                    "theta {} inconsistent with entries [{}, {}]",
                    theta, p, q
                )));
            }
        }
        Ok(KoszulFactor { p, q, theta })
    }

    /// Degree the `p` slot must have for the differential to stay graded.
    pub fn p_slot_degree(&self) -> Bidegree {
        self.theta.bidegree() + Bidegree::of_ints(1, 0)
    }

    pub fn q_slot_degree(&self) -> Bidegree {
        Bidegree::of_ints(1, 0) - self.theta.bidegree()
    }

    fn check(&self) -> Result<()> {
        if !self.p.is_homogeneous_of(&self.p_slot_degree()) {
            return Err(MfError::InhomogeneousEntry(format!(
                "p = {} not of degree {}",
                self.p,
                self.p_slot_degree()
            )));
        }
        if !self.q.is_homogeneous_of(&self.q_slot_degree()) {
            return Err(MfError::InhomogeneousEntry(format!(
                "q = {} not of degree {}",
                self.q,
                self.q_slot_degree()
            )));
        }
        Ok(())
    }

    fn sort_key(&self) -> (String, String, String) {
        (self.p.to_string(), self.q.to_string(), self.theta.to_string())
    }
}

impl fmt::Debug for KoszulFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.p, self.q)
    }
}

/// A graded matrix factorisation in Koszul form.
#[derive(Clone, PartialEq, Eq)]
pub struct Mf {
    pub factors: Vec<KoszulFactor>,
    pub shift: TriDegree,
    /// Variables eligible for elimination.
    pub internal: BTreeSet<Var>,
    /// Ambient variables (internal and external) still in play; eliminations
    /// remove variables from the context.
    pub context: BTreeSet<Var>,
    /// Set when the factorisation has been recognised as the zero object.
    pub zero: bool,
}

impl Mf {
    pub fn from_factors(factors: Vec<KoszulFactor>) -> Result<Self> {
        let mut context = BTreeSet::new();
        for f in &factors {
            f.check()?;
            context.extend(f.p.vars());
            context.extend(f.q.vars());
        }
        let mf = Mf {
            factors,
            shift: TriDegree::zero(),
            internal: BTreeSet::new(),
            context,
            zero: false,
        };
        mf.check_potential()?;
        Ok(mf)
    }

    /// Builds a Koszul factorisation from `(p, q)` pairs.
    pub fn koszul(pairs: Vec<(Poly, Poly)>) -> Result<Self> {
        let mut factors = Vec::with_capacity(pairs.len());
        for (p, q) in pairs {
            factors.push(KoszulFactor::new(p, q)?);
        }
        Mf::from_factors(factors)
    }

    /// A `[0, 0]` factor with an explicit theta degree.
    pub fn zero_factor(theta: TriDegree) -> Result<Self> {
        let f = KoszulFactor::with_theta(Poly::zero(), Poly::zero(), theta)?;
        Mf::from_factors(vec![f])
    }

    /// Rank-1 factorisation of zero (the empty tensor product).
    pub fn unit() -> Self {
        Mf {
            factors: Vec::new(),
            shift: TriDegree::zero(),
            internal: BTreeSet::new(),
            context: BTreeSet::new(),
            zero: false,
        }
    }

    pub fn zero_object() -> Self {
        Mf {
            factors: Vec::new(),
            shift: TriDegree::zero(),
            internal: BTreeSet::new(),
            context: BTreeSet::new(),
            zero: true,
        }
    }

    pub fn rank_log2(&self) -> usize {
        self.factors.len()
    }

    pub fn potential(&self) -> Poly {
        let mut w = Poly::zero();
        for f in &self.factors {
            w = w + f.p.clone() * f.q.clone();
        }
        w
    }

    fn check_potential(&self) -> Result<()> {
        let w = self.potential();
        if !w.is_homogeneous_of(&Bidegree::potential()) {
            return Err(MfError::InhomogeneousPotential(w.to_string()));
        }
        Ok(())
    }

    pub fn mark_internal<'a, I: IntoIterator<Item = &'a Var>>(mut self, vars: I) -> Self {
        for v in vars {
            self.internal.insert(v.clone());
            self.context.insert(v.clone());
        }
        self
    }

    pub fn extend_context<'a, I: IntoIterator<Item = &'a Var>>(mut self, vars: I) -> Self {
        for v in vars {
            self.context.insert(v.clone());
        }
        self
    }

    /// Tensor product: factor lists concatenate, shifts add, internal and
    /// ambient variable sets take unions.
    pub fn tensor(&self, other: &Mf) -> Mf {
        Mf {
            factors: self.factors.iter().chain(&other.factors).cloned().collect(),
            shift: self.shift.clone() + other.shift.clone(),
            internal: self.internal.union(&other.internal).cloned().collect(),
            context: self.context.union(&other.context).cloned().collect(),
            zero: self.zero || other.zero,
        }
    }

    /// Grade shift: adds `phi` to all generator degrees.
    pub fn shifted(&self, phi: &TriDegree) -> Mf {
        let mut out = self.clone();
        out.shift = out.shift + phi.clone();
        out
    }

    /// Consistent renaming of variables (context, internal set and entries).
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Mf {
        let ren = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        Mf {
            factors: self
                .factors
                .iter()
                .map(|f| KoszulFactor {
                    p: f.p.rename(map),
                    q: f.q.rename(map),
                    theta: f.theta.clone(),
                })
                .collect(),
            shift: self.shift.clone(),
            internal: self.internal.iter().map(ren).collect(),
            context: self.context.iter().map(ren).collect(),
            zero: self.zero,
        }
    }

    // ------------------------------------------------------------------
    // Rewrite moves. Each returns a factorisation isomorphic to the input
    // (with the isomorphism's shift bookkeeping folded into `shift`).
    // ------------------------------------------------------------------

    /// `[p, q] -> [q, p]`, recording the old theta degree as a shift.
    pub fn swap_factor(&self, i: usize) -> Result<Mf> {
        let f = self.factors.get(i).ok_or(MfError::BadIndex)?;
        let old_theta = f.theta.clone();
        let new = KoszulFactor {
            p: f.q.clone(),
            q: f.p.clone(),
            theta: -old_theta.clone(),
        };
        new.check()?;
        let mut out = self.clone();
        out.factors[i] = new;
        out.shift = out.shift + old_theta;
        debug_assert_eq!(out.potential(), self.potential());
        Ok(out)
    }

    /// `[p, q] -> [z p, z^{-1} q]` for a nonzero rational `z`.
    pub fn scale_factor(&self, i: usize, z: &Rat) -> Result<Mf> {
        if z.is_zero() {
            return Err(MfError::ZeroScale);
        }
        let f = self.factors.get(i).ok_or(MfError::BadIndex)?;
        let inv = Rat::from_integer(1.into()) / z.clone();
        let mut out = self.clone();
        out.factors[i] = KoszulFactor {
            p: f.p.scale(z),
            q: f.q.scale(&inv),
            theta: f.theta.clone(),
        };
        debug_assert_eq!(out.potential(), self.potential());
        Ok(out)
    }

    /// The four elementary potential-preserving row operations between
    /// factors `i` and `j` (`t` homogeneous, usually rational):
    ///
    /// * `PP`: `p_i += t p_j`, `q_j -= t q_i`
    /// * `QQ`: `q_i += t q_j`, `p_j -= t p_i`
    /// * `QP`: `q_i += t p_j`, `q_j -= t p_i`
    /// * `PQ`: `p_i += t q_j`, `p_j -= t q_i`
    pub fn rowop(&self, kind: RowOp, i: usize, j: usize, t: &Poly) -> Result<Mf> {
        if i == j || i >= self.factors.len() || j >= self.factors.len() {
            return Err(MfError::BadIndex);
        }
        if t.is_zero() {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        {
            let fi = out.factors[i].clone();
            let fj = out.factors[j].clone();
            let (ni, nj) = match kind {
                RowOp::PP => (
                    KoszulFactor { p: fi.p.clone() + t.clone() * fj.p.clone(), ..fi.clone() },
                    KoszulFactor { q: fj.q.clone() - t.clone() * fi.q.clone(), ..fj.clone() },
                ),
                RowOp::QQ => (
                    KoszulFactor { q: fi.q.clone() + t.clone() * fj.q.clone(), ..fi.clone() },
                    KoszulFactor { p: fj.p.clone() - t.clone() * fi.p.clone(), ..fj.clone() },
                ),
                RowOp::QP => (
                    KoszulFactor { q: fi.q.clone() + t.clone() * fj.p.clone(), ..fi.clone() },
                    KoszulFactor { q: fj.q.clone() - t.clone() * fi.p.clone(), ..fj.clone() },
                ),
                RowOp::PQ => (
                    KoszulFactor { p: fi.p.clone() + t.clone() * fj.q.clone(), ..fi.clone() },
                    KoszulFactor { p: fj.p.clone() - t.clone() * fi.q.clone(), ..fj.clone() },
                ),
            };
            ni.check().map_err(|_| MfError::BadRowOp)?;
            nj.check().map_err(|_| MfError::BadRowOp)?;
            out.factors[i] = ni;
            out.factors[j] = nj;
        }
        if out.potential() != self.potential() {
            return Err(MfError::PotentialChanged);
        }
        out.context.extend(t.vars());
        Ok(out)
    }

    /// Variable elimination: factor `i` must have first entry `c*v - e` with
    /// rational `c != 0` and `e` free of `v`; `v` must be internal and the
    /// total potential must not depend on `v`. The factor is removed and
    /// `v -> e/c` is substituted everywhere.
    pub fn eliminate(&self, i: usize, v: &Var) -> Result<Mf> {
        let f = self.factors.get(i).ok_or(MfError::BadIndex)?;
        if !self.internal.contains(v) {
            return Err(MfError::EliminationBlocked(format!("{} is not internal", v)));
        }
        let (a, b) = f
            .p
            .split_linear(v)
            .ok_or_else(|| MfError::EliminationBlocked(format!("first entry not linear in {}", v)))?;
        let c = a.as_constant().filter(|c| !c.is_zero()).ok_or_else(|| {
            MfError::EliminationBlocked(format!("coefficient of {} in {} is not a nonzero rational", v, f.p))
        })?;
        let w = self.potential();
        if w.contains_var(v) {
            return Err(MfError::EliminationBlocked(format!(
                "total potential {} depends on {}",
                w, v
            )));
        }
        // v -> -b / c
        let e = b.scale(&(-Rat::from_integer(1.into()) / c));
        debug_assert!(!e.contains_var(v));
        let mut out = self.clone();
        out.factors.remove(i);
        for g in &mut out.factors {
            g.p = g.p.substitute_one(v, &e);
            g.q = g.q.substitute_one(v, &e);
        }
        out.internal.remove(v);
        out.context.remove(v);
        out.context.extend(e.vars());
        debug_assert_eq!(out.potential(), w);
        Ok(out)
    }

    /// Removal of a hyperbolic factor: `p` linear in an internal `v1`, `q`
    /// (after solving `p = 0` for `v1`) linear in a distinct internal `v2`,
    /// with `v1`, `v2` absent from every other factor. The factor is dropped
    /// with no shift; both variables leave the context.
    pub fn knorrer(&self, i: usize) -> Result<Mf> {
        let f = self.factors.get(i).ok_or(MfError::BadIndex)?;
        let (v1, v2) = self
            .knorrer_pair(i)
            .ok_or_else(|| MfError::EliminationBlocked(format!("factor {:?} is not a removable pair", f)))?;
        let mut out = self.clone();
        out.factors.remove(i);
        for g in &out.factors {
            debug_assert!(!g.p.contains_var(&v1) && !g.p.contains_var(&v2));
            debug_assert!(!g.q.contains_var(&v1) && !g.q.contains_var(&v2));
        }
        out.internal.remove(&v1);
        out.internal.remove(&v2);
        out.context.remove(&v1);
        out.context.remove(&v2);
        Ok(out)
    }

    /// The `(v1, v2)` witness pair for a hyperbolic factor, if any.
    pub fn knorrer_pair(&self, i: usize) -> Option<(Var, Var)> {
        let f = self.factors.get(i)?;
        let others_free = |v: &Var| {
            self.factors
                .iter()
                .enumerate()
                .all(|(j, g)| j == i || (!g.p.contains_var(v) && !g.q.contains_var(v)))
        };
        for v1 in f.p.vars() {
            if !self.internal.contains(&v1) || !others_free(&v1) {
                continue;
            }
            let Some((a1, b1)) = f.p.split_linear(&v1) else { continue };
            let Some(c1) = a1.as_constant().filter(|c| !c.is_zero()) else { continue };
            let root1 = b1.scale(&(-Rat::from_integer(1.into()) / c1));
            let q1 = f.q.substitute_one(&v1, &root1);
            for v2 in q1.vars() {
                if v2 == v1 || !self.internal.contains(&v2) || !others_free(&v2) {
                    continue;
                }
                let Some((a2, _)) = q1.split_linear(&v2) else { continue };
                if a2.as_constant().filter(|c| !c.is_zero()).is_some() {
                    return Some((v1, v2));
                }
            }
        }
        None
    }

    // ------------------------------------------------------------------
    // Reduction.
    // ------------------------------------------------------------------

    /// Deterministic normal-form reduction: repeated variable elimination,
    /// hyperbolic-pair removal, and a canonicalisation pass (orientation,
    /// Gaussian sweeps with rational coefficients, scaling, sorting).
    pub fn reduce(&self) -> Mf {
        self.reduce_logged(&mut ReduceLog::default())
    }

    pub fn reduce_logged(&self, log: &mut ReduceLog) -> Mf {
        let limit = log.step_limit;
        let mut cur = self.clone();
        let mut steps = 0usize;
        loop {
            if cur.zero {
                let mut z = Mf::zero_object();
                z.context = cur.context.clone();
                z.internal = cur.internal.clone();
                return z;
            }
            // Contractible factor: an invertible constant entry kills the
            // whole factorisation.
            if cur.factors.iter().any(|f| {
                f.p.as_constant().map_or(false, |c| !c.is_zero())
                    || f.q.as_constant().map_or(false, |c| !c.is_zero())
            }) {
                let mut z = Mf::zero_object();
                z.context = cur.context.clone();
                z.internal = cur.internal.clone();
                return z;
            }
            if steps >= limit {
                log.hit_limit = true;
                return cur;
            }
            if let Some(next) = cur.try_eliminate_once(log) {
                cur = next;
                steps += 1;
                continue;
            }
            if let Some(next) = cur.try_knorrer_once(log) {
                cur = next;
                steps += 1;
                continue;
            }
            let canon = cur.canonicalize(log);
            if canon == cur {
                return canon;
            }
            cur = canon;
            steps += 1;
        }
    }

    /// One elimination step if available: smallest internal variable first,
    /// then smallest factor index; tries the factor as given, then swapped.
    fn try_eliminate_once(&self, log: &mut ReduceLog) -> Option<Mf> {
        let w = self.potential();
        for v in &self.internal {
            if w.contains_var(v) {
                continue;
            }
            for i in 0..self.factors.len() {
                let f = &self.factors[i];
                if f.p.contains_var(v) {
                    if let Some((a, _)) = f.p.split_linear(v) {
                        if a.as_constant().filter(|c| !c.is_zero()).is_some() {
                            let next = self.eliminate(i, v).ok()?;
                            log.record(self, &next, MoveKind::Eliminate { factor: i, var: v.clone() });
                            return Some(next);
                        }
                    }
                }
            }
            // Second pass: entries linear in v sitting in the q slot.
            for i in 0..self.factors.len() {
                let f = &self.factors[i];
                if f.q.contains_var(v) {
                    if let Some((a, _)) = f.q.split_linear(v) {
                        if a.as_constant().filter(|c| !c.is_zero()).is_some() {
                            let swapped = self.swap_factor(i).ok()?;
                            log.record(self, &swapped, MoveKind::Swap { factor: i });
                            let next = swapped.eliminate(i, v).ok()?;
                            log.record(&swapped, &next, MoveKind::Eliminate { factor: i, var: v.clone() });
                            return Some(next);
                        }
                    }
                }
            }
        }
        None
    }

    /// One hyperbolic removal if available, clearing stray occurrences of the
    /// witness variables in other factors by row operations first.
    fn try_knorrer_once(&self, log: &mut ReduceLog) -> Option<Mf> {
        for i in 0..self.factors.len() {
            if self.knorrer_pair(i).is_some() {
                let next = self.knorrer(i).ok()?;
                log.record(self, &next, MoveKind::Knorrer { factor: i });
                return Some(next);
            }
            if let Some(cleared) = self.try_clear_for_knorrer(i, log) {
                if cleared.knorrer_pair(i).is_some() {
                    let next = cleared.knorrer(i).ok()?;
                    log.record(&cleared, &next, MoveKind::Knorrer { factor: i });
                    return Some(next);
                }
            }
        }
        None
    }

    /// Tries to make factor `i` a removable pair by absorbing occurrences of
    /// candidate internal variables from other factors into factor `i`.
    fn try_clear_for_knorrer(&self, i: usize, log: &mut ReduceLog) -> Option<Mf> {
        let f = self.factors.get(i)?;
        if f.p.is_zero() || f.q.is_zero() {
            return None;
        }
        // Candidate witnesses: internal variables linear in p resp. q.
        let lin_const = |poly: &Poly, v: &Var| {
            poly.split_linear(v)
                .and_then(|(a, _)| a.as_constant())
                .filter(|c| !c.is_zero())
        };
        let mut cands = Vec::new();
        for v1 in f.p.vars() {
            if !self.internal.contains(&v1) || lin_const(&f.p, &v1).is_none() {
                continue;
            }
            for v2 in f.q.vars() {
                if v2 == v1 || !self.internal.contains(&v2) || lin_const(&f.q, &v2).is_none() {
                    continue;
                }
                cands.push((v1.clone(), v2.clone()));
            }
        }
        let (v1, v2) = cands.into_iter().next()?;
        let mut cur = self.clone();
        for round in 0..8 {
            let mut dirty = None;
            for (j, g) in cur.factors.iter().enumerate() {
                if j == i {
                    continue;
                }
                if g.p.contains_var(&v1) || g.p.contains_var(&v2) || g.q.contains_var(&v1) || g.q.contains_var(&v2) {
                    dirty = Some(j);
                    break;
                }
            }
            let Some(j) = dirty else {
                return if round > 0 { Some(cur) } else { None };
            };
            let fi = cur.factors[i].clone();
            let g = cur.factors[j].clone();
            // Absorb p_i into the dirty entry (clearing v1) or q_i (clearing v2).
            let mut applied = false;
            for (entry_is_p, v, src_is_p) in [
                (true, &v1, true),
                (false, &v1, true),
                (true, &v2, false),
                (false, &v2, false),
            ] {
                let entry = if entry_is_p { &g.p } else { &g.q };
                if !entry.contains_var(v) {
                    continue;
                }
                let src = if src_is_p { &fi.p } else { &fi.q };
                let (num, _) = entry.split_linear(v)?;
                let (den, _) = src.split_linear(v)?;
                let den = den.as_constant().filter(|c| !c.is_zero())?;
                // t so that entry + t*src is free of v (only rational t here).
                let t = num.as_constant()?.clone() / den;
                let kind = match (entry_is_p, src_is_p) {
                    (true, true) => RowOp::PP,
                    (false, true) => RowOp::QP,
                    (true, false) => RowOp::PQ,
                    (false, false) => RowOp::QQ,
                };
                let next = cur.rowop(kind, j, i, &Poly::constant(-t)).ok()?;
                log.record(&cur, &next, MoveKind::Row { kind, i: j, j: i });
                cur = next;
                applied = true;
                break;
            }
            if !applied {
                return None;
            }
        }
        None
    }

    /// Orientation, Gaussian sweeps, scaling and sorting. Does not change the
    /// isomorphism class; deterministic and idempotent.
    fn canonicalize(&self, log: &mut ReduceLog) -> Mf {
        let mut cur = self.clone();
        // 1. Orientation: [0, q] swaps to [q, 0]; for [0, 0] and balanced
        //    factors pick the lex-larger theta direction.
        for i in 0..cur.factors.len() {
            let f = &cur.factors[i];
            let flip = if f.p.is_zero() && !f.q.is_zero() {
                true
            } else if !f.p.is_zero() {
                false
            } else {
                let th = (f.theta.r.clone(), f.theta.q.clone());
                let neg = (-f.theta.r.clone(), -f.theta.q.clone());
                th < neg
            };
            if flip {
                let next = cur.swap_factor(i).expect("swap in canonicalize");
                log.record(&cur, &next, MoveKind::Swap { factor: i });
                cur = next;
            }
        }
        // 2. Gaussian sweep with rational coefficients.
        cur = cur.sweep(log);
        // 3. Scale: make the first entry's leading coefficient 1.
        for i in 0..cur.factors.len() {
            let f = &cur.factors[i];
            let lead = if !f.p.is_zero() {
                f.p.leading().map(|(_, c)| c.clone())
            } else {
                None
            };
            if let Some(c) = lead {
                if !rat::is_one(&c) {
                    let next = cur.scale_factor(i, &(Rat::from_integer(1.into()) / c)).expect("scale");
                    log.record(&cur, &next, MoveKind::Scale { factor: i });
                    cur = next;
                }
            } else if f.p.is_zero() && !f.q.is_zero() {
                // Unreachable after orientation, kept for safety.
            } else if f.p.is_zero() && f.q.is_zero() {
                continue;
            }
        }
        // Also normalise [q,0]-style factors whose q survived sweeps.
        for i in 0..cur.factors.len() {
            let f = &cur.factors[i];
            if f.p.is_zero() && !f.q.is_zero() {
                let next = cur.swap_factor(i).expect("swap");
                log.record(&cur, &next, MoveKind::Swap { factor: i });
                cur = next;
                let f = &cur.factors[i];
                if let Some((_, c)) = f.p.leading() {
                    let c = c.clone();
                    if !rat::is_one(&c) {
                        let next = cur.scale_factor(i, &(Rat::from_integer(1.into()) / c)).expect("scale");
                        log.record(&cur, &next, MoveKind::Scale { factor: i });
                        cur = next;
                    }
                }
            }
        }
        // 4. Sort factors (permutation move, no shift).
        let mut order: Vec<usize> = (0..cur.factors.len()).collect();
        order.sort_by_key(|&i| cur.factors[i].sort_key());
        if order.windows(2).any(|w| w[0] > w[1]) {
            let factors = order.iter().map(|&i| cur.factors[i].clone()).collect();
            let next = Mf { factors, ..cur.clone() };
            log.record(&cur, &next, MoveKind::Permute);
            cur = next;
        }
        cur
    }

    /// Gaussian sweeps: within each theta class, row-reduce the `p` entries
    /// (compensating on `q`); entries of one-sided factors (`[p, 0]`, `[0, q]`)
    /// absorb anything of matching degree with no side effects.
    fn sweep(&self, log: &mut ReduceLog) -> Mf {
        let mut cur = self.clone();
        for _round in 0..32 {
            let mut changed = false;
            // Pivot order: factors sorted by current key, stable per round.
            let mut order: Vec<usize> = (0..cur.factors.len()).collect();
            order.sort_by_key(|&i| cur.factors[i].sort_key());
            // (a) p-side reduction within a theta class (PP moves).
            for &k in &order {
                let (pk, tk) = (cur.factors[k].p.clone(), cur.factors[k].theta.clone());
                if pk.is_zero() {
                    continue;
                }
                let (lead_m, lead_c) = match pk.leading() {
                    Some((m, c)) => (m.clone(), c.clone()),
                    None => continue,
                };
                for &j in &order {
                    if j == k {
                        continue;
                    }
                    let fj = &cur.factors[j];
                    if fj.theta != tk || fj.p.is_zero() {
                        continue;
                    }
                    // Strict reduction only: eliminate the pivot monomial from
                    // larger-or-equal leading positions.
                    let cj = fj.p.terms.get(&lead_m).cloned();
                    let Some(cj) = cj else { continue };
                    let keep_pivot = fj.p.leading().map(|(m, _)| m.clone()) == Some(lead_m.clone())
                        && fj.p.leading().map(|(m, _)| m < &lead_m).unwrap_or(false);
                    let _ = keep_pivot;
                    // Free compensation only when q_k is zero; otherwise only
                    // reduce j's leading monomial to keep termination.
                    let free = cur.factors[k].q.is_zero();
                    let reduces_lead = fj.p.leading().map(|(m, _)| *m == lead_m).unwrap_or(false);
                    if !free && !reduces_lead {
                        continue;
                    }
                    let t = -(cj / lead_c.clone());
                    if let Ok(next) = cur.rowop(RowOp::PP, j, k, &Poly::constant(t)) {
                        log.record(&cur, &next, MoveKind::Row { kind: RowOp::PP, i: j, j: k });
                        cur = next;
                        changed = true;
                    }
                }
            }
            // (b) one-sided absorption: [p, 0] first entries and the q of
            //     zero-potential factors reduce against every other entry of
            //     matching degree (PQ / QP / QQ / PP with free compensation).
            for k in 0..cur.factors.len() {
                let fk = cur.factors[k].clone();
                let k_popen = fk.q.is_zero() && !fk.p.is_zero();
                if !k_popen {
                    continue;
                }
                // p_k may absorb p_j (same theta, PP j-free comp? PP(k<-j):
                // p_k += t p_j, comp q_j -= t q_k = 0: free) and q_j of
                // opposite-degree factors (PQ(k<-j): p_k += t q_j, comp
                // p_j -= t q_k = 0: free).
                for j in 0..cur.factors.len() {
                    if j == k {
                        continue;
                    }
                    let fj = cur.factors[j].clone();
                    // reduce p_k by p_j
                    if fj.theta == fk.theta && !fj.p.is_zero() {
                        if let Some((m, c)) = fj.p.leading() {
                            if let Some(ck) = cur.factors[k].p.terms.get(m) {
                                let t = -(ck.clone() / c.clone());
                                if let Ok(next) = cur.rowop(RowOp::PP, k, j, &Poly::constant(t)) {
                                    log.record(&cur, &next, MoveKind::Row { kind: RowOp::PP, i: k, j });
                                    cur = next;
                                    changed = true;
                                }
                            }
                        }
                    }
                    // reduce p_k by q_j
                    let fj = cur.factors[j].clone();
                    if fj.theta == -fk.theta.clone() && !fj.q.is_zero() {
                        if let Some((m, c)) = fj.q.leading() {
                            if let Some(ck) = cur.factors[k].p.terms.get(m) {
                                let t = -(ck.clone() / c.clone());
                                if let Ok(next) = cur.rowop(RowOp::PQ, k, j, &Poly::constant(t)) {
                                    log.record(&cur, &next, MoveKind::Row { kind: RowOp::PQ, i: k, j });
                                    cur = next;
                                    changed = true;
                                }
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        cur
    }

    // ------------------------------------------------------------------
    // Cohomology and comparison.
    // ------------------------------------------------------------------

    /// Cohomology of a zero-potential factorisation whose reduced form has
    /// only `[0, 0]` factors: a free module with `2^k` generators at the
    /// theta-subset degrees, offset by the accumulated shift.
    pub fn cohomology(&self) -> Result<GradedFreeModule> {
        let red = self.reduce();
        if red.zero {
            return Ok(GradedFreeModule {
                residual_vars: red.context.iter().cloned().collect(),
                generators: Vec::new(),
            });
        }
        if !red.potential().is_zero() {
            return Err(MfError::NonzeroPotential(red.potential().to_string()));
        }
        for f in &red.factors {
            if !f.p.is_zero() || !f.q.is_zero() {
                return Err(MfError::NonzeroPotential(format!(
                    "surviving factor {:?} has nonzero entries",
                    f
                )));
            }
        }
        let mut gens = vec![red.shift.clone()];
        for f in &red.factors {
            let mut next = Vec::with_capacity(gens.len() * 2);
            for g in &gens {
                next.push(g.clone());
                next.push(g.clone() + f.theta.clone());
            }
            gens = next;
        }
        gens.sort();
        let mut vars: Vec<Var> = red.context.iter().cloned().collect();
        vars.sort();
        Ok(GradedFreeModule {
            residual_vars: vars,
            generators: gens,
        })
    }

    /// Semi-decision comparison of reduced normal forms; never reports a
    /// false positive. The caller must have identified external variables.
    pub fn iso_check(&self, other: &Mf, up_to_overall_shift: bool) -> Result<IsoVerdict> {
        if self.potential() != other.potential() {
            return Err(MfError::PotentialMismatch);
        }
        let a = self.reduce();
        let b = other.reduce();
        if a.zero && b.zero {
            return Ok(IsoVerdict::Equal);
        }
        if a.factors == b.factors && a.context == b.context {
            let d = a.shift.clone() - b.shift.clone();
            if d.is_zero() {
                return Ok(IsoVerdict::Equal);
            }
            if up_to_overall_shift {
                return Ok(IsoVerdict::EqualUpToShift(d));
            }
        }
        // Dense fallback for small ranks: search for an explicit invertible
        // even chain map of degree zero.
        if !a.zero && !b.zero && a.factors.len() == b.factors.len() && a.factors.len() <= 4 {
            if crate::dense::dense_iso_exists(&a, &b) {
                return Ok(IsoVerdict::Equal);
            }
            if up_to_overall_shift {
                // Try to match up to a shift by the difference of shifts.
                let d = a.shift.clone() - b.shift.clone();
                if !d.is_zero() && crate::dense::dense_iso_exists(&a.shifted(&-d.clone()), &b) {
                    return Ok(IsoVerdict::EqualUpToShift(d));
                }
            }
        }
        Ok(IsoVerdict::Unknown)
    }

    /// JSON rendering with polynomial strings and `p/q` rational components.
    pub fn to_json(&self) -> Value {
        let tri = |t: &TriDegree| -> Value {
            json!([t.parity.to_string(), rat::display(&t.r), rat::display(&t.q)])
        };
        json!({
            "factors": self.factors.iter().map(|f| json!({
                "p": f.p.to_string(),
                "q": f.q.to_string(),
                "theta": tri(&f.theta),
            })).collect::<Vec<_>>(),
            "shift": tri(&self.shift),
            "potential": self.potential().to_string(),
            "internal": self.internal.iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
            "zero": self.zero,
        })
    }
}

impl fmt::Debug for Mf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return write!(f, "0-object");
        }
        for (i, fac) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " (x) ")?;
            }
            write!(f, "{:?}", fac)?;
        }
        if self.factors.is_empty() {
            write!(f, "[]")?;
        }
        if !self.shift.is_zero() {
            write!(f, "{{{}}}", self.shift)?;
        }
        Ok(())
    }
}

/// The four elementary row-operation templates.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RowOp {
    PP,
    QQ,
    QP,
    PQ,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum IsoVerdict {
    Equal,
    EqualUpToShift(TriDegree),
    Unknown,
}

/// A move performed by the reducer, for the oracle.
#[derive(Clone, Debug)]
pub enum MoveKind {
    Swap { factor: usize },
    Scale { factor: usize },
    Permute,
    Row { kind: RowOp, i: usize, j: usize },
    Eliminate { factor: usize, var: Var },
    Knorrer { factor: usize },
}

/// Recorded reduction steps plus the step limit; when oracle checking is on,
/// every recorded move on a small factorisation is certified immediately.
pub struct ReduceLog {
    pub step_limit: usize,
    pub hit_limit: bool,
    pub oracle: bool,
    pub oracle_rank_log2: usize,
    pub moves_checked: usize,
    pub moves_skipped: usize,
}

impl Default for ReduceLog {
    fn default() -> Self {
        let step_limit = std::env::var("RW_REDUCE_STEP_LIMIT")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(10_000);
        ReduceLog {
            step_limit,
            hit_limit: false,
            oracle: false,
            oracle_rank_log2: 3,
            moves_checked: 0,
            moves_skipped: 0,
        }
    }
}

impl ReduceLog {
    pub fn with_oracle() -> Self {
        ReduceLog { oracle: true, ..Default::default() }
    }

    fn record(&mut self, before: &Mf, after: &Mf, mv: MoveKind) {
        if !self.oracle {
            return;
        }
        if before.rank_log2() > self.oracle_rank_log2 {
            self.moves_skipped += 1;
            return;
        }
        crate::dense::certify_move(before, after, &mv)
            .unwrap_or_else(|e| panic!("oracle rejected move {:?}: {}", mv, e));
        self.moves_checked += 1;
    }
}

/// The canonical state-space output: a free bigraded module presented by its
/// residual variables and the multiset of generator tri-degrees.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GradedFreeModule {
    pub residual_vars: Vec<Var>,
    pub generators: Vec<TriDegree>,
}

impl GradedFreeModule {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// One generator in degree zero over no variables.
    pub fn scalar() -> Self {
        GradedFreeModule {
            residual_vars: Vec::new(),
            generators: vec![TriDegree::zero()],
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "residual_vars": self.residual_vars.iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
            "generators": self
                .generators
                .iter()
                .map(|t| json!([t.parity.to_string(), rat::display(&t.r), rat::display(&t.q)]))
                .collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for GradedFreeModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "module over [")?;
        for (i, v) in self.residual_vars.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, "] with generators ")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", g)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::int;

    fn x() -> Var {
        Var::bulk("x")
    }
    fn al() -> Var {
        Var::multiplier("al")
    }

    fn pv(v: &Var) -> Poly {
        Poly::var(v)
    }

    #[test]
    fn koszul_rank_one() {
        let m = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        assert_eq!(m.rank_log2(), 1);
        assert_eq!(m.potential(), pv(&x()) * pv(&al()));
        assert_eq!(m.factors[0].theta, TriDegree::of_ints(1, 0, -1));
    }

    #[test]
    fn unit_two_morphism_of_boundary_defect() {
        // 1_D for D = (al; al*x) is [be - al, x].
        let be = Var::multiplier("be");
        let m = Mf::koszul(vec![(pv(&be) - pv(&al()), pv(&x()))]).unwrap();
        assert_eq!(m.potential(), (pv(&be) - pv(&al())) * pv(&x()));
    }

    #[test]
    fn zero_potential_four_generators() {
        let d = Var::multiplier("d");
        let m = Mf::koszul(vec![(pv(&x()), Poly::zero()), (Poly::zero(), pv(&d))]).unwrap();
        assert!(m.potential().is_zero());
        let h = m.cohomology().unwrap();
        assert_eq!(h.rank(), 4);
    }

    #[test]
    fn tensor_with_empty_is_identity() {
        let a = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        let b = a.tensor(&Mf::unit());
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.shift, b.shift);
    }

    #[test]
    fn zero_shift_is_identity() {
        let a = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        assert_eq!(a.shifted(&TriDegree::zero()), a);
    }

    #[test]
    fn koszul_shift_relation() {
        // [q, p] = [p, q]{-Phi_p}: swap on [x, al] records theta_old and
        // iso_check agrees with the shifted original.
        let a = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        let swapped = a.swap_factor(0).unwrap();
        assert_eq!(swapped.factors[0].p, pv(&al()));
        assert_eq!(swapped.shift, TriDegree::of_ints(1, 0, -1));
        // [al, x] as an independent object, shifted by -Phi_{al} = Phi_x:
        let b = Mf::koszul(vec![(pv(&al()), pv(&x()))]).unwrap().shifted(&TriDegree::of_ints(1, 0, -1));
        assert_eq!(swapped.iso_check(&b, false).unwrap(), IsoVerdict::Equal);
        // And [q,p] vs [p,q]{-Phi_p} from the spec example:
        let qp = Mf::koszul(vec![(pv(&al()), pv(&x()))]).unwrap();
        let pq_shifted = a.shifted(&-TriDegree::of_ints(1, 0, -1));
        assert_eq!(qp.iso_check(&pq_shifted, false).unwrap(), IsoVerdict::Equal);
    }

    #[test]
    fn double_parity_shift_restores_sign() {
        let a = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        let twice = a.shifted(&TriDegree::of_ints(1, 0, 0)).shifted(&TriDegree::of_ints(1, 0, 0));
        assert_eq!(twice.shift.parity, 0);
    }

    #[test]
    fn rowop_example() {
        // [x, y] (x) [u, v] with T = 1 gives [x+u, y] (x) [u, v-y].
        let u = Var::bulk("u");
        let yv = Var::multiplier("y");
        let vv = Var::multiplier("v");
        let m = Mf::koszul(vec![(pv(&x()), pv(&yv)), (pv(&u), pv(&vv))]).unwrap();
        let w = m.potential();
        let r = m.rowop(RowOp::PP, 0, 1, &Poly::one()).unwrap();
        assert_eq!(r.factors[0].p, pv(&x()) + pv(&u));
        assert_eq!(r.factors[1].q, pv(&vv) - pv(&yv));
        assert_eq!(r.potential(), w);
    }

    #[test]
    fn scale_example() {
        let m = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        let s = m.scale_factor(0, &int(2)).unwrap();
        assert_eq!(s.factors[0].p, pv(&x()).scale(&int(2)));
        assert_eq!(s.factors[0].q, pv(&al()).scale(&crate::rat::rat(1, 2)));
        assert_eq!(s.potential(), m.potential());
        assert!(m.scale_factor(0, &int(0)).is_err());
    }

    #[test]
    fn eliminate_chain() {
        // [b-a, p] (x) [c-b, p] with internal b reduces to [c-a, p].
        let a = Var::bulk("a");
        let b = Var::bulk("b");
        let c = Var::bulk("c");
        let p = Var::multiplier("p");
        let m = Mf::koszul(vec![
            (pv(&b) - pv(&a), pv(&p)),
            (pv(&c) - pv(&b), pv(&p)),
        ])
        .unwrap()
        .mark_internal([&b]);
        let r = m.reduce();
        assert_eq!(r.factors.len(), 1);
        assert_eq!(r.factors[0].p, pv(&c) - pv(&a));
        assert_eq!(r.factors[0].q, pv(&p));
        assert!(r.shift.is_zero());
    }

    #[test]
    fn eliminate_rejects_nonlinear() {
        let m = Mf::koszul(vec![(pv(&x()) * pv(&x()), Poly::zero())]).unwrap().mark_internal([&x()]);
        assert!(matches!(m.eliminate(0, &x()), Err(MfError::EliminationBlocked(_))));
    }

    #[test]
    fn reduce_is_idempotent() {
        let a = Var::bulk("a");
        let b = Var::bulk("b");
        let c = Var::bulk("c");
        let p = Var::multiplier("p");
        let m = Mf::koszul(vec![
            (pv(&b) - pv(&a), pv(&p)),
            (pv(&c) - pv(&b), pv(&p)),
        ])
        .unwrap()
        .mark_internal([&b]);
        let r1 = m.reduce();
        let r2 = r1.reduce();
        assert_eq!(r1, r2);
    }

    #[test]
    fn unit_shifted_has_single_generator_at_shift() {
        let phi = TriDegree::of_ints(1, 2, -3);
        let h = Mf::unit().shifted(&phi).cohomology().unwrap();
        assert_eq!(h.generators, vec![phi]);
        assert!(h.residual_vars.is_empty());
    }

    #[test]
    fn torus_multiset() {
        // [0,0] (x) [0,0] over C[x, d] with the canonical theta degrees.
        let d = Var::multiplier("d");
        let f1 = Mf::zero_factor(TriDegree::of_ints(1, 0, -1)).unwrap();
        let f2 = Mf::zero_factor(TriDegree::of_ints(1, 0, 1)).unwrap();
        let m = f1.tensor(&f2).extend_context([&x(), &d]);
        let h = m.cohomology().unwrap();
        assert_eq!(h.residual_vars, vec![d.clone(), x()]);
        let mut want = vec![
            TriDegree::zero(),
            TriDegree::of_ints(1, 0, -1),
            TriDegree::of_ints(1, 0, 1),
            TriDegree::of_ints(0, 0, 0),
        ];
        want.sort();
        assert_eq!(h.generators, want);
    }

    #[test]
    fn disc_space() {
        // [0, x]{-Phi_x} with internal x and external ga reduces to
        // C[ga]{-2 Phi_x}.
        let ga = Var::multiplier("ga");
        let phi_x = TriDegree::phi_bulk(1);
        let m = Mf::koszul(vec![(Poly::zero(), pv(&x()))])
            .unwrap()
            .shifted(&-phi_x.clone())
            .mark_internal([&x()])
            .extend_context([&ga]);
        let h = m.cohomology().unwrap();
        assert_eq!(h.residual_vars, vec![ga]);
        assert_eq!(h.generators, vec![phi_x.scaled(-2)]);
    }

    #[test]
    fn iso_check_reflexive() {
        let m = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        assert_eq!(m.iso_check(&m, false).unwrap(), IsoVerdict::Equal);
    }

    #[test]
    fn iso_check_potential_mismatch() {
        let m = Mf::koszul(vec![(pv(&x()), pv(&al()))]).unwrap();
        let n = Mf::koszul(vec![(pv(&x()).scale(&int(2)), pv(&al()))]).unwrap();
        assert!(matches!(m.iso_check(&n, false), Err(MfError::PotentialMismatch)));
    }

    #[test]
    fn scrambled_unit_recognised() {
        // Scramble 1_D (x) 1_E by row operations and check iso_check = Equal.
        let be = Var::multiplier("be");
        let ga = Var::multiplier("ga");
        let de = Var::multiplier("de");
        let y = Var::bulk("y");
        let m = Mf::koszul(vec![
            (pv(&be) - pv(&al()), pv(&x())),
            (pv(&de) - pv(&ga), pv(&y)),
        ])
        .unwrap();
        let scrambled = m
            .rowop(RowOp::PP, 0, 1, &Poly::constant(int(3)))
            .unwrap()
            .scale_factor(1, &crate::rat::rat(-5, 2))
            .unwrap()
            .swap_factor(0)
            .unwrap();
        assert_eq!(scrambled.iso_check(&m, false).unwrap(), IsoVerdict::Equal);
    }

    #[test]
    fn knorrer_example() {
        // [x - y, ga + al] (x) [ga - al, 0] with internal ga, y reduces to a
        // zero-potential factor in al alone.
        let y = Var::bulk("y");
        let ga = Var::multiplier("ga");
        let m = Mf::koszul(vec![
            (pv(&x()) - pv(&y), pv(&ga) + pv(&al())),
            (pv(&ga) - pv(&al()), Poly::zero()),
        ])
        .unwrap()
        .mark_internal([&ga, &y]);
        let r = m.reduce();
        assert!(r.potential().is_zero());
        assert_eq!(r.factors.len(), 1);
        assert_eq!(r.factors[0].p, pv(&al()));
        assert!(r.factors[0].q.is_zero());
        // Idempotent on this input as well.
        assert_eq!(r.reduce(), r);
    }

    #[test]
    fn contractible_factor_collapses_to_zero() {
        let m = Mf::koszul(vec![(Poly::one(), Poly::zero())]).unwrap();
        let r = m.reduce();
        assert!(r.zero);
        assert_eq!(r.cohomology().unwrap().rank(), 0);
    }
}
