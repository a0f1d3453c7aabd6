//! Symbolic engine for the pivotal 2-category of affine Rozansky-Witten
//! models: exact bigraded polynomial algebra, Koszul matrix factorisations
//! with a normal-form reduction calculus, duality and coherence data, and
//! evaluation of the extended defect TQFT on decorated surfaces.
//!
//! The crate is organised in layers:
//!
//! * [`poly`] — sparse multivariate polynomials over exact rationals, with
//!   variables carrying an (R-charge, flavour-charge) bidegree.
//! * [`mf`] — graded Koszul matrix factorisations, the rewrite moves
//!   (permute / swap / scale / row operations / variable elimination), the
//!   reduction engine and cohomology of zero-potential factorisations.
//! * [`dense`] — dense forms of small factorisations and the brute-force
//!   isomorphism oracle (exact linear solving for chain maps and homotopies).
//! * [`cat`] — objects, 1- and 2-morphisms, units and unitors, adjunctions,
//!   duals, cusp and bending isomorphisms, Serre data, coherence checks.
//! * [`tqft`] — quantum dimensions, traces, handle operators and state
//!   spaces of closed decorated surfaces; the surface-expression evaluator.
//! * [`defects`] — symmetry defects and their junction calculus, twisted
//!   sectors, boundary conditions, the open-closed sector and the Cardy
//!   condition.
//! * [`dsl`] — the textual front end and JSON output used by the CLI.

pub mod rat;
pub mod grade;
pub mod var;
pub mod poly;
pub mod mf;
pub mod dense;
pub mod cat;
pub mod tqft;
pub mod defects;
pub mod dsl;

pub use grade::{Bidegree, TriDegree};
pub use mf::{GradedFreeModule, KoszulFactor, Mf};
pub use poly::Poly;
pub use var::Var;
