//! Numerical toolkit for the concave elliptic reductions of fully nonlinear
//! equations from complex geometry.
//!
//! Six equation families — the complex Monge-Ampère equation, the complex
//! Hessian equations, the σ_ℓ/σ_k quotients, their (n-1)-plurisubharmonic
//! variants, and almost-complex versions — are rewritten as real uniformly
//! elliptic concave equations F(S(x) + T(D²u(x), x), x) = f(x) on Sym(2n).
//! The crate provides:
//!
//! * [`sym`] — the ι bridge between Hermitian n×n and symmetric 2n×2n
//!   matrices, the J-invariant projection, and generalized eigenvalues;
//! * [`symfun`] — elementary symmetric polynomial calculus with the
//!   quantitative Gårding-cone bounds;
//! * [`operator`] — the (F, S, T) triples, admissible sets 𝓔, residuals and
//!   sampled certification of ellipticity, concavity and Hölder regularity;
//! * [`envelope`] — the concave envelope F̄ and the assembled operator
//!   Φ(N, x) = F̄(S(x) + T(N, x), x);
//! * [`grid`] / [`solver`] — periodic finite differences, manufactured
//!   solutions and a damped Newton solver;
//! * [`harness`] — C^{2,α}-type measurements and refinement experiments;
//! * [`cli`] — the `monge` binary: check / solve / envelope / report / lemma.
//!
//! Start with the runnable examples (`cargo run --release -p monge
//! --example solve_monge_ampere`) for end-to-end walkthroughs.

pub mod almost_complex;
pub mod background;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod harness;
pub mod operator;
pub mod sampling;
pub mod solver;
pub mod sym;
pub mod symfun;

pub use background::{Background, JField, TrigPoly};
pub use error::{Error, Result};
pub use operator::{ConvexSetE, EquationSpec, Family, StructureReport};
pub use sym::{ComplexStructure, HermMatrix, SymMatrix};
