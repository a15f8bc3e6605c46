//! Primality testing and proving.
//!
//! Four families of tests over arbitrary-precision integers:
//!
//! - strong pseudoprime (Miller-Rabin) testing, randomized or with the
//!   deterministic base set that is sufficient under the generalized
//!   Riemann hypothesis ([`fermat`]);
//! - the polynomial-ring congruence test of Agrawal, Kayal and Saxena
//!   ([`aks`]);
//! - the cyclotomic (Jacobi sum) test ([`jacobi`]);
//! - elliptic curve primality proving with complex-multiplication curves
//!   ([`ecpp`]), emitting certificates ([`cert`]) that an independent
//!   verifier can check without trusting the prover.
//!
//! Supporting layers: exact big-integer arithmetic ([`arith`]), cyclotomic
//! ring arithmetic ([`cyclo`]), and elliptic curve group operations over
//! Z/nZ ([`elliptic`]).

pub mod aks;
pub mod arith;
pub mod cert;
pub mod cyclo;
pub mod ecpp;
pub mod elliptic;
pub mod error;
pub mod fermat;
pub mod jacobi;

pub use error::{Error, FactorSurprise};
