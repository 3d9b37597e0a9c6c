//! Construction and verification of chattering geodesics in polyhedral
//! Finsler and sub-Finsler structures.
//!
//! - [`fuller`]: the Fuller optimal synthesis, value functions and the
//!   finite-horizon solver with its costate certificate.
//! - [`poly`]: exact polynomial vector fields and Lie brackets.
//! - [`norm`]: polyhedral norms in vertex and half-space form.
//! - [`geodesic_r4`]: explicit chattering shortest paths on `R^4`.
//! - [`carnot`]: the step-5 Carnot group, its norms and geodesics.
//! - [`chatter`]: the checkable hypotheses for chattering extremals.
//! - [`oracle`]: brute-force switch-time search and direct collocation.

pub mod carnot;
pub mod chatter;
pub mod error;
pub mod fuller;
pub mod geodesic_r4;
pub mod linalg;
pub mod lp;
pub mod norm;
pub mod oracle;
pub mod poly;
pub mod scalar;
pub mod systems;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fuller.md")]
    mod fuller {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/norms.md")]
    mod norms {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/carnot.md")]
    mod carnot {}
    #[doc = include_str!("../../../book/src/chattering.md")]
    mod chattering {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
