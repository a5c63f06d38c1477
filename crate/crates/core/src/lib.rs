//! Maximum-likelihood estimation of the frequency correlation matrix of a
//! doubly selective OFDM fading channel, its Cramér–Rao lower bound, and
//! the Monte Carlo experiments that check one against the other.
//!
//! Module layout follows the data flow: [`numerics`] → [`channel`] →
//! [`link`] → [`estimation`] / [`bounds`] → [`harness`].

pub mod bounds;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod link;
pub mod numerics;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numerics::{CMatrix, CVector, RngStream};
