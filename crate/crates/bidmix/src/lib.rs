//! Simulation library for two-layer online configuration selection with
//! bid-price admission control: fluid oracles computed via LP saddle
//! points, an optimistic saddle-point policy with UCB-style bonuses,
//! baseline policies, synthetic and trace-driven scenarios, and a
//! multi-seed experiment harness.

pub mod error;
pub mod harness;
pub mod lp;
pub mod model;
pub mod par;
pub mod policy;
pub mod reference;
pub mod saddle;
pub mod scenarios;
pub mod trace;
pub mod validate;

pub use error::{Error, Result};
