//! Diffusion LMS over wireless multiple-access channels.
//!
//! A network of nodes estimates a common parameter vector from streaming
//! measurements using adapt-then-combine diffusion LMS. Intermediate
//! estimates are exchanged over Rayleigh-fading links with path loss,
//! additive receiver noise and inter-node interference; links below an
//! SINR threshold are dropped each iteration. The crate provides
//!
//! * a seeded topology and channel model ([`topology`], [`channel`]),
//! * the per-node simulation engine ([`engine`]),
//! * combination weight rules, including inverse-variance optimal weights
//!   and their online adaptive estimate ([`combine`]),
//! * closed-form mean and mean-square transient/steady-state predictions
//!   ([`theory`]),
//! * a reproducible Monte Carlo experiment harness with CSV/JSON output
//!   ([`harness`], [`config`], [`output`]).

pub mod channel;
pub mod combine;
pub mod config;
pub mod engine;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod output;
pub mod theory;
pub mod topology;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
