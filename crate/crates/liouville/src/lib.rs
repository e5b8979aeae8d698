//! Numerical machinery for the Liouville action functional on quotients of
//! plane domains by Fuchsian and classical Schottky groups, and for the
//! regularized Einstein-Hilbert (hyperbolic volume) functional of the
//! associated 3-manifolds.
//!
//! The two functionals are tied together by a holography identity: the
//! regularized volume limit equals the Liouville action minus the metric
//! area and an explicit constant. This crate builds both sides from scratch:
//!
//! * Möbius algebra on the Riemann sphere and its extension to the upper
//!   half-space model of hyperbolic 3-space ([`moebius`]);
//! * marked Fuchsian groups from regular hyperbolic polygons and classical
//!   Schottky groups from circle pairings ([`group`]);
//! * fundamental polygons with their homological chain ledgers, and the 3-D
//!   fundamental regions over them ([`cells`]);
//! * smooth conformal metrics as automorphic fields ([`field`]);
//! * deterministic adaptive quadrature over curved regions, paths, and
//!   membership-defined 3-D columns ([`quad`]);
//! * the cocycle evaluators and the action assembly ([`action`]);
//! * truncated volumes, cutoff surfaces (graph and Epstein families), and
//!   the regularized action with its log-slope fit ([`holography`]);
//! * minimization of the action over a finite bump basis ([`solver`]).

pub mod action;
pub mod cells;
pub mod cli;
pub mod error;
pub mod field;
pub mod group;
pub mod holography;
pub mod moebius;
pub mod quad;
pub mod solver;
pub mod verify;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
