//! Worst-case discrimination of pure quantum states.
//!
//! The crate evaluates the pretty good measurement (PGM) and the sequential
//! measurement algorithm (SMA) exactly on explicit ensembles, samples the
//! sequential procedure trajectory by trajectory, and checks the closed-form
//! lower bounds on the PGM success probability against both.
//!
//! ```
//! use pgm_core::{bounds, ensemble, pgm};
//!
//! let e = ensemble::equal_overlap_ensemble(4, 0.3).unwrap();
//! let f = ensemble::max_pairwise_fidelity(&e);
//! let report = pgm::pgm_success(&e).unwrap();
//! assert!(report.worst_case >= bounds::linear_bound(4, f));
//! ```

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod pgm;
pub mod sma;
pub mod suite;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Exec;
