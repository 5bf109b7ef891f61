//! Work statistics of driven quantum systems with initial coherence, and
//! their classical limit, for the linearly dragged harmonic oscillator.
//!
//! ```
//! use qcwork::operators::DriveProtocol;
//! use qcwork::workstats::{WorkDefinition, WorkProblem};
//!
//! let p = DriveProtocol::fig1();
//! let problem = WorkProblem::for_protocol(&p, 40, 200).unwrap();
//! let phi = problem.value(WorkDefinition::Fcs, 0.0).unwrap();
//! assert!((phi.re - 1.0).abs() < 1e-10);
//! ```

pub mod classical;
pub mod error;
pub mod operators;
pub mod par;
pub mod semiclassical;
pub mod wigner;
pub mod workstats;

pub use error::{Error, Result};
