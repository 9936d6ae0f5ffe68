//! Reduced dynamics of a quantum system coupled to oscillator noise through an
//! operator that commutes with the system Hamiltonian (pure phase noise).
//!
//! Three independent routes to the same reduced density matrix:
//!
//! * [`exact`] evaluates the closed-form coherence decay per grid time,
//! * [`tcl`] integrates the second-order time-local master equation,
//! * [`fock`] brute-forces the full system-plus-bath evolution in a truncated
//!   number basis.
//!
//! [`bath`] holds the noise models and their kernel functionals, [`cumulant`]
//! breaks the exact coherence into classical cumulant orders so the Gaussian /
//! non-Gaussian distinction is visible order by order.

pub mod bath;
pub mod cumulant;
pub mod error;
pub mod exact;
pub mod exec;
pub mod fock;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod tcl;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
