//! Gaussian dynamics of harmonic-oscillator networks used as quantum buses.
//!
//! The crate models two external oscillators attached to a network of coupled
//! harmonic oscillators, in closed form where the network admits an analytic
//! normal-mode decomposition and numerically otherwise:
//!
//! - [`symplectic`]: symplectic forms, the Williamson normal form of positive
//!   definite Hessians, and degeneracy grouping of the symplectic spectrum.
//! - [`network`]: Hessian builders for chains, triangles, momentum-coupled
//!   networks, and the assembled system including the external oscillators.
//! - [`dynamics`]: covariance-matrix propagation under quadratic drift and
//!   thermal noise (Lyapunov/Van Loan machinery), steady states, and
//!   normal-mode bath classification.
//! - [`effective`]: the resonant rotating-wave reduction to a few-body
//!   effective model, with closed-form propagators and transport formulas.
//! - [`observables`]: initial states, reduced states, occupations, and
//!   Gaussian fidelity.
//! - [`rwa`]: first-order perturbation diagnostics justifying the
//!   rotating-wave approximation for two coupled oscillators.
//! - [`linalg`]: the dense matrix kernels (expm, sqrtm, Lyapunov) backing the
//!   physics modules.

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod linalg;
pub mod network;
pub mod observables;
pub mod rwa;
pub mod symplectic;

pub use error::{Error, Result};
