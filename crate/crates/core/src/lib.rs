//! Numerical geometry of the Stiefel manifold St(n,p) under the β-metric
//! family: Riemannian exponentials, a bound-certified shooting logarithm,
//! closed-form distance envelopes in terms of the Frobenius distance, and
//! the explicit curve families that attain them.
//!
//! Quick tour:
//!
//! ```
//! use stiefel_core::{bounds, logmap, manifold, BetaMetric, StiefelPoint};
//! use stiefel_core::numerics::RandomSource;
//!
//! let mut rng = RandomSource::new(0);
//! let u = StiefelPoint::random(6, 3, &mut rng)?;
//! let v = StiefelPoint::random(6, 3, &mut rng)?;
//! let metric = BetaMetric::canonical();
//!
//! let res = logmap::log_shooting(&metric, &u, &v, &Default::default())?;
//! let delta = manifold::frobenius_distance(&u, &v)?.value();
//! let (floor, ceiling) = bounds::search_shell(metric.beta(), 3, delta)?;
//! if res.certificate.converged() {
//!     assert!(res.length >= floor - 1e-8);
//!     assert!(res.length <= ceiling + 1e-6 || !res.upper_bound_proven);
//! }
//! # Ok::<(), stiefel_core::StiefelError>(())
//! ```
//!
//! All value types are immutable after construction and freely shareable
//! across threads; [`numerics::RandomSource`] is the only stateful object
//! and is forked per worker instead of shared.

pub mod bounds;
pub mod curves;
pub mod error;
pub mod logmap;
pub mod manifold;
pub mod numerics;
pub mod textio;
pub mod verify;

pub use error::{Result, StiefelError};
pub use manifold::{BetaMetric, FrobDistance, StiefelPoint, TangentVector};
