//! Cournot–Nash equilibria of pairwise potential games on finite spaces,
//! their N-player approximations and numerical checks of the limit
//! theorems that connect them.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the
//! types default to `f64` and the `*32` aliases fix `f32`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod cg;
pub mod continuum;
pub mod error;
pub mod game;
pub mod limits;
pub mod measures;
pub mod nplayer;
pub mod rng;
pub mod scalar;
pub mod schema;

pub use continuum::{capacity, exploitability, infimum_finite, solve_frank_wolfe, verify_cournot_nash, FwConfig};
pub use error::{Error, Result};
pub use game::{energy_j, validate_hypotheses, PureProfile, Scenario};
pub use limits::GluingOperator;
pub use measures::{Coupling, DiscreteMeasure, Kernel, Space};
pub use rng::{stream_rng, StreamRng};
pub use scalar::{median, ExtReal, Scalar};
pub use schema::{load_builtin, ScenarioFile};

/// Default scalar; every generic type above defaults to it.
pub type Real = f64;

pub type Scenario32 = Scenario<f32>;
pub type Coupling32 = Coupling<f32>;
pub type DiscreteMeasure32 = DiscreteMeasure<f32>;
