//! Capacitated disc covers of point sets on the unit sphere.
//!
//! Given galaxy positions, a disc radius and a per-disc capacity, the solver
//! searches for a small set of discs such that (almost) every galaxy can be
//! assigned to a disc containing it with no disc over capacity. The core loop
//! alternates a penalty-priced min-cost-flow assignment ([`relaxation`]) with
//! independent per-disc gradient moves ([`placement`]), inside a binary search
//! over the disc count ([`driver`]).
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is on
//! (the default); every parallel path has a sequential twin selected through
//! [`par::Exec`] and the results are bit-identical.

pub mod cover;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod netflow;
pub mod par;
pub mod placement;
pub mod relaxation;
pub mod render;

pub use error::{Error, Result};
pub use geometry::{Disc, RegionRect, SpherePoint};
