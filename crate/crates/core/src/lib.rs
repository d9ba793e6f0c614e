//! Deterministic 2D multi-agent survival environment.
//!
//! Geometry, physics and the zone schedule are generic over the scalar type;
//! the simulation and environment layers are concrete over [`Real`].

pub mod env;
pub mod bench;
pub mod error;
pub mod geom;
pub mod items;
pub mod mechanics;
pub mod perception;
pub mod physics;
pub mod policy;
pub mod sim;

pub use error::{Error, Result};

/// Scalar used by the simulation and environment layers.
pub type Real = f64;
pub type Vec2 = geom::Vec2<Real>;
pub type PhysicsWorld = physics::World<Real>;
pub type Room = physics::Room<Real>;
