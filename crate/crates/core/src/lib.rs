//! Self-similar regular shock reflection by a wedge in potential flow:
//! state algebra, free-boundary iteration and verification checks.

pub mod assembly;
pub mod curve;
pub mod error;
pub mod gas;
pub mod iteration;
pub mod geometry;
pub mod norms;
pub mod solver;
pub mod states;
pub mod verification;

pub use curve::FreeBoundaryCurve;
pub use error::{Error, Result};
pub use gas::{GasSetup, PseudoState};
pub use geometry::{BoundaryTag, Mesh, ReflectionDomain, RegionTag, SonicFrame};
pub use states::{NormalReflection, StateTwo};
