//! Lie group integrators on homogeneous spaces, with an executable harness
//! for their local and global error theory.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: matrix exponential and logarithm, commutators, `dexp⁻¹`.
//! * [`space`]: the sphere `S^{n−1}` and `SO(n)` as homogeneous models, vector
//!   fields given by coefficient maps, test functions, and a problem catalog.
//! * [`lie_butcher`]: planar forests, the post-Lie product, elementary
//!   differentials, and Lie series.
//! * [`integrators`]: Lie–Euler, RKMK and commutator-free methods, and a
//!   reference flow.
//! * [`analysis`]: order ladders, Gronwall constants, the fan decomposition,
//!   and comparison functions.
//! * [`experiment`]: configuration-driven runs that emit CSV and JSON.
//!
//! ```
//! use homflow::integrators::{step, MethodSpec};
//! use homflow::space::{sample_field, sample_point, FieldParams, Space};
//!
//! let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
//! let x = sample_point(Space::Sphere(3), 1);
//! let y = step(&MethodSpec::rkmk4(), &v, &x, 0.1).unwrap();
//! assert!(y.invariant_defect() < 1e-12);
//! ```

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod integrators;
pub mod jet;
pub mod kernels;
pub mod lie_butcher;
pub mod space;

pub use error::{Error, Result};
