//! Numerical calculus of currents: exterior algebra, form fields,
//! simplicial chains, flat norms, Lipschitz pushforwards and the
//! kinematics of moving chains.

pub mod bundled;
pub mod chain;
pub mod complex;
pub mod current;
pub mod error;
pub mod exterior;
pub mod flat;
pub mod form;
pub mod kinematics;
pub mod lipschitz;
pub mod lp;
pub mod mollifier;
pub mod polynomial;
pub mod quadrature;

pub use chain::{Chain, Quadrature};
pub use current::Current;
pub use error::{Error, Result};
pub use exterior::{CoVector, MultiVector};
pub use form::{AxisBox, FormField, Grid, VectorField};
pub use kinematics::{Motion, MotionSpec};
pub use polynomial::Polynomial;
