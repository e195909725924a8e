//! Numerical differential geometry for zonal flows on surfaces and solids
//! of revolution: chart-based tensor calculus, zonal-flow classification,
//! Misiolek-curvature evaluation, and positivity certificates.

// indexed loops over small tensor dimensions mirror the index notation of
// the formulas; iterator-chain rewrites would obscure them
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` rejects NaN as well as non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod error;
pub mod fd;
pub mod field;
pub mod jet;
pub mod manifolds;
pub mod mc;
pub mod ops;
pub mod perturb;
pub mod profiles;
pub mod quad;
pub mod rng;
pub mod series;
pub mod verify;
pub mod zonal;

pub use chart::{Chart, CoordSpec};
pub use error::{Error, Result};
pub use field::{ScalarField, VecJet, VectorField};
pub use jet::Jet;
pub use quad::QuadratureRule;
