//! Hausdorff-dimension estimates for non-autonomous conformal graph directed
//! Markov systems via Bowen's formula.
//!
//! A system is a time-indexed multigraph whose letters carry contracting
//! conformal maps. The engine sums derivative norms over admissible words,
//! locates the zero of the pressure, checks the structural hypotheses under
//! which that zero equals the Hausdorff dimension of the limit set, and
//! cross-checks against a box-counting estimate of sampled limit points.

pub mod error;
pub mod geometry;
pub mod hypotheses;
pub mod maps;
pub mod numeric;
pub mod symbolic;
pub mod system;
pub mod systems;
pub mod thermo;
pub mod trend;

pub use error::{Error, Result};
pub use maps::{ConformalMap, FamilyKind, NormBracket, NormMethod, Region, Space, TabulatedMap};
pub use symbolic::{GraphSchedule, Incidence, Letter, PrimitivityCertificate, Word};
pub use system::{compose_norm, contraction_eta, distortion_constant, image_region, Contraction, SystemSpec};
