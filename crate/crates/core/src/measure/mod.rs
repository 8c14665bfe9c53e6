pub mod density;
pub mod hellinger;
pub mod product;
pub mod quadrature;
pub mod sample;

pub use density::{BaseMeasure, Basis1D, Density1D, DensityKind};
pub use hellinger::{hellinger_affinity, hellinger_sq, hellinger_sq_by_quadrature, hellinger_sq_relative_to};
pub use product::{product_hellinger_sq, Marginal, ProductDensity, RegressionFunction, BasisFn};
pub use quadrature::{integrate, QuadratureSpec, Scheme};
pub use sample::{Point, Sample};
