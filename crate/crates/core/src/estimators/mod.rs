//! Finite-sample estimators defined by minimizing explicit empirical criteria.

pub mod kmeans;
pub mod lasso;
pub mod shorth;

pub use kmeans::{fit_kmeans2, kmeans_global, KmeansCoords, KmeansFit, KmeansGlobal, KmeansInit};
pub use lasso::{fit_bridge_lasso, generate_lasso_design, Design, LassoConfig, LassoFit};
pub use shorth::{fit_shorth, shorth_population, ShorthDensity, ShorthFit, ShorthPopulation};
