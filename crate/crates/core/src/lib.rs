pub mod counterterm;
pub mod enumerate;
pub mod error;
pub mod fixtures;
pub mod hierarchy;
pub mod multiindex;
pub mod noise;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod spectral;
pub mod structure;

pub use enumerate::{enumerate_populated, homogeneity_set, renormalisation_candidates};
pub use error::{Error, Result};
pub use multiindex::{mi, Multiindex, PolyIndex};
pub use params::{choose_kappa, HomogeneitySet, ModelParams};
