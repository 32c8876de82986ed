//! Divides of plane curve singularities: synthesis from Puiseux data,
//! distinguished vanishing-cycle bases, integer intersection forms,
//! homological monodromy and twist-word identities, plus SVG rendering.

pub mod arrangement;
pub mod divide;
pub mod error;
pub mod geom;
pub mod blocks;
pub mod puiseux;
pub mod star;

pub use error::DivideError;
