//! Domains, triangulations and quadrature.

mod domain;
mod locate;
mod mesh;
mod quadrature;

pub use domain::{polygon_signed_area, Domain, Point, Shape};
pub use locate::{barycentric, Locator};
pub use mesh::{build_mesh, Mesh};
pub use quadrature::Quadrature;
