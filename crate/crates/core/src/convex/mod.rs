mod approx;
mod body;
mod ellipsoid;
mod john;

pub use approx::{
    band_cube_in_body, body_counts, dyadic_approximation, dyadic_cover, inner_band, inner_cube,
    inner_cube_cells, BodyBandCube, DyadicCover, InnerCube,
};
pub use body::{BodyFile, ConvexBody};
pub use ellipsoid::{mvee, Ellipsoid};
pub use john::{john_rectangle, normalize_to_unit_cube, AffineMap, JohnRect, Normalization, OrientedRect};
