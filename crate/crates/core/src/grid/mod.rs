mod integral;
pub mod io;
mod mask;
mod rect;
mod shape;
mod window;

pub use integral::IntegralImage;
pub use mask::GridMask;
pub use rect::{union_volume, Rect};
pub(crate) use shape::for_each_cell;
pub use shape::{rasterize, ShapeSpec};
pub use window::{CellBox, Window};
