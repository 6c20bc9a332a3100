// `!(x > 0.0)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex;
pub mod geom;
pub mod lp;
pub mod tol;
pub mod tiling;
pub mod scaling;
pub mod lift;
pub mod voronoi;
pub mod job;
