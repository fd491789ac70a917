pub mod costs;
pub mod eval;
pub mod graph;
pub mod lp;
pub mod routing;
pub mod preference;
pub mod segmentation;
pub mod stitching;
pub mod synth;
pub mod trajectory;
