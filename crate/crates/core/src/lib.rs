pub mod arcs;
pub mod experiments;
pub mod flow;
pub mod moebius;
pub mod pants;
pub mod surface;
pub mod tiling;
