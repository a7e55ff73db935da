//! Scene pathway: segmentation maps seen through a ground-plane camera
//! score how traversable a predicted trajectory is.

pub mod camera;
pub mod raster;
pub mod score;
pub mod segmap;

pub use camera::{CameraModel, Intrinsics, Projection};
pub use raster::{render_overlay, visualize_segmap, Raster, Style};
pub use score::{
    classify_waypoint, trajectory_prob, waypoint_prob, FootprintDisk, Scene, WaypointScore, DEFAULT_FOOTPRINT_RADIUS,
};
pub use segmap::{render_segmap, SegMap};
