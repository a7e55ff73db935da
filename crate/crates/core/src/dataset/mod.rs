//! Synthetic worlds, driving logs and fixed-size training windows.

pub mod driver;
pub mod format;
pub mod window;
pub mod world;

pub use driver::{drive_scenarios, drive_straight, DriveOutcome, DriverConfig};
pub use format::{
    format_sig9, parse_log_csv, parse_manifest, parse_world, quantize, write_log_csv, write_manifest, write_world,
    ManifestEntry, SplitTag,
};
pub use window::{
    approaches_junction, split_dataset, window_log, DatasetSplit, TrainInstance, JUNCTION_LATERAL_TOLERANCE,
};
pub use world::{generate_world, Layout, Rect, Surface, World, WorldConfig};
