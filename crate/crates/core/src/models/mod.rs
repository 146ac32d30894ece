//! Rectilinear and smoothed models of arboreal hypersurfaces.

pub mod profile;
pub mod rectilinear;
pub mod smoothed;

pub use profile::{verify_profile, ProfileReport, SmoothingProfile, StandardProfile};
pub use rectilinear::{check_presentations, PresentationReport, RectilinearModel, Region};
pub use smoothed::{comparison_map, compare_leafy, compare_vertex, h_all, h_value, ComparisonReport};
