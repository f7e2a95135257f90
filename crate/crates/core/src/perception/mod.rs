//! Perception stand-ins for the segmentation and recognition networks:
//! a geometric frame renderer and a confusion-matrix classifier stub.

pub mod confusion;
pub mod render;

pub use confusion::{Classification, ConfusionError, ConfusionModel, Prediction};
pub use render::{
    locate_garbage, render_segmentation, select_closest_object, ObjectBox, SegmentationFrame,
};
