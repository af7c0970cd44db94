//! Core engine for animating SVG-based metaphoric data visualizations.
//!
//! The crate is `no_std` (it needs `alloc`) and holds only pure computation:
//!
//! * [`geom`] and [`flatten`]: points, affine transforms, boxes, curve flattening
//!   and the closest-point / projection routines used for spatial ordering.
//! * [`document`]: the parsed document model (element tree, outlines, data
//!   attributes) and group queries over it. Parsing itself lives in the `sway` crate.
//! * [`clip`]: keyframe tracks, easing and interpolation.
//! * [`coordination`]: per-element weights and start times for a group.
//! * [`composition`]: the global timeline and frame sampling.
//! * [`encoding`]: the encoding manifest and the animation/encoding conflict rules.
//! * [`version`]: a generated set of group clips.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod clip;
pub mod composition;
pub mod coordination;
pub mod document;
pub mod encoding;
pub mod flatten;
pub mod geom;
pub mod version;

pub use clip::{ClipSpec, Easing, GroupClip, Keyframe, Property, PropertyTrack, PropertyValue, Rgb};
pub use composition::{FrameSnapshot, Timeline};
pub use coordination::{CoordinationScheme, WeightAssignment};
pub use document::{ElementNode, Selector, VectorDocument};
pub use encoding::{Channel, EncodingManifest, Warning};
pub use geom::{AffineTransform, Point, Rect};
pub use version::Version;

/// Milliseconds on the animation clock.
pub type Millis = f64;
